#include "lrcalib/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lrcalib/harness.hpp"
#include "lrcalib/io.hpp"
#include "lrcalib/rng.hpp"

namespace lrcalib {

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("LRCALIB_LOG");
        if (env == nullptr) return LogLevel::error;
        const std::string v(env);
        if (v == "debug") return LogLevel::debug;
        if (v == "info") return LogLevel::info;
        if (v == "error") return LogLevel::error;
        std::fprintf(stderr, "[lrcalib] ignoring unknown LRCALIB_LOG value '%s'\n", v.c_str());
        return LogLevel::error;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::fprintf(stderr, "[lrcalib] %s\n", msg.c_str());
}

namespace fs = std::filesystem;

std::string path_join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// Rebuilds the training source a checkpoint was produced against: either
// the recorded synthetic world or the ingested feature file.
struct SourceHolder {
    SyntheticWorld world;
    EmpiricalSource empirical{2, 1, 1, {{Vec{0.0, 0.0}}, {Vec{0.0, 0.0}}}};
    bool is_file = false;
    const FeatureSource& get() const {
        return is_file ? static_cast<const FeatureSource&>(empirical)
                       : static_cast<const FeatureSource&>(world);
    }
};

}  // namespace

void cmd_gen(const ExperimentConfig& config, std::uint64_t seed, const std::string& out_path) {
    config.validate();
    const SyntheticWorld world = generate_world(config, seed);
    std::mt19937_64 rng = make_stream(seed, "gen");

    FeatureFile file;
    file.dim = static_cast<std::uint32_t>(world.dim());
    file.class_count = static_cast<std::uint32_t>(world.class_count());
    for (std::uint32_t c = 0; c < world.class_count(); ++c) {
        for (std::size_t i = 0; i < config.gen_samples_per_class; ++i) {
            FeatureRecord rec;
            rec.class_id = c;
            rec.partition = world.class_id(c).partition;
            rec.values = world.draw(c, rng);
            file.records.push_back(std::move(rec));
        }
    }
    write_feature_file(out_path, file);
    log_info("wrote " + std::to_string(file.records.size()) + " features to " + out_path);
}

void cmd_base_train(const ExperimentConfig& config, std::uint64_t seed,
                    const std::string& features_path, const std::string& out_dir) {
    config.validate();
    SourceHolder holder;
    if (!features_path.empty()) {
        holder.empirical = source_from_feature_file(read_feature_file(features_path));
        holder.is_file = true;
    } else {
        holder.world = generate_world(config, seed);
    }

    log_info("base training, seed " + std::to_string(seed));
    const BaseArtifacts art = base_train(holder.get(), config, seed);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory '" + out_dir + "'");

    write_head(path_join(out_dir, "head.bin"), art.head);
    write_ifc(path_join(out_dir, "ifc.bin"), art.ifc);
    write_bank(path_join(out_dir, "bank.bin"), art.bank);
    write_stats(path_join(out_dir, "stats.bin"), art.stats,
                static_cast<std::uint32_t>(holder.get().dim()));

    const Manifest manifest = make_manifest(config);
    nlohmann::ordered_json j;
    j["hash"] = manifest.hash;
    j["tool_version"] = manifest.tool_version;
    j["config"] = manifest.config;
    j["seeds"] = manifest.seeds;
    j["world_seed"] = seed;
    j["features"] = features_path;
    const auto now = std::chrono::system_clock::now();
    j["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    j["outputs"] = {"head.bin", "ifc.bin", "bank.bin", "stats.bin"};
    write_text_file(path_join(out_dir, "manifest.json"), j.dump(2) + "\n");
    log_info("checkpoints written to " + out_dir);
}

namespace {

BaseArtifacts load_checkpoints(const std::string& dir) {
    BaseArtifacts art;
    art.head = read_head(path_join(dir, "head.bin"));
    art.ifc = read_ifc(path_join(dir, "ifc.bin"));
    art.bank = read_bank(path_join(dir, "bank.bin"));
    art.stats = read_stats(path_join(dir, "stats.bin"));
    if (art.ifc.in_dim != art.head.dim)
        throw CheckpointMismatchError("checkpoint dimensions disagree between head and ifc");
    if (art.bank.dim() != art.head.dim)
        throw CheckpointMismatchError("checkpoint dimensions disagree between head and bank");
    return art;
}

nlohmann::ordered_json load_checkpoint_manifest(const std::string& dir) {
    const std::string path = path_join(dir, "manifest.json");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint manifest '" + path + "'");
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw MetricsParseError("checkpoint manifest '" + path + "': " + e.what());
    }
}

}  // namespace

void cmd_finetune(const ExperimentConfig& config, const std::string& checkpoint_dir,
                  const std::string& features_path, const std::string& out_path) {
    config.validate();
    const BaseArtifacts art = load_checkpoints(checkpoint_dir);
    const nlohmann::ordered_json ckpt = load_checkpoint_manifest(checkpoint_dir);

    SourceHolder holder;
    const std::string ckpt_features = ckpt.value("features", std::string());
    if (!features_path.empty() || !ckpt_features.empty()) {
        const std::string path = !features_path.empty() ? features_path : ckpt_features;
        holder.empirical = source_from_feature_file(read_feature_file(path));
        holder.is_file = true;
    } else {
        // Regenerate the world the checkpoint was trained on.
        ExperimentConfig world_config = config;
        if (!ckpt.contains("config") || !ckpt.contains("world_seed"))
            throw CheckpointMismatchError("checkpoint manifest lacks world information");
        for (const auto& [key, value] : ckpt["config"].items())
            if (key.rfind("world.", 0) == 0) world_config.set_key(key, value.get<std::string>());
        holder.world = generate_world(world_config, ckpt["world_seed"].get<std::uint64_t>());
    }
    const FeatureSource& source = holder.get();

    if (source.dim() != art.head.dim)
        throw CheckpointMismatchError("feature dimension " + std::to_string(source.dim()) +
                                      " does not match checkpoint dimension " +
                                      std::to_string(art.head.dim));
    if (source.base_count() != art.head.classes)
        throw CheckpointMismatchError("base class count " + std::to_string(source.base_count()) +
                                      " does not match checkpoint head rows " +
                                      std::to_string(art.head.classes));

    std::vector<SeedReport> reports;
    reports.reserve(config.seeds.size());
    for (const std::uint64_t seed : config.seeds) {
        log_info("fine-tuning seed " + std::to_string(seed));
        reports.push_back(fine_tune(art, source, config, seed).report);
    }
    const Manifest manifest = make_manifest(config);
    write_text_file(out_path, metrics_json(manifest, reports).dump(2) + "\n");
    log_info("metrics written to " + out_path);
}

void cmd_ablate(const ExperimentConfig& config, const std::string& grid_spec,
                const std::string& features_path, const std::string& out_path) {
    config.validate();
    const Grid grid = parse_grid(grid_spec);

    AblationResult result;
    if (!features_path.empty()) {
        const EmpiricalSource source = source_from_feature_file(read_feature_file(features_path));
        result = run_ablation(config, grid, &source);
    } else {
        result = run_ablation(config, grid);
    }
    const Manifest manifest = make_manifest(config);
    write_text_file(out_path, metrics_json(manifest, {}, &result).dump(2) + "\n");
    log_info("ablation metrics written to " + out_path);
}

namespace {

std::string fixed6(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

}  // namespace

void cmd_report(const std::string& metrics_path, const std::string& plot_prefix,
                std::ostream& out) {
    const nlohmann::ordered_json j = read_metrics(metrics_path);
    if (!j.contains("manifest"))
        throw MetricsParseError("metrics file '" + metrics_path + "' has no manifest");

    out << "manifest " << j["manifest"].value("hash", std::string("?")) << "\n";

    if (j.contains("aggregate")) {
        out << "\nAccuracy (mean +/- std over " << j["per_seed"].size() << " seeds)\n";
        for (const char* key : {"novel_acc", "base_acc", "overall_acc"}) {
            const auto& agg = j["aggregate"][key];
            out << "  " << std::left << std::setw(12) << key
                << fixed6(agg["mean"].get<double>()) << " +/- "
                << fixed6(agg["std"].get<double>()) << "\n";
        }
    }

    if (j.contains("calibration_table") && !j["calibration_table"].empty()) {
        out << "\nCalibration: distance to similar base class\n";
        out << "  class   dist w/o    dist w/\n";
        for (const auto& row : j["calibration_table"]) {
            out << "  " << std::left << std::setw(8) << row["class"].get<std::uint32_t>()
                << fixed6(row["dist_without"].get<double>()) << "    "
                << fixed6(row["dist_with"].get<double>()) << "\n";
        }
        if (!plot_prefix.empty()) {
            std::string dat;
            for (const auto& row : j["calibration_table"])
                dat += std::to_string(row["class"].get<std::uint32_t>()) + " " +
                       fixed6(row["dist_without"].get<double>()) + " " +
                       fixed6(row["dist_with"].get<double>()) + "\n";
            write_text_file(plot_prefix + "_calibration.dat", dat);
        }
    }

    if (j.contains("per_seed") && !j["per_seed"].empty() && !plot_prefix.empty()) {
        // Mean total loss per step across seeds, with std.
        std::size_t steps = 0;
        for (const auto& seed : j["per_seed"])
            steps = std::max(steps, seed["loss_curve"].size());
        std::string dat;
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<double> totals;
            for (const auto& seed : j["per_seed"])
                if (s < seed["loss_curve"].size())
                    totals.push_back(seed["loss_curve"][s][0].get<double>());
            const Aggregate agg = mean_std(totals);
            dat += std::to_string(s) + " " + fixed6(agg.mean) + " " + fixed6(agg.std) + "\n";
        }
        write_text_file(plot_prefix + "_loss.dat", dat);
    }

    if (j.contains("ablation")) {
        const auto& ab = j["ablation"];
        out << "\nAblation";
        for (const auto& axis : ab["axes"]) out << " " << axis["name"].get<std::string>();
        out << "\n  cell                             shot  novel mean  novel std\n";
        std::string dat;
        for (const auto& cell : ab["cells"]) {
            const double mean = cell["novel_acc"]["mean"].get<double>();
            const double std = cell["novel_acc"]["std"].get<double>();
            out << "  " << std::left << std::setw(32) << cell["cell"].get<std::string>()
                << std::setw(6) << cell["k_shot"].get<int>() << fixed6(mean) << "    "
                << fixed6(std) << "\n";
            const auto& first_axis = ab["axes"][0]["name"].get<std::string>();
            dat += cell["params"][first_axis].get<std::string>() + " " +
                   std::to_string(cell["k_shot"].get<int>()) + " " + fixed6(mean) + " " +
                   fixed6(std) + "\n";
        }
        if (!plot_prefix.empty()) write_text_file(plot_prefix + "_ablation.dat", dat);
    }
}

namespace {

struct CommonFlags {
    std::string config_path;
    std::string features;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string seeds;
    int k_shot = 0;
    bool no_ccva = false;
    bool no_fdbo = false;
    std::string g_family;
    long long lrsamples = -1;
    double eta = -1.0;
    double d_in = -1.0;

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (!seeds.empty()) cfg.set_key("seeds", seeds);
        if (seed_set) cfg.seeds = {seed};
        if (k_shot > 0) cfg.set_key("k_shot", std::to_string(k_shot));
        if (no_ccva) cfg.ccva_enabled = false;
        if (no_fdbo) cfg.fdbo_enabled = false;
        if (!g_family.empty()) cfg.set_key("g_family", g_family);
        if (lrsamples >= 0) cfg.set_key("lrsample_count", std::to_string(lrsamples));
        if (eta >= 0.0) cfg.set_key("density.eta", std::to_string(eta));
        if (d_in >= 0.0) cfg.set_key("density.d_in", std::to_string(d_in));
        cfg.validate();
        return cfg;
    }

    std::uint64_t run_seed(const ExperimentConfig& cfg) const {
        return seed_set ? seed : cfg.seeds.front();
    }
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_features) {
    cmd->add_option("--config", flags.config_path, "config file (flat key=value)");
    cmd->add_option("--seed", flags.seed, "single root seed")->each([&](const std::string&) {
        flags.seed_set = true;
    });
    cmd->add_option("--seeds", flags.seeds, "comma-separated seed list");
    cmd->add_option("--k-shot", flags.k_shot, "shots per class (1,2,3,5,10)");
    cmd->add_flag("--no-ccva", flags.no_ccva, "disable the CCVA module");
    cmd->add_flag("--no-fdbo", flags.no_fdbo, "disable the FDBO module");
    cmd->add_option("--g-family", flags.g_family, "reweighting family (linear|exp|sigmoid)");
    cmd->add_option("--lrsamples", flags.lrsamples, "cascaded LRSamples per shot");
    cmd->add_option("--eta", flags.eta, "similar-class radius multiplier");
    cmd->add_option("--d-in", flags.d_in, "own-class density coverage");
    if (with_features)
        cmd->add_option("--features", flags.features, "feature file replacing synthetic data");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"lrcalib: few-shot feature-space calibration experiments"};
    app.require_subcommand(1);

    CommonFlags gen_flags, base_flags, ft_flags, ab_flags;
    std::string ft_checkpoints, grid_spec, metrics_path, plot_prefix;

    CLI::App* gen = app.add_subcommand("gen", "materialize a synthetic world as a feature file");
    add_common(gen, gen_flags, false);
    gen->add_option("--out", gen_flags.out, "output feature file")->required();

    CLI::App* base = app.add_subcommand("base-train", "run base training, write checkpoints");
    add_common(base, base_flags, true);
    base->add_option("--out", base_flags.out, "checkpoint directory")->required();

    CLI::App* ft = app.add_subcommand("finetune", "fine-tune from checkpoints, write metrics");
    add_common(ft, ft_flags, true);
    ft->add_option("--checkpoints", ft_checkpoints, "checkpoint directory")->required();
    ft->add_option("--out", ft_flags.out, "output metrics file")->required();

    CLI::App* ab = app.add_subcommand("ablate", "run a config grid with paired seeds");
    add_common(ab, ab_flags, true);
    ab->add_option("--grid", grid_spec, "grid spec, e.g. \"lrsamples=0,1,2 shots=1,2\"")
        ->required();
    ab->add_option("--out", ab_flags.out, "output metrics file")->required();

    CLI::App* rep = app.add_subcommand("report", "summarize a metrics file");
    rep->add_option("--metrics", metrics_path, "metrics file")->required();
    rep->add_option("--plots", plot_prefix, "prefix for plot-data files");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            const ExperimentConfig cfg = gen_flags.resolve();
            cmd_gen(cfg, gen_flags.run_seed(cfg), gen_flags.out);
        } else if (base->parsed()) {
            const ExperimentConfig cfg = base_flags.resolve();
            cmd_base_train(cfg, base_flags.run_seed(cfg), base_flags.features, base_flags.out);
        } else if (ft->parsed()) {
            const ExperimentConfig cfg = ft_flags.resolve();
            cmd_finetune(cfg, ft_checkpoints, ft_flags.features, ft_flags.out);
        } else if (ab->parsed()) {
            const ExperimentConfig cfg = ab_flags.resolve();
            cmd_ablate(cfg, grid_spec, ab_flags.features, ab_flags.out);
        } else if (rep->parsed()) {
            cmd_report(metrics_path, plot_prefix, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace lrcalib
