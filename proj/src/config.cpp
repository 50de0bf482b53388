#include "lrcalib/config.hpp"

#include <fstream>
#include <sstream>

namespace lrcalib {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing chars");
        return x;
    } catch (const std::exception&) {
        throw InvalidConfigError("config key '" + key + "': cannot parse real value '" + value +
                                 "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
        const unsigned long long x = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing chars");
        return x;
    } catch (const std::exception&) {
        throw InvalidConfigError("config key '" + key + "': cannot parse unsigned value '" +
                                 value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw InvalidConfigError("config key '" + key + "': cannot parse boolean value '" + value +
                             "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& value) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        seeds.push_back(parse_uint(key, item));
    }
    if (seeds.empty()) throw InvalidConfigError("config key '" + key + "': empty seed list");
    return seeds;
}

std::string bool_str(bool v) {
    return v ? "true" : "false";
}

std::string double_str(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string g_family_name(GFamily f) {
    switch (f) {
        case GFamily::linear: return "linear";
        case GFamily::exponential: return "exp";
        case GFamily::sigmoid: return "sigmoid";
    }
    return "sigmoid";
}

GFamily g_family_from_name(const std::string& name) {
    if (name == "linear") return GFamily::linear;
    if (name == "exp" || name == "exponential") return GFamily::exponential;
    if (name == "sigmoid") return GFamily::sigmoid;
    throw InvalidConfigError("unknown reweighting family '" + name +
                             "' (expected linear|exp|sigmoid)");
}

std::size_t ExperimentConfig::ifc_hidden_dim() const {
    switch (ifc_hidden) {
        case IfcHidden::equal: return dim;
        case IfcHidden::low: return std::max<std::size_t>(1, dim / 2);
        case IfcHidden::high: return dim * 2;
    }
    return dim;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) {
        throw InvalidConfigError("config key '" + key + "': " + why);
    };
    if (dim < 2) fail("world.dim", "must be >= 2");
    if (base_classes == 0) fail("world.base_classes", "must be >= 1");
    if (novel_classes == 0) fail("world.novel_classes", "must be >= 1");
    if (novel_classes > base_classes)
        fail("world.novel_classes", "cannot exceed world.base_classes");
    if (delta < 0.0) fail("world.delta", "must be >= 0");
    if (spread <= 0.0) fail("world.spread", "must be > 0");
    if (mean_scale < 0.0) fail("world.mean_scale", "must be >= 0");
    if (sigma_jitter < 0.0 || sigma_jitter >= 1.0) fail("world.sigma_jitter", "must be in [0,1)");
    if (k_shot != 1 && k_shot != 2 && k_shot != 3 && k_shot != 5 && k_shot != 10)
        fail("k_shot", "must be one of 1,2,3,5,10");
    if (lr_base <= 0.0) fail("lr_base", "must be > 0");
    if (lr_finetune <= 0.0) fail("lr_finetune", "must be > 0");
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0 || lambda4 < 0.0)
        fail("lambda", "loss weights must be >= 0");
    if (g_alpha <= 0.0) fail("g_alpha", "must be > 0");
    if (density.d_in <= 0.0 || density.d_in >= 1.0) fail("density.d_in", "must be in (0,1)");
    if (density.eta <= 0.0) fail("density.eta", "must be > 0");
    if (bank_capacity == 0) fail("bank_capacity", "must be >= 1");
    if (batch_size == 0) fail("batch_size", "must be >= 1");
    if (ccva_k == 0) fail("ccva.k", "must be >= 1");
    if (ccva_k > base_classes) fail("ccva.k", "cannot exceed world.base_classes");
    if (ccva_n_aug == 0) fail("ccva.n_aug", "must be >= 1");
    if (eval_n_test == 0) fail("eval.n_test", "must be >= 1");
    if (gen_samples_per_class == 0) fail("gen.samples_per_class", "must be >= 1");
    if (seeds.empty()) fail("seeds", "must list at least one seed");
}

std::map<std::string, std::string> ExperimentConfig::to_flat() const {
    std::map<std::string, std::string> m;
    m["world.dim"] = std::to_string(dim);
    m["world.base_classes"] = std::to_string(base_classes);
    m["world.novel_classes"] = std::to_string(novel_classes);
    m["world.delta"] = double_str(delta);
    m["world.spread"] = double_str(spread);
    m["world.mean_scale"] = double_str(mean_scale);
    m["world.sigma_jitter"] = double_str(sigma_jitter);
    m["k_shot"] = std::to_string(k_shot);
    m["lr_base"] = double_str(lr_base);
    m["lr_finetune"] = double_str(lr_finetune);
    m["lambda1"] = double_str(lambda1);
    m["lambda2"] = double_str(lambda2);
    m["lambda3"] = double_str(lambda3);
    m["lambda4"] = double_str(lambda4);
    m["lrsample_count"] = std::to_string(lrsample_count);
    m["g_family"] = g_family_name(g_family);
    m["g_alpha"] = double_str(g_alpha);
    m["density.d_in"] = double_str(density.d_in);
    m["density.eta"] = double_str(density.eta);
    m["warmup_steps"] = std::to_string(warmup_steps);
    m["bank_capacity"] = std::to_string(bank_capacity);
    m["base_steps"] = std::to_string(base_steps);
    m["finetune_steps"] = std::to_string(finetune_steps);
    m["batch_size"] = std::to_string(batch_size);
    m["ccva.enabled"] = bool_str(ccva_enabled);
    m["ccva.k"] = std::to_string(ccva_k);
    m["ccva.n_aug"] = std::to_string(ccva_n_aug);
    m["fdbo.enabled"] = bool_str(fdbo_enabled);
    m["fdbo.edge_grad_flow"] = bool_str(edge_grad_flow);
    m["ifc.hidden"] = ifc_hidden == IfcHidden::equal ? "equal"
                      : ifc_hidden == IfcHidden::low ? "low"
                                                     : "high";
    m["ifc.joint_classifier"] = bool_str(ifc_joint_classifier);
    m["selection.mode"] = selection_mode == SelectionMode::raw_scores ? "raw" : "rank";
    m["eval.n_test"] = std::to_string(eval_n_test);
    m["gen.samples_per_class"] = std::to_string(gen_samples_per_class);
    m["metrics.dump_importance"] = bool_str(dump_importance);
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(seeds[i]);
    }
    m["seeds"] = s;
    return m;
}

void ExperimentConfig::set_key(const std::string& key, const std::string& value) {
    if (key == "world.dim") dim = parse_uint(key, value);
    else if (key == "world.base_classes") base_classes = parse_uint(key, value);
    else if (key == "world.novel_classes") novel_classes = parse_uint(key, value);
    else if (key == "world.delta") delta = parse_double(key, value);
    else if (key == "world.spread") spread = parse_double(key, value);
    else if (key == "world.mean_scale") mean_scale = parse_double(key, value);
    else if (key == "world.sigma_jitter") sigma_jitter = parse_double(key, value);
    else if (key == "k_shot") k_shot = static_cast<int>(parse_uint(key, value));
    else if (key == "lr_base") lr_base = parse_double(key, value);
    else if (key == "lr_finetune") lr_finetune = parse_double(key, value);
    else if (key == "lambda1") lambda1 = parse_double(key, value);
    else if (key == "lambda2") lambda2 = parse_double(key, value);
    else if (key == "lambda3") lambda3 = parse_double(key, value);
    else if (key == "lambda4") lambda4 = parse_double(key, value);
    else if (key == "lrsample_count") lrsample_count = parse_uint(key, value);
    else if (key == "g_family") g_family = g_family_from_name(value);
    else if (key == "g_alpha") g_alpha = parse_double(key, value);
    else if (key == "density.d_in") density.d_in = parse_double(key, value);
    else if (key == "density.eta") density.eta = parse_double(key, value);
    else if (key == "warmup_steps") warmup_steps = parse_uint(key, value);
    else if (key == "bank_capacity") bank_capacity = parse_uint(key, value);
    else if (key == "base_steps") base_steps = parse_uint(key, value);
    else if (key == "finetune_steps") finetune_steps = parse_uint(key, value);
    else if (key == "batch_size") batch_size = parse_uint(key, value);
    else if (key == "ccva.enabled") ccva_enabled = parse_bool(key, value);
    else if (key == "ccva.k") ccva_k = parse_uint(key, value);
    else if (key == "ccva.n_aug") ccva_n_aug = parse_uint(key, value);
    else if (key == "fdbo.enabled") fdbo_enabled = parse_bool(key, value);
    else if (key == "fdbo.edge_grad_flow") edge_grad_flow = parse_bool(key, value);
    else if (key == "ifc.hidden") {
        if (value == "equal") ifc_hidden = IfcHidden::equal;
        else if (value == "low") ifc_hidden = IfcHidden::low;
        else if (value == "high") ifc_hidden = IfcHidden::high;
        else throw InvalidConfigError("config key 'ifc.hidden': expected equal|low|high, got '" +
                                      value + "'");
    } else if (key == "ifc.joint_classifier") ifc_joint_classifier = parse_bool(key, value);
    else if (key == "selection.mode") {
        if (value == "raw") selection_mode = SelectionMode::raw_scores;
        else if (value == "rank") selection_mode = SelectionMode::rank_positions;
        else throw InvalidConfigError("config key 'selection.mode': expected raw|rank, got '" +
                                      value + "'");
    } else if (key == "eval.n_test") eval_n_test = parse_uint(key, value);
    else if (key == "gen.samples_per_class") gen_samples_per_class = parse_uint(key, value);
    else if (key == "metrics.dump_importance") dump_importance = parse_bool(key, value);
    else if (key == "seeds") seeds = parse_seed_list(key, value);
    else throw InvalidConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfigError("config line " + std::to_string(lineno) +
                                     ": expected key=value, got '" + line + "'");
        cfg.set_key(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace lrcalib
