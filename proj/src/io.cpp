#include "lrcalib/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "lrcalib/rng.hpp"

namespace lrcalib {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IoError("truncated file '" + path + "'");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw IoError("truncated file '" + path + "'");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in, const std::string& path) {
    return std::bit_cast<double>(get_u64(in, path));
}

std::uint8_t get_u8(std::istream& in, const std::string& path) {
    const int c = in.get();
    if (c == EOF) throw IoError("truncated file '" + path + "'");
    return static_cast<std::uint8_t>(c);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

void expect_eof(std::istream& in, const std::string& path) {
    if (in.peek() != EOF) throw IoError("trailing bytes in '" + path + "'");
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace

Manifest make_manifest(const ExperimentConfig& config) {
    Manifest m;
    m.config = config.to_flat();
    m.seeds = config.seeds;
    std::string canon = std::string("lrcalib ") + m.tool_version + "\n";
    for (const auto& [k, v] : m.config) canon += k + "=" + v + "\n";
    for (std::uint64_t s : m.seeds) canon += std::to_string(s) + "\n";
    std::ostringstream hex;
    hex << std::hex << fnv1a64(canon);
    m.hash = hex.str();
    return m;
}

// ---- feature files ----------------------------------------------------------

void write_feature_file(const std::string& path, const FeatureFile& file) {
    std::ofstream out = open_out(path);
    out.write("LRC1", 4);
    put_u32(out, file.dim);
    put_u32(out, static_cast<std::uint32_t>(file.records.size()));
    put_u32(out, file.class_count);
    for (const FeatureRecord& rec : file.records) {
        if (rec.values.size() != file.dim)
            throw DimensionMismatchError("write_feature_file: record dimension mismatch");
        if (rec.class_id >= file.class_count)
            throw IoError("write_feature_file: class id exceeds declared class count");
        put_u32(out, rec.class_id);
        put_u8(out, static_cast<std::uint8_t>(rec.partition));
        for (double v : rec.values) put_f64(out, v);
    }
    finish(out, path);
}

FeatureFile read_feature_file(const std::string& path) {
    std::ifstream in = open_in(path);
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "LRC1")
        throw IoError("'" + path + "' is not a feature file (bad magic)");
    FeatureFile file;
    file.dim = get_u32(in, path);
    const std::uint32_t rows = get_u32(in, path);
    file.class_count = get_u32(in, path);
    file.records.reserve(rows);
    for (std::uint32_t r = 0; r < rows; ++r) {
        FeatureRecord rec;
        rec.class_id = get_u32(in, path);
        if (rec.class_id >= file.class_count)
            throw IoError("feature file '" + path + "': class id out of range");
        const std::uint8_t flag = get_u8(in, path);
        if (flag > 1) throw IoError("feature file '" + path + "': bad partition flag");
        rec.partition = static_cast<Partition>(flag);
        rec.values.resize(file.dim);
        for (std::uint32_t j = 0; j < file.dim; ++j) rec.values[j] = get_f64(in, path);
        file.records.push_back(std::move(rec));
    }
    expect_eof(in, path);
    return file;
}

EmpiricalSource source_from_feature_file(const FeatureFile& file) {
    // Partition layout must match the id convention: base ids first.
    std::size_t base_count = 0;
    std::vector<Partition> partition(file.class_count, Partition::base);
    std::vector<bool> seen(file.class_count, false);
    for (const FeatureRecord& rec : file.records) {
        if (seen[rec.class_id] && partition[rec.class_id] != rec.partition)
            throw IoError("feature file: class " + std::to_string(rec.class_id) +
                          " has conflicting partition flags");
        partition[rec.class_id] = rec.partition;
        seen[rec.class_id] = true;
    }
    for (std::uint32_t c = 0; c < file.class_count; ++c) {
        if (!seen[c]) throw IoError("feature file: class " + std::to_string(c) + " has no rows");
        if (partition[c] == Partition::base) {
            if (c != base_count)
                throw IoError("feature file: base class ids must precede novel ids");
            ++base_count;
        }
    }
    if (base_count == 0) throw IoError("feature file: no base classes");

    std::vector<std::vector<Vec>> rows(file.class_count);
    for (const FeatureRecord& rec : file.records) rows[rec.class_id].push_back(rec.values);
    return EmpiricalSource(file.dim, base_count, file.class_count - base_count, std::move(rows));
}

// ---- checkpoints ------------------------------------------------------------

void write_head(const std::string& path, const LinearHead& head) {
    std::ofstream out = open_out(path);
    put_u32(out, static_cast<std::uint32_t>(head.classes));
    put_u32(out, static_cast<std::uint32_t>(head.dim));
    put_u32(out, static_cast<std::uint32_t>(head.base_count));
    for (double v : head.w) put_f64(out, v);
    for (double v : head.b) put_f64(out, v);
    finish(out, path);
}

LinearHead read_head(const std::string& path) {
    std::ifstream in = open_in(path);
    const std::uint32_t classes = get_u32(in, path);
    const std::uint32_t dim = get_u32(in, path);
    const std::uint32_t base_count = get_u32(in, path);
    if (base_count > classes)
        throw CheckpointMismatchError("head checkpoint '" + path + "': base count > classes");
    LinearHead head(classes, dim, base_count);
    for (double& v : head.w) v = get_f64(in, path);
    for (double& v : head.b) v = get_f64(in, path);
    expect_eof(in, path);
    return head;
}

void write_ifc(const std::string& path, const IfcModel& model) {
    std::ofstream out = open_out(path);
    put_u32(out, static_cast<std::uint32_t>(model.in_dim));
    put_u32(out, static_cast<std::uint32_t>(model.hidden_dim));
    for (double v : model.w1) put_f64(out, v);
    for (double v : model.b1) put_f64(out, v);
    for (double v : model.w2) put_f64(out, v);
    for (double v : model.b2) put_f64(out, v);
    finish(out, path);
}

IfcModel read_ifc(const std::string& path) {
    std::ifstream in = open_in(path);
    IfcModel m;
    m.in_dim = get_u32(in, path);
    m.hidden_dim = get_u32(in, path);
    m.w1.resize(m.hidden_dim * m.in_dim);
    m.b1.resize(m.hidden_dim);
    m.w2.resize(m.in_dim * m.hidden_dim);
    m.b2.resize(m.in_dim);
    for (double& v : m.w1) v = get_f64(in, path);
    for (double& v : m.b1) v = get_f64(in, path);
    for (double& v : m.w2) v = get_f64(in, path);
    for (double& v : m.b2) v = get_f64(in, path);
    expect_eof(in, path);
    return m;
}

void write_bank(const std::string& path, const MemoryBank& bank) {
    std::ofstream out = open_out(path);
    put_u32(out, static_cast<std::uint32_t>(bank.dim()));
    put_u64(out, bank.capacity());
    put_u64(out, bank.next_seq());
    put_u32(out, static_cast<std::uint32_t>(bank.queues().size()));
    for (const auto& [id, queue] : bank.queues()) {
        put_u32(out, id);
        put_u8(out, static_cast<std::uint8_t>(bank.partitions().at(id)));
        put_u64(out, queue.size());
        for (const auto& entry : queue) {
            put_u64(out, entry.seq);
            for (double v : entry.feature) put_f64(out, v);
        }
    }
    finish(out, path);
}

MemoryBank read_bank(const std::string& path) {
    std::ifstream in = open_in(path);
    const std::uint32_t dim = get_u32(in, path);
    const std::uint64_t capacity = get_u64(in, path);
    const std::uint64_t next_seq = get_u64(in, path);
    const std::uint32_t n_classes = get_u32(in, path);
    std::map<std::uint32_t, std::deque<MemoryBank::Entry>> queues;
    std::map<std::uint32_t, Partition> partitions;
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        const std::uint32_t id = get_u32(in, path);
        const std::uint8_t flag = get_u8(in, path);
        if (flag > 1) throw IoError("bank checkpoint '" + path + "': bad partition flag");
        partitions[id] = static_cast<Partition>(flag);
        const std::uint64_t count = get_u64(in, path);
        auto& queue = queues[id];
        for (std::uint64_t e = 0; e < count; ++e) {
            MemoryBank::Entry entry;
            entry.seq = get_u64(in, path);
            entry.feature.resize(dim);
            for (std::uint32_t j = 0; j < dim; ++j) entry.feature[j] = get_f64(in, path);
            queue.push_back(std::move(entry));
        }
    }
    expect_eof(in, path);
    try {
        return MemoryBank::restore(dim, capacity, next_seq, std::move(partitions),
                                   std::move(queues));
    } catch (const NumericError& e) {
        throw CheckpointMismatchError("bank checkpoint '" + path + "': " + e.what());
    }
}

void write_stats(const std::string& path, const BaseStats& stats, std::uint32_t dim) {
    std::ofstream out = open_out(path);
    put_u32(out, static_cast<std::uint32_t>(stats.size()));
    put_u32(out, dim);
    for (const auto& [id, s] : stats) {
        if (s.mean.size() != dim || s.sigma2.size() != dim)
            throw DimensionMismatchError("write_stats: stats dimension mismatch");
        put_u32(out, id);
        for (double v : s.mean) put_f64(out, v);
        for (double v : s.sigma2) put_f64(out, v);
    }
    finish(out, path);
}

BaseStats read_stats(const std::string& path) {
    std::ifstream in = open_in(path);
    const std::uint32_t n = get_u32(in, path);
    const std::uint32_t dim = get_u32(in, path);
    BaseStats stats;
    for (std::uint32_t c = 0; c < n; ++c) {
        const std::uint32_t id = get_u32(in, path);
        ClassStats s;
        s.mean.resize(dim);
        s.sigma2.resize(dim);
        for (double& v : s.mean) v = get_f64(in, path);
        for (double& v : s.sigma2) v = get_f64(in, path);
        stats.emplace(id, std::move(s));
    }
    expect_eof(in, path);
    return stats;
}

// ---- metrics ----------------------------------------------------------------

namespace {

const char* region_name(Region r) {
    switch (r) {
        case Region::high: return "high";
        case Region::low: return "low";
        case Region::central: return "central";
    }
    return "central";
}

nlohmann::ordered_json seed_report_json(const SeedReport& report) {
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["novel_acc"] = report.accuracy.novel;
    j["base_acc"] = report.accuracy.base;
    j["overall_acc"] = report.accuracy.overall;
    j["counts"] = {{"novel_correct", report.accuracy.novel_correct},
                   {"novel_total", report.accuracy.novel_total},
                   {"base_correct", report.accuracy.base_correct},
                   {"base_total", report.accuracy.base_total}};
    nlohmann::ordered_json cal = nlohmann::ordered_json::array();
    for (const CalibrationReport& r : report.calibration) {
        nlohmann::ordered_json row;
        row["class"] = r.cls.id;
        row["similar_base"] = r.similar_base.id;
        row["dist_without"] = r.dist_to_similar_before;
        row["dist_with"] = r.dist_to_similar_after;
        cal.push_back(std::move(row));
    }
    j["calibration"] = std::move(cal);
    j["weight_stats"] = {{"mean_weight", report.weights.mean_weight},
                         {"high", report.weights.n_high},
                         {"low", report.weights.n_low},
                         {"central", report.weights.n_central}};
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const StepLoss& s : report.loss_curve)
        curve.push_back({s.total, s.cls, s.cls_w, s.edge, s.aug});
    j["loss_curve"] = std::move(curve);
    if (!report.importance.empty()) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const ImportanceRow& r : report.importance)
            rows.push_back({r.step, r.sample, region_name(r.region), r.d_in, r.d_sim, r.weight});
        j["importance"] = std::move(rows);
    }
    return j;
}

nlohmann::ordered_json aggregate_json(const std::vector<double>& values) {
    const Aggregate agg = mean_std(values);
    return {{"mean", agg.mean}, {"std", agg.std}};
}

}  // namespace

nlohmann::ordered_json metrics_json(const Manifest& manifest,
                                    const std::vector<SeedReport>& reports,
                                    const AblationResult* ablation) {
    nlohmann::ordered_json j;
    j["manifest"] = {{"hash", manifest.hash},
                     {"tool_version", manifest.tool_version},
                     {"config", manifest.config},
                     {"seeds", manifest.seeds}};

    nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
    std::vector<double> novel, base, overall;
    for (const SeedReport& r : reports) {
        per_seed.push_back(seed_report_json(r));
        novel.push_back(r.accuracy.novel);
        base.push_back(r.accuracy.base);
        overall.push_back(r.accuracy.overall);
    }
    j["per_seed"] = std::move(per_seed);
    if (!reports.empty()) {
        j["aggregate"] = {{"novel_acc", aggregate_json(novel)},
                          {"base_acc", aggregate_json(base)},
                          {"overall_acc", aggregate_json(overall)}};

        // Table-1 layout: per novel class, distance to the similar base
        // class without and with LRSamples, averaged over seeds.
        std::map<std::uint32_t, std::pair<std::vector<double>, std::vector<double>>> by_class;
        for (const SeedReport& r : reports)
            for (const CalibrationReport& c : r.calibration) {
                by_class[c.cls.id].first.push_back(c.dist_to_similar_before);
                by_class[c.cls.id].second.push_back(c.dist_to_similar_after);
            }
        nlohmann::ordered_json table = nlohmann::ordered_json::array();
        for (const auto& [cls, dists] : by_class) {
            nlohmann::ordered_json row;
            row["class"] = cls;
            row["dist_without"] = mean_std(dists.first).mean;
            row["dist_with"] = mean_std(dists.second).mean;
            table.push_back(std::move(row));
        }
        j["calibration_table"] = std::move(table);
    }

    if (ablation != nullptr) {
        nlohmann::ordered_json ab;
        nlohmann::ordered_json axes = nlohmann::ordered_json::array();
        for (const GridAxis& axis : ablation->grid) {
            nlohmann::ordered_json a;
            a["name"] = axis.name;
            a["values"] = axis.values;
            axes.push_back(std::move(a));
        }
        ab["axes"] = std::move(axes);
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (const AblationCell& cell : ablation->cells) {
            nlohmann::ordered_json c;
            c["cell"] = cell.label;
            nlohmann::ordered_json params;
            for (const auto& [axis, value] : cell.assignment) params[axis] = value;
            c["params"] = std::move(params);
            c["k_shot"] = cell.k_shot;
            c["novel_acc"] = {{"mean", cell.novel_acc.mean}, {"std", cell.novel_acc.std}};
            c["base_acc"] = {{"mean", cell.base_acc.mean}, {"std", cell.base_acc.std}};
            c["overall_acc"] = {{"mean", cell.overall_acc.mean}, {"std", cell.overall_acc.std}};
            c["novel_per_seed"] = cell.novel_per_seed;
            c["base_per_seed"] = cell.base_per_seed;
            c["overall_per_seed"] = cell.overall_per_seed;
            cells.push_back(std::move(c));
        }
        ab["cells"] = std::move(cells);
        j["ablation"] = std::move(ab);
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'");
}

nlohmann::ordered_json read_metrics(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open metrics file '" + path + "'");
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw MetricsParseError("metrics file '" + path + "': " + e.what());
    }
}

}  // namespace lrcalib
