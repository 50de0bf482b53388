#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrcalib/harness.hpp"

namespace lrcalib {

inline constexpr const char* kToolVersion = "0.1.0";

// Deterministic fingerprint of (tool version, effective config, seeds).
// Timestamps never enter the hash, so repeated runs with the same manifest
// produce byte-identical metrics files.
struct Manifest {
    std::string tool_version = kToolVersion;
    std::map<std::string, std::string> config;
    std::vector<std::uint64_t> seeds;
    std::string hash;
};

Manifest make_manifest(const ExperimentConfig& config);

// ---- feature files ("LRC1") -------------------------------------------------

struct FeatureRecord {
    std::uint32_t class_id = 0;
    Partition partition = Partition::base;
    Vec values;
};

struct FeatureFile {
    std::uint32_t dim = 0;
    std::uint32_t class_count = 0;
    std::vector<FeatureRecord> records;
};

void write_feature_file(const std::string& path, const FeatureFile& file);
FeatureFile read_feature_file(const std::string& path);
EmpiricalSource source_from_feature_file(const FeatureFile& file);

// ---- checkpoints -----------------------------------------------------------

void write_head(const std::string& path, const LinearHead& head);
LinearHead read_head(const std::string& path);

void write_ifc(const std::string& path, const IfcModel& model);
IfcModel read_ifc(const std::string& path);

void write_bank(const std::string& path, const MemoryBank& bank);
MemoryBank read_bank(const std::string& path);

void write_stats(const std::string& path, const BaseStats& stats, std::uint32_t dim);
BaseStats read_stats(const std::string& path);

// ---- metrics ---------------------------------------------------------------

nlohmann::ordered_json metrics_json(const Manifest& manifest,
                                    const std::vector<SeedReport>& reports,
                                    const AblationResult* ablation = nullptr);

void write_text_file(const std::string& path, const std::string& text);
nlohmann::ordered_json read_metrics(const std::string& path);

}  // namespace lrcalib
