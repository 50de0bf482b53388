#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrcalib/ccva.hpp"
#include "lrcalib/classifier.hpp"
#include "lrcalib/config.hpp"
#include "lrcalib/fdbo.hpp"
#include "lrcalib/ifc.hpp"
#include "lrcalib/memory_bank.hpp"
#include "lrcalib/world.hpp"

namespace lrcalib {

// Everything the fine-tuning stage needs from base training. stats are the
// frozen per-base-class (mean, sigma2) computed from final bank contents.
struct BaseArtifacts {
    LinearHead head;
    IfcModel ifc;
    MemoryBank bank;
    BaseStats stats;
    Vec cls_loss_curve;  // per-step classifier CE
    Vec ifc_loss_curve;  // per-step IFC objective, from warm-up end on

    BaseArtifacts() : bank(2, 1) {}
};

struct Accuracy {
    std::uint64_t novel_correct = 0;
    std::uint64_t novel_total = 0;
    std::uint64_t base_correct = 0;
    std::uint64_t base_total = 0;
    double novel = 0.0;
    double base = 0.0;
    double overall = 0.0;
};

struct StepLoss {
    double total = 0.0;
    double cls = 0.0;
    double cls_w = 0.0;
    double edge = 0.0;
    double aug = 0.0;
};

struct WeightStats {
    double mean_weight = 1.0;
    std::uint64_t n_high = 0;
    std::uint64_t n_low = 0;
    std::uint64_t n_central = 0;
};

struct ImportanceRow {
    std::size_t step = 0;
    std::size_t sample = 0;  // balanced-set index
    Region region = Region::central;
    double d_in = 0.0;
    double d_sim = 0.0;
    double weight = 1.0;
};

struct SeedReport {
    std::uint64_t seed = 0;
    Accuracy accuracy;
    std::vector<CalibrationReport> calibration;
    WeightStats weights;
    std::vector<StepLoss> loss_curve;
    std::vector<ImportanceRow> importance;  // populated when dump_importance
};

struct FineTuneResult {
    LinearHead head;
    SeedReport report;
};

// The k-shot-per-class fine-tuning set over base plus novel classes,
// ordered class 0..C-1, k shots each.
struct BalancedSet {
    std::vector<Vec> features;
    std::vector<ClassId> labels;
};

// Uniform batch indices; consumed from the "batches" stream by fine_tune.
std::vector<std::size_t> draw_batch_indices(std::mt19937_64& rng, std::size_t batch,
                                            std::size_t set_size);

BalancedSet draw_balanced_set(const FeatureSource& source, const ExperimentConfig& config,
                              std::uint64_t seed);

// Base stage: classifier CE training on base-class draws, memory-bank
// filling, and (after warm-up) IFC steps against selected LRSample targets.
BaseArtifacts base_train(const FeatureSource& source, const ExperimentConfig& config,
                         std::uint64_t seed);

// Fine-tuning stage: extends the head with novel rows, inserts novel shots
// into the bank, runs CCVA calibration plus variance transfer once at the
// start, then iterates CE + weighted CE + lambda3*L_edge + lambda4*L_aug.
FineTuneResult fine_tune(const BaseArtifacts& base, const FeatureSource& source,
                         const ExperimentConfig& config, std::uint64_t seed);

// Draws n_test samples per class and reports top-1 accuracy per partition.
Accuracy evaluate(const LinearHead& head, const FeatureSource& source, std::size_t n_test,
                  std::uint64_t seed);

// ---- ablation -------------------------------------------------------------

struct GridAxis {
    std::string name;
    std::vector<std::string> values;
};
using Grid = std::vector<GridAxis>;
using CellAssignment = std::vector<std::pair<std::string, std::string>>;

// Parses e.g. "lrsamples=0,1,2,3 shots=1,2,3". Known axes: lrsamples,
// shots, g, eta, d_in, components.
Grid parse_grid(const std::string& spec);

ExperimentConfig apply_cell(ExperimentConfig config, const CellAssignment& cell);

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;
};
Aggregate mean_std(const std::vector<double>& values);

struct AblationCell {
    CellAssignment assignment;
    std::string label;  // "axis=value,..." in grid order
    int k_shot = 0;
    std::vector<double> novel_per_seed;
    std::vector<double> base_per_seed;
    std::vector<double> overall_per_seed;
    Aggregate novel_acc;
    Aggregate base_acc;
    Aggregate overall_acc;
};

struct AblationResult {
    Grid grid;
    std::vector<AblationCell> cells;
};

// Runs fine_tune per grid cell with shared seeds; base artifacts are built
// once per seed (no grid axis touches the base stage). A non-null
// file_source replaces synthetic world generation.
AblationResult run_ablation(const ExperimentConfig& config, const Grid& grid,
                            const EmpiricalSource* file_source = nullptr);

}  // namespace lrcalib
