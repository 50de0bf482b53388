#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lrcalib/geometry.hpp"
#include "lrcalib/ifc.hpp"
#include "lrcalib/memory_bank.hpp"

namespace lrcalib {

// Diagonal Gaussian used for variance augmentation of a calibrated novel
// class: mean is the post-calibration prototype, variance the average of
// the k most similar base classes' variances.
struct GaussianSpec {
    ClassId cls;
    Vec mu;
    Vec sigma2;
};

struct CalibrationReport {
    ClassId cls;
    Vec center_before;
    Vec center_after;
    double dist_to_similar_before = 0.0;
    double dist_to_similar_after = 0.0;
    ClassId similar_base;
};

struct ClassStats {
    Vec mean;
    Vec sigma2;
};
// Frozen per-base-class feature statistics, keyed by class id.
using BaseStats = std::map<std::uint32_t, ClassStats>;

// Base-class prototype in the bank nearest to `center` by normalized
// Euclidean distance; ties to the lowest class id.
Prototype nearest_base_prototype(const MemoryBank& bank, const Vec& center);

// Generates `count` cascaded LRSamples per shot, inserts them into the bank
// under `cls`, and reports the prototype movement relative to the nearest
// base-class prototype in the bank (nearest by normalized Euclidean to the
// post-calibration center; both distances are measured against it).
CalibrationReport calibrate_center(MemoryBank& bank, const IfcModel& model, const ClassId& cls,
                                   const std::vector<Vec>& shots, std::size_t count);

// Averages the sigma2 of the k base classes whose means are nearest to
// calibrated_mu in normalized Euclidean distance.
GaussianSpec variance_transfer(const ClassId& novel, const BaseStats& base_stats,
                               const Vec& calibrated_mu, std::size_t k);

// n componentwise-Gaussian draws, deterministic per seed.
std::vector<Vec> sample_augmented(const GaussianSpec& spec, std::size_t n, std::uint64_t seed);

// Mean cross entropy of augmented-sample logits against the fixed label cls.
double loss_aug(const std::vector<Vec>& logits, const ClassId& cls);

}  // namespace lrcalib
