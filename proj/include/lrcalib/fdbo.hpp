#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lrcalib/geometry.hpp"
#include "lrcalib/memory_bank.hpp"

namespace lrcalib {

struct DensityParams {
    double d_in = 0.3;  // own-class within-radius coverage target
    double eta = 1.5;   // radius multiplier for the similar class
};

// Region of an edge sample relative to the decision boundary. Samples the
// classifier gets right are central and keep weight 1.
enum class Region { high, low, central };

enum class GFamily { linear, exponential, sigmoid };

struct ReweightFunction {
    GFamily family = GFamily::sigmoid;
    double alpha = 0.5;
};

struct LocalDensities {
    double d_in_value = 0.0;
    double d_sim_value = 0.0;
    double d_thred = 0.0;
};

struct ImportanceAssignment {
    std::size_t sample_index = 0;
    Region region = Region::central;
    double d_in_value = 0.0;
    double d_sim_value = 0.0;
    ClassId similar_class;
    double weight = 1.0;
};

// Reweight output range.
inline constexpr double kWeightFloor = 0.1;
inline constexpr double kWeightCeil = 3.0;

// Indices of misclassified samples; argmax ties go to the lowest class.
std::vector<std::size_t> find_edge_samples(const std::vector<Vec>& logits,
                                           const std::vector<ClassId>& labels);

// Class (other than `own`) whose prototype mean is Euclidean-nearest to
// x_in; ties to the lowest class id.
ClassId similar_class(const Vec& x_in, const std::map<std::uint32_t, Prototype>& prototypes,
                      const ClassId& own);

// Densities around an edge sample. d_thred is the lowest own-class distance
// reaching at least d_in coverage, so the own-class within-radius fraction
// equals d_in by construction; the similar-class count uses radius
// eta * d_thred.
LocalDensities local_densities(const Vec& x_edge, const std::vector<Vec>& own_pool,
                               const std::vector<Vec>& sim_pool, const DensityParams& params);

Region classify_region(const LocalDensities& d);

// Weight for one sample: central -> 1, high -> 1 + alpha*g(loss),
// low -> 1/(1 + alpha*g(loss)), clamped to [0.1, 3.0].
double reweight(Region region, double loss, const ReweightFunction& fn);

// dweight/dloss; zero in the clamped range and for central samples.
double reweight_derivative(Region region, double loss, const ReweightFunction& fn);

// Elementwise reweight over a batch; sequences must align.
Vec assign_importance(const Vec& losses, const std::vector<Region>& regions,
                      const ReweightFunction& fn);

// (1/n) sum |v_i - mean(v)| / v_i over positive weights.
double loss_edge(const Vec& weights);

// d loss_edge / d v.
Vec loss_edge_grad(const Vec& weights);

// (1/n) sum v_i * loss_i. Weights act as constants under differentiation.
double loss_cls_weighted(const Vec& losses, const Vec& weights);

}  // namespace lrcalib
