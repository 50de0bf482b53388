#include "lrcalib/fdbo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lrcalib/classifier.hpp"

namespace lrcalib {

std::vector<std::size_t> find_edge_samples(const std::vector<Vec>& logits,
                                           const std::vector<ClassId>& labels) {
    if (logits.size() != labels.size())
        throw DimensionMismatchError("find_edge_samples: logits/labels length mismatch");
    std::vector<std::size_t> edges;
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (argmax_lowest(logits[i]) != labels[i].id) edges.push_back(i);
    return edges;
}

ClassId similar_class(const Vec& x_in, const std::map<std::uint32_t, Prototype>& prototypes,
                      const ClassId& own) {
    if (prototypes.size() < 2)
        throw InsufficientClassesError("similar_class: need at least 2 prototypes");
    double best = std::numeric_limits<double>::infinity();
    const Prototype* found = nullptr;
    for (const auto& [id, proto] : prototypes) {
        if (id == own.id) continue;
        const double dist = norm(sub(x_in, proto.mean));
        if (dist < best) {  // map order makes ties resolve to the lowest id
            best = dist;
            found = &proto;
        }
    }
    if (found == nullptr)
        throw InsufficientClassesError("similar_class: no class other than own available");
    return found->cls;
}

LocalDensities local_densities(const Vec& x_edge, const std::vector<Vec>& own_pool,
                               const std::vector<Vec>& sim_pool, const DensityParams& params) {
    if (own_pool.size() < 4)
        throw EmptyPoolError("local_densities: own pool needs at least 4 members, got " +
                             std::to_string(own_pool.size()));
    if (sim_pool.empty()) throw EmptyPoolError("local_densities: similar pool is empty");

    Vec dists(own_pool.size());
    for (std::size_t i = 0; i < own_pool.size(); ++i) dists[i] = norm(sub(own_pool[i], x_edge));
    std::sort(dists.begin(), dists.end());

    // Lowest distance achieving >= d_in coverage. The small epsilon keeps
    // ceil() exact when d_in * n lands on an integer up to rounding.
    const double n = static_cast<double>(own_pool.size());
    std::size_t idx = static_cast<std::size_t>(std::ceil(params.d_in * n - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, own_pool.size());
    const double d_thred = dists[idx - 1];
    if (d_thred <= kNormEps)
        throw DegenerateRadiusError("local_densities: all own-class members coincide with sample");

    const double radius = params.eta * d_thred;
    std::size_t within = 0;
    for (const Vec& y : sim_pool)
        if (norm(sub(y, x_edge)) < radius) ++within;

    LocalDensities out;
    out.d_in_value = params.d_in;
    out.d_sim_value = static_cast<double>(within) / static_cast<double>(sim_pool.size());
    out.d_thred = d_thred;
    return out;
}

Region classify_region(const LocalDensities& d) {
    if (d.d_sim_value > d.d_in_value) return Region::high;
    if (d.d_sim_value < d.d_in_value) return Region::low;
    return Region::central;
}

namespace {

double shape(GFamily family, double loss) {
    switch (family) {
        case GFamily::linear: return loss;
        case GFamily::exponential: return std::exp(loss) - 1.0;
        case GFamily::sigmoid: return 2.0 / (1.0 + std::exp(-loss)) - 1.0;
    }
    return loss;
}

double shape_derivative(GFamily family, double loss) {
    switch (family) {
        case GFamily::linear: return 1.0;
        case GFamily::exponential: return std::exp(loss);
        case GFamily::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-loss));
            return 2.0 * s * (1.0 - s);
        }
    }
    return 1.0;
}

}  // namespace

double reweight(Region region, double loss, const ReweightFunction& fn) {
    if (loss < 0.0) throw NegativeLossError("reweight: negative loss value");
    if (region == Region::central) return 1.0;
    const double g = fn.alpha * shape(fn.family, loss);
    const double raw = region == Region::high ? 1.0 + g : 1.0 / (1.0 + g);
    return std::clamp(raw, kWeightFloor, kWeightCeil);
}

double reweight_derivative(Region region, double loss, const ReweightFunction& fn) {
    if (loss < 0.0) throw NegativeLossError("reweight_derivative: negative loss value");
    if (region == Region::central) return 0.0;
    const double g = fn.alpha * shape(fn.family, loss);
    const double gprime = fn.alpha * shape_derivative(fn.family, loss);
    const double raw = region == Region::high ? 1.0 + g : 1.0 / (1.0 + g);
    if (raw <= kWeightFloor || raw >= kWeightCeil) return 0.0;
    return region == Region::high ? gprime : -gprime / ((1.0 + g) * (1.0 + g));
}

Vec assign_importance(const Vec& losses, const std::vector<Region>& regions,
                      const ReweightFunction& fn) {
    if (losses.size() != regions.size())
        throw DimensionMismatchError("assign_importance: losses/regions length mismatch");
    Vec weights(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i)
        weights[i] = reweight(regions[i], losses[i], fn);
    return weights;
}

double loss_edge(const Vec& weights) {
    if (weights.empty()) throw EmptyInputError("loss_edge: empty weight vector");
    double mean = 0.0;
    for (double v : weights) {
        if (v <= 0.0) throw NonpositiveWeightError("loss_edge: weight must be positive");
        mean += v;
    }
    mean /= static_cast<double>(weights.size());
    double sum = 0.0;
    for (double v : weights) sum += std::abs(v - mean) / v;
    return sum / static_cast<double>(weights.size());
}

Vec loss_edge_grad(const Vec& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw EmptyInputError("loss_edge_grad: empty weight vector");
    double mean = 0.0;
    for (double v : weights) {
        if (v <= 0.0) throw NonpositiveWeightError("loss_edge_grad: weight must be positive");
        mean += v;
    }
    mean /= static_cast<double>(n);

    const double inv_n = 1.0 / static_cast<double>(n);
    double sign_sum = 0.0;
    for (double v : weights) sign_sum += (v > mean ? 1.0 : (v < mean ? -1.0 : 0.0)) / v;

    Vec grad(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double v = weights[j];
        const double sgn = v > mean ? 1.0 : (v < mean ? -1.0 : 0.0);
        grad[j] = inv_n * (sgn / v - std::abs(v - mean) / (v * v) - inv_n * sign_sum);
    }
    return grad;
}

double loss_cls_weighted(const Vec& losses, const Vec& weights) {
    if (losses.size() != weights.size())
        throw DimensionMismatchError("loss_cls_weighted: losses/weights length mismatch");
    if (losses.empty()) throw EmptyInputError("loss_cls_weighted: empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) sum += weights[i] * losses[i];
    return sum / static_cast<double>(losses.size());
}

}  // namespace lrcalib
