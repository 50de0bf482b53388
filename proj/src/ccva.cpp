#include "lrcalib/ccva.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "lrcalib/rng.hpp"

namespace lrcalib {

Prototype nearest_base_prototype(const MemoryBank& bank, const Vec& center) {
    double best = std::numeric_limits<double>::infinity();
    Prototype found;
    bool any = false;
    for (const ClassId& cls : bank.stored_classes()) {
        if (cls.partition != Partition::base) continue;
        Prototype p = bank.prototype(cls);
        const double dist = normalized_euclidean(center, p.mean);
        if (!any || dist < best) {
            best = dist;
            found = std::move(p);
            any = true;
        }
    }
    if (!any) throw InsufficientBaseClassesError("calibrate_center: no base classes in bank");
    return found;
}

CalibrationReport calibrate_center(MemoryBank& bank, const IfcModel& model, const ClassId& cls,
                                   const std::vector<Vec>& shots, std::size_t count) {
    if (shots.empty()) throw EmptyInputError("calibrate_center: no shots given");
    if (cls.partition != Partition::novel)
        throw NumericError("calibrate_center: class " + std::to_string(cls.id) + " is not novel");

    CalibrationReport report;
    report.cls = cls;
    report.center_before = bank.prototype(cls).mean;

    for (const Vec& shot : shots)
        for (const Vec& generated : generate_lrsamples(model, shot, count))
            bank.insert(cls, generated);

    report.center_after = bank.prototype(cls).mean;

    const Prototype similar = nearest_base_prototype(bank, report.center_after);
    report.similar_base = similar.cls;
    report.dist_to_similar_before = normalized_euclidean(report.center_before, similar.mean);
    report.dist_to_similar_after = normalized_euclidean(report.center_after, similar.mean);
    return report;
}

GaussianSpec variance_transfer(const ClassId& novel, const BaseStats& base_stats,
                               const Vec& calibrated_mu, std::size_t k) {
    if (k == 0) throw EmptyInputError("variance_transfer: k must be positive");
    if (base_stats.size() < k)
        throw InsufficientBaseClassesError("variance_transfer: need " + std::to_string(k) +
                                           " base classes, have " +
                                           std::to_string(base_stats.size()));

    std::vector<std::pair<double, std::uint32_t>> ranked;
    ranked.reserve(base_stats.size());
    for (const auto& [id, stats] : base_stats)
        ranked.emplace_back(normalized_euclidean(calibrated_mu, stats.mean), id);
    std::sort(ranked.begin(), ranked.end());

    GaussianSpec spec;
    spec.cls = novel;
    spec.mu = calibrated_mu;
    spec.sigma2.assign(calibrated_mu.size(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const Vec& s2 = base_stats.at(ranked[i].second).sigma2;
        if (s2.size() != spec.sigma2.size())
            throw DimensionMismatchError("variance_transfer: sigma2 dimension mismatch");
        add_scaled(spec.sigma2, s2, 1.0);
    }
    const double inv_k = 1.0 / static_cast<double>(k);
    for (double& x : spec.sigma2) x *= inv_k;
    return spec;
}

std::vector<Vec> sample_augmented(const GaussianSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw EmptyInputError("sample_augmented: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Vec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(gaussian_vec(rng, spec.mu, spec.sigma2));
    return out;
}

double loss_aug(const std::vector<Vec>& logits, const ClassId& cls) {
    if (logits.empty()) throw EmptyInputError("loss_aug: empty batch");
    double sum = 0.0;
    for (const Vec& row : logits) sum += ce_from_logits(row, cls.id);
    return sum / static_cast<double>(logits.size());
}

}  // namespace lrcalib
