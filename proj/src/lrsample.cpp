#include "lrcalib/lrsample.hpp"

#include <algorithm>
#include <numeric>

namespace lrcalib {

Vec criterion_a_scores(const UnitVec& input, const std::vector<UnitVec>& pool,
                       const UnitVec& proto) {
    if (pool.empty()) throw InsufficientPoolError("criterion_a_scores: empty candidate pool");
    const Vec d_in = difference_vector(input, proto);
    Vec scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const Vec d_cand = difference_vector(pool[i], proto);
        scores[i] = cosine_sim(d_in, d_cand);  // ZeroVectorError when a sample sits on the prototype
    }
    return scores;
}

Vec criterion_b_scores(const UnitVec& input, const std::vector<UnitVec>& pool,
                       const UnitVec& proto) {
    if (pool.empty()) throw InsufficientPoolError("criterion_b_scores: empty candidate pool");
    const double sim_in = dot(input.values, proto.values);
    Vec scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        scores[i] = std::abs(sim_in - dot(pool[i].values, proto.values));
    return scores;
}

namespace {

// Ascending rank positions, stable over equal values.
Vec rank_positions(const Vec& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    Vec ranks(scores.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        ranks[order[pos]] = static_cast<double>(pos);
    return ranks;
}

}  // namespace

std::pair<Vec, std::size_t> fuse_scores(const Vec& a_scores, const Vec& b_scores,
                                        SelectionMode mode) {
    if (a_scores.size() != b_scores.size())
        throw DimensionMismatchError("fuse_scores: criterion length mismatch");
    if (a_scores.empty()) throw InsufficientPoolError("fuse_scores: empty criteria");

    const Vec pa = mode == SelectionMode::raw_scores ? softmax(a_scores)
                                                     : softmax(rank_positions(a_scores));
    const Vec pb = mode == SelectionMode::raw_scores ? softmax(b_scores)
                                                     : softmax(rank_positions(b_scores));
    Vec fused(pa.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        fused[i] = pa[i] + pb[i];
        if (fused[i] < fused[best]) best = i;
    }
    return {fused, best};
}

SelectionResult select_from_pool(const UnitVec& input, const std::vector<UnitVec>& pool_units,
                                 const std::vector<Vec>& pool_raw, const UnitVec& proto,
                                 SelectionMode mode) {
    if (pool_units.size() < 2)
        throw InsufficientPoolError("select_from_pool: need at least 2 candidates, got " +
                                    std::to_string(pool_units.size()));
    if (pool_units.size() != pool_raw.size())
        throw DimensionMismatchError("select_from_pool: unit/raw pool size mismatch");

    SelectionResult result;
    result.diff_scores = criterion_a_scores(input, pool_units, proto);
    result.gap_scores = criterion_b_scores(input, pool_units, proto);
    auto [fused, best] = fuse_scores(result.diff_scores, result.gap_scores, mode);
    result.fused = std::move(fused);
    result.target_index = best;
    result.target = pool_raw[best];
    return result;
}

SelectionResult select_lrsample(const Vec& x_in, const ClassId& cls, const MemoryBank& bank,
                                SelectionMode mode) {
    const auto* queue = bank.entries(cls.id);
    if (queue == nullptr || queue->size() < 2)
        throw InsufficientPoolError("select_lrsample: class " + std::to_string(cls.id) +
                                    " pool smaller than 2");
    std::vector<Vec> raw;
    std::vector<UnitVec> units;
    raw.reserve(queue->size());
    units.reserve(queue->size());
    for (const auto& e : *queue) {
        raw.push_back(e.feature);
        units.push_back(normalize(e.feature));
    }
    const Prototype proto = bank.prototype(cls);
    return select_from_pool(normalize(x_in), units, raw, proto.unit, mode);
}

}  // namespace lrcalib
