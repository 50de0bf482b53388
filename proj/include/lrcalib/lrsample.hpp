#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lrcalib/geometry.hpp"
#include "lrcalib/memory_bank.hpp"

namespace lrcalib {

// How the two criterion rankings are fused before the argmin: softmax over
// the raw score values (default), or softmax over the rank positions that
// the two argsorts produce.
enum class SelectionMode { raw_scores, rank_positions };

struct SelectionResult {
    std::size_t target_index = 0;  // index into the class pool
    Vec target;                    // raw (unnormalized) bank vector at that index
    Vec diff_scores;               // criterion A per candidate
    Vec gap_scores;                // criterion B per candidate
    Vec fused;                     // p_A + p_B per candidate
};

// Criterion A: cosine similarity between the input's and each candidate's
// difference vectors in the prototype reference frame. Lower = more reverse.
Vec criterion_a_scores(const UnitVec& input, const std::vector<UnitVec>& pool,
                       const UnitVec& proto);

// Criterion B: absolute gap between the input's and each candidate's
// prototype similarity. Lower = closer match.
Vec criterion_b_scores(const UnitVec& input, const std::vector<UnitVec>& pool,
                       const UnitVec& proto);

// Fuses two raw criterion sequences into p_A + p_B and returns the fused
// sequence plus its argmin (ties to the lowest index).
std::pair<Vec, std::size_t> fuse_scores(const Vec& a_scores, const Vec& b_scores,
                                        SelectionMode mode);

// Selection over a pre-normalized pool; pool_raw supplies the returned
// target vector and must parallel pool_units.
SelectionResult select_from_pool(const UnitVec& input, const std::vector<UnitVec>& pool_units,
                                 const std::vector<Vec>& pool_raw, const UnitVec& proto,
                                 SelectionMode mode = SelectionMode::raw_scores);

// Full criterion over a bank snapshot: pool and prototype of `cls`,
// candidates scored against x_in. Requires a pool of at least 2.
SelectionResult select_lrsample(const Vec& x_in, const ClassId& cls, const MemoryBank& bank,
                                SelectionMode mode = SelectionMode::raw_scores);

}  // namespace lrcalib
