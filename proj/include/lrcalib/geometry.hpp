#pragma once

#include <cstddef>
#include <vector>

#include "lrcalib/error.hpp"

namespace lrcalib {

using Vec = std::vector<double>;

// Norm below this is treated as a degenerate (zero) vector.
inline constexpr double kNormEps = 1e-12;

// A vector whose Euclidean norm is 1 within 1e-9. Produced by normalize();
// functions taking UnitVec rely on the caller having normalized.
struct UnitVec {
    Vec values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
bool all_finite(const Vec& v);

Vec sub(const Vec& a, const Vec& b);
void add_scaled(Vec& dst, const Vec& src, double scale);
Vec scaled(const Vec& v, double scale);

// Projects v onto the unit hypersphere. Throws ZeroVectorError when the
// norm is at or below kNormEps.
UnitVec normalize(const Vec& v);

// Cosine similarity, clamped to [-1, 1] after rounding. Throws
// ZeroVectorError on degenerate inputs.
double cosine_sim(const Vec& a, const Vec& b);

// x_hat - p_hat componentwise; both arguments are expected on the sphere.
Vec difference_vector(const UnitVec& x_hat, const UnitVec& p_hat);

// Numerically stable softmax (max subtraction). Throws EmptyInputError.
Vec softmax(const Vec& scores);

// Euclidean distance between the normalized inputs.
double normalized_euclidean(const Vec& a, const Vec& b);

}  // namespace lrcalib
