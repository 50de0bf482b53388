#include "lrcalib/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lrcalib {

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw DimensionMismatchError("dot: dimension mismatch " + std::to_string(a.size()) +
                                     " vs " + std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& v) {
    return std::sqrt(dot(v, v));
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

Vec sub(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionMismatchError("sub: dimension mismatch");
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

void add_scaled(Vec& dst, const Vec& src, double scale) {
    if (dst.size() != src.size()) throw DimensionMismatchError("add_scaled: dimension mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

Vec scaled(const Vec& v, double scale) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * scale;
    return out;
}

UnitVec normalize(const Vec& v) {
    const double n = norm(v);
    if (n <= kNormEps) throw ZeroVectorError("normalize: vector norm below threshold");
    UnitVec out;
    out.values.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = v[i] / n;
    return out;
}

double cosine_sim(const Vec& a, const Vec& b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na <= kNormEps || nb <= kNormEps)
        throw ZeroVectorError("cosine_sim: degenerate input vector");
    const double c = dot(a, b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

Vec difference_vector(const UnitVec& x_hat, const UnitVec& p_hat) {
    return sub(x_hat.values, p_hat.values);
}

Vec softmax(const Vec& scores) {
    if (scores.empty()) throw EmptyInputError("softmax: empty score sequence");
    const double m = *std::max_element(scores.begin(), scores.end());
    Vec out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

double normalized_euclidean(const Vec& a, const Vec& b) {
    const UnitVec ua = normalize(a);
    const UnitVec ub = normalize(b);
    return norm(sub(ua.values, ub.values));
}

}  // namespace lrcalib
