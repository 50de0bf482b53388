#include "lrcalib/rng.hpp"

#include <cmath>

namespace lrcalib {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t root, std::string_view name) {
    return splitmix64(root ^ fnv1a64(name));
}

std::uint64_t stream_seed(std::uint64_t root, std::string_view name, std::uint64_t index) {
    return splitmix64(stream_seed(root, name) + 0x9e3779b97f4a7c15ull * (index + 1));
}

std::mt19937_64 make_stream(std::uint64_t root, std::string_view name) {
    return std::mt19937_64(stream_seed(root, name));
}

Vec gaussian_vec(std::mt19937_64& rng, const Vec& mean, const Vec& sigma2) {
    if (mean.size() != sigma2.size())
        throw DimensionMismatchError("gaussian_vec: mean/sigma2 dimension mismatch");
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec out(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) {
        const double z = unit(rng);
        out[j] = mean[j] + std::sqrt(sigma2[j]) * z;
    }
    return out;
}

Vec random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> unit(0.0, 1.0);
    while (true) {
        Vec v(dim);
        for (double& x : v) x = unit(rng);
        const double n = norm(v);
        if (n > kNormEps) {
            for (double& x : v) x /= n;
            return v;
        }
    }
}

}  // namespace lrcalib
