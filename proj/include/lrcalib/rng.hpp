#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lrcalib/geometry.hpp"

namespace lrcalib {

// All randomness in an experiment derives from one 64-bit root seed through
// named streams, so toggling a module never perturbs another module's draws.
// Stream names in use: "world", "shots", "ifc-init", "augmentation",
// "batches", "eval", "gen".

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t stream_seed(std::uint64_t root, std::string_view name);
std::uint64_t stream_seed(std::uint64_t root, std::string_view name, std::uint64_t index);

std::mt19937_64 make_stream(std::uint64_t root, std::string_view name);

// Componentwise Gaussian draw: mean[j] + sqrt(sigma2[j]) * z. A standard
// normal is consumed for every component even when sigma2[j] = 0, keeping
// the stream position independent of the variance values.
Vec gaussian_vec(std::mt19937_64& rng, const Vec& mean, const Vec& sigma2);

Vec random_unit(std::mt19937_64& rng, std::size_t dim);

}  // namespace lrcalib
