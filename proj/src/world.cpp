#include "lrcalib/world.hpp"

#include <string>

#include "lrcalib/rng.hpp"

namespace lrcalib {

Vec SyntheticWorld::draw(std::uint32_t class_id, std::mt19937_64& rng) const {
    if (class_id >= means.size())
        throw DimensionMismatchError("SyntheticWorld::draw: class id out of range");
    return gaussian_vec(rng, means[class_id], sigma2[class_id]);
}

SyntheticWorld generate_world(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t d = config.dim;
    const std::size_t B = config.base_classes;
    const std::size_t V = config.novel_classes;

    SyntheticWorld world;
    world.d = d;
    world.bases = B;
    world.novels = V;
    world.seed = seed;
    world.means.resize(B + V);
    world.sigma2.resize(B + V);
    world.similar_base.resize(V);

    std::mt19937_64 rng = make_stream(seed, "world");
    std::uniform_real_distribution<double> jitter(1.0 - config.sigma_jitter,
                                                  1.0 + config.sigma_jitter);

    for (std::size_t b = 0; b < B; ++b) {
        world.means[b] = scaled(random_unit(rng, d), config.mean_scale);
        Vec s2(d);
        for (double& x : s2) x = config.spread * config.spread * jitter(rng);
        world.sigma2[b] = s2;
    }

    // Novel class v pairs with base class v; its mean is delta away along a
    // random direction and must stay strictly nearest to that base mean.
    for (std::size_t v = 0; v < V; ++v) {
        const std::uint32_t sim = static_cast<std::uint32_t>(v);
        world.similar_base[v] = sim;
        Vec mean;
        bool placed = false;
        for (int attempt = 0; attempt < 256 && !placed; ++attempt) {
            mean = world.means[sim];
            add_scaled(mean, random_unit(rng, d), config.delta);
            placed = true;
            const double own = norm(sub(mean, world.means[sim]));
            for (std::size_t b = 0; b < B; ++b) {
                if (b == sim) continue;
                if (norm(sub(mean, world.means[b])) <= own) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed)
            throw InvalidConfigError(
                "generate_world: cannot place novel class " + std::to_string(B + v) +
                " strictly nearest to its similar base; increase world.mean_scale or reduce "
                "world.delta");
        world.means[B + v] = mean;
        Vec s2(d);
        for (double& x : s2) x = config.spread * config.spread * jitter(rng);
        world.sigma2[B + v] = s2;
    }
    return world;
}

EmpiricalSource::EmpiricalSource(std::size_t dim, std::size_t base_count, std::size_t novel_count,
                                 std::vector<std::vector<Vec>> rows_per_class)
    : d_(dim), bases_(base_count), novels_(novel_count), rows_(std::move(rows_per_class)) {
    if (rows_.size() != bases_ + novels_)
        throw DimensionMismatchError("EmpiricalSource: rows/class-count mismatch");
    for (const auto& rows : rows_)
        for (const Vec& r : rows)
            if (r.size() != d_)
                throw DimensionMismatchError("EmpiricalSource: row dimension mismatch");
}

Vec EmpiricalSource::draw(std::uint32_t class_id, std::mt19937_64& rng) const {
    if (class_id >= rows_.size())
        throw DimensionMismatchError("EmpiricalSource::draw: class id out of range");
    const auto& rows = rows_[class_id];
    if (rows.empty())
        throw EmptyClassError("EmpiricalSource::draw: class " + std::to_string(class_id) +
                              " has no rows");
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    return rows[pick(rng)];
}

}  // namespace lrcalib
