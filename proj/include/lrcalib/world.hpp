#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lrcalib/config.hpp"
#include "lrcalib/geometry.hpp"
#include "lrcalib/memory_bank.hpp"

namespace lrcalib {

// Where training/evaluation features come from: a synthetic Gaussian world
// or an ingested feature file. Class ids are [0, base_count) for base
// classes and [base_count, base_count + novel_count) for novel ones.
class FeatureSource {
public:
    virtual ~FeatureSource() = default;
    virtual std::size_t dim() const = 0;
    virtual std::size_t base_count() const = 0;
    virtual std::size_t novel_count() const = 0;
    virtual Vec draw(std::uint32_t class_id, std::mt19937_64& rng) const = 0;

    std::size_t class_count() const { return base_count() + novel_count(); }
    ClassId class_id(std::uint32_t id) const {
        return ClassId{id, id < base_count() ? Partition::base : Partition::novel};
    }
};

// Gaussian class distributions. Each novel class mean sits delta away from
// its assigned similar base mean and strictly closer to it than to any
// other base mean.
class SyntheticWorld final : public FeatureSource {
public:
    std::size_t d = 0;
    std::size_t bases = 0;
    std::size_t novels = 0;
    std::vector<Vec> means;    // indexed by class id
    std::vector<Vec> sigma2;   // indexed by class id
    std::vector<std::uint32_t> similar_base;  // per novel class, base id
    std::uint64_t seed = 0;

    std::size_t dim() const override { return d; }
    std::size_t base_count() const override { return bases; }
    std::size_t novel_count() const override { return novels; }
    Vec draw(std::uint32_t class_id, std::mt19937_64& rng) const override;
};

SyntheticWorld generate_world(const ExperimentConfig& config, std::uint64_t seed);

// Resamples rows of an ingested feature file, uniformly with replacement.
class EmpiricalSource final : public FeatureSource {
public:
    EmpiricalSource(std::size_t dim, std::size_t base_count, std::size_t novel_count,
                    std::vector<std::vector<Vec>> rows_per_class);

    std::size_t dim() const override { return d_; }
    std::size_t base_count() const override { return bases_; }
    std::size_t novel_count() const override { return novels_; }
    Vec draw(std::uint32_t class_id, std::mt19937_64& rng) const override;

    const std::vector<Vec>& rows(std::uint32_t class_id) const { return rows_.at(class_id); }

private:
    std::size_t d_;
    std::size_t bases_;
    std::size_t novels_;
    std::vector<std::vector<Vec>> rows_;
};

}  // namespace lrcalib
