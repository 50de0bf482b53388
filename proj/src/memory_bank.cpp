#include "lrcalib/memory_bank.hpp"

#include <limits>
#include <string>

namespace lrcalib {

MemoryBank::MemoryBank(std::size_t dim, std::size_t capacity) : dim_(dim), capacity_(capacity) {
    if (dim < 2) throw DimensionMismatchError("MemoryBank: dimension must be >= 2");
    if (capacity == 0) throw EmptyInputError("MemoryBank: capacity must be positive");
}

void MemoryBank::insert(const ClassId& cls, const Vec& feature) {
    if (feature.size() != dim_)
        throw DimensionMismatchError("MemoryBank::insert: feature dimension " +
                                     std::to_string(feature.size()) + " != bank dimension " +
                                     std::to_string(dim_));
    if (!all_finite(feature))
        throw NumericError("MemoryBank::insert: non-finite feature entry");

    auto part = partitions_.find(cls.id);
    if (part == partitions_.end()) {
        partitions_[cls.id] = cls.partition;
    } else if (part->second != cls.partition) {
        throw NumericError("MemoryBank::insert: class " + std::to_string(cls.id) +
                           " reused with a different partition");
    }

    auto& queue = queues_[cls.id];
    const bool had_prior = !queue.empty();
    queue.push_back(Entry{next_seq_++, feature});
    ++total_;

    if (total_ > capacity_) {
        if (had_prior) {
            queue.pop_front();
        } else {
            // Inserting class has nothing evictable: drop the globally
            // oldest entry from some other class.
            std::uint64_t oldest = std::numeric_limits<std::uint64_t>::max();
            std::uint32_t victim = 0;
            for (const auto& [id, q] : queues_) {
                if (id == cls.id || q.empty()) continue;
                if (q.front().seq < oldest) {
                    oldest = q.front().seq;
                    victim = id;
                }
            }
            queues_[victim].pop_front();
        }
        --total_;
    }
}

Prototype MemoryBank::prototype(const ClassId& cls) const {
    auto it = queues_.find(cls.id);
    if (it == queues_.end() || it->second.empty())
        throw EmptyClassError("MemoryBank::prototype: class " + std::to_string(cls.id) +
                              " has no stored features");
    Vec mean(dim_, 0.0);
    for (const Entry& e : it->second) add_scaled(mean, e.feature, 1.0);
    const double inv = 1.0 / static_cast<double>(it->second.size());
    for (double& x : mean) x *= inv;

    Prototype p;
    p.cls = cls;
    p.mean = mean;
    p.unit = normalize(mean);  // throws ZeroVectorError on degenerate mean
    return p;
}

std::vector<Vec> MemoryBank::class_pool(const ClassId& cls) const {
    std::vector<Vec> pool;
    auto it = queues_.find(cls.id);
    if (it == queues_.end()) return pool;
    pool.reserve(it->second.size());
    for (const Entry& e : it->second) pool.push_back(e.feature);
    return pool;
}

const std::deque<MemoryBank::Entry>* MemoryBank::entries(std::uint32_t class_id) const {
    auto it = queues_.find(class_id);
    return it == queues_.end() ? nullptr : &it->second;
}

std::size_t MemoryBank::class_size(std::uint32_t class_id) const {
    auto it = queues_.find(class_id);
    return it == queues_.end() ? 0 : it->second.size();
}

std::vector<ClassId> MemoryBank::stored_classes() const {
    std::vector<ClassId> out;
    for (const auto& [id, q] : queues_) {
        if (q.empty()) continue;
        out.push_back(ClassId{id, partitions_.at(id)});
    }
    return out;
}

MemoryBank MemoryBank::restore(std::size_t dim, std::size_t capacity, std::uint64_t next_seq,
                               std::map<std::uint32_t, Partition> partitions,
                               std::map<std::uint32_t, std::deque<Entry>> queues) {
    MemoryBank bank(dim, capacity);
    std::size_t total = 0;
    for (const auto& [id, q] : queues) {
        std::uint64_t prev = 0;
        bool first = true;
        for (const Entry& e : q) {
            if (e.feature.size() != dim)
                throw DimensionMismatchError("MemoryBank::restore: entry dimension mismatch");
            if (!first && e.seq <= prev)
                throw NumericError("MemoryBank::restore: sequence numbers not increasing");
            prev = e.seq;
            first = false;
            ++total;
        }
        if (!partitions.count(id))
            throw NumericError("MemoryBank::restore: class without partition");
    }
    if (total > capacity) throw NumericError("MemoryBank::restore: contents exceed capacity");
    bank.next_seq_ = next_seq;
    bank.total_ = total;
    bank.queues_ = std::move(queues);
    bank.partitions_ = std::move(partitions);
    return bank;
}

}  // namespace lrcalib
