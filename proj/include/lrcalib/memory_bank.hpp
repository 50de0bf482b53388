#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "lrcalib/geometry.hpp"

namespace lrcalib {

enum class Partition : std::uint8_t { base = 0, novel = 1 };

struct ClassId {
    std::uint32_t id = 0;
    Partition partition = Partition::base;

    friend auto operator<=>(const ClassId&, const ClassId&) = default;
};

struct Prototype {
    ClassId cls;
    Vec mean;      // arithmetic mean of the class pool
    UnitVec unit;  // normalize(mean)
};

// Per-class FIFO queues of raw feature vectors under one global capacity
// budget (default 4096). Vectors are stored unnormalized; callers normalize
// at use sites. Single-writer: one context mutates, reads may be shared
// between writes.
class MemoryBank {
public:
    struct Entry {
        std::uint64_t seq;  // global insertion counter, drives eviction order
        Vec feature;
    };

    explicit MemoryBank(std::size_t dim, std::size_t capacity = 4096);

    // Appends to the class queue. When the budget would be exceeded, the
    // oldest entry of the inserting class is evicted; if the class had no
    // prior entries, the globally oldest entry goes instead.
    void insert(const ClassId& cls, const Vec& feature);

    // Mean and normalized mean of the class pool, recomputed on demand.
    Prototype prototype(const ClassId& cls) const;

    // Stored vectors in insertion order; empty for an absent class.
    std::vector<Vec> class_pool(const ClassId& cls) const;

    // Fast path for read-heavy callers; nullptr when the class is absent.
    const std::deque<Entry>* entries(std::uint32_t class_id) const;

    std::size_t size() const { return total_; }
    std::size_t class_size(std::uint32_t class_id) const;
    std::size_t dim() const { return dim_; }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t next_seq() const { return next_seq_; }

    // Nonempty classes, ascending id.
    std::vector<ClassId> stored_classes() const;

    // Checkpoint support: rebuilds a bank from raw state. Sequence numbers
    // must be strictly increasing within each class.
    static MemoryBank restore(std::size_t dim, std::size_t capacity, std::uint64_t next_seq,
                              std::map<std::uint32_t, Partition> partitions,
                              std::map<std::uint32_t, std::deque<Entry>> queues);
    const std::map<std::uint32_t, std::deque<Entry>>& queues() const { return queues_; }
    const std::map<std::uint32_t, Partition>& partitions() const { return partitions_; }

private:
    std::size_t dim_;
    std::size_t capacity_;
    std::uint64_t next_seq_ = 0;
    std::size_t total_ = 0;
    std::map<std::uint32_t, std::deque<Entry>> queues_;
    std::map<std::uint32_t, Partition> partitions_;
};

}  // namespace lrcalib
