#pragma once

// Program features for off-chip load prediction.
//
// Sixteen candidate features are available; POPET's default configuration
// uses five of them. Every feature is reduced to a raw 64-bit value and then
// hashed into its weight table by XOR-folding log2(table_size)-bit chunks.
// Features that combine a value with the first-access hint place the hint in
// the most significant index bit and fold the rest into the remaining bits.

#include "errors.hpp"
#include "trace.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hermes {

enum class Feature : std::uint8_t {
    VirtualAddress,
    VirtualPageNumber,
    CachelineOffset,
    FirstAccess,
    CachelineOffsetFirstAccess,
    ByteOffset,
    WordOffset,
    Pc,
    PcXorVirtualAddress,
    PcXorVirtualPageNumber,
    PcXorCachelineOffset,
    PcFirstAccess,
    PcXorByteOffset,
    PcXorWordOffset,
    Last4LoadPcs,
    Last4Pcs,
};

inline constexpr std::size_t kFeatureCount = 16;

inline constexpr std::array<Feature, kFeatureCount> all_features() {
    std::array<Feature, kFeatureCount> out{};
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        out[i] = static_cast<Feature>(i);
    return out;
}

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "vaddr",           "vpn",           "cl_offset",          "first_access",
    "cl_offset+first", "byte_offset",   "word_offset",        "pc",
    "pc^vaddr",        "pc^vpn",        "pc^cl_offset",       "pc+first",
    "pc^byte_offset",  "pc^word_offset", "last4_load_pcs",    "last4_pcs",
};

inline std::string_view to_string(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

inline std::optional<Feature> feature_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (kFeatureNames[i] == name)
            return static_cast<Feature>(i);
    return std::nullopt;
}

inline bool uses_first_access(Feature f) {
    return f == Feature::FirstAccess || f == Feature::CachelineOffsetFirstAccess || f == Feature::PcFirstAccess;
}

/// XOR of successive `bits`-wide chunks of `v`.
constexpr std::uint32_t fold_bits(std::uint64_t v, unsigned bits) {
    if (bits == 0)
        return 0;
    if (bits >= 32)
        return static_cast<std::uint32_t>(v ^ (v >> 32));
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    std::uint64_t acc = 0;
    while (v != 0) {
        acc ^= v & mask;
        v >>= bits;
    }
    return static_cast<std::uint32_t>(acc);
}

/// Last four load PCs, most recent first.
class LoadHistory {
public:
    void push(std::uint64_t pc) {
        for (std::size_t i = pcs_.size() - 1; i > 0; --i)
            pcs_[i] = pcs_[i - 1];
        pcs_[0] = pc;
    }
    const std::array<std::uint64_t, 4> &pcs() const { return pcs_; }
    /// Shifted XOR: (pc1 << 3) ^ (pc2 << 2) ^ (pc3 << 1) ^ pc4, pc1 most recent.
    std::uint64_t fold() const { return (pcs_[0] << 3) ^ (pcs_[1] << 2) ^ (pcs_[2] << 1) ^ pcs_[3]; }

    friend bool operator==(const LoadHistory &, const LoadHistory &) = default;

private:
    std::array<std::uint64_t, 4> pcs_{};
};

/// 64-entry LRU buffer of {page tag, line bitmap} that backs the first-access hint.
class PageBuffer {
public:
    struct Entry {
        std::uint64_t page = 0;
        std::uint64_t bitmap = 0;
        friend bool operator==(const Entry &, const Entry &) = default;
    };

    static constexpr std::size_t kEntries = 64;

    /// True iff the line of `vaddr` has not been touched recently. Records the
    /// touch as a side effect (allocating the page entry, LRU-evicting if needed).
    bool first_access_hint(std::uint64_t vaddr) {
        const std::uint64_t page = vaddr / kPageBytes;
        const unsigned bit = static_cast<unsigned>((vaddr / kLineBytes) % (kPageBytes / kLineBytes));
        auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry &e) { return e.page == page; });
        Entry e{page, 0};
        if (it != entries_.end()) {
            e = *it;
            entries_.erase(it);
        } else if (entries_.size() == kEntries) {
            entries_.pop_back();
        }
        const bool was_set = (e.bitmap >> bit) & 1;
        e.bitmap |= std::uint64_t{1} << bit;
        entries_.insert(entries_.begin(), e);
        return !was_set;
    }

    /// Entries in recency order, most recent first.
    const std::vector<Entry> &entries() const { return entries_; }
    void restore(std::vector<Entry> entries) {
        if (entries.size() > kEntries)
            throw ValidationError("page buffer holds at most 64 entries");
        entries_ = std::move(entries);
    }

    friend bool operator==(const PageBuffer &, const PageBuffer &) = default;

private:
    std::vector<Entry> entries_;
};

/// Everything a feature may be computed from, captured at LQ allocation.
struct FeatureContext {
    std::uint64_t pc = 0;
    std::uint64_t vaddr = 0;
    bool first_access = false;
    std::uint64_t last4_load_pcs = 0; ///< LoadHistory::fold() before this load
    std::uint64_t last4_pcs = 0;      ///< same fold over all instruction PCs
};

/// Hashed table index of `f` for a table of `table_size` entries (a power of two).
inline std::uint32_t feature_index(Feature f, const FeatureContext &c, std::uint32_t table_size) {
    const unsigned bits = static_cast<unsigned>(std::countr_zero(table_size));
    const std::uint64_t byte_off = c.vaddr % kLineBytes;
    const std::uint64_t word_off = byte_off / 8;
    const std::uint64_t cl_off = (c.vaddr / kLineBytes) % (kPageBytes / kLineBytes);
    const std::uint64_t vpn = c.vaddr / kPageBytes;
    auto with_hint = [&](std::uint64_t v) -> std::uint32_t {
        if (bits == 0)
            return 0;
        return fold_bits(v, bits - 1) | (static_cast<std::uint32_t>(c.first_access) << (bits - 1));
    };
    switch (f) {
    case Feature::VirtualAddress:
        return fold_bits(c.vaddr, bits);
    case Feature::VirtualPageNumber:
        return fold_bits(vpn, bits);
    case Feature::CachelineOffset:
        return fold_bits(cl_off, bits);
    case Feature::FirstAccess:
        return fold_bits(c.first_access ? 1 : 0, bits);
    case Feature::CachelineOffsetFirstAccess:
        return with_hint(cl_off);
    case Feature::ByteOffset:
        return fold_bits(byte_off, bits);
    case Feature::WordOffset:
        return fold_bits(word_off, bits);
    case Feature::Pc:
        return fold_bits(c.pc, bits);
    case Feature::PcXorVirtualAddress:
        return fold_bits(c.pc ^ c.vaddr, bits);
    case Feature::PcXorVirtualPageNumber:
        return fold_bits(c.pc ^ vpn, bits);
    case Feature::PcXorCachelineOffset:
        return fold_bits(c.pc ^ cl_off, bits);
    case Feature::PcFirstAccess:
        return with_hint(c.pc);
    case Feature::PcXorByteOffset:
        return fold_bits(c.pc ^ byte_off, bits);
    case Feature::PcXorWordOffset:
        return fold_bits(c.pc ^ word_off, bits);
    case Feature::Last4LoadPcs:
        return fold_bits(c.last4_load_pcs, bits);
    case Feature::Last4Pcs:
        return fold_bits(c.last4_pcs, bits);
    }
    throw ValidationError("unknown feature");
}

struct FeatureSpec {
    Feature feature;
    std::uint32_t table_size;
    friend bool operator==(const FeatureSpec &, const FeatureSpec &) = default;
};

/// The five selected features with their weight-table sizes.
inline std::vector<FeatureSpec> default_feature_specs() {
    return {
        {Feature::PcXorCachelineOffset, 1024},
        {Feature::PcXorByteOffset, 1024},
        {Feature::PcFirstAccess, 1024},
        {Feature::CachelineOffsetFirstAccess, 128},
        {Feature::Last4LoadPcs, 1024},
    };
}

/// Table size used when a candidate feature is evaluated on its own or in a
/// search; the cacheline-offset + first-access value has only 128 distinct values.
inline std::uint32_t default_table_size(Feature f) {
    switch (f) {
    case Feature::CachelineOffsetFirstAccess:
        return 128;
    case Feature::FirstAccess:
        return 2;
    case Feature::CachelineOffset:
    case Feature::ByteOffset:
        return 64;
    case Feature::WordOffset:
        return 8;
    default:
        return 1024;
    }
}

/// Per-load feature history: load-PC and all-instruction-PC shift registers
/// plus the page buffer. Instruction PCs between loads are not in the trace;
/// the `gap` instructions before a load are assumed to sit at pc-4*gap .. pc-4.
struct FeatureHistory {
    LoadHistory loads;
    LoadHistory instructions;
    PageBuffer pages;

    friend bool operator==(const FeatureHistory &, const FeatureHistory &) = default;
};

/// Builds the context for one load. Touches the page buffer (first-access
/// hint side effect) but leaves the PC histories alone; call commit() after.
inline FeatureContext make_context(FeatureHistory &h, const LoadRecord &r) {
    const unsigned synthetic = std::min<unsigned>(r.gap, 4);
    LoadHistory instr = h.instructions;
    for (unsigned k = synthetic; k >= 1; --k)
        instr.push(r.pc - 4ull * k);
    FeatureContext c;
    c.pc = r.pc;
    c.vaddr = r.vaddr;
    c.first_access = h.pages.first_access_hint(r.vaddr);
    c.last4_load_pcs = h.loads.fold();
    c.last4_pcs = instr.fold();
    return c;
}

/// Shifts the current load (and its preceding gap PCs) into the histories.
inline void commit(FeatureHistory &h, const LoadRecord &r) {
    const unsigned synthetic = std::min<unsigned>(r.gap, 4);
    for (unsigned k = synthetic; k >= 1; --k)
        h.instructions.push(r.pc - 4ull * k);
    h.instructions.push(r.pc);
    h.loads.push(r.pc);
}

} // namespace hermes
