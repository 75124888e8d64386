#pragma once

// Load traces: record type, binary file format, and synthetic generators.
//
// File layout (all integers little-endian):
//   0   8  magic "HERMTRC1"
//   8   4  version (currently 1)
//   12  4  max_gap declared for every record
//   16  8  record_count
//   24  4  generator string length n
//   28  n  generator string (free text, UTF-8)
//   28+n   record_count records of 20 bytes:
//          pc u64 | vaddr u64 | gap u16 | size u8 | reserved u8 (0)

#include "errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hermes {

inline constexpr std::uint64_t kLineBytes = 64;
inline constexpr std::uint64_t kPageBytes = 4096;

constexpr std::uint64_t line_of(std::uint64_t addr) { return addr / kLineBytes; }
constexpr std::uint64_t line_base(std::uint64_t addr) { return addr & ~(kLineBytes - 1); }

struct LoadRecord {
    std::uint64_t pc = 0;
    std::uint64_t vaddr = 0;
    std::uint8_t size = 8;
    std::uint16_t gap = 0;

    friend bool operator==(const LoadRecord &, const LoadRecord &) = default;
};

struct TraceHeader {
    static constexpr std::array<char, 8> kMagic{'H', 'E', 'R', 'M', 'T', 'R', 'C', '1'};
    static constexpr std::uint32_t kVersion = 1;

    std::uint32_t version = kVersion;
    std::uint32_t max_gap = 0xFFFF;
    std::uint64_t record_count = 0;
    std::string generator;
};

inline bool valid_access_size(unsigned size) {
    return size == 1 || size == 2 || size == 4 || size == 8 || size == 16 || size == 32 || size == 64;
}

/// Throws ValidationError naming `index` when the record breaks an invariant.
inline void validate_record(const LoadRecord &r, std::size_t index, std::uint32_t max_gap = 0xFFFF) {
    auto fail = [&](const std::string &why) {
        throw ValidationError("record " + std::to_string(index) + ": " + why);
    };
    if (!valid_access_size(r.size))
        fail("access size " + std::to_string(r.size) + " is not a power of two in [1, 64]");
    if ((r.vaddr % kLineBytes) + r.size > kLineBytes)
        fail("access crosses a 64-byte line boundary");
    if (r.gap > max_gap)
        fail("gap " + std::to_string(r.gap) + " exceeds declared maximum " + std::to_string(max_gap));
}

namespace detail {

inline constexpr std::size_t kRecordBytes = 20;
inline constexpr std::size_t kFixedHeaderBytes = 28;

template <typename T>
void put_le(std::string &out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char *p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

} // namespace detail

inline void write_trace(const std::filesystem::path &path, std::span<const LoadRecord> records,
                        const std::string &generator = "", std::uint32_t max_gap = 0xFFFF) {
    for (std::size_t i = 0; i < records.size(); ++i)
        validate_record(records[i], i, max_gap);

    std::string buf;
    buf.reserve(detail::kFixedHeaderBytes + generator.size() + records.size() * detail::kRecordBytes);
    buf.append(TraceHeader::kMagic.data(), TraceHeader::kMagic.size());
    detail::put_le<std::uint32_t>(buf, TraceHeader::kVersion);
    detail::put_le<std::uint32_t>(buf, max_gap);
    detail::put_le<std::uint64_t>(buf, records.size());
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(generator.size()));
    buf.append(generator);
    for (const auto &r : records) {
        detail::put_le<std::uint64_t>(buf, r.pc);
        detail::put_le<std::uint64_t>(buf, r.vaddr);
        detail::put_le<std::uint16_t>(buf, r.gap);
        detail::put_le<std::uint8_t>(buf, r.size);
        detail::put_le<std::uint8_t>(buf, 0);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

/// Streaming reader. The header is validated on construction; records are
/// yielded in file order by next().
class TraceReader {
public:
    explicit TraceReader(const std::filesystem::path &path) : in_(path, std::ios::binary) {
        if (!in_)
            throw std::runtime_error("cannot open trace " + path.string());
        unsigned char fixed[detail::kFixedHeaderBytes];
        std::size_t got = read_some(fixed, sizeof fixed);
        if (got < 8 || std::memcmp(fixed, TraceHeader::kMagic.data(), 8) != 0)
            throw FormatError("bad trace magic in " + path.string());
        if (got < sizeof fixed)
            throw IntegrityError("truncated trace header", offset_);
        header_.version = detail::get_le<std::uint32_t>(fixed + 8);
        if (header_.version != TraceHeader::kVersion)
            throw FormatError("unsupported trace version " + std::to_string(header_.version));
        header_.max_gap = detail::get_le<std::uint32_t>(fixed + 12);
        header_.record_count = detail::get_le<std::uint64_t>(fixed + 16);
        auto gen_len = detail::get_le<std::uint32_t>(fixed + 24);
        header_.generator.resize(gen_len);
        if (read_some(reinterpret_cast<unsigned char *>(header_.generator.data()), gen_len) < gen_len)
            throw IntegrityError("truncated generator string", offset_);
    }

    const TraceHeader &header() const { return header_; }

    std::optional<LoadRecord> next() {
        if (yielded_ == header_.record_count) {
            if (!checked_tail_) {
                checked_tail_ = true;
                unsigned char extra;
                if (read_some(&extra, 1) != 0)
                    throw IntegrityError("trailing bytes after " + std::to_string(yielded_) + " records",
                                         offset_ - 1);
            }
            return std::nullopt;
        }
        unsigned char raw[detail::kRecordBytes];
        if (read_some(raw, sizeof raw) < sizeof raw)
            throw IntegrityError("trace truncated inside record " + std::to_string(yielded_), offset_);
        LoadRecord r;
        r.pc = detail::get_le<std::uint64_t>(raw);
        r.vaddr = detail::get_le<std::uint64_t>(raw + 8);
        r.gap = detail::get_le<std::uint16_t>(raw + 16);
        r.size = raw[18];
        validate_record(r, yielded_, header_.max_gap);
        ++yielded_;
        return r;
    }

private:
    std::size_t read_some(unsigned char *dst, std::size_t n) {
        in_.read(reinterpret_cast<char *>(dst), static_cast<std::streamsize>(n));
        auto got = static_cast<std::size_t>(in_.gcount());
        offset_ += got;
        return got;
    }

    std::ifstream in_;
    TraceHeader header_;
    std::uint64_t offset_ = 0;
    std::uint64_t yielded_ = 0;
    bool checked_tail_ = false;
};

inline std::vector<LoadRecord> read_trace(const std::filesystem::path &path) {
    TraceReader reader(path);
    std::vector<LoadRecord> out;
    out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(reader.header().record_count, 1u << 24)));
    while (auto r = reader.next())
        out.push_back(*r);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic generators
//
// Every generator is an endless, deterministic source of records; the
// gen_* free functions take a finite prefix.

namespace detail {

/// Uniform draw in [0, bound). Written out so traces are identical across
/// standard library implementations.
inline std::uint64_t draw_below(std::mt19937_64 &rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

template <typename T>
void shuffle(std::vector<T> &v, std::mt19937_64 &rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[draw_below(rng, i)]);
}

} // namespace detail

class RecordSource {
public:
    virtual ~RecordSource() = default;
    virtual LoadRecord next() = 0;
};

struct StreamParams {
    std::uint64_t array_bytes = 1 << 20;
    std::uint32_t element_size = 4;
    std::uint16_t gap = 0;
    std::uint64_t base = 0x10000000;
    std::uint64_t pc = 0x401000;
};

/// Sequential sweep over an array, restarting at the beginning after each pass.
class StreamSource final : public RecordSource {
public:
    explicit StreamSource(StreamParams p) : p_(p) {
        if (p.element_size == 0 || kLineBytes % p.element_size != 0 || !valid_access_size(p.element_size))
            throw ValidationError("stream element_size must divide 64");
        if (p.array_bytes == 0 || p.array_bytes % kLineBytes != 0)
            throw ValidationError("stream array_bytes must be a positive multiple of 64");
        if (p.base % kLineBytes != 0)
            throw ValidationError("stream base must be line aligned");
    }
    std::uint64_t loads_per_pass() const { return p_.array_bytes / p_.element_size; }
    LoadRecord next() override {
        LoadRecord r{p_.pc, p_.base + pos_, static_cast<std::uint8_t>(p_.element_size), p_.gap};
        pos_ += p_.element_size;
        if (pos_ == p_.array_bytes)
            pos_ = 0;
        return r;
    }

private:
    StreamParams p_;
    std::uint64_t pos_ = 0;
};

struct ChaseParams {
    std::uint64_t working_set_bytes = 1 << 24;
    std::uint64_t node_count = 1 << 18;
    std::uint64_t seed = 1;
    std::uint16_t gap = 0;
    std::uint64_t base = 0x40000000;
    std::uint64_t pc = 0x402000;
};

/// Walks a random cyclic permutation of `node_count` distinct lines drawn from
/// the working set.
class PointerChaseSource final : public RecordSource {
public:
    explicit PointerChaseSource(ChaseParams p) : p_(p) {
        const std::uint64_t lines = p.working_set_bytes / kLineBytes;
        if (p.node_count < 2)
            throw ValidationError("pointer chase needs node_count >= 2");
        if (p.node_count > lines)
            throw ValidationError("pointer chase node_count exceeds lines in working set");
        if (p.base % kLineBytes != 0)
            throw ValidationError("pointer chase base must be line aligned");
        std::mt19937_64 rng(p.seed);
        // Partial Fisher-Yates picks node_count distinct line slots in random order,
        // which directly gives the visiting order of the cycle.
        std::vector<std::uint64_t> slots(lines);
        std::iota(slots.begin(), slots.end(), 0);
        for (std::uint64_t i = 0; i < p.node_count; ++i)
            std::swap(slots[i], slots[i + detail::draw_below(rng, lines - i)]);
        slots.resize(p.node_count);
        order_ = std::move(slots);
    }
    LoadRecord next() override {
        LoadRecord r{p_.pc, p_.base + order_[pos_] * kLineBytes, 8, p_.gap};
        if (++pos_ == order_.size())
            pos_ = 0;
        return r;
    }

private:
    ChaseParams p_;
    std::vector<std::uint64_t> order_;
    std::size_t pos_ = 0;
};

struct RandomParams {
    std::uint64_t working_set_bytes = 1 << 20;
    std::uint64_t seed = 1;
    std::uint16_t gap = 0;
    std::uint64_t base = 0x80000000;
    std::uint64_t pc = 0x403000;
};

/// Independent uniform line picks over a working set (8-byte loads at line starts).
class RandomSource final : public RecordSource {
public:
    explicit RandomSource(RandomParams p) : p_(p), rng_(p.seed) {
        if (p.working_set_bytes < kLineBytes || p.working_set_bytes % kLineBytes != 0)
            throw ValidationError("random working_set_bytes must be a positive multiple of 64");
    }
    LoadRecord next() override {
        auto line = detail::draw_below(rng_, p_.working_set_bytes / kLineBytes);
        return LoadRecord{p_.pc, p_.base + line * kLineBytes, 8, p_.gap};
    }

private:
    RandomParams p_;
    std::mt19937_64 rng_;
};

inline std::vector<LoadRecord> take(RecordSource &src, std::uint64_t n) {
    std::vector<LoadRecord> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        out.push_back(src.next());
    return out;
}

inline std::vector<LoadRecord> gen_stream(std::uint64_t array_bytes, std::uint32_t element_size,
                                          std::uint64_t passes, std::uint16_t gap) {
    StreamSource src(StreamParams{array_bytes, element_size, gap});
    return take(src, passes * src.loads_per_pass());
}

/// One walk of the cycle per pass.
inline std::vector<LoadRecord> gen_pointer_chase(std::uint64_t working_set_bytes, std::uint64_t node_count,
                                                 std::uint64_t seed, std::uint16_t gap,
                                                 std::uint64_t passes = 1) {
    ChaseParams p;
    p.working_set_bytes = working_set_bytes;
    p.node_count = node_count;
    p.seed = seed;
    p.gap = gap;
    PointerChaseSource src(p);
    return take(src, passes * node_count);
}

// ---------------------------------------------------------------------------
// Mixtures

struct MixComponent {
    enum class Kind { Stream, Chase, Random };
    Kind kind = Kind::Stream;
    double proportion = 0.0;
    StreamParams stream{};
    ChaseParams chase{};
    RandomParams random{};
};

struct MixSpec {
    std::vector<MixComponent> components;
    std::uint64_t records = 0;
    std::uint64_t seed = 1;
};

struct MixedTrace {
    std::vector<LoadRecord> records;
    std::vector<std::uint8_t> provenance; ///< component index per record
};

namespace detail {

inline std::unique_ptr<RecordSource> make_source(const MixComponent &c, std::uint64_t seed_salt) {
    switch (c.kind) {
    case MixComponent::Kind::Stream:
        return std::make_unique<StreamSource>(c.stream);
    case MixComponent::Kind::Chase: {
        auto p = c.chase;
        p.seed ^= seed_salt;
        return std::make_unique<PointerChaseSource>(p);
    }
    case MixComponent::Kind::Random: {
        auto p = c.random;
        p.seed ^= seed_salt;
        return std::make_unique<RandomSource>(p);
    }
    }
    throw ValidationError("unknown mix component kind");
}

} // namespace detail

/// Interleaves component generators. Records are produced in blocks of 1000
/// whose per-component counts follow the proportions exactly (largest
/// remainder); the order inside each block is a seeded shuffle.
inline MixedTrace gen_mixed(const MixSpec &spec) {
    if (spec.components.empty())
        throw ValidationError("mix spec has no components");
    if (spec.components.size() > 255)
        throw ValidationError("mix spec has too many components");
    double total = 0.0;
    for (const auto &c : spec.components) {
        if (!(c.proportion >= 0.0))
            throw ValidationError("mix proportions must be non-negative");
        total += c.proportion;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("mix proportions sum to " + std::to_string(total) + ", expected 1");

    std::vector<std::unique_ptr<RecordSource>> sources;
    for (const auto &c : spec.components)
        sources.push_back(detail::make_source(c, spec.seed * 0x9E3779B97F4A7C15ull));

    constexpr std::uint64_t kBlock = 1000;
    std::vector<std::uint8_t> block_plan;
    {
        const std::size_t n = spec.components.size();
        std::vector<std::uint64_t> counts(n);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::uint64_t assigned = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double exact = spec.components[i].proportion * kBlock;
            counts[i] = static_cast<std::uint64_t>(std::floor(exact));
            assigned += counts[i];
            remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto &a, const auto &b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < kBlock; ++k, ++assigned)
            ++counts[remainders[k % n].second];
        for (std::size_t i = 0; i < n; ++i)
            block_plan.insert(block_plan.end(), counts[i], static_cast<std::uint8_t>(i));
    }

    std::mt19937_64 rng(spec.seed);
    MixedTrace out;
    out.records.reserve(spec.records);
    out.provenance.reserve(spec.records);
    while (out.records.size() < spec.records) {
        auto plan = block_plan;
        detail::shuffle(plan, rng);
        for (auto idx : plan) {
            if (out.records.size() == spec.records)
                break;
            out.records.push_back(sources[idx]->next());
            out.provenance.push_back(idx);
        }
    }
    return out;
}

} // namespace hermes
