#pragma once

// Named synthetic workload suites shared by the acceptance checks and the CLI.

#include "trace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hermes {

struct NamedTrace {
    std::string name;
    std::string category;
    std::vector<LoadRecord> records;
};

namespace workloads {

inline constexpr std::uint64_t kKiB = 1024;
inline constexpr std::uint64_t kMiB = 1024 * 1024;

inline MixComponent stream(double p, std::uint64_t bytes, std::uint32_t element, std::uint64_t pc,
                           std::uint64_t base, std::uint16_t gap = 0) {
    MixComponent c;
    c.kind = MixComponent::Kind::Stream;
    c.proportion = p;
    c.stream = {bytes, element, gap, base, pc};
    return c;
}

inline MixComponent chase(double p, std::uint64_t ws, std::uint64_t pc, std::uint64_t base,
                          std::uint16_t gap = 0) {
    MixComponent c;
    c.kind = MixComponent::Kind::Chase;
    c.proportion = p;
    c.chase = {ws, ws / 64, 7, gap, base, pc};
    return c;
}

inline MixComponent random(double p, std::uint64_t ws, std::uint64_t pc, std::uint64_t base,
                           std::uint16_t gap = 0) {
    MixComponent c;
    c.kind = MixComponent::Kind::Random;
    c.proportion = p;
    c.random = {ws, 3, gap, base, pc};
    return c;
}

/// Five two- and three-way mixes of streaming, pointer-chasing and random
/// access, each `records` loads long. Every mix combines an off-chip-heavy
/// component with one that mostly hits on-chip.
inline std::vector<NamedTrace> mixed_suite(std::uint64_t records = 1'000'000) {
    struct Entry {
        const char *name;
        MixSpec spec;
    };
    const std::vector<Entry> specs = {
        {"stream-chase",
         {{stream(0.5, 8 * kMiB, 4, 0x401000, 0x10000000), chase(0.5, 12 * kMiB, 0x402000, 0x40000000)},
          records,
          1}},
        {"stream-random",
         {{stream(0.5, 16 * kMiB, 8, 0x401000, 0x10000000), random(0.5, 6 * kMiB, 0x403000, 0x80000000)},
          records,
          2}},
        {"chase-small-large",
         {{chase(0.5, 2 * kMiB, 0x402000, 0x40000000), chase(0.5, 24 * kMiB, 0x404000, 0x60000000)},
          records,
          3}},
        {"hot-stream-shared-pc",
         {{random(0.5, 256 * kKiB, 0x401000, 0x80000000), stream(0.5, 16 * kMiB, 8, 0x401000, 0x10000000)},
          records,
          4}},
        {"random-mid",
         {{random(0.3, 4 * kMiB, 0x403000, 0x80000000), stream(0.4, 16 * kMiB, 4, 0x401000, 0x10000000),
           random(0.3, 64 * kKiB, 0x405000, 0x90000000)},
          records,
          5}},
    };
    std::vector<NamedTrace> out;
    for (const auto &e : specs)
        out.push_back({e.name, "mixed", gen_mixed(e.spec).records});
    return out;
}

/// Traces dominated by off-chip loads. The non-memory gaps keep the number
/// of loads in flight below the read-queue capacity.
inline std::vector<NamedTrace> off_chip_heavy_suite() {
    std::vector<NamedTrace> out;
    out.push_back({"chase-12m", "off-chip", gen_pointer_chase(12 * kMiB, 12 * kMiB / 64, 11, 16, 2)});
    out.push_back({"stream-8m-4b", "off-chip", gen_stream(8 * kMiB, 4, 2, 2)});
    MixSpec mix{{stream(0.5, 16 * kMiB, 8, 0x401000, 0x10000000, 1),
                 random(0.5, 16 * kMiB, 0x403000, 0x80000000, 12)},
                1'000'000,
                9};
    out.push_back({"stream-random-16m", "off-chip", gen_mixed(mix).records});
    return out;
}

} // namespace workloads
} // namespace hermes
