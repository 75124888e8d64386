#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hermes {

/// Bad magic, unknown version or otherwise malformed trace header.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Trace body does not match its header (truncation, trailing bytes).
struct IntegrityError : std::runtime_error {
    IntegrityError(const std::string &what, std::uint64_t offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset(offset) {}
    std::uint64_t offset;
};

/// A value violates a documented invariant (record fields, configs, specs).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// API misuse: training a token twice, retiring a request early, etc.
struct UsageError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace hermes
