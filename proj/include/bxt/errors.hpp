#pragma once

#include <stdexcept>
#include <string>

namespace bxt {

// User-facing data/usage problems (bad files, bad flags, mismatched
// dimensions). The CLI maps these to exit code 2; contract violations
// (std::invalid_argument, std::logic_error) map to exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model file carries an unknown magic string or format version.
struct ModelVersionError : DataError {
    explicit ModelVersionError(const std::string& msg) : DataError(msg) {}
};

// Model file is truncated or fails its checksum.
struct ModelCorruptError : DataError {
    explicit ModelCorruptError(const std::string& msg) : DataError(msg) {}
};

} // namespace bxt
