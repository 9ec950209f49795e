#pragma once

#include <stdexcept>
#include <string>

namespace insphere {

// Error taxonomy used for CLI exit codes: UserError -> 1, DataError -> 2,
// anything else -> 3 (internal invariant violation).
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct EmptyMesh : DataError {
    using DataError::DataError;
};

struct DegenerateMesh : DataError {
    using DataError::DataError;
};

struct ResolutionTooLarge : UserError {
    using UserError::UserError;
};

struct EmptyGrid : DataError {
    using DataError::DataError;
};

struct NoCandidates : DataError {
    using DataError::DataError;
};

struct EmptyDataset : DataError {
    using DataError::DataError;
};

struct ConfigMismatch : DataError {
    using DataError::DataError;
};

struct CacheCorrupt : DataError {
    using DataError::DataError;
};

struct ShapeMismatch : DataError {
    using DataError::DataError;
};

struct DivergedTraining : DataError {
    using DataError::DataError;
};

struct UnsupportedFormat : UserError {
    using UserError::UserError;
};

} // namespace insphere
