#pragma once

#include <stdexcept>
#include <string>

namespace srsanon {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files, bad headers, unparseable cells.
struct FormatError : Error {
    using Error::Error;
};

// Data that parses but violates the declared schema.
struct SchemaError : Error {
    using Error::Error;
};

// Unknown taxonomy node.
struct LookupError : Error {
    using Error::Error;
};

// Invalid argument to an algorithmic primitive.
struct ArgumentError : Error {
    using Error::Error;
};

// The release cannot be anonymized under the given constraints
// (e.g. fewer than k new cases).
struct InfeasibleReleaseError : Error {
    using Error::Error;
};

// Cross-file inconsistency (e.g. a clone referenced by the history
// cannot be resolved, or datasets passed to a metric do not align).
struct DataIntegrityError : Error {
    using Error::Error;
};

}  // namespace srsanon
