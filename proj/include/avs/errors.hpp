#pragma once

#include <stdexcept>
#include <string>

namespace avs {

// Error categories map onto distinct CLI exit codes.
enum class ErrorKind {
    config,
    shape,
    capacity,
    argument,
    partition,
    labeling,
    undefined,
    ingestion,
    lookup,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

template <ErrorKind K>
class TypedError : public Error {
public:
    explicit TypedError(const std::string& what) : Error(K, what) {}
};

using ConfigError = TypedError<ErrorKind::config>;
using ShapeError = TypedError<ErrorKind::shape>;
using CapacityError = TypedError<ErrorKind::capacity>;
using ArgumentError = TypedError<ErrorKind::argument>;
using PartitionError = TypedError<ErrorKind::partition>;
using LabelingError = TypedError<ErrorKind::labeling>;
/// A statistic that is mathematically undefined for the given input
/// (zero-norm cosine, zero pooled variance).
using UndefinedError = TypedError<ErrorKind::undefined>;
using IngestionError = TypedError<ErrorKind::ingestion>;
using LookupError = TypedError<ErrorKind::lookup>;
using IoError = TypedError<ErrorKind::io>;

/// Throws the TypedError matching `kind`.
[[noreturn]] void throw_error(ErrorKind kind, const std::string& what);

}  // namespace avs
