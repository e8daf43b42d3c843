#include "avs/errors.hpp"

#include <cstdio>

#include "avs/hash.hpp"

namespace avs {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::shape: return "shape";
        case ErrorKind::capacity: return "capacity";
        case ErrorKind::argument: return "argument";
        case ErrorKind::partition: return "partition";
        case ErrorKind::labeling: return "labeling";
        case ErrorKind::undefined: return "undefined";
        case ErrorKind::ingestion: return "ingestion";
        case ErrorKind::lookup: return "lookup";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

void throw_error(ErrorKind kind, const std::string& what) {
    switch (kind) {
        case ErrorKind::config: throw ConfigError(what);
        case ErrorKind::shape: throw ShapeError(what);
        case ErrorKind::capacity: throw CapacityError(what);
        case ErrorKind::argument: throw ArgumentError(what);
        case ErrorKind::partition: throw PartitionError(what);
        case ErrorKind::labeling: throw LabelingError(what);
        case ErrorKind::undefined: throw UndefinedError(what);
        case ErrorKind::ingestion: throw IngestionError(what);
        case ErrorKind::lookup: throw LookupError(what);
        case ErrorKind::io: throw IoError(what);
    }
    throw Error(kind, what);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace avs
