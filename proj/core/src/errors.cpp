#include "ranbn/errors.hpp"

#include <utility>

namespace ranbn {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parameter: return "parameter";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::EmptyData: return "empty-data";
        case ErrorKind::UnknownState: return "unknown-state";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Cycle: return "cycle";
        case ErrorKind::Unsatisfiable: return "unsatisfiable-constraints";
        case ErrorKind::Feasibility: return "feasibility";
        case ErrorKind::Io: return "io";
        case ErrorKind::Provider: return "provider";
        case ErrorKind::FormatVersion: return "format-version";
        case ErrorKind::ZeroEvidence: return "zero-evidence";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

CycleError::CycleError(const std::string& message, std::vector<std::string> path)
    : Error(ErrorKind::Cycle, message), path_(std::move(path)) {}

ParseError::ParseError(const std::string& message, std::size_t line)
    : Error(ErrorKind::Parse, line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace ranbn
