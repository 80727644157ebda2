#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ranbn {

enum class ErrorKind {
    Parameter,
    Schema,
    EmptyData,
    UnknownState,
    Parse,
    Cycle,
    Unsatisfiable,
    Feasibility,
    Io,
    Provider,
    FormatVersion,
    ZeroEvidence,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Raised when an edge insertion or a graph union would close a directed cycle.
// `path` lists the node names of the cycle, first node repeated at the end.
class CycleError : public Error {
public:
    CycleError(const std::string& message, std::vector<std::string> path);

    const std::vector<std::string>& path() const noexcept { return path_; }

private:
    std::vector<std::string> path_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0);

    // 1-based line of the offending input; 0 when unknown.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace ranbn
