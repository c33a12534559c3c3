#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgrag {

enum class ErrorKind {
    Parse,
    EmptyGraph,
    NotFound,
    EmptySeed,
    Labeling,
    DegenerateTraining,
    InvalidArgument,
    Generation,
    Protocol,
    Io,
    Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a category so callers (the CLI,
/// the batch evaluator) can report it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace kgrag
