#include "kgrag/error.hpp"

namespace kgrag {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::EmptyGraph: return "empty-graph";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::EmptySeed: return "empty-seed";
    case ErrorKind::Labeling: return "labeling";
    case ErrorKind::DegenerateTraining: return "degenerate-training";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Generation: return "generation";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

} // namespace kgrag
