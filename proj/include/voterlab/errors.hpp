#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace voterlab {

/// Raised when an operation's arguments violate its preconditions.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class GraphErrorKind { TooSmall, VertexOutOfRange, SelfLoop, DuplicateEdge, NonPositiveWeight, Disconnected };

inline const char* to_string(GraphErrorKind kind) {
    switch (kind) {
        case GraphErrorKind::TooSmall: return "too small";
        case GraphErrorKind::VertexOutOfRange: return "vertex out of range";
        case GraphErrorKind::SelfLoop: return "self-loop";
        case GraphErrorKind::DuplicateEdge: return "duplicate edge";
        case GraphErrorKind::NonPositiveWeight: return "non-positive weight";
        case GraphErrorKind::Disconnected: return "disconnected";
    }
    return "unknown";
}

class GraphError : public SpecError {
public:
    GraphError(GraphErrorKind kind, const std::string& what)
        : SpecError(std::string("graph: ") + to_string(kind) + ": " + what), kind_(kind) {}

    GraphErrorKind kind() const noexcept { return kind_; }

private:
    GraphErrorKind kind_;
};

/// A trial consumed more clock ticks than its budget without absorbing.
class TickBudgetExceeded : public std::runtime_error {
public:
    explicit TickBudgetExceeded(std::uint64_t budget)
        : std::runtime_error("tick budget of " + std::to_string(budget) + " events exhausted before absorption"),
          budget_(budget) {}

    std::uint64_t budget() const noexcept { return budget_; }

private:
    std::uint64_t budget_;
};

/// A stored log ran out before the dynamics absorbed.
class LogExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

inline constexpr std::uint64_t kDefaultTickBudget = 1'000'000'000ULL;

}  // namespace voterlab
