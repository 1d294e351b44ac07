#pragma once

#include <stdexcept>
#include <string>

namespace sf {

struct InvalidArgument : std::invalid_argument {
    explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

// Bounded search ran out of room. Carries enough text to reproduce the constraint.
struct SearchFailure : std::runtime_error {
    explicit SearchFailure(const std::string& what) : std::runtime_error(what) {}
};

struct FactorizationFailure : SearchFailure {
    explicit FactorizationFailure(const std::string& what) : SearchFailure(what) {}
};

// A verified negative answer, e.g. a conic with no point over some completion.
struct NotLocallySolvable : std::runtime_error {
    std::string place;
    NotLocallySolvable(const std::string& place_, const std::string& what) : std::runtime_error(what), place(place_) {}
};

// Two routes that must agree did not. Always an implementation bug.
struct ConsistencyViolation : std::logic_error {
    explicit ConsistencyViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace sf
