#pragma once

#include <stdexcept>
#include <string>

namespace dosdef {

// Caller broke an operation contract (bad arguments, wrong lifecycle phase).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Reference consumption vector has zero norm; the index ratio is undefined.
struct DegenerateReferenceError : std::domain_error {
    using std::domain_error::domain_error;
};

// A tendency vector is constant; mean-centering yields the zero vector.
struct DegenerateTendencyError : std::domain_error {
    using std::domain_error::domain_error;
};

// Too few benign samples to build thresholds or reference profiles.
struct InsufficientHistoryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A run produced no measurable service interval (TT == 0).
struct DegenerateRunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario document failed validation. `pointer()` is a JSON pointer to the
// offending field.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string pointer, const std::string& message)
        : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}

    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

} // namespace dosdef
