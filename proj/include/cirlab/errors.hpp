#pragma once

#include <stdexcept>
#include <string>

namespace cirlab {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CIRLAB_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

CIRLAB_DEFINE_ERROR(ArgumentError);
CIRLAB_DEFINE_ERROR(DomainError);
CIRLAB_DEFINE_ERROR(BranchCutError);
CIRLAB_DEFINE_ERROR(ConvergenceError);
CIRLAB_DEFINE_ERROR(StepSizeUnderflow);
CIRLAB_DEFINE_ERROR(InsufficientSamples);
CIRLAB_DEFINE_ERROR(ExcludedBudgetExceeded);
CIRLAB_DEFINE_ERROR(NoInteriorMinimum);
CIRLAB_DEFINE_ERROR(OrbitingSingular);
CIRLAB_DEFINE_ERROR(NoOrbitingRegime);
CIRLAB_DEFINE_ERROR(IllConditionedMatch);
CIRLAB_DEFINE_ERROR(DivergentLength);
CIRLAB_DEFINE_ERROR(ValidationError);

#undef CIRLAB_DEFINE_ERROR

/// Config parse failure carrying the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("ParseError: line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace cirlab
