#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cascade
{

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

#define CASCADE_DEFINE_ERROR(Name)                                  \
    class Name : public Error                                       \
    {                                                               \
    public:                                                         \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

// maps
CASCADE_DEFINE_ERROR(NumericalOverflow);
CASCADE_DEFINE_ERROR(TrajectoryEscape);
CASCADE_DEFINE_ERROR(UnknownMap);
CASCADE_DEFINE_ERROR(BadParameter);

// orbits
CASCADE_DEFINE_ERROR(NotAnOrbit);
CASCADE_DEFINE_ERROR(NoConvergence);
CASCADE_DEFINE_ERROR(SingularSystem);

// continuation
CASCADE_DEFINE_ERROR(NotNonflip);
CASCADE_DEFINE_ERROR(BadSeed);
CASCADE_DEFINE_ERROR(AmbiguousEvent);
CASCADE_DEFINE_ERROR(BranchSwitchFailure);
CASCADE_DEFINE_ERROR(ConservationViolation);

// combinatorics
CASCADE_DEFINE_ERROR(InternalError);
CASCADE_DEFINE_ERROR(TooLarge);
CASCADE_DEFINE_ERROR(CensusMismatch);

// census
CASCADE_DEFINE_ERROR(InvalidBoundary);
CASCADE_DEFINE_ERROR(NoPrediction);

#undef CASCADE_DEFINE_ERROR

/// Raised when symbolic seeding cannot realize every admissible word.
/// Carries the failed words so callers can report them.
class IncompleteEnumeration : public Error
{
public:
    IncompleteEnumeration(const std::string& what, std::vector<std::string> failed)
        : Error("IncompleteEnumeration: " + what), failed_words(std::move(failed))
    {
    }

    std::vector<std::string> failed_words;
};

} // namespace cascade
