#pragma once

#include <stdexcept>
#include <string>

namespace qpl {

// Failure categories, aligned with the CLI exit codes:
//   usage/contract misuse -> 2, numerical failure -> 3, smallness/gate refusal -> 4.
enum class ErrorKind { Usage = 2, Numeric = 3, Gate = 4 };

struct Error : std::runtime_error {
  Error(ErrorKind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  ErrorKind kind;
};

#define QPL_DEFINE_ERROR(Name, Kind)                        \
  struct Name final : Error {                               \
    explicit Name(const std::string& what)                  \
        : Error(ErrorKind::Kind, #Name ": " + what) {}      \
  };

// arithmetics
QPL_DEFINE_ERROR(NotInUnitInterval, Usage)
QPL_DEFINE_ERROR(DegenerateAtPrecision, Numeric)
QPL_DEFINE_ERROR(RationalResonance, Numeric)

// cocycle engine
QPL_DEFINE_ERROR(NotHomotopicToIdentity, Usage)
QPL_DEFINE_ERROR(OverflowGuard, Numeric)
QPL_DEFINE_ERROR(GridTooCoarse, Numeric)

// operator factory
QPL_DEFINE_ERROR(NonHermitianPotential, Usage)
QPL_DEFINE_ERROR(BoxTooLarge, Usage)

// eigensolver
QPL_DEFINE_ERROR(NoConvergence, Numeric)

// localization analysis
QPL_DEFINE_ERROR(TooFewSamples, Usage)
QPL_DEFINE_ERROR(NoFiniteCertificate, Numeric)

// dynamical kernel
QPL_DEFINE_ERROR(IncompleteDecomposition, Usage)

// reducibility engine
QPL_DEFINE_ERROR(SmallnessGateFailed, Gate)
QPL_DEFINE_ERROR(MultipleResonances, Numeric)
QPL_DEFINE_ERROR(HyperbolicConstant, Numeric)
QPL_DEFINE_ERROR(StepCapReached, Numeric)
QPL_DEFINE_ERROR(DcViolatedMidRun, Numeric)
QPL_DEFINE_ERROR(NotBracketed, Usage)

// duality
QPL_DEFINE_ERROR(InconsistentInput, Usage)
QPL_DEFINE_ERROR(RationalRotation, Numeric)
QPL_DEFINE_ERROR(ResidualTooLarge, Numeric)

#undef QPL_DEFINE_ERROR

}  // namespace qpl
