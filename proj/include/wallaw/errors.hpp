#pragma once

#include <stdexcept>
#include <string>

namespace wallaw {

/// Base class of every error raised by the library. The CLI maps
/// `PreconditionError` (and `ConfigError`) to exit code 2 and everything
/// else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define WALLAW_DEFINE_ERROR(Name, Base)                              \
  class Name : public Base {                                         \
   public:                                                           \
    using Base::Base;                                                \
    const char* kind() const noexcept override { return #Name; }     \
  };

/// Violated operation precondition (bad argument).
WALLAW_DEFINE_ERROR(PreconditionError, Error)
WALLAW_DEFINE_ERROR(ConfigError, PreconditionError)
WALLAW_DEFINE_ERROR(ResolutionError, PreconditionError)

// profiles
WALLAW_DEFINE_ERROR(RangeViolation, Error)
WALLAW_DEFINE_ERROR(DivergentSeries, Error)

// geometry
WALLAW_DEFINE_ERROR(MeshQualityError, Error)
WALLAW_DEFINE_ERROR(MeshMismatch, Error)

// numerics
WALLAW_DEFINE_ERROR(SingularSystem, Error)
WALLAW_DEFINE_ERROR(NoConvergence, Error)
WALLAW_DEFINE_ERROR(BudgetExceeded, Error)

// stokes / boundary layer / wall laws
WALLAW_DEFINE_ERROR(PicardDiverged, Error)
WALLAW_DEFINE_ERROR(ZeroModeRequest, PreconditionError)
WALLAW_DEFINE_ERROR(DegenerateDenominator, Error)

// experiments
WALLAW_DEFINE_ERROR(IncompleteSweep, Error)

#undef WALLAW_DEFINE_ERROR

}  // namespace wallaw
