#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fiq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FIQ_ERROR(Name)                     \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

FIQ_ERROR(BadParameter)
FIQ_ERROR(NonIntegrable)
FIQ_ERROR(Unsupported)
FIQ_ERROR(NotMonotone)
FIQ_ERROR(NotApplicable)
FIQ_ERROR(OscillationUnavailable)
FIQ_ERROR(DifferentiationFailure)
FIQ_ERROR(CertificateInvalid)
FIQ_ERROR(FarFieldViolated)
FIQ_ERROR(PhiUNotPositive)
FIQ_ERROR(TrickInapplicable)
FIQ_ERROR(PerturbationTooLarge)
FIQ_ERROR(IntegralDiverges)
FIQ_ERROR(WeightNotIntegrable)
FIQ_ERROR(RateBoundedAtZero)
FIQ_ERROR(RatioUnbounded)
FIQ_ERROR(GridTooCoarse)
FIQ_ERROR(Infeasible)
FIQ_ERROR(StepTooLarge)
FIQ_ERROR(DomainError)
FIQ_ERROR(ConfigError)

#undef FIQ_ERROR

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace fiq
