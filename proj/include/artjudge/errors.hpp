#pragma once

#include <stdexcept>
#include <string>

namespace artjudge {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorClass { Usage = 1, Data = 2, Backend = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorClass::Data, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorClass::Usage, what) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorClass::Backend, what) {}
};

#define ARTJUDGE_DEFINE_ERROR(Name, Base)                                      \
  class Name : public Base {                                                   \
   public:                                                                     \
    explicit Name(const std::string& what) : Base(std::string(#Name ": ") + what) {} \
  };

// embedding store
ARTJUDGE_DEFINE_ERROR(FormatError, DataError)
ARTJUDGE_DEFINE_ERROR(ZeroVectorError, DataError)
ARTJUDGE_DEFINE_ERROR(DimMismatch, DataError)
ARTJUDGE_DEFINE_ERROR(IoError, DataError)
// manifold
ARTJUDGE_DEFINE_ERROR(DegenerateAxisError, DataError)
ARTJUDGE_DEFINE_ERROR(WeightSumError, DataError)
ARTJUDGE_DEFINE_ERROR(EmptyPortfolioError, DataError)
// concept graph
ARTJUDGE_DEFINE_ERROR(CycleError, DataError)
ARTJUDGE_DEFINE_ERROR(OrphanCodeError, DataError)
ARTJUDGE_DEFINE_ERROR(UnknownCodeError, DataError)
ARTJUDGE_DEFINE_ERROR(EmptySetError, DataError)
ARTJUDGE_DEFINE_ERROR(MisalignedListsError, DataError)
// retrieval
ARTJUDGE_DEFINE_ERROR(EmptyMatrixError, DataError)
// tools
ARTJUDGE_DEFINE_ERROR(MissingBiographyError, DataError)
ARTJUDGE_DEFINE_ERROR(MissingSignatureError, DataError)
ARTJUDGE_DEFINE_ERROR(MissingCodesError, DataError)
ARTJUDGE_DEFINE_ERROR(ToolFailure, DataError)
// benchmark
ARTJUDGE_DEFINE_ERROR(ImbalanceError, DataError)
ARTJUDGE_DEFINE_ERROR(StratificationError, DataError)
ARTJUDGE_DEFINE_ERROR(LengthMismatch, DataError)
ARTJUDGE_DEFINE_ERROR(MissingTierError, DataError)
ARTJUDGE_DEFINE_ERROR(UnknownSwitchError, UsageError)
// graph export
ARTJUDGE_DEFINE_ERROR(DanglingVerdictError, DataError)
// backends
ARTJUDGE_DEFINE_ERROR(UnscriptedContextError, BackendError)
ARTJUDGE_DEFINE_ERROR(TransportError, BackendError)
ARTJUDGE_DEFINE_ERROR(ParseError, BackendError)
ARTJUDGE_DEFINE_ERROR(RateLimitError, BackendError)

#undef ARTJUDGE_DEFINE_ERROR

}  // namespace artjudge
