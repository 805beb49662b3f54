#pragma once

#include <stdexcept>
#include <string>

namespace mixedlattice {

// Every failure surfaced by the library carries a stable kind name; the CLI
// prints it verbatim and maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }
  virtual bool is_config_error() const noexcept { return false; }

 private:
  std::string kind_;
};

#define MIXEDLATTICE_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(#Name, what) {}        \
  };

MIXEDLATTICE_DEFINE_ERROR(GridMismatch)
MIXEDLATTICE_DEFINE_ERROR(UnitarityLoss)
MIXEDLATTICE_DEFINE_ERROR(BandMixing)
MIXEDLATTICE_DEFINE_ERROR(BranchEdge)
MIXEDLATTICE_DEFINE_ERROR(ConvergenceFailure)
MIXEDLATTICE_DEFINE_ERROR(DegenerateClassification)
MIXEDLATTICE_DEFINE_ERROR(WindowTooWide)
MIXEDLATTICE_DEFINE_ERROR(WindowTooSmall)
MIXEDLATTICE_DEFINE_ERROR(OverlappingResonances)
MIXEDLATTICE_DEFINE_ERROR(ShapeMismatch)

#undef MIXEDLATTICE_DEFINE_ERROR

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
  bool is_config_error() const noexcept override { return true; }
};

}  // namespace mixedlattice
