#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fallcloud {

enum class Errc {
  InvalidSample,
  EmptyInput,
  TooShort,
  Ingest,
  UnknownAdapter,
  CannotFit,
  Parameter,
  Contract,
  DegenerateLeaf,
  DegenerateSplit,
  CannotTrain,
  CannotEvaluate,
  Incompatible,
  Truncated,
  BadMagic,
  VersionMismatch,
  ChecksumMismatch,
  Corrupt,
  Io,
  Protocol,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for every contract and data error in the library.
/// Callers switch on code() when they need to tell failure modes apart.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fallcloud
