#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rapl {

/// Primitive action id, in [0, action_count).
using ActionId = std::int32_t;
using ActionSequence = std::vector<ActionId>;

/// Enumerable state id of a discrete world.
using StateId = std::uint64_t;

enum class ErrorCode {
  kEmptySequence,
  kAlphabetViolation,
  kDanglingRule,
  kInvalidAction,
  kEpisodeFinished,
  kEmptyDataset,
  kEnumerationCap,
  kInvalidArgument,
  kEnvMismatch,
  kIo,
  kParse,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report a machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rapl
