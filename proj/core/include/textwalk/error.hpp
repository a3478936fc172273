#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace textwalk {

enum class ErrorCode {
  DescriptorEmpty,
  MissingDescriptor,
  SelfLoop,
  MalformedLine,
  UnknownNode,
  NotNeighbor,
  IsolatedNode,
  NonFinite,
  StaleBackward,
  NotEnoughNodes,
  NonFiniteGradient,
  SplitInfeasible,
  NotEnoughNegatives,
  ZeroVector,
  EmptyScores,
  UnsupportedEncoder,
  InvalidConfig,
  OutOfVocabulary,
  BadModelFile,
  BadSplitFile,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. The code is stable and
// machine-readable; the message carries the offending key, line or count.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace textwalk
