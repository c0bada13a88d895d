#pragma once

#include <stdexcept>
#include <string>

namespace subid {

enum class ErrorCode {
  InvalidArgument = 1,
  Unstable,
  NotMinimal,
  InsufficientData,
  RankDeficient,
  NotPositiveDefinite,
  NoConvergence,
  OrderAmbiguous,
  SearchCapExceeded,
  Parse,
  Io,
};

/// Every failure raised by the library carries one of the codes above so the
/// C layer can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code) noexcept;

}  // namespace subid
