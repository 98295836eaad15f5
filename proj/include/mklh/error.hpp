#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mklh {

enum class Errc {
  NonFinite,
  NotPositiveSemidefinite,
  SingularCovariance,
  UnsupportedFormat,
  DecodeError,
  IoError,
  ParseError,
  ShapeMismatch,
  MaskTooSmall,
  MissingGroundTruth,
  EmptySamples,
  EmptyDataset,
  NonFiniteLoss,
  IndexError,
  InvalidArgument,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NonFinite: return "NonFinite";
    case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::DecodeError: return "DecodeError";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::MaskTooSmall: return "MaskTooSmall";
    case Errc::MissingGroundTruth: return "MissingGroundTruth";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::IndexError: return "IndexError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI, the batch evaluator) can classify it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mklh
