#ifndef RAILTRACE_ERROR_HPP
#define RAILTRACE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace railtrace {

enum class ErrorCode {
  InvalidGeometry,
  DuplicateLinkId,
  SelfLoopLink,
  EmptyNetwork,
  NodeNotOnLink,
  UnknownLink,
  MalformedRow,
  CoordinateOutOfRange,
  MissingTimestamp,
  WrongShape,
  NegativeVolume,
  InvalidRing,
  DuplicateRegionId,
  UnsnappedTerminal,
  PointOutsideAllPadds,
  InvalidArgument,
  Io,
  MissingStageInput,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::DuplicateLinkId: return "DuplicateLinkId";
    case ErrorCode::SelfLoopLink: return "SelfLoopLink";
    case ErrorCode::EmptyNetwork: return "EmptyNetwork";
    case ErrorCode::NodeNotOnLink: return "NodeNotOnLink";
    case ErrorCode::UnknownLink: return "UnknownLink";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
    case ErrorCode::MissingTimestamp: return "MissingTimestamp";
    case ErrorCode::WrongShape: return "WrongShape";
    case ErrorCode::NegativeVolume: return "NegativeVolume";
    case ErrorCode::InvalidRing: return "InvalidRing";
    case ErrorCode::DuplicateRegionId: return "DuplicateRegionId";
    case ErrorCode::UnsnappedTerminal: return "UnsnappedTerminal";
    case ErrorCode::PointOutsideAllPadds: return "PointOutsideAllPadds";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingStageInput: return "MissingStageInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message already includes the code name and any file/line context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace railtrace

#endif  // RAILTRACE_ERROR_HPP
