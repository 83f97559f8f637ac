#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medassist {

enum class Errc {
  // geometry
  NonPositiveDepth,
  OutOfBounds,
  BehindCamera,
  EmptyBox,
  DegeneratePatch,
  ZeroDirection,
  InvalidArgument,
  // navigation
  NoPath,
  LethalEndpoint,
  AllBlocked,
  // orchestrator
  InvalidEvent,
  ScenarioInvalid,
  // usersim
  UnorderedStream,
  // metrics
  OutOfRange,
  DegenerateData,
  EmptyCondition,
  // io
  ParseError,
  FileNotFound,
  MissingLogs,
  ValidationError,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::NonPositiveDepth: return "NonPositiveDepth";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::BehindCamera: return "BehindCamera";
    case Errc::EmptyBox: return "EmptyBox";
    case Errc::DegeneratePatch: return "DegeneratePatch";
    case Errc::ZeroDirection: return "ZeroDirection";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NoPath: return "NoPath";
    case Errc::LethalEndpoint: return "LethalEndpoint";
    case Errc::AllBlocked: return "AllBlocked";
    case Errc::InvalidEvent: return "InvalidEvent";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
    case Errc::UnorderedStream: return "UnorderedStream";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::EmptyCondition: return "EmptyCondition";
    case Errc::ParseError: return "ParseError";
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::MissingLogs: return "MissingLogs";
    case Errc::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace medassist
