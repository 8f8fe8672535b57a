#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace axdse {

enum class Errc {
  // catalog / operators
  MissingField,
  InvalidField,
  DuplicateOperator,
  UnsortedCatalog,
  OperandOutOfRange,
  KindMismatch,
  WidthTooLargeForExhaustive,
  CalibrationOutOfRange,
  TableLoadError,
  // kernels
  WidthMismatch,
  SelectionLengthMismatch,
  LengthMismatch,
  EmptyOutput,
  // environment
  BaselineMissing,
  InvalidAction,
  StateSpaceTooLarge,
  // agent
  NoValidAction,
  // harness
  ConfigError,
  IoError,
  EmptyTrace,
  MixedBenchmarks,
};

constexpr std::string_view errc_name(Errc e) {
  switch (e) {
    case Errc::MissingField: return "MissingField";
    case Errc::InvalidField: return "InvalidField";
    case Errc::DuplicateOperator: return "DuplicateOperator";
    case Errc::UnsortedCatalog: return "UnsortedCatalog";
    case Errc::OperandOutOfRange: return "OperandOutOfRange";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::WidthTooLargeForExhaustive: return "WidthTooLargeForExhaustive";
    case Errc::CalibrationOutOfRange: return "CalibrationOutOfRange";
    case Errc::TableLoadError: return "TableLoadError";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::SelectionLengthMismatch: return "SelectionLengthMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyOutput: return "EmptyOutput";
    case Errc::BaselineMissing: return "BaselineMissing";
    case Errc::InvalidAction: return "InvalidAction";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::NoValidAction: return "NoValidAction";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::MixedBenchmarks: return "MixedBenchmarks";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace axdse
