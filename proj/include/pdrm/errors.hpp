#pragma once

#include <stdexcept>
#include <string>

namespace pdrm {

enum class ErrorKind {
  UnknownIdentifier,
  NondeterministicPair,
  FinalStateOverlap,
  EmptyAlphabet,
  EpsilonDivergence,
  StrictModeUndefined,
  TerminalStep,
  NegativeCounter,
  Nondeterministic,
  MultiCounterUnsupported,
  BadConfig,
  ExplosionGuard,
  NonFiniteValue,
  ParseError,
  AssetError,
  MissingAggregate,
  NoAvailableOption,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception type carrying a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::NondeterministicPair: return "NondeterministicPair";
    case ErrorKind::FinalStateOverlap: return "FinalStateOverlap";
    case ErrorKind::EmptyAlphabet: return "EmptyAlphabet";
    case ErrorKind::EpsilonDivergence: return "EpsilonDivergence";
    case ErrorKind::StrictModeUndefined: return "StrictModeUndefined";
    case ErrorKind::TerminalStep: return "TerminalStep";
    case ErrorKind::NegativeCounter: return "NegativeCounter";
    case ErrorKind::Nondeterministic: return "Nondeterministic";
    case ErrorKind::MultiCounterUnsupported: return "MultiCounterUnsupported";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::ExplosionGuard: return "ExplosionGuard";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::AssetError: return "AssetError";
    case ErrorKind::MissingAggregate: return "MissingAggregate";
    case ErrorKind::NoAvailableOption: return "NoAvailableOption";
  }
  return "Error";
}

}  // namespace pdrm
