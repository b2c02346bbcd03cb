// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace amii {

// Every error carries a category so the CLI can map it to an exit code.
enum class ErrorKind {
  kDimension,
  kState,
  kNumeric,
  kParameter,
  kSchema,
  kParse,
  kData,
  kSplit,
  kFormat,
  kConsistency,
  kTruncation,
  kConfig,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define AMII_DEFINE_ERROR(Name, Kind)                                       \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

AMII_DEFINE_ERROR(DimensionError, kDimension)
AMII_DEFINE_ERROR(StateError, kState)
AMII_DEFINE_ERROR(NumericError, kNumeric)
AMII_DEFINE_ERROR(ParameterError, kParameter)
AMII_DEFINE_ERROR(SchemaError, kSchema)
AMII_DEFINE_ERROR(ParseError, kParse)
AMII_DEFINE_ERROR(DataError, kData)
AMII_DEFINE_ERROR(SplitError, kSplit)
AMII_DEFINE_ERROR(FormatError, kFormat)
AMII_DEFINE_ERROR(ConsistencyError, kConsistency)
AMII_DEFINE_ERROR(TruncationError, kTruncation)
AMII_DEFINE_ERROR(ConfigError, kConfig)
AMII_DEFINE_ERROR(IoError, kIo)

#undef AMII_DEFINE_ERROR

// Process exit code for an error category: 2 config, 3 data, 4 numeric, 1 otherwise.
inline int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kParameter:
      return 2;
    case ErrorKind::kSchema:
    case ErrorKind::kParse:
    case ErrorKind::kData:
    case ErrorKind::kSplit:
    case ErrorKind::kFormat:
    case ErrorKind::kConsistency:
    case ErrorKind::kTruncation:
    case ErrorKind::kDimension:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
    default:
      return 1;
  }
}

}  // namespace amii
