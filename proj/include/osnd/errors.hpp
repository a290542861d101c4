#pragma once

#include <stdexcept>
#include <string>

namespace osnd {

// Base for every error raised by the library. Each subclass maps to one
// failure category callers may want to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define OSND_DEFINE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

OSND_DEFINE_ERROR(NoData);
OSND_DEFINE_ERROR(ShapeMismatch);
OSND_DEFINE_ERROR(FormatError);
OSND_DEFINE_ERROR(ConfigError);
OSND_DEFINE_ERROR(IndexError);
OSND_DEFINE_ERROR(TooFewSamples);
OSND_DEFINE_ERROR(EmptyAnalysis);
OSND_DEFINE_ERROR(UndefinedMetric);

#undef OSND_DEFINE_ERROR

// Raised by the CLI when a stage runs before the stage that produces its input.
class PipelineError : public Error {
 public:
  PipelineError(std::string missing_stage, const std::string& what)
      : Error(what), missing_stage_(std::move(missing_stage)) {}
  const std::string& missing_stage() const noexcept { return missing_stage_; }

 private:
  std::string missing_stage_;
};

}  // namespace osnd
