// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace vdl {

/// Raised when a dataset generator cannot satisfy its request from the
/// world it was given (e.g. a prompt lacks the candidate stances needed
/// to build a preference pair). The message names the offending prompt.
class GenerationInfeasibleError : public std::runtime_error {
 public:
  explicit GenerationInfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Raised when optimization blows up (any |logit| exceeds the divergence
/// guard). Carries enough context to reconstruct where training died.
class TrainerDivergenceError : public std::runtime_error {
 public:
  TrainerDivergenceError(const std::string& what, int step, std::string prompt_id,
                         double logit_value)
      : std::runtime_error(what),
        step_(step),
        prompt_id_(std::move(prompt_id)),
        logit_value_(logit_value) {}

  int step() const { return step_; }
  const std::string& prompt_id() const { return prompt_id_; }
  double logit_value() const { return logit_value_; }

 private:
  int step_;
  std::string prompt_id_;
  double logit_value_;
};

/// Raised for malformed experiment configs: JSON syntax errors (message
/// carries line/column) and schema violations (message names the key).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failures (missing input file, unwritable output dir).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vdl
