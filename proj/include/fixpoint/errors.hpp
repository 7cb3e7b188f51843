#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fixpoint {

// Error taxonomy mirrors the CLI exit-code contract: input/configuration
// problems exit 2, solver or stabilization failures exit 3. Certificate
// FAILs are ordinary values, never exceptions.

class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public InputError {
 public:
  explicit ConfigError(const std::string& what) : InputError(what) {}
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, std::string trace = {})
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::string& trace() const { return trace_; }

 private:
  std::string trace_;
};

// A run whose hypotheses were verified exactly contradicted a proven
// conclusion. This is an artifact bug, never a property of the input;
// the bundle carries everything needed to reproduce it.
class FalsificationError : public std::runtime_error {
 public:
  FalsificationError(const std::string& what, std::string bundle)
      : std::runtime_error(what), bundle_(std::move(bundle)) {}
  const std::string& bundle() const { return bundle_; }

 private:
  std::string bundle_;
};

}  // namespace fixpoint
