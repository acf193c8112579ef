#pragma once

#include <stdexcept>
#include <string>

namespace tacsim {

// Error taxonomy used across the toolkit. The CLI maps ConfigError and
// InvalidArgument to exit code 1, everything else to exit code 2.

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DegenerateElement : public Error {
public:
  DegenerateElement(std::size_t tet_index, const std::string& msg)
      : Error("degenerate element " + std::to_string(tet_index) + ": " + msg),
        tet_index(tet_index) {}
  std::size_t tet_index;
};

class SingularSystem : public Error {
public:
  explicit SingularSystem(const std::string& msg) : Error(msg) {}
};

class SolverFailure : public Error {
public:
  SolverFailure(double residual, const std::string& msg)
      : Error(msg + " (residual " + std::to_string(residual) + ")"),
        residual(residual) {}
  double residual;
};

class DegenerateInput : public Error {
public:
  explicit DegenerateInput(const std::string& msg) : Error(msg) {}
};

class DegenerateGeometry : public Error {
public:
  explicit DegenerateGeometry(const std::string& msg) : Error(msg) {}
};

class CorruptionError : public Error {
public:
  explicit CorruptionError(const std::string& msg) : Error(msg) {}
};

class UnsupportedVersion : public Error {
public:
  explicit UnsupportedVersion(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// A pipeline stage asked for an upstream artifact that has not been
// produced yet. The CLI reports these as usage errors (exit 1).
class MissingArtifact : public Error {
public:
  explicit MissingArtifact(const std::string& artifact_kind)
      : Error("missing artifact: " + artifact_kind), kind(artifact_kind) {}
  std::string kind;
};

}  // namespace tacsim
