#pragma once

#include <stdexcept>
#include <string>

namespace catderiv {

/// Argument outside the domain where a quantity is finite or defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Discretization cannot represent the requested law at the stated accuracy.
class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A grid edge would overflow the exponential tilt.
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// Time stepping left the a-priori bound or the step size is unstable.
class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two independent computational routes disagree beyond tolerance.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or model input. `path` names the offending field.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string path, const std::string& what)
        : std::invalid_argument(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A downstream command needs artifacts of an earlier run that are absent.
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace catderiv
