#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bmfg {

/// Bad input: invalid parameters, mismatched grids, malformed files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A solver produced non-finite or otherwise invalid values.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Population size crossed the configured hard cap.
class ExplosionError : public std::runtime_error {
public:
    ExplosionError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// An output file could not be written.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class LookupError : public std::runtime_error {
public:
    explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

/// The LQ equilibrium does not exist on [0,T] because the variance ODE blew up.
class EquilibriumUndefinedError : public std::runtime_error {
public:
    EquilibriumUndefinedError(const std::string& what, double blowup_time)
        : std::runtime_error(what), blowup_time_(blowup_time) {}
    double blowup_time() const noexcept { return blowup_time_; }

private:
    double blowup_time_;
};

/// The LQ terminal-mean fixed point has a vanishing denominator (delta*theta == 1).
class SingularityError : public std::runtime_error {
public:
    SingularityError(const std::string& what, double theta)
        : std::runtime_error(what), theta_(theta) {}
    double theta() const noexcept { return theta_; }

private:
    double theta_;
};

} // namespace bmfg
