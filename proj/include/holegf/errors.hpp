#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace holegf {

// Input outside the region where a formula is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved_error)
        : std::runtime_error(what + " (achieved error estimate " + format(achieved_error) + ")"),
          achieved_error_(achieved_error) {}
    double achieved_error() const noexcept { return achieved_error_; }

private:
    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return buf;
    }
    double achieved_error_;
};

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_estimate_(condition_estimate) {}
    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

}  // namespace holegf
