#pragma once

#include <stdexcept>
#include <string>

namespace qmhd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonFiniteInput : public Error {
public:
    using Error::Error;
};

class NonpositiveDensity : public Error {
public:
    using Error::Error;
};

class DensityFloorViolation : public Error {
public:
    DensityFloorViolation(double min_rho, double floor)
        : Error("density floor violated: min rho = " + std::to_string(min_rho) +
                " < floor " + std::to_string(floor)),
          min_rho_(min_rho), floor_(floor) {}
    double min_rho() const { return min_rho_; }
    double floor() const { return floor_; }

private:
    double min_rho_;
    double floor_;
};

class MaximumPrincipleViolation : public Error {
public:
    using Error::Error;
};

class PicardDivergence : public Error {
public:
    using Error::Error;
};

class SingularMass : public Error {
public:
    using Error::Error;
};

class NonuniformSampling : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(int line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, std::string constraint)
        : Error(field + ": " + constraint), field_(std::move(field)),
          constraint_(std::move(constraint)) {}
    const std::string& field() const { return field_; }
    const std::string& constraint() const { return constraint_; }

private:
    std::string field_;
    std::string constraint_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Failure inside a time step, tagged with the time at which the step started.
class StepError : public Error {
public:
    StepError(double time, const std::string& what)
        : Error("step at t = " + std::to_string(time) + ": " + what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

// Failure of one sweep rung, tagged with its index and parameter value.
class RungError : public Error {
public:
    RungError(std::size_t rung, double value, const std::string& what)
        : Error("rung " + std::to_string(rung) + " (value " + std::to_string(value) + "): " + what), rung_(rung) {}
    std::size_t rung() const { return rung_; }

private:
    std::size_t rung_;
};

}  // namespace qmhd
