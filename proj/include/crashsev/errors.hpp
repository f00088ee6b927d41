#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crashsev {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A covariate or column the operation needs is absent.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed model specification.
class SpecError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// One or more input rows could not be parsed. Carries every offending line.
class IngestionError : public Error {
public:
    struct Issue {
        std::size_t line;
        std::string message;
    };

    explicit IngestionError(std::vector<Issue> issues);

    const std::vector<Issue>& issues() const noexcept { return issues_; }

private:
    std::vector<Issue> issues_;
};

/// Iteration cap exceeded or line search exhausted. The last iterate is kept.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, Eigen::VectorXd last_iterate, int iterations)
        : Error(what), last_iterate_(std::move(last_iterate)), iterations_(iterations) {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
    int iterations() const noexcept { return iterations_; }

private:
    Eigen::VectorXd last_iterate_;
    int iterations_;
};

/// The information matrix at the terminal iterate is (near) singular.
class NonIdentification : public Error {
public:
    NonIdentification(const std::string& what, std::vector<std::size_t> slots)
        : Error(what), slots_(std::move(slots)) {}

    const std::vector<std::size_t>& slots() const noexcept { return slots_; }

private:
    std::vector<std::size_t> slots_;
};

/// Log-likelihoods handed to a likelihood-ratio test cannot come from nested fits.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

class UndefinedStatistic : public Error {
public:
    using Error::Error;
};

class EmptyPartition : public Error {
public:
    using Error::Error;
};

} // namespace crashsev
