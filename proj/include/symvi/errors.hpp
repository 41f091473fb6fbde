#pragma once

#include <stdexcept>
#include <string>

namespace symvi {

/// Raised when arguments violate an operation's preconditions
/// (dimension mismatch, non-PD matrix, non-unit vector, ...).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A statistic is undefined for the given distribution, e.g. correlation
/// with a vanishing marginal variance.
class DegenerateStatistic : public std::domain_error {
 public:
  explicit DegenerateStatistic(const std::string& what) : std::domain_error(what) {}
};

/// Every start of a fit produced a non-finite objective.
class OptimizationFailed : public std::runtime_error {
 public:
  explicit OptimizationFailed(const std::string& what) : std::runtime_error(what) {}
};

/// Lambert projection of the antipode of the projection center.
class ProjectionUndefined : public std::domain_error {
 public:
  explicit ProjectionUndefined(const std::string& what) : std::domain_error(what) {}
};

}  // namespace symvi
