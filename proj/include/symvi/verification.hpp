#pragma once

#include "symvi/linalg.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace symvi {

struct CheckResult {
  std::string name;
  int criterion = 0;  // acceptance criterion this check belongs to
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double seconds = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  // Replaces the tolerance of the quadrature-accuracy checks.
  std::optional<double> quadrature_tolerance;
};

nlohmann::json to_json(const Matrix& a);
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const CheckResult& r);

std::vector<CheckResult> check_sphere_constants(const VerifyOptions& opts);
std::vector<CheckResult> check_closed_form_moments(const VerifyOptions& opts);
std::vector<CheckResult> check_phase_transition(const VerifyOptions& opts);
std::vector<CheckResult> check_pushforward_suite(const VerifyOptions& opts);
std::vector<CheckResult> check_even_recovery(const VerifyOptions& opts);
std::vector<CheckResult> check_elliptical_recovery(const VerifyOptions& opts);
std::vector<CheckResult> check_correlation_counterexample(const VerifyOptions& opts);
std::vector<CheckResult> check_sampler_moments(const VerifyOptions& opts);
std::vector<CheckResult> check_property_suites(const VerifyOptions& opts);

/// Every check above, in criterion order.
std::vector<CheckResult> run_all_checks(const VerifyOptions& opts);

}  // namespace symvi
