// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string_view>
#include <utility>

namespace pdflow {

/// Damping / penalty / anchor parameters of the flow. alpha is the vanishing
/// damping coefficient (alpha/t), theta the multiplier-extrapolation weight,
/// rho the augmented-Lagrangian penalty, t0 the start time.
struct ParameterSet {
  double alpha = 15.0;
  double theta = 1.0 / 13.0;
  double rho = 1.0;
  double t0 = 1.0;

  /// Throws std::invalid_argument on alpha <= 0, theta <= 0, rho < 0, t0 <= 0.
  void validate() const;
};

/// Time-dependent coefficient with a derivative. The shipped implementation
/// is PowerSchedule; the interface is the hook for general coefficients
/// (regime classification then falls back to Unclassified).
class Schedule {
 public:
  virtual ~Schedule() = default;
  virtual double value(double t) const = 0;
  virtual double derivative(double t) const = 0;
};

/// coefficient * t^exponent. A zero coefficient is allowed and represents a
/// switched-off term (used by the system variants); positivity requirements
/// are enforced by the assumption checks, not the type.
class PowerSchedule final : public Schedule {
 public:
  PowerSchedule(double coefficient, double exponent);

  double value(double t) const override;
  double derivative(double t) const override;

  double coefficient() const noexcept { return coefficient_; }
  double exponent() const noexcept { return exponent_; }

 private:
  double coefficient_ = 1.0;
  double exponent_ = 0.0;
};

/// (value, derivative) at t. Throws std::domain_error for t <= 0.
std::pair<double, double> eval_schedule(const Schedule& s, double t);

enum class RegimeLabel { fast, slow, unclassified };

std::string_view regime_label_name(RegimeLabel label) noexcept;

/// Which of the structural conditions a (params, beta, eps) configuration
/// satisfies, and the regime it lands in. For power schedules with
/// eps = c_e * t^(-r1), beta = c_b * t^(r2):
///   integrable_over_t  <=>  r1 - r2 > 0      (beta*eps/t integrable)
///   fast_integrable    <=>  r1 - r2 > 2      (t*beta*eps integrable)
///   slow_divergent     <=>  r1 - r2 < 2      (t^2*beta*eps diverges)
/// Fast requires fast_integrable and the scaling condition; Slow requires
/// slow_divergent, integrable_over_t and the scaling condition. The
/// boundary r1 - r2 = 2 is Unclassified.
struct RegimeReport {
  bool assumption1 = false;
  bool assumption2 = false;
  bool scaling_condition = false;
  bool strict_scaling = false;
  bool integrable_over_t = false;
  bool fast_integrable = false;
  bool slow_divergent = false;
  RegimeLabel label = RegimeLabel::unclassified;
};

bool check_assumption1(const ParameterSet& p, const PowerSchedule& beta,
                       const PowerSchedule& eps);
bool check_assumption2(const ParameterSet& p, const PowerSchedule& beta,
                       const PowerSchedule& eps);

/// Scaling condition t*beta'(t) <= ((1-2*theta)/theta) * beta(t); for power
/// beta the left side over beta is identically the exponent, so this reduces
/// to an exponent comparison. Boundary comparisons carry a 1e-12 relative
/// guard so exact-boundary configurations land on the non-strict side.
bool check_scaling(const ParameterSet& p, const PowerSchedule& beta, bool strict);

RegimeReport classify_regime(const ParameterSet& p, const PowerSchedule& beta,
                             const PowerSchedule& eps);

/// General-schedule hook: power schedules classify as above, anything else
/// reports Unclassified with only the parameter-level assumption bits set.
RegimeReport classify_regime(const ParameterSet& p, const Schedule& beta,
                             const Schedule& eps);

}  // namespace pdflow
