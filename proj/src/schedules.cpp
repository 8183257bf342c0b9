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

#include "pdflow/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdflow {

namespace {

constexpr double kBoundaryGuard = 1e-12;

double guard(double bound) { return kBoundaryGuard * std::max(1.0, std::fabs(bound)); }

// c * t^r with cheap paths for the exponents the stepper hits millions of
// times per run.
double power_eval(double c, double r, double t) {
  if (r == 0.0) return c;
  if (r == 1.0) return c * t;
  if (r == -1.0) return c / t;
  if (r == 2.0) return c * (t * t);
  if (r == -2.0) return c / (t * t);
  if (r == 0.5) return c * std::sqrt(t);
  if (r == 1.5) return c * (t * std::sqrt(t));
  if (r == -4.0) {
    const double t2 = t * t;
    return c / (t2 * t2);
  }
  return c * std::pow(t, r);
}

// eps(t) = c * t^r is nonincreasing with limit 0 iff c == 0 (identically
// zero) or r < 0.
bool eps_vanishes(const PowerSchedule& eps) {
  return eps.coefficient() == 0.0 || eps.exponent() < 0.0;
}

}  // namespace

void ParameterSet::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("ParameterSet: alpha must be > 0");
  if (!(theta > 0.0)) throw std::invalid_argument("ParameterSet: theta must be > 0");
  if (!(rho >= 0.0)) throw std::invalid_argument("ParameterSet: rho must be >= 0");
  if (!(t0 > 0.0)) throw std::invalid_argument("ParameterSet: t0 must be > 0");
}

PowerSchedule::PowerSchedule(double coefficient, double exponent)
    : coefficient_(coefficient), exponent_(exponent) {
  if (!(coefficient >= 0.0) || !std::isfinite(coefficient) || !std::isfinite(exponent))
    throw std::invalid_argument("PowerSchedule: coefficient must be finite and >= 0");
}

double PowerSchedule::value(double t) const {
  if (!(t > 0.0)) throw std::domain_error("PowerSchedule: t must be > 0");
  return power_eval(coefficient_, exponent_, t);
}

double PowerSchedule::derivative(double t) const {
  if (!(t > 0.0)) throw std::domain_error("PowerSchedule: t must be > 0");
  if (exponent_ == 0.0) return 0.0;
  return power_eval(coefficient_ * exponent_, exponent_ - 1.0, t);
}

std::pair<double, double> eval_schedule(const Schedule& s, double t) {
  if (!(t > 0.0)) throw std::domain_error("eval_schedule: t must be > 0");
  return {s.value(t), s.derivative(t)};
}

std::string_view regime_label_name(RegimeLabel label) noexcept {
  switch (label) {
    case RegimeLabel::fast: return "Fast";
    case RegimeLabel::slow: return "Slow";
    case RegimeLabel::unclassified: return "Unclassified";
  }
  return "Unclassified";
}

bool check_assumption1(const ParameterSet& p, const PowerSchedule& beta,
                       const PowerSchedule& eps) {
  if (!(p.alpha > 1.0)) return false;
  const double bound = 1.0 / (p.alpha - 1.0);
  if (p.theta < bound - guard(bound)) return false;
  if (!(p.rho >= 0.0)) return false;
  if (!eps_vanishes(eps)) return false;
  return beta.coefficient() > 0.0;
}

bool check_assumption2(const ParameterSet& p, const PowerSchedule& beta,
                       const PowerSchedule& eps) {
  if (!(p.alpha > 3.0)) return false;
  const double lower = 1.0 / (p.alpha - 1.0);
  if (!(p.theta > lower + guard(lower))) return false;
  if (!(p.theta < 0.5 - guard(0.5))) return false;
  if (!(p.rho > 0.0)) return false;
  if (!eps_vanishes(eps)) return false;
  // beta nondecreasing: exponent >= 0.
  return beta.coefficient() > 0.0 && beta.exponent() >= 0.0;
}

bool check_scaling(const ParameterSet& p, const PowerSchedule& beta, bool strict) {
  const double bound = (1.0 - 2.0 * p.theta) / p.theta;
  const double g = guard(bound);
  const double r2 = beta.exponent();
  return strict ? r2 < bound - g : r2 <= bound + g;
}

RegimeReport classify_regime(const ParameterSet& p, const PowerSchedule& beta,
                             const PowerSchedule& eps) {
  RegimeReport rep;
  rep.assumption1 = check_assumption1(p, beta, eps);
  rep.assumption2 = check_assumption2(p, beta, eps);
  rep.scaling_condition = check_scaling(p, beta, false);
  rep.strict_scaling = check_scaling(p, beta, true);

  if (eps.coefficient() == 0.0) {
    // beta*eps identically zero: every integral condition holds trivially.
    rep.integrable_over_t = true;
    rep.fast_integrable = true;
    rep.slow_divergent = false;
  } else {
    const double diff = -eps.exponent() - beta.exponent();  // r1 - r2
    rep.integrable_over_t = diff > 0.0;
    rep.fast_integrable = diff > 2.0;
    rep.slow_divergent = diff < 2.0;
  }

  if (rep.fast_integrable && rep.scaling_condition) {
    rep.label = RegimeLabel::fast;
  } else if (rep.slow_divergent && rep.integrable_over_t && rep.scaling_condition) {
    rep.label = RegimeLabel::slow;
  } else {
    rep.label = RegimeLabel::unclassified;
  }
  return rep;
}

RegimeReport classify_regime(const ParameterSet& p, const Schedule& beta,
                             const Schedule& eps) {
  const auto* pb = dynamic_cast<const PowerSchedule*>(&beta);
  const auto* pe = dynamic_cast<const PowerSchedule*>(&eps);
  if (pb && pe) return classify_regime(p, *pb, *pe);
  RegimeReport rep;
  rep.label = RegimeLabel::unclassified;
  return rep;
}

}  // namespace pdflow
