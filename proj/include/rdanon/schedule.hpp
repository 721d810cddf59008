#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "latent.hpp"

namespace rdanon {

/// Cumulative noise-retention sequence. alpha_bar(0) is exactly 1 and
/// alpha_bar(t) for t in 1..t_train is strictly decreasing inside (0, 1].
class AlphaBarSchedule {
public:
  /// Takes alpha_bar_1..alpha_bar_T; the t = 0 anchor is added here.
  explicit AlphaBarSchedule(const std::vector<double>& alpha_bar_from_one) {
    if (alpha_bar_from_one.empty()) {
      throw RangeError("schedule needs at least one training timestep");
    }
    alpha_bar_.reserve(alpha_bar_from_one.size() + 1);
    alpha_bar_.push_back(1.0);
    for (std::size_t i = 0; i < alpha_bar_from_one.size(); ++i) {
      const double a = alpha_bar_from_one[i];
      if (!(a > 0.0 && a <= 1.0)) {
        throw RangeError("alpha_bar(" + std::to_string(i + 1) + ") outside (0, 1]");
      }
      if (!(a < alpha_bar_.back())) {
        throw RangeError("alpha_bar must be strictly decreasing at t=" + std::to_string(i + 1));
      }
      alpha_bar_.push_back(a);
    }
  }

  int t_train() const { return static_cast<int>(alpha_bar_.size()) - 1; }

  double alpha_bar(int t) const {
    check_timestep(t);
    return alpha_bar_[static_cast<std::size_t>(t)];
  }

  void check_timestep(int t) const {
    if (t < 0 || t > t_train()) {
      throw RangeError("timestep " + std::to_string(t) + " outside 0.." +
                       std::to_string(t_train()));
    }
  }

private:
  std::vector<double> alpha_bar_;
};

/// beta_t linear from beta_start to beta_end over t = 1..t_train.
inline AlphaBarSchedule build_linear_beta_schedule(int t_train, double beta_start,
                                                   double beta_end) {
  if (t_train < 1) throw RangeError("t_train must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw RangeError("beta bounds must satisfy 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> alpha_bar(static_cast<std::size_t>(t_train));
  double prod = 1.0;
  for (int t = 1; t <= t_train; ++t) {
    const double beta =
        t_train == 1 ? beta_start
                     : beta_start + (beta_end - beta_start) * static_cast<double>(t - 1) /
                                        static_cast<double>(t_train - 1);
    prod *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(t - 1)] = prod;
  }
  return AlphaBarSchedule(alpha_bar);
}

/// Inference timesteps tau_1 < ... < tau_S with the implicit anchor tau_0 = 0.
class TimestepPlan {
public:
  explicit TimestepPlan(std::vector<int> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw RangeError("timestep plan must have at least one step");
    int prev = 0;
    for (int s : steps_) {
      if (s <= prev) throw RangeError("timestep plan must be strictly increasing from 1");
      prev = s;
    }
  }

  std::size_t length() const { return steps_.size(); }
  const std::vector<int>& steps() const { return steps_; }
  int last() const { return steps_.back(); }

  /// tau_0 = 0 followed by the plan.
  std::vector<int> anchors() const {
    std::vector<int> a;
    a.reserve(steps_.size() + 1);
    a.push_back(0);
    a.insert(a.end(), steps_.begin(), steps_.end());
    return a;
  }

private:
  std::vector<int> steps_;
};

/// tau_i = round(i * t_train / s), half rounded up, in exact integer arithmetic.
inline TimestepPlan build_timestep_plan(int t_train, int s) {
  if (t_train < 1) throw RangeError("t_train must be >= 1");
  if (s < 1 || s > t_train) {
    throw RangeError("plan length " + std::to_string(s) + " must lie in 1.." +
                     std::to_string(t_train));
  }
  std::vector<int> steps;
  steps.reserve(static_cast<std::size_t>(s));
  for (long long i = 1; i <= s; ++i) {
    const long long tau = (2 * i * t_train + s) / (2LL * s);
    if (steps.empty() || tau > steps.back()) steps.push_back(static_cast<int>(tau));
  }
  if (steps.back() != t_train) steps.push_back(t_train);
  return TimestepPlan(std::move(steps));
}

/// Closed-form noising: sqrt(ab_t) * x0 + sqrt(1 - ab_t) * eps.
inline Latent diffuse(const Latent& x0, int t, const Latent& eps,
                      const AlphaBarSchedule& schedule) {
  require_same_dims(x0.dims(), eps.dims(), "diffuse: x0/eps shape mismatch");
  const double ab = schedule.alpha_bar(t);
  if (t == 0) return x0;
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Latent out(x0.dims());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = signal * x0[i] + noise * eps[i];
  }
  return out;
}

/// Parameters of the linear-beta schedule and the inference plan length.
struct ScheduleConfig {
  int t_train = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int steps = 50;

  AlphaBarSchedule schedule() const {
    return build_linear_beta_schedule(t_train, beta_start, beta_end);
  }
  TimestepPlan plan() const { return build_timestep_plan(t_train, steps); }
};

} // namespace rdanon
