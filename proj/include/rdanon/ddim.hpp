#pragma once

// Deterministic (sigma = 0) DDIM stepping between arbitrary timesteps.
//
// With x0_hat = (x_t - sqrt(1 - ab_t) * eps) / sqrt(ab_t), a step from t to
// any other timestep s is
//
//   x_s = sqrt(ab_s) * x0_hat + sqrt(1 - ab_s) * eps
//
// and eps is always evaluated at the source state and timestep. Moving to a
// smaller s denoises, moving to a larger s inverts.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "latent.hpp"
#include "mask.hpp"
#include "predictor.hpp"
#include "schedule.hpp"

namespace rdanon {

/// Latents recorded at tau_0 = 0, tau_1, ..., tau_S by an inversion run.
struct Trajectory {
  std::vector<int> timesteps;
  std::vector<Latent> latents;

  std::size_t size() const { return latents.size(); }
  const Latent& endpoint() const { return latents.back(); }
  const Latent& origin() const { return latents.front(); }
};

namespace detail {

inline Latent ddim_transfer(const Latent& x, int from, int to, const NoisePredictor& predictor,
                            const AlphaBarSchedule& schedule) {
  const double ab_from = schedule.alpha_bar(from);
  const double ab_to = schedule.alpha_bar(to);
  const Latent eps = predictor.predict(x, from);
  require_same_dims(eps.dims(), x.dims(), "noise predictor changed the latent shape");

  const double signal_from = std::sqrt(ab_from);
  const double noise_from = std::sqrt(1.0 - ab_from);
  const double signal_to = std::sqrt(ab_to);
  const double noise_to = std::sqrt(1.0 - ab_to);

  Latent out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0_hat = (x[i] - noise_from * eps[i]) / signal_from;
    out[i] = signal_to * x0_hat + noise_to * eps[i];
  }
  if (!out.all_finite()) {
    throw NumericError("non-finite latent after DDIM step " + std::to_string(from) + " -> " +
                       std::to_string(to));
  }
  return out;
}

} // namespace detail

/// Denoising step t -> t_prev (t_prev < t). At t_prev = 0 this returns x0_hat.
inline Latent backward_step(const Latent& x_t, int t, int t_prev,
                            const NoisePredictor& predictor,
                            const AlphaBarSchedule& schedule) {
  schedule.check_timestep(t);
  schedule.check_timestep(t_prev);
  if (!(t_prev < t)) {
    throw RangeError("backward step needs t_prev < t, got " + std::to_string(t_prev) +
                     " -> " + std::to_string(t));
  }
  return detail::ddim_transfer(x_t, t, t_prev, predictor, schedule);
}

/// Inversion step t -> t_next (t_next > t).
inline Latent forward_step(const Latent& x_t, int t, int t_next,
                           const NoisePredictor& predictor,
                           const AlphaBarSchedule& schedule) {
  schedule.check_timestep(t);
  schedule.check_timestep(t_next);
  if (!(t < t_next)) {
    throw RangeError("forward step needs t < t_next, got " + std::to_string(t) + " -> " +
                     std::to_string(t_next));
  }
  return detail::ddim_transfer(x_t, t, t_next, predictor, schedule);
}

/// The same update written as a ratio:
///   sqrt(ab_to/ab_from) * x + sqrt(ab_to) * (sqrt(1/ab_to - 1) - sqrt(1/ab_from - 1)) * eps
/// Kept as an independent algebraic route for consistency checks.
inline Latent ddim_step_ratio_form(const Latent& x, int from, int to,
                                   const NoisePredictor& predictor,
                                   const AlphaBarSchedule& schedule) {
  const double ab_from = schedule.alpha_bar(from);
  const double ab_to = schedule.alpha_bar(to);
  const Latent eps = predictor.predict(x, from);
  const double scale = std::sqrt(ab_to / ab_from);
  const double mix =
      std::sqrt(ab_to) * (std::sqrt(1.0 / ab_to - 1.0) - std::sqrt(1.0 / ab_from - 1.0));
  Latent out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i] + mix * eps[i];
  return out;
}

/// Runs forward steps along 0 -> tau_1 -> ... -> tau_S, recording every state.
inline Trajectory invert(const Latent& z0, const TimestepPlan& plan,
                         const NoisePredictor& predictor, const AlphaBarSchedule& schedule) {
  if (!z0.all_finite()) throw NumericError("inversion input latent is not finite");
  if (plan.last() > schedule.t_train()) {
    throw RangeError("plan reaches timestep " + std::to_string(plan.last()) +
                     " beyond schedule length " + std::to_string(schedule.t_train()));
  }
  Trajectory traj;
  traj.timesteps = plan.anchors();
  traj.latents.reserve(traj.timesteps.size());
  traj.latents.push_back(z0);
  for (std::size_t i = 1; i < traj.timesteps.size(); ++i) {
    traj.latents.push_back(forward_step(traj.latents.back(), traj.timesteps[i - 1],
                                        traj.timesteps[i], predictor, schedule));
  }
  return traj;
}

/// Trajectory plus mask for re-injecting unmasked content after each step.
struct Reinjection {
  const Trajectory& trajectory;
  const LatentMask& mask;
};

/// Runs backward steps tau_S -> ... -> 0. With re-injection, every step
/// (the last one included) is followed by a blend that restores unmasked
/// coordinates from the trajectory entry at the step's target timestep.
inline Latent generate(const Latent& z_T, const TimestepPlan& plan,
                       const NoisePredictor& predictor, const AlphaBarSchedule& schedule,
                       std::optional<Reinjection> reinjection = std::nullopt) {
  const std::vector<int> anchors = plan.anchors();
  if (reinjection) {
    const Trajectory& traj = reinjection->trajectory;
    if (traj.timesteps != anchors || traj.latents.size() != anchors.size()) {
      throw DimsError("re-injection trajectory does not match the timestep plan");
    }
    for (const Latent& z : traj.latents) {
      require_same_dims(z.dims(), z_T.dims(), "re-injection trajectory shape mismatch");
    }
    require_mask_fits(reinjection->mask, z_T.dims());
  }
  Latent z = z_T;
  for (std::size_t i = anchors.size() - 1; i > 0; --i) {
    z = backward_step(z, anchors[i], anchors[i - 1], predictor, schedule);
    if (reinjection) {
      z = blend(z, reinjection->trajectory.latents[i - 1], reinjection->mask);
    }
  }
  return z;
}

} // namespace rdanon
