#pragma once

#include "myotrack/chain_model.hpp"

namespace myotrack {

// Normalized Hill-type curves. Lengths are fiber lengths divided by the
// optimal fiber length; velocities are lengthening velocities divided by
// kMaxContractionVelocity optimal lengths per second.

inline constexpr double kMaxContractionVelocity = 10.0;
inline constexpr double kActiveWidth = 0.45;
inline constexpr double kPassiveGain = 2.0;  // fPE(1.5) == 1
inline constexpr double kHyperbolaShape = 0.25;
inline constexpr double kEccentricMax = 1.4;

/// Gaussian active force-length curve, peak 1 at normalized length 1.
double active_force_length(double norm_length);

/// Force-velocity: Hill hyperbola while shortening (0 at -1), saturating
/// toward kEccentricMax while lengthening. C1 at zero, value 1 there.
double force_velocity(double norm_velocity);

/// d force_velocity / d norm_velocity.
double force_velocity_slope(double norm_velocity);

/// Quadratic passive force, zero while slack (norm_length <= 1).
double passive_force_length(double norm_length);

/// Integral of passive_force_length from 1 to norm_length.
double passive_energy_density(double norm_length);

/// Tendon slack length implied by the tendon ratio (rigid tendon).
double tendon_slack_length(const Muscle& muscle);

double normalized_fiber_length(const Muscle& muscle, double musculotendon_length);
double normalized_fiber_velocity(const Muscle& muscle, double lengthening_velocity);

/// Tension along the line of action, N. Throws InvalidArgument when the
/// excitation is outside [0, 1].
double muscle_force(const Muscle& muscle, double excitation, double norm_length,
                    double norm_velocity);

/// d tension / d lengthening velocity (N*s/m), >= 0.
double muscle_damping(const Muscle& muscle, double excitation, double norm_length,
                      double norm_velocity);

/// Elastic energy stored in the passive element at a musculotendon length.
double muscle_passive_energy(const Muscle& muscle, double musculotendon_length);

}  // namespace myotrack
