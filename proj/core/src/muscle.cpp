#include "myotrack/muscle.hpp"

#include <algorithm>
#include <cmath>

#include "myotrack/errors.hpp"

namespace myotrack {

double active_force_length(double norm_length) {
  const double x = (norm_length - 1.0) / kActiveWidth;
  return std::exp(-x * x);
}

double force_velocity(double v) {
  if (v <= -1.0) return 0.0;
  if (v <= 0.0) return (1.0 + v) / (1.0 - v / kHyperbolaShape);
  // Slope at zero matches the concentric branch: 1 + 1/shape.
  const double c = (kEccentricMax - 1.0) / (1.0 + 1.0 / kHyperbolaShape);
  return kEccentricMax - (kEccentricMax - 1.0) / (1.0 + v / c);
}

double force_velocity_slope(double v) {
  if (v <= -1.0) return 0.0;
  if (v <= 0.0) {
    const double d = 1.0 - v / kHyperbolaShape;
    return (1.0 + 1.0 / kHyperbolaShape) / (d * d);
  }
  const double c = (kEccentricMax - 1.0) / (1.0 + 1.0 / kHyperbolaShape);
  const double d = 1.0 + v / c;
  return (kEccentricMax - 1.0) / (c * d * d);
}

double passive_force_length(double norm_length) {
  const double s = std::max(0.0, kPassiveGain * (norm_length - 1.0));
  return s * s;
}

double passive_energy_density(double norm_length) {
  const double s = std::max(0.0, norm_length - 1.0);
  return kPassiveGain * kPassiveGain * s * s * s / 3.0;
}

double tendon_slack_length(const Muscle& m) {
  return m.tendon_ratio / (1.0 - m.tendon_ratio) * m.opt_fiber_length;
}

double normalized_fiber_length(const Muscle& m, double length) {
  return (length - tendon_slack_length(m)) / m.opt_fiber_length;
}

double normalized_fiber_velocity(const Muscle& m, double velocity) {
  return velocity / (kMaxContractionVelocity * m.opt_fiber_length);
}

double muscle_force(const Muscle& m, double excitation, double norm_length,
                    double norm_velocity) {
  if (!(excitation >= 0.0 && excitation <= 1.0)) {
    throw InvalidArgument("excitation must lie in [0, 1]");
  }
  double tension = 0.0;
  switch (m.mode) {
    case MuscleMode::kLinear:
      tension = excitation * m.max_iso_force + m.max_iso_force * passive_force_length(norm_length);
      break;
    case MuscleMode::kHill:
      tension = m.max_iso_force * std::cos(m.pennation) *
                (excitation * active_force_length(norm_length) * force_velocity(norm_velocity) +
                 passive_force_length(norm_length));
      break;
  }
  return std::max(0.0, tension);
}

double muscle_damping(const Muscle& m, double excitation, double norm_length,
                      double norm_velocity) {
  if (m.mode == MuscleMode::kLinear) return 0.0;
  const double tension = muscle_force(m, excitation, norm_length, norm_velocity);
  if (tension <= 0.0) return 0.0;
  return m.max_iso_force * std::cos(m.pennation) * excitation * active_force_length(norm_length) *
         force_velocity_slope(norm_velocity) / (kMaxContractionVelocity * m.opt_fiber_length);
}

double muscle_passive_energy(const Muscle& m, double length) {
  const double scale = (m.mode == MuscleMode::kHill) ? std::cos(m.pennation) : 1.0;
  return m.max_iso_force * scale * m.opt_fiber_length *
         passive_energy_density(normalized_fiber_length(m, length));
}

}  // namespace myotrack
