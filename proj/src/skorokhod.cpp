#include "reflow/skorokhod.hpp"

#include <algorithm>
#include <cmath>

namespace reflow {

namespace {

void require_finite(std::span<const double> z) {
  for (double v : z) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "reflection proposal has a non-finite coordinate");
  }
}

InPlaceReflection project_halfspace(std::span<double> z) {
  double& last = z.back();
  if (last > 0.0) return {0.0, false};
  const double push = -last;
  last = 0.0;
  // -0.0 would otherwise leak out as a "negative" push.
  return {push > 0.0 ? push : 0.0, true};
}

InPlaceReflection project_disk(std::span<double> z) {
  const double r = std::hypot(z[0], z[1]);
  if (r < 1.0) return {0.0, false};
  z[0] /= r;
  z[1] /= r;
  return {r - 1.0, true};
}

}  // namespace

SkorokhodPath skorokhod_map_1d(double x0, std::span<const double> w) {
  if (!(x0 >= 0.0)) fail(ErrorCode::InvalidArgument, "skorokhod_map_1d: x0 must be >= 0");
  if (w.empty() || w[0] != 0.0) fail(ErrorCode::InvalidArgument, "skorokhod_map_1d: path must start at w_0 = 0");
  SkorokhodPath out;
  out.phi.resize(w.size());
  out.xi.resize(w.size());
  double running = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    running = std::max(running, -(x0 + w[i]));
    out.xi[i] = running;
    out.phi[i] = x0 + w[i] + running;
  }
  return out;
}

ReflectedStep reflect_step_halfspace(std::span<const double> z) {
  if (z.empty()) fail(ErrorCode::InvalidArgument, "reflect_step_halfspace: empty point");
  require_finite(z);
  ReflectedStep step{{z.begin(), z.end()}, 0.0, false};
  const auto r = project_halfspace(step.position);
  step.xi_increment = r.xi_increment;
  step.reflected = r.reflected;
  return step;
}

ReflectedStep reflect_step_disk(std::span<const double> z) {
  if (z.size() != 2) fail(ErrorCode::InvalidArgument, "reflect_step_disk: point must be in R^2");
  require_finite(z);
  ReflectedStep step{{z.begin(), z.end()}, 0.0, false};
  const auto r = project_disk(step.position);
  step.xi_increment = r.xi_increment;
  step.reflected = r.reflected;
  return step;
}

ReflectedStep reflect_step(const DomainSpec& domain, std::span<const double> z) {
  if (z.size() != domain.dim()) fail(ErrorCode::InvalidArgument, "reflect_step: dimension mismatch");
  return domain.kind() == DomainKind::HalfSpace ? reflect_step_halfspace(z) : reflect_step_disk(z);
}

InPlaceReflection reflect_in_place(const DomainSpec& domain, std::span<double> z) {
  for (double v : z) {
    if (!std::isfinite(v)) fail(ErrorCode::DomainViolation, "flow diverged: non-finite proposal");
  }
  return domain.kind() == DomainKind::HalfSpace ? project_halfspace(z) : project_disk(z);
}

}  // namespace reflow
