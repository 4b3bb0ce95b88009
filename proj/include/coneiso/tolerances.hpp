#pragma once

namespace coneiso {

// Every numerical threshold used by the library lives here. Functions take a
// `const Tolerances&` defaulted to `Tolerances{}` so callers can override any
// of them from configuration.
struct Tolerances {
  // Geometric predicates (membership, on-boundary, tangency) for unit-scale
  // inputs. Scaled by max(1, |x|) where a point is involved.
  double geometric = 1e-12;
  // Boundary vertices of discrete surfaces must sit on the cone wall within
  // this distance (relative to max(1, |x|)).
  double surface_boundary = 1e-10;
  // Unit-length check for user-supplied direction vectors.
  double unit_length = 1e-9;
  // Relative tolerance for declaring two candidate perimeters tied.
  double tie = 1e-12;
  // Contact-angle and relative curvature-spread threshold for stationarity.
  double stationarity = 1e-2;
  // Threshold (area-normalized) for umbilicity defect, II(N,N) on contact
  // and strict negativity of the closed-form index form.
  double umbilicity = 1e-2;
  // Relative tolerance for sphere fits used by classification (fit residual,
  // distance of the center to the vertex or to a flat piece, in units of the
  // fitted radius).
  double sphere_fit = 1e-2;
  // Margin for the profile-gap existence certificate P < I_n(V) - margin.
  double profile_gap = 1e-12;
};

}  // namespace coneiso
