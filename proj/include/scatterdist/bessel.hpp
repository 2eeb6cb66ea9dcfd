#pragma once

#include <vector>

namespace scatterdist::bessel {

// Highest order accepted by the spherical Bessel routines.
inline constexpr int kMaxOrder = 200;

// Spherical Bessel function of the first kind, j_n(x), for x > 0.
//
// Evaluated by Miller's downward recurrence started well above
// max(n, x) and normalized against the closed form of j_0 (or j_1 when
// |j_1| > |j_0|, near the zeros of sin x). The recurrence carries its own
// rescaling so very small x at high order underflows gracefully to 0.
//
// Throws std::domain_error for x <= 0, non-finite x, or n outside
// [0, kMaxOrder].
double spherical_j(int n, double x);

// Spherical Bessel function of the second kind, y_n(x), for x > 0, by upward
// recurrence from the closed forms of y_0 and y_1. May overflow to -inf for
// large n at small x.
double spherical_y(int n, double x);

// j_0 .. j_{n_max} in one recurrence sweep.
std::vector<double> spherical_j_array(int n_max, double x);

// y_0 .. y_{n_max} in one recurrence sweep.
std::vector<double> spherical_y_array(int n_max, double x);

}  // namespace scatterdist::bessel
