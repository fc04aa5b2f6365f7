#pragma once

#include <functional>
#include <vector>

namespace ceb::optimize {

struct Maximum {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

// 0 followed by n-1 log-spaced nodes on [upper * 1e-12, upper].
std::vector<double> seed_grid(double upper, int n = 256);

// Maximizes f over [0, upper]. The best node of seed_grid() brackets a
// golden-section refinement that stops once the bracket is narrower than
// `tol`. Bracket endpoints stay candidates, so boundary maxima come back as
// exactly 0 or exactly `upper`. Ties go to the smaller x. Throws
// non_finite_objective if f returns NaN.
Maximum maximize_bounded(const std::function<double(double)>& f, double upper, double tol = 1e-10);

// Same search, then polishes an interior maximum by bisecting on the sign of
// df inside the grid bracket. Function values alone resolve a flat peak only
// to about sqrt(machine epsilon).
Maximum maximize_bounded(const std::function<double(double)>& f, const std::function<double(double)>& df,
                         double upper, double tol = 1e-10);

}  // namespace ceb::optimize
