#include "ceb/optimize.hpp"

#include "ceb/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ceb::optimize {

std::vector<double> seed_grid(double upper, int n) {
    if (!(upper > 0.0) || !std::isfinite(upper)) throw Error(Errc::invalid_argument, "bound must be positive and finite");
    if (n < 3) throw Error(Errc::invalid_argument, "seed grid needs at least 3 nodes");
    std::vector<double> grid(static_cast<std::size_t>(n));
    grid[0] = 0.0;
    const double lo = std::log(upper * 1e-12);
    const double hi = std::log(upper);
    for (int i = 1; i < n; ++i) {
        grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * (i - 1) / (n - 2));
    }
    grid.back() = upper;
    return grid;
}

Maximum maximize_bounded(const std::function<double(double)>& f, double upper, double tol) {
    Maximum best;
    best.value = -std::numeric_limits<double>::infinity();
    auto eval = [&](double x) {
        const double v = f(x);
        ++best.evaluations;
        if (std::isnan(v)) throw Error(Errc::non_finite_objective, "objective is NaN at " + std::to_string(x));
        return v;
    };
    auto offer = [&](double x, double v) {
        if (v > best.value || (v == best.value && x < best.x)) {
            best.x = x;
            best.value = v;
        }
    };

    const auto grid = seed_grid(upper);
    std::size_t arg = 0;
    double argval = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = eval(grid[i]);
        if (v > argval) {
            argval = v;
            arg = i;
        }
    }
    offer(grid[arg], argval);

    double a = grid[arg == 0 ? 0 : arg - 1];
    double b = grid[std::min(arg + 1, grid.size() - 1)];
    offer(a, eval(a));
    offer(b, eval(b));

    constexpr double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int iter = 0; iter < 400; ++iter) {
        const double width_floor = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(b));
        if (b - a <= std::max(tol, width_floor)) break;
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d);
        }
    }
    offer(c, fc);
    offer(d, fd);
    const double mid = 0.5 * (a + b);
    offer(mid, eval(mid));
    return best;
}

Maximum maximize_bounded(const std::function<double(double)>& f, const std::function<double(double)>& df,
                         double upper, double tol) {
    auto best = maximize_bounded(f, upper, tol);
    if (best.x == 0.0 || best.x == upper) return best;
    const auto grid = seed_grid(upper);
    const auto i = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), best.x) - grid.begin());
    double a = grid[i < 2 ? 0 : i - 2];
    double b = grid[std::min(i + 2, grid.size() - 1)];
    if (!(df(a) > 0.0 && df(b) < 0.0)) return best;
    for (int iter = 0; iter < 200 && b - a > tol * 1e-3; ++iter) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double d = df(m);
        if (std::isnan(d)) throw Error(Errc::non_finite_objective, "derivative is NaN at " + std::to_string(m));
        ++best.evaluations;
        (d > 0.0 ? a : b) = m;
    }
    const double x = 0.5 * (a + b);
    const double v = f(x);
    ++best.evaluations;
    if (v >= best.value - 1e-12 * std::max(1.0, std::abs(best.value))) {
        best.x = x;
        best.value = std::max(v, best.value);
    }
    return best;
}

}  // namespace ceb::optimize
