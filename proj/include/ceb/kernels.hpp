#pragma once

// Expression-level building blocks for precision-weighted Gaussian algebra.
// Everything here accepts arbitrary Eigen array expressions and is templated
// on their scalar type.

#include <Eigen/Core>

namespace ceb::kernels {

// Reductions over at least this many terms use Neumaier-compensated summation.
inline constexpr Eigen::Index kCompensatedThreshold = 10000;

template <typename Derived>
typename Derived::Scalar sum(const Eigen::ArrayBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    if (x.size() < kCompensatedThreshold) return x.sum();
    Scalar s = 0;
    Scalar c = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Scalar v = x.derived().coeff(i);
        const Scalar t = s + v;
        if (Eigen::numext::abs(s) >= Eigen::numext::abs(v)) {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    return s + c;
}

template <typename DerivedY, typename DerivedW>
typename DerivedY::Scalar weighted_mean(const Eigen::ArrayBase<DerivedY>& y, const Eigen::ArrayBase<DerivedW>& w) {
    return sum(w * y) / sum(w);
}

template <typename Scalar>
struct Combined {
    Scalar mean;
    Scalar precision;
};

// Combines an unbiased anchor measurement (value, variance) with independent
// measurements `shifted` of the same quantity whose variances are
// `total_var`. Returns the precision-weighted mean and the total precision.
template <typename DerivedY, typename DerivedV>
Combined<typename DerivedY::Scalar> combine(typename DerivedY::Scalar anchor,
                                            typename DerivedY::Scalar anchor_var,
                                            const Eigen::ArrayBase<DerivedY>& shifted,
                                            const Eigen::ArrayBase<DerivedV>& total_var) {
    using Scalar = typename DerivedY::Scalar;
    const Scalar anchor_prec = Scalar(1) / anchor_var;
    if (shifted.size() == 0) return {anchor, anchor_prec};
    const Scalar precision = anchor_prec + sum(total_var.inverse());
    const Scalar numerator = anchor_prec * anchor + sum(shifted / total_var);
    return {numerator / precision, precision};
}

}  // namespace ceb::kernels
