#pragma once

#include "qptorus/tensorkit.hpp"

#include <functional>
#include <random>
#include <span>

namespace qpt::testing {

inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(20240601);
    return gen;
}

inline std::span<const double> cspan(const DenseMatrix& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> mspan(DenseMatrix& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> cspan(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> mspan(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline DenseMatrix random_matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    DenseMatrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = u(rng());
    return m;
}

inline Vector random_vector(Eigen::Index n, double scale = 1.0) { return random_matrix(n, 1, scale); }

/// Central-difference Jacobian of f at x, step h * max(1, |x_j|).
inline DenseMatrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h = 1e-6) {
    const Vector f0 = f(x);
    DenseMatrix J(f0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double step = h * std::max(1.0, std::abs(x(j)));
        Vector xp = x, xm = x;
        xp(j) += step;
        xm(j) -= step;
        J.col(j) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return J;
}

inline double rel_err(const DenseMatrix& a, const DenseMatrix& b) {
    const double scale = std::max(1e-300, std::max(a.norm(), b.norm()));
    return (a - b).norm() / scale;
}

}  // namespace qpt::testing
