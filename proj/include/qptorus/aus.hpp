#pragma once

// Alternating U/S-domain evaluation of nonlinear forces on a torus ansatz.
//
// Layouts (all column-major):
//   coefficients  axes (k_d, ..., k_1, dof): index = dof*U_1..U_d + k_1*U_2..U_d + ... + k_d
//   grid values   axes (dof, s_1, ..., s_d): n values per grid point, tau_1 fastest
//   grid Jacobian axes (row, col, s_1, ..., s_d): one n x n page per grid point

#include "qptorus/basis.hpp"
#include "qptorus/models.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qpt::aus {

/// Equispaced tensor grid; row g holds (tau_1, ..., tau_d) with tau_1 varying fastest.
[[nodiscard]] DenseMatrix sgrid(const std::vector<basis::BasisSpec>& specs);

class AusTransform {
public:
    AusTransform(int n, std::vector<basis::BasisSpec> specs);
    AusTransform(int n, std::vector<basis::BasisSpec> specs, std::vector<basis::BasisMatrices> mats);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int d() const { return static_cast<int>(specs_.size()); }
    [[nodiscard]] std::size_t coeff_size() const { return coeff_size_; }
    [[nodiscard]] std::size_t grid_points() const { return grid_points_; }
    [[nodiscard]] const std::vector<basis::BasisSpec>& specs() const { return specs_; }
    [[nodiscard]] const std::vector<basis::BasisMatrices>& matrices() const { return mats_; }

    /// Grid states and velocities from coefficients (zdot starts at zero).
    void uts(const Vector& zd, std::span<const double> omega, Vector& z0, Vector& z0dot) const;
    /// Grid samples of d z / d tau_i (0-based i).
    [[nodiscard]] Vector partial(const Vector& zd, int i) const;
    /// Grid values -> coefficients.
    [[nodiscard]] Vector stu1(const Vector& f0) const;
    /// Pointwise Jacobian pages -> coefficient-space Jacobian (coeff_size square).
    [[nodiscard]] DenseMatrix stu2(const std::vector<double>& dfdz, const std::vector<double>& dfdzdot,
                                   std::span<const double> omega) const;

private:
    int n_;
    std::vector<basis::BasisSpec> specs_;
    std::vector<basis::BasisMatrices> mats_;
    std::size_t coeff_size_ = 0;
    std::size_t grid_points_ = 0;
    std::vector<DenseMatrix> w0_, w1_;  // per dimension, (k + U k') x s sandwich weights
};

struct NonlinearResult {
    Vector fd;                  // force coefficients
    DenseMatrix dfd;            // d fd / d zd, empty unless requested
    std::vector<Vector> dfd_domega;  // d fd / d omega_i, empty unless requested
};

/// Composes uts -> pointwise force -> stu1/stu2 and caches the grid states
/// of the last coefficient vector. Single-owner; not thread-safe.
class NonlinearEvaluator {
public:
    NonlinearEvaluator(const models::SecondOrderSystem& sys, const AusTransform& transform);

    void set_cache_enabled(bool on) { cache_enabled_ = on; }
    /// Number of times grid states were (re)computed.
    [[nodiscard]] std::uint64_t grid_evaluations() const { return grid_evaluations_; }

    [[nodiscard]] NonlinearResult evaluate(const Vector& zd, std::span<const double> omega, bool jacobian,
                                           bool omega_derivatives = false);
    /// Grid states for zd (served from the cache when possible).
    const Vector& grid_state(const Vector& zd, std::span<const double> omega);
    const Vector& grid_velocity(const Vector& zd, std::span<const double> omega);

private:
    void refresh(const Vector& zd, std::span<const double> omega);

    const models::SecondOrderSystem& sys_;
    const AusTransform& tf_;
    bool cache_enabled_ = true;
    std::uint64_t grid_evaluations_ = 0;
    bool valid_ = false;
    Vector key_z_;
    std::vector<double> key_omega_;
    Vector z0_, z0dot_;
};

/// Multiplication counts of the staged evaluation and of the monolithic
/// multi-dimensional transform, with equal S and U per dimension.
[[nodiscard]] double staged_operation_count(int n, int d, int S, int U);
[[nodiscard]] double monolithic_operation_count(int n, int d, int S, int U);
[[nodiscard]] double operation_ratio(int d, int S, int U);

}  // namespace qpt::aus
