#pragma once

// Per-dimension periodic bases: harmonic balance (HB), piecewise Lagrange
// collocation (CO) and periodic finite differences (FD).
//
// A basis maps between the U domain (its coefficients) and the S domain
// (values on the equispaced grid tau_j = 2*pi*j/S). The matrices follow the
// variable-coefficient recursion:
//   ups0/ups1/ups2   coefficient -> value / first / second tau-derivative at
//                    the rows where equations are enforced (U x U)
//   gamma0, gamma1   coefficient -> grid value / grid tau-derivative (S x U)
//   gamma0inv        grid value -> coefficient (U x S)
//   phase1, phase2   derivative operators used by the phase condition (U x U)

#include "qptorus/tensorkit.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qpt::basis {

enum class BasisKind { HB, CO, FD };

[[nodiscard]] std::string to_string(BasisKind kind);
[[nodiscard]] BasisKind basis_kind_from_string(const std::string& name);

struct BasisSpec {
    BasisKind kind = BasisKind::HB;
    std::vector<int> orders;   // HB harmonic orders, strictly increasing and positive
    int intervals = 0;         // CO interval count P
    int degree = 0;            // CO polynomial degree m
    std::vector<int> stencil;  // FD offsets, must contain 0
    int U = 0;                 // coefficient-space size
    int S = 0;                 // grid size

    [[nodiscard]] static BasisSpec harmonic(std::vector<int> orders, int S);
    /// orders 1..N
    [[nodiscard]] static BasisSpec harmonic_upto(int N, int S);
    [[nodiscard]] static BasisSpec collocation(int intervals, int degree);
    [[nodiscard]] static BasisSpec finite_difference(std::vector<int> stencil, int U);

    /// Throws AliasingError / StencilError / InvalidArgument on a broken spec.
    void validate() const;
    [[nodiscard]] std::string describe() const;
};

struct BasisMatrices {
    DenseMatrix ups0, ups1, ups2;
    DenseMatrix gamma0, gamma1, gamma0inv;
    DenseMatrix phase1, phase2;
};

[[nodiscard]] BasisMatrices build(const BasisSpec& spec);

/// Finite-difference weights alpha_p for offsets K approximating the g-th
/// derivative on a unit grid (scale by 1/dtau^g when applied).
[[nodiscard]] std::vector<double> fd_stencil(const std::vector<int>& offsets, int order);

/// Lagrange cardinal polynomials through nodes, and their derivatives, at tau.
[[nodiscard]] std::pair<std::vector<double>, std::vector<double>> lagrange_basis(const std::vector<double>& nodes,
                                                                                 double tau);

/// Gauss-Legendre abscissae on [-1, 1], ascending.
[[nodiscard]] std::vector<double> gauss_legendre_nodes(int count);

/// Gauss-Legendre nodes and weights on [a, b].
[[nodiscard]] std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int count, double a, double b);

/// Trigonometric interpolation weights through `count` equispaced samples on
/// [0, 2*pi): f(tau) ~= sum_q row[q] * f(2*pi*q/count). Even counts keep the
/// Nyquist term as a cosine.
[[nodiscard]] RowVector trig_interp_row(int count, double tau);
[[nodiscard]] RowVector trig_interp_row_derivative(int count, double tau);

/// Row Phi(tau) with z(tau) = Phi(tau) * c for coefficients c.
[[nodiscard]] RowVector synthesize_row(const BasisSpec& spec, double tau);
/// d/dtau of synthesize_row.
[[nodiscard]] RowVector synthesize_row_derivative(const BasisSpec& spec, double tau);

/// Wraps tau into [0, 2*pi).
[[nodiscard]] double wrap_angle(double tau);

}  // namespace qpt::basis
