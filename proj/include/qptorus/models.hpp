#pragma once

// Second-order systems
//   M0 z'' + D0 z' + K0 z + Theta0 (F0(z, z') - E0(tau_1..tau_e)) = 0
// and the three compiled-in benchmark models.
//
// Units are whatever the model constructor documents; nothing is rescaled
// internally.

#include "qptorus/tensorkit.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qpt::models {

/// Pointwise nonlinear force. Implementations must be re-entrant.
class NonlinearForce {
public:
    virtual ~NonlinearForce() = default;
    virtual void evaluate(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const = 0;
    /// Both Jacobians are n x n, column-major.
    virtual void jacobian(std::span<const double> z, std::span<const double> zdot, std::span<double> dfdz,
                          std::span<double> dfdzdot) const = 0;
};

/// Excitation E0(tau_1..tau_e), 2*pi-periodic in every phase. The
/// amplitude may depend on the frequencies (base excitation does).
class Excitation {
public:
    virtual ~Excitation() = default;
    [[nodiscard]] virtual int phase_count() const = 0;
    virtual void evaluate(std::span<const double> tau, std::span<const double> omega, std::span<double> out) const = 0;
    /// d E0 / d omega_i; zero unless the amplitude depends on frequency.
    virtual void omega_derivative(std::span<const double> tau, std::span<const double> omega, int i,
                                  std::span<double> out) const;
};

struct SecondOrderSystem {
    std::string name;
    int n = 0;
    DenseMatrix M0, D0, K0, Theta0;
    std::shared_ptr<const NonlinearForce> force;      // null means F0 == 0
    std::shared_ptr<const Excitation> excitation;     // null means E0 == 0
    Vector output;                                    // amplitude observation c, reported as max |c^T z|
    std::map<std::string, double> info;               // derived scalars (e.g. first natural frequency)

    [[nodiscard]] int excitation_count() const { return excitation ? excitation->phase_count() : 0; }
    void validate() const;

    void force_at(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const;
    void force_jacobian_at(std::span<const double> z, std::span<const double> zdot, std::span<double> dfdz,
                           std::span<double> dfdzdot) const;
    void excitation_at(std::span<const double> tau, std::span<const double> omega, std::span<double> out) const;
};

// ---------------------------------------------------------------------------
// Building blocks

/// F = A z + B z'
class LinearForce final : public NonlinearForce {
public:
    LinearForce(DenseMatrix A, DenseMatrix B);
    void evaluate(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const override;
    void jacobian(std::span<const double> z, std::span<const double> zdot, std::span<double> dfdz,
                  std::span<double> dfdzdot) const override;

private:
    DenseMatrix A_, B_;
};

/// F = mu x^2 x' + alpha x^3 (single DOF).
class DuffingVdpForce final : public NonlinearForce {
public:
    DuffingVdpForce(double mu, double alpha) : mu_(mu), alpha_(alpha) {}
    void evaluate(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const override;
    void jacobian(std::span<const double> z, std::span<const double> zdot, std::span<double> dfdz,
                  std::span<double> dfdzdot) const override;

private:
    double mu_, alpha_;
};

/// F_dof = k z_dof^3 on one DOF of an n-DOF system.
class CubicSpringForce final : public NonlinearForce {
public:
    CubicSpringForce(int n, int dof, double k) : n_(n), dof_(dof), k_(k) {}
    void evaluate(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const override;
    void jacobian(std::span<const double> z, std::span<const double> zdot, std::span<double> dfdz,
                  std::span<double> dfdzdot) const override;

private:
    int n_, dof_;
    double k_;
};

/// f_i = a_ijkl q_j q_k q_l + b_ijkl q_j q_k q'_l + c_ijkl q_j q'_k q'_l,
/// tensors stored column-major as (i, j, k, l).
class CubicTensorForce final : public NonlinearForce {
public:
    CubicTensorForce(int n, std::vector<double> a, std::vector<double> b, std::vector<double> c);
    void evaluate(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const override;
    void jacobian(std::span<const double> z, std::span<const double> zdot, std::span<double> dfdz,
                  std::span<double> dfdzdot) const override;

private:
    [[nodiscard]] std::size_t at(int i, int j, int k, int l) const {
        const auto n = static_cast<std::size_t>(n_);
        return static_cast<std::size_t>(i) + n * (static_cast<std::size_t>(j) + n * (static_cast<std::size_t>(k) + n * static_cast<std::size_t>(l)));
    }
    int n_;
    std::vector<double> a_, b_, c_;
};

/// E = sum_i amplitude_i * omega_i^power * cos(tau_i).
class CosineExcitation final : public Excitation {
public:
    explicit CosineExcitation(std::vector<Vector> amplitudes, int omega_power = 0);
    [[nodiscard]] int phase_count() const override { return static_cast<int>(amplitudes_.size()); }
    void evaluate(std::span<const double> tau, std::span<const double> omega, std::span<double> out) const override;
    void omega_derivative(std::span<const double> tau, std::span<const double> omega, int i,
                          std::span<double> out) const override;

private:
    std::vector<Vector> amplitudes_;
    int power_;
};

// ---------------------------------------------------------------------------
// Benchmark models

/// x'' - mu (1 - x^2) x' + omega0^2 x + alpha x^3 = sum_i f_i cos(omega_i t).
/// The linear parts -mu x' and omega0^2 x live in D0 and K0.
[[nodiscard]] SecondOrderSystem duffing_vdp(double mu, double alpha, double omega0, const std::vector<double>& forcing);

/// Cantilevered Euler-Bernoulli beam with a cubic spring at the free end.
/// Mixed unit system: lengths in mm, mass in kg, time in s (E in kPa and
/// spring constants taken in the same consistent set).
struct BeamParameters {
    int elements = 8;
    double excitation = 0.002;   // e, scales f = omega_l1^2 M phi_1
    double length = 2700.0;      // mm
    double width = 10.0;         // mm
    double height = 10.0;        // mm
    double density = 1780e-9;    // kg/mm^3
    double youngs = 45e6;        // kPa
    double k_linear = 27.0;
    double k_cubic = 60.0;
    double alpha = 1.25e-4;      // mass-proportional damping
    double beta = 2.5e-5;        // stiffness-proportional damping, applied to the beam stiffness only
};
[[nodiscard]] SecondOrderSystem beam_system(const BeamParameters& p);

/// Dimensionless cantilevered pipe conveying fluid, n-mode Galerkin
/// projection onto cantilever eigenfunctions, base excitation e*cos(omega_1 t).
/// The cubic coefficients are a reconstruction of the inextensible model
/// (curvature, centrifugal, Coriolis and velocity-squared inertia terms);
/// treat quantitative results as indicative only.
struct PipeParameters {
    int modes = 4;
    double flow_velocity = 0.0;  // u, required by configs
    double excitation = 0.012;   // e
    double kelvin_voigt = 5e-3;  // alpha, internal dissipation
    double mass_ratio = 0.213;   // beta
    double gravity = 0.0;        // gamma
    int quadrature_points = 200;
};
[[nodiscard]] SecondOrderSystem pipe_system(const PipeParameters& p);

/// Roots of 1 + cos(x) cosh(x) = 0 (cantilever eigenvalues).
[[nodiscard]] std::vector<double> cantilever_eigenvalues(int count);

/// k-th derivative (0..4) of the orthonormal cantilever mode with eigenvalue lambda at xi.
[[nodiscard]] double cantilever_mode(double lambda, double xi, int derivative);

}  // namespace qpt::models
