#pragma once

// Floquet and Lyapunov stability of tori, bifurcation tags, and the
// Neimark-Sacker hand-off from a periodic orbit to a d=2 torus.

#include "qptorus/vcf.hpp"

#include <complex>
#include <string>
#include <vector>

namespace qpt::stability {

/// First-order Jacobian [0 I; -M^-1 (K + dF/dZ)  -M^-1 (D + dF/dZdot)] (2n x 2n).
[[nodiscard]] DenseMatrix state_jacobian(const models::SecondOrderSystem& sys, const DenseMatrix& m_inv,
                                         std::span<const double> z, std::span<const double> zdot);

/// Samples a torus along tau(t) = tau0 + omega t.
struct TorusTrajectory {
    std::vector<basis::BasisSpec> specs;
    int n = 0;
    Vector zd;
    std::vector<double> omega;
};

/// Psi over [0, duration] from tau0: product of N_M exponentials of the
/// endpoint-averaged Jacobian. `partials`, when given, receives Psi after
/// every `stride` sub-steps (including the identity at the start).
[[nodiscard]] DenseMatrix transition(const models::SecondOrderSystem& sys, const TorusTrajectory& traj,
                                     std::span<const double> tau0, double duration, int steps,
                                     std::vector<DenseMatrix>* partials = nullptr, int stride = 1);

/// Monodromy over T_1 = 2 pi / omega_1 starting at tau = 0.
[[nodiscard]] DenseMatrix monodromy(const models::SecondOrderSystem& sys, const TorusTrajectory& traj, int steps);

[[nodiscard]] std::vector<std::complex<double>> multipliers(const DenseMatrix& monodromy);

enum class Bifurcation { None, NS, SN };
[[nodiscard]] std::string to_string(Bifurcation b);

struct FloquetReport {
    std::vector<std::complex<double>> multipliers;
    vcf::Stability verdict = vcf::Stability::Unknown;
    int complex_outside = 0;  // complex multipliers with |mu| > 1 + tol
    int real_outside = 0;     // real multipliers > 1 + tol
    double max_modulus = 0.0;
};

[[nodiscard]] FloquetReport classify_floquet(std::vector<std::complex<double>> mu, double tol);
/// Tag of `current` given the previous point on the branch.
[[nodiscard]] Bifurcation bifurcation_between(const FloquetReport& previous, const FloquetReport& current);

struct NsSeed {
    Vector zd;  // d = 2 coefficients over (spec1, spec2)
    std::vector<double> omega;
    double alpha = 0.0;
    std::complex<double> multiplier;
};

/// Initial torus near an NS point of a periodic solution. The multiplier pair
/// closest to the unit circle must lie within `unit_tol` of it.
[[nodiscard]] NsSeed ns_torus_init(const models::SecondOrderSystem& sys, const TorusTrajectory& periodic,
                                   const basis::BasisSpec& spec1, const basis::BasisSpec& spec2, int steps,
                                   double epsilon, double unit_tol = 0.05);

struct LyapunovOptions {
    int j = 0;                   // stroboscopic frequency (0-based)
    std::vector<int> samples;    // Y_k for each k != j, in dimension order
    int iterations = 10000;      // N_L
    int steps = 256;             // N_M
    int count = 2;               // exponents reported
    double settle_tol = 1e-2;
    double stable_tol = 1e-2;
};

struct LyapunovReport {
    std::vector<double> exponents;            // sorted, largest first
    std::vector<std::vector<double>> history;  // running estimates per iteration
    bool settled = false;
    vcf::Stability verdict = vcf::Stability::Unknown;
    double max_volume_defect = 0.0;  // |sum of logs - log|det R_m|| over all steps
};

[[nodiscard]] LyapunovReport lyapunov_exponents(const models::SecondOrderSystem& sys, const TorusTrajectory& torus,
                                                const LyapunovOptions& opt);

}  // namespace qpt::stability
