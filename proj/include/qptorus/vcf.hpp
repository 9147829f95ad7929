#pragma once

// Variable-coefficient assembly of the torus equations
//   R(zd, omega) = Kd zd + Thetad (Fd(zd) - Ed) = 0
// and their derivatives.

#include "qptorus/aus.hpp"
#include "qptorus/basis.hpp"
#include "qptorus/models.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qpt::vcf {

enum class Stability { Unknown, Stable, Unstable };

[[nodiscard]] std::string to_string(Stability s);
[[nodiscard]] Stability stability_from_string(const std::string& s);

struct TorusPoint {
    Vector zd;
    std::vector<double> omega;
    double p = 0.0;
    Vector tangent;  // empty when not known
    Stability stability = Stability::Unknown;
};

/// n * prod(U_i) + d
[[nodiscard]] std::size_t unknown_count(int n, const std::vector<basis::BasisSpec>& specs);

/// omega-independent part: bases, transform, Kronecker factor lists.
class VcfContext {
public:
    VcfContext(models::SecondOrderSystem system, std::vector<basis::BasisSpec> specs);

    [[nodiscard]] const models::SecondOrderSystem& system() const { return system_; }
    [[nodiscard]] const std::vector<basis::BasisSpec>& specs() const { return specs_; }
    [[nodiscard]] const std::vector<basis::BasisMatrices>& bases() const { return transform_->matrices(); }
    [[nodiscard]] const aus::AusTransform& transform() const { return *transform_; }
    [[nodiscard]] int n() const { return system_.n; }
    [[nodiscard]] int d() const { return static_cast<int>(specs_.size()); }
    [[nodiscard]] std::size_t coeff_size() const { return transform_->coeff_size(); }
    /// True when Thetad is the identity (skips products with it).
    [[nodiscard]] bool theta_is_identity() const { return theta_identity_; }

    /// (A0 (x) B1 (x) ... (x) Bd) x for the given per-dimension factors.
    [[nodiscard]] DenseMatrix apply(const DenseMatrix& a0, const std::vector<const DenseMatrix*>& per_dim,
                                    const DenseMatrix& x) const;
    /// Thetad x without forming Thetad.
    [[nodiscard]] DenseMatrix apply_theta(const DenseMatrix& x) const;
    /// (I (x) .. (x) m (x) .. (x) I) x with m acting on dimension i (0-based).
    [[nodiscard]] Vector apply_on_dimension(int i, const DenseMatrix& m, const Vector& x) const;
    /// Lambda^1_i x and Lambda^2_i x (phase-condition operators, 0-based i).
    [[nodiscard]] Vector apply_phase1(int i, const Vector& x) const;
    [[nodiscard]] Vector apply_phase2(int i, const Vector& x) const;

private:
    models::SecondOrderSystem system_;
    std::vector<basis::BasisSpec> specs_;
    std::unique_ptr<aus::AusTransform> transform_;
    bool theta_identity_ = false;
};

class VcfOperator {
public:
    VcfOperator(std::shared_ptr<const VcfContext> ctx, std::vector<double> omega);

    [[nodiscard]] const VcfContext& context() const { return *ctx_; }
    [[nodiscard]] const std::vector<double>& omega() const { return omega_; }
    [[nodiscard]] const DenseMatrix& Kd() const { return Kd_; }
    [[nodiscard]] const Vector& Ed() const { return Ed_; }
    /// Dense Thetad (materialized on demand; meant for small cases and tests).
    [[nodiscard]] DenseMatrix thetad_dense() const;

    [[nodiscard]] Vector residual(const Vector& zd, aus::NonlinearEvaluator& nl) const;
    [[nodiscard]] DenseMatrix jacobian_z(const Vector& zd, aus::NonlinearEvaluator& nl) const;
    /// d Kd / d omega_i * zd (0-based i).
    [[nodiscard]] Vector dK_domega_times(int i, const Vector& zd) const;
    /// d Ed / d omega_i (nonzero only for frequency-dependent excitation amplitudes).
    [[nodiscard]] Vector dE_domega(int i) const;
    /// Full d R / d omega_i including force and excitation dependence.
    [[nodiscard]] Vector jacobian_omega(int i, const Vector& zd, aus::NonlinearEvaluator& nl) const;

    /// Residual, z-Jacobian and all omega-derivatives with one nonlinear pass.
    struct Linearization {
        Vector R;
        DenseMatrix Jz;
        std::vector<Vector> Jw;
    };
    [[nodiscard]] Linearization linearize(const Vector& zd, aus::NonlinearEvaluator& nl) const;

private:
    [[nodiscard]] Vector excitation_coeffs(bool derivative, int which) const;

    std::shared_ptr<const VcfContext> ctx_;
    std::vector<double> omega_;
    DenseMatrix Kd_;
    Vector Ed_;
};

/// E0 sampled on the grid and projected (exposed for tests).
[[nodiscard]] Vector excitation_coeffs(const VcfOperator& op);

/// Z0(tau) = [I_n (x) Phi_1(tau_1) (x) ... (x) Phi_d(tau_d)] zd, for each row of taus.
/// velocities via sum_i omega_i d/dtau_i. Outputs are (points x n).
void synthesize(const std::vector<basis::BasisSpec>& specs, int n, const Vector& zd, std::span<const double> omega,
                const DenseMatrix& taus, DenseMatrix& z, DenseMatrix* zdot = nullptr);

}  // namespace qpt::vcf
