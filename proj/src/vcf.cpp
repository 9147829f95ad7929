#include "qptorus/vcf.hpp"

#include "qptorus/error.hpp"

#include <cmath>

namespace qpt::vcf {

std::string to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Unknown: break;
    }
    return "unknown";
}

Stability stability_from_string(const std::string& s) {
    if (s == "stable") return Stability::Stable;
    if (s == "unstable") return Stability::Unstable;
    return Stability::Unknown;
}

std::size_t unknown_count(int n, const std::vector<basis::BasisSpec>& specs) {
    std::size_t count = static_cast<std::size_t>(n);
    for (const auto& s : specs) count *= static_cast<std::size_t>(s.U);
    return count + specs.size();
}

// ---------------------------------------------------------------------------

VcfContext::VcfContext(models::SecondOrderSystem system, std::vector<basis::BasisSpec> specs)
    : system_(std::move(system)), specs_(std::move(specs)) {
    system_.validate();
    if (specs_.empty()) fail(ErrorCode::InvalidArgument, "at least one torus dimension is required");
    if (system_.excitation_count() > static_cast<int>(specs_.size())) {
        fail(ErrorCode::InvalidArgument, "system has more excitation frequencies than torus dimensions");
    }
    transform_ = std::make_unique<aus::AusTransform>(system_.n, specs_);
    theta_identity_ = system_.Theta0.isIdentity(0.0);
    for (const auto& m : transform_->matrices()) theta_identity_ = theta_identity_ && m.ups0.isIdentity(0.0);
}

DenseMatrix VcfContext::apply(const DenseMatrix& a0, const std::vector<const DenseMatrix*>& per_dim,
                              const DenseMatrix& x) const {
    std::vector<const DenseMatrix*> factors;
    factors.reserve(per_dim.size() + 1);
    factors.push_back(&a0);
    factors.insert(factors.end(), per_dim.begin(), per_dim.end());
    return tensorkit::kron_apply(factors, x);
}

DenseMatrix VcfContext::apply_theta(const DenseMatrix& x) const {
    if (theta_identity_) return x;
    std::vector<const DenseMatrix*> f;
    for (const auto& m : bases()) f.push_back(&m.ups0);
    return apply(system_.Theta0, f, x);
}

Vector VcfContext::apply_on_dimension(int i, const DenseMatrix& m, const Vector& x) const {
    const VcfContext& ctx = *this;
    const auto d = static_cast<std::size_t>(ctx.d());
    if (i < 0 || static_cast<std::size_t>(i) >= d) fail(ErrorCode::InvalidArgument, "dimension index out of range");
    if (static_cast<std::size_t>(x.size()) != ctx.coeff_size()) fail(ErrorCode::ShapeError, "coefficient length mismatch");
    Shape dims(d + 1);
    for (std::size_t k = 0; k < d; ++k) dims[d - 1 - k] = static_cast<std::size_t>(ctx.specs()[k].U);
    dims[d] = static_cast<std::size_t>(ctx.n());
    auto y = tensorkit::mode_product(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), dims,
                                     d - 1 - static_cast<std::size_t>(i), m);
    return Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
}

Vector VcfContext::apply_phase1(int i, const Vector& x) const {
    if (i < 0 || i >= d()) fail(ErrorCode::InvalidArgument, "dimension index out of range");
    return apply_on_dimension(i, bases()[static_cast<std::size_t>(i)].phase1, x);
}

Vector VcfContext::apply_phase2(int i, const Vector& x) const {
    if (i < 0 || i >= d()) fail(ErrorCode::InvalidArgument, "dimension index out of range");
    return apply_on_dimension(i, bases()[static_cast<std::size_t>(i)].phase2, x);
}

// ---------------------------------------------------------------------------

VcfOperator::VcfOperator(std::shared_ptr<const VcfContext> ctx, std::vector<double> omega)
    : ctx_(std::move(ctx)), omega_(std::move(omega)) {
    const auto& sys = ctx_->system();
    const auto& mats = ctx_->bases();
    const std::size_t d = mats.size();
    if (omega_.size() != d) fail(ErrorCode::ShapeError, "one frequency per torus dimension expected");
    tensorkit::check_element_count(ctx_->coeff_size(), ctx_->coeff_size());
    DenseMatrix M = sys.M0, D = sys.D0, K = sys.K0;
    for (std::size_t i = 0; i < d; ++i) {
        const auto& b = mats[i];
        const double w = omega_[i];
        DenseMatrix Ki = tensorkit::kron(M, (w * w) * b.ups2) + tensorkit::kron(D, w * b.ups1) + tensorkit::kron(K, b.ups0);
        if (i + 1 < d) {
            DenseMatrix Di = tensorkit::kron(M, (2.0 * w) * b.ups1) + tensorkit::kron(D, b.ups0);
            M = tensorkit::kron(M, b.ups0);
            D = std::move(Di);
        }
        K = std::move(Ki);
    }
    Kd_ = std::move(K);
    Ed_ = excitation_coeffs(false, 0);
}

DenseMatrix VcfOperator::thetad_dense() const {
    DenseMatrix T = ctx_->system().Theta0;
    for (const auto& b : ctx_->bases()) T = tensorkit::kron(T, b.ups0);
    return T;
}

Vector VcfOperator::excitation_coeffs(bool derivative, int which) const {
    const auto& sys = ctx_->system();
    const auto& tf = ctx_->transform();
    const auto n = static_cast<std::size_t>(sys.n);
    if (!sys.excitation) return Vector::Zero(static_cast<Eigen::Index>(tf.coeff_size()));
    const DenseMatrix grid = aus::sgrid(ctx_->specs());
    const auto e = static_cast<std::size_t>(sys.excitation_count());
    const std::size_t G = tf.grid_points();
    Vector e0(static_cast<Eigen::Index>(n * G));
    std::vector<double> tau(e), om(omega_.begin(), omega_.begin() + static_cast<std::ptrdiff_t>(e));
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t k = 0; k < e; ++k) tau[k] = grid(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k));
        std::span<double> out(e0.data() + g * n, n);
        if (derivative) {
            sys.excitation->omega_derivative(tau, om, which, out);
        } else {
            sys.excitation->evaluate(tau, om, out);
        }
    }
    return tf.stu1(e0);
}

Vector excitation_coeffs(const VcfOperator& op) { return op.Ed(); }

Vector VcfOperator::dE_domega(int i) const {
    if (i < 0 || i >= static_cast<int>(omega_.size())) fail(ErrorCode::InvalidArgument, "frequency index out of range");
    if (i >= ctx_->system().excitation_count()) return Vector::Zero(static_cast<Eigen::Index>(ctx_->coeff_size()));
    return excitation_coeffs(true, i);
}

Vector VcfOperator::residual(const Vector& zd, aus::NonlinearEvaluator& nl) const {
    const auto res = nl.evaluate(zd, omega_, false);
    return Kd_ * zd + ctx_->apply_theta(res.fd - Ed_);
}

DenseMatrix VcfOperator::jacobian_z(const Vector& zd, aus::NonlinearEvaluator& nl) const {
    const auto res = nl.evaluate(zd, omega_, true);
    return Kd_ + ctx_->apply_theta(res.dfd);
}

Vector VcfOperator::dK_domega_times(int i, const Vector& zd) const {
    const auto& sys = ctx_->system();
    const auto& mats = ctx_->bases();
    const int d = static_cast<int>(mats.size());
    if (i < 0 || i >= d) fail(ErrorCode::InvalidArgument, "frequency index out of range");
    // Kd = K0 (x) [ups0] + sum_j w_j D0 (x) [ups1 at j] + sum_j w_j^2 M0 (x) [ups2 at j]
    //      + 2 sum_{j<l} w_j w_l M0 (x) [ups1 at j, ups1 at l]
    auto factors = [&](int a, const DenseMatrix* ma, int b, const DenseMatrix* mb) {
        std::vector<const DenseMatrix*> f;
        for (int k = 0; k < d; ++k) {
            const DenseMatrix* m = &mats[static_cast<std::size_t>(k)].ups0;
            if (k == a) m = ma;
            if (k == b) m = mb;
            f.push_back(m);
        }
        return f;
    };
    const auto& bi = mats[static_cast<std::size_t>(i)];
    Vector out = ctx_->apply(sys.D0, factors(i, &bi.ups1, -1, nullptr), zd);
    out += (2.0 * omega_[static_cast<std::size_t>(i)]) * ctx_->apply(sys.M0, factors(i, &bi.ups2, -1, nullptr), zd);
    for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        out += (2.0 * omega_[static_cast<std::size_t>(j)]) *
               ctx_->apply(sys.M0, factors(i, &bi.ups1, j, &mats[static_cast<std::size_t>(j)].ups1), zd);
    }
    return out;
}

Vector VcfOperator::jacobian_omega(int i, const Vector& zd, aus::NonlinearEvaluator& nl) const {
    const auto res = nl.evaluate(zd, omega_, false, true);
    return dK_domega_times(i, zd) +
           ctx_->apply_theta(res.dfd_domega[static_cast<std::size_t>(i)] - dE_domega(i));
}

VcfOperator::Linearization VcfOperator::linearize(const Vector& zd, aus::NonlinearEvaluator& nl) const {
    const auto res = nl.evaluate(zd, omega_, true, true);
    Linearization lin;
    lin.R = Kd_ * zd + ctx_->apply_theta(res.fd - Ed_);
    lin.Jz = Kd_ + ctx_->apply_theta(res.dfd);
    for (int i = 0; i < static_cast<int>(omega_.size()); ++i) {
        lin.Jw.push_back(dK_domega_times(i, zd) +
                         ctx_->apply_theta(res.dfd_domega[static_cast<std::size_t>(i)] - dE_domega(i)));
    }
    return lin;
}

// ---------------------------------------------------------------------------

void synthesize(const std::vector<basis::BasisSpec>& specs, int n, const Vector& zd, std::span<const double> omega,
                const DenseMatrix& taus, DenseMatrix& z, DenseMatrix* zdot) {
    const std::size_t d = specs.size();
    std::size_t size = static_cast<std::size_t>(n);
    for (const auto& s : specs) size *= static_cast<std::size_t>(s.U);
    if (static_cast<std::size_t>(zd.size()) != size) fail(ErrorCode::ShapeError, "synthesize: coefficient length mismatch");
    if (static_cast<std::size_t>(taus.cols()) != d) fail(ErrorCode::ShapeError, "synthesize: one angle per dimension");
    if (zdot && omega.size() != d) fail(ErrorCode::ShapeError, "synthesize: one frequency per dimension");
    const Eigen::Index points = taus.rows();
    z.resize(points, n);
    if (zdot) zdot->resize(points, n);
    Shape base(d + 1);
    for (std::size_t k = 0; k < d; ++k) base[d - 1 - k] = static_cast<std::size_t>(specs[k].U);
    base[d] = static_cast<std::size_t>(n);
    const std::span<const double> coeffs(zd.data(), size);
    for (Eigen::Index p = 0; p < points; ++p) {
        std::vector<DenseMatrix> rows(d), drows(d);
        for (std::size_t k = 0; k < d; ++k) {
            rows[k] = basis::synthesize_row(specs[k], taus(p, static_cast<Eigen::Index>(k)));
            if (zdot) drows[k] = basis::synthesize_row_derivative(specs[k], taus(p, static_cast<Eigen::Index>(k)));
        }
        auto contract = [&](int deriv_dim) {
            Shape dims = base;
            std::vector<double> cur(coeffs.begin(), coeffs.end());
            for (std::size_t step = 0; step < d; ++step) {
                const std::size_t k = d - 1 - step;
                cur = tensorkit::mode_product(cur, dims, step,
                                              static_cast<int>(k) == deriv_dim ? drows[k] : rows[k]);
            }
            return cur;
        };
        const auto v = contract(-1);
        for (int a = 0; a < n; ++a) z(p, a) = v[static_cast<std::size_t>(a)];
        if (zdot) {
            for (int a = 0; a < n; ++a) (*zdot)(p, a) = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const auto dv = contract(static_cast<int>(k));
                for (int a = 0; a < n; ++a) (*zdot)(p, a) += omega[k] * dv[static_cast<std::size_t>(a)];
            }
        }
    }
}

}  // namespace qpt::vcf
