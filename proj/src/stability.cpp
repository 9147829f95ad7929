#include "qptorus/stability.hpp"

#include "qptorus/aus.hpp"
#include "qptorus/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qpt::stability {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

DenseMatrix state_jacobian(const models::SecondOrderSystem& sys, const DenseMatrix& m_inv, std::span<const double> z,
                           std::span<const double> zdot) {
    const int n = sys.n;
    DenseMatrix dz(n, n), dv(n, n);
    sys.force_jacobian_at(z, zdot, {dz.data(), static_cast<std::size_t>(dz.size())},
                          {dv.data(), static_cast<std::size_t>(dv.size())});
    DenseMatrix J = DenseMatrix::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n).setIdentity();
    J.bottomLeftCorner(n, n) = -m_inv * (sys.K0 + sys.Theta0 * dz);
    J.bottomRightCorner(n, n) = -m_inv * (sys.D0 + sys.Theta0 * dv);
    return J;
}

DenseMatrix transition(const models::SecondOrderSystem& sys, const TorusTrajectory& traj, std::span<const double> tau0,
                       double duration, int steps, std::vector<DenseMatrix>* partials, int stride) {
    const auto d = static_cast<Eigen::Index>(traj.specs.size());
    if (steps < 1 || stride < 1) fail(ErrorCode::InvalidArgument, "transition needs positive step counts");
    if (static_cast<Eigen::Index>(tau0.size()) != d) fail(ErrorCode::ShapeError, "start angle per torus dimension expected");
    const double h = duration / steps;
    DenseMatrix taus(steps + 1, d);
    for (int e = 0; e <= steps; ++e) {
        for (Eigen::Index k = 0; k < d; ++k) {
            taus(e, k) = basis::wrap_angle(tau0[static_cast<std::size_t>(k)] + traj.omega[static_cast<std::size_t>(k)] * e * h);
        }
    }
    DenseMatrix zs, vs;
    vcf::synthesize(traj.specs, traj.n, traj.zd, traj.omega, taus, zs, &vs);
    const DenseMatrix m_inv = sys.M0.inverse();
    const int n = traj.n;
    auto jac = [&](int e) {
        const Vector z = zs.row(e).transpose(), v = vs.row(e).transpose();
        return state_jacobian(sys, m_inv, {z.data(), static_cast<std::size_t>(n)}, {v.data(), static_cast<std::size_t>(n)});
    };
    DenseMatrix psi = DenseMatrix::Identity(2 * n, 2 * n);
    if (partials) {
        partials->clear();
        partials->push_back(psi);
    }
    DenseMatrix j0 = jac(0);
    for (int e = 0; e < steps; ++e) {
        DenseMatrix j1 = jac(e + 1);
        const DenseMatrix a = (0.5 * h) * (j0 + j1);
        psi = DenseMatrix(a.exp()) * psi;
        j0 = std::move(j1);
        if (partials && (e + 1) % stride == 0) partials->push_back(psi);
    }
    if (!psi.allFinite()) fail(ErrorCode::NumericalBlowup, "transition matrix is not finite");
    return psi;
}

DenseMatrix monodromy(const models::SecondOrderSystem& sys, const TorusTrajectory& traj, int steps) {
    const std::vector<double> tau0(traj.specs.size(), 0.0);
    return transition(sys, traj, tau0, kTwoPi / traj.omega.at(0), steps);
}

std::vector<std::complex<double>> multipliers(const DenseMatrix& m) {
    Eigen::EigenSolver<DenseMatrix> es(m, false);
    if (es.info() != Eigen::Success) fail(ErrorCode::NumericalBlowup, "eigenvalue computation failed");
    std::vector<std::complex<double>> mu(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(mu.begin(), mu.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    return mu;
}

std::string to_string(Bifurcation b) {
    switch (b) {
        case Bifurcation::NS: return "NS";
        case Bifurcation::SN: return "SN";
        case Bifurcation::None: break;
    }
    return "";
}

FloquetReport classify_floquet(std::vector<std::complex<double>> mu, double tol) {
    if (mu.empty()) fail(ErrorCode::InvalidArgument, "no multipliers to classify");
    FloquetReport r;
    for (const auto& m : mu) {
        const double a = std::abs(m);
        r.max_modulus = std::max(r.max_modulus, a);
        const bool complex = std::abs(m.imag()) > 1e-10 * std::max(1.0, a);
        if (complex && a > 1.0 + tol) ++r.complex_outside;
        if (!complex && m.real() > 1.0 + tol) ++r.real_outside;
    }
    r.verdict = r.max_modulus <= 1.0 + tol ? vcf::Stability::Stable : vcf::Stability::Unstable;
    r.multipliers = std::move(mu);
    return r;
}

Bifurcation bifurcation_between(const FloquetReport& previous, const FloquetReport& current) {
    if (current.complex_outside != previous.complex_outside) return Bifurcation::NS;
    if (current.real_outside != previous.real_outside) return Bifurcation::SN;
    return Bifurcation::None;
}

NsSeed ns_torus_init(const models::SecondOrderSystem& sys, const TorusTrajectory& periodic,
                     const basis::BasisSpec& spec1, const basis::BasisSpec& spec2, int steps, double epsilon,
                     double unit_tol) {
    if (periodic.specs.size() != 1) fail(ErrorCode::InvalidArgument, "NS initialization needs a periodic (d=1) solution");
    const int n = periodic.n;
    const int S1 = spec1.S, S2 = spec2.S;
    const int stride = (std::max(steps, S1) + S1 - 1) / S1;
    const double T1 = kTwoPi / periodic.omega[0];
    std::vector<DenseMatrix> partials;
    const std::vector<double> tau0{0.0};
    const DenseMatrix M = transition(sys, periodic, tau0, T1, stride * S1, &partials, stride);

    Eigen::EigenSolver<DenseMatrix> es(M, true);
    if (es.info() != Eigen::Success) fail(ErrorCode::NumericalBlowup, "eigenvalue computation failed");
    Eigen::Index best = -1;
    double best_gap = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const auto mu = es.eigenvalues()(k);
        if (mu.imag() <= 1e-10) continue;
        const double gap = std::abs(std::abs(mu) - 1.0);
        if (best < 0 || gap < best_gap) {
            best = k;
            best_gap = gap;
        }
    }
    if (best < 0 || best_gap > unit_tol) {
        fail(ErrorCode::NotAnNSPoint, "no complex multiplier pair near the unit circle");
    }
    NsSeed seed;
    seed.multiplier = es.eigenvalues()(best);
    seed.alpha = std::arg(seed.multiplier);  // in (0, pi]
    Eigen::VectorXcd v0 = es.eigenvectors().col(best);
    v0.normalize();

    DenseMatrix taus(S1, 1);
    for (int k = 0; k < S1; ++k) taus(k, 0) = kTwoPi * k / S1;
    DenseMatrix xp;
    vcf::synthesize(periodic.specs, n, periodic.zd, {}, taus, xp);

    // displacement part of x_p + eps (cos tau2 Re v - sin tau2 Im v), (dof, s1, s2) order
    Vector grid(static_cast<Eigen::Index>(n) * S1 * S2);
    for (int k = 0; k < S1; ++k) {
        const std::complex<double> rot = std::polar(1.0, -seed.alpha * k / S1);
        const Eigen::VectorXcd v = rot * (partials[static_cast<std::size_t>(k)].cast<std::complex<double>>() * v0);
        for (int s = 0; s < S2; ++s) {
            const double t2 = kTwoPi * s / S2;
            for (int a = 0; a < n; ++a) {
                grid(a + n * (k + S1 * s)) = xp(k, a) + epsilon * (std::cos(t2) * v(a).real() - std::sin(t2) * v(a).imag());
            }
        }
    }
    const aus::AusTransform tf(n, {spec1, spec2});
    seed.zd = tf.stu1(grid);
    seed.omega = {periodic.omega[0], seed.alpha / T1};
    return seed;
}

LyapunovReport lyapunov_exponents(const models::SecondOrderSystem& sys, const TorusTrajectory& torus,
                                  const LyapunovOptions& opt) {
    const int d = static_cast<int>(torus.specs.size());
    if (opt.j < 0 || opt.j >= d) fail(ErrorCode::InvalidArgument, "stroboscopic frequency index out of range");
    if (opt.iterations < 5 || opt.steps < 1) fail(ErrorCode::InvalidArgument, "Lyapunov iteration counts too small");
    const int dim = 2 * torus.n;
    const int count = std::clamp(opt.count, 1, dim);
    std::vector<int> others;
    for (int k = 0; k < d; ++k) {
        if (k != opt.j) others.push_back(k);
    }
    std::vector<int> Y = opt.samples;
    if (Y.empty()) {
        for (int k : others) Y.push_back(torus.specs[static_cast<std::size_t>(k)].S);
    }
    if (Y.size() != others.size()) fail(ErrorCode::InvalidArgument, "one section sample count per non-stroboscopic dimension");
    std::size_t total = 1;
    for (int y : Y) {
        if (y < 1) fail(ErrorCode::InvalidArgument, "section sample counts must be positive");
        total *= static_cast<std::size_t>(y);
    }

    const double Tj = kTwoPi / torus.omega[static_cast<std::size_t>(opt.j)];
    std::vector<DenseMatrix> psi(total);
    std::vector<double> tau(static_cast<std::size_t>(d), 0.0);
    for (std::size_t q = 0; q < total; ++q) {
        std::size_t rem = q;
        for (std::size_t a = 0; a < others.size(); ++a) {
            const auto y = static_cast<std::size_t>(Y[a]);
            tau[static_cast<std::size_t>(others[a])] = kTwoPi * static_cast<double>(rem % y) / static_cast<double>(y);
            rem /= y;
        }
        tau[static_cast<std::size_t>(opt.j)] = 0.0;
        psi[q] = transition(sys, torus, tau, Tj, opt.steps);
    }

    LyapunovReport rep;
    rep.history.reserve(static_cast<std::size_t>(opt.iterations));
    std::vector<double> logs(static_cast<std::size_t>(dim), 0.0);
    DenseMatrix Q = DenseMatrix::Identity(dim, dim);
    std::fill(tau.begin(), tau.end(), 0.0);
    std::vector<RowVector> rows(others.size());
    for (int i = 1; i <= opt.iterations; ++i) {
        for (std::size_t a = 0; a < others.size(); ++a) {
            rows[a] = basis::trig_interp_row(Y[a], tau[static_cast<std::size_t>(others[a])]);
        }
        DenseMatrix P = DenseMatrix::Zero(dim, dim);
        for (std::size_t q = 0; q < total; ++q) {
            double w = 1.0;
            std::size_t rem = q;
            for (std::size_t a = 0; a < others.size(); ++a) {
                const auto y = static_cast<std::size_t>(Y[a]);
                w *= rows[a](static_cast<Eigen::Index>(rem % y));
                rem /= y;
            }
            if (w != 0.0) P += w * psi[q];
        }
        P = P * Q;
        Eigen::HouseholderQR<DenseMatrix> qr(P);
        DenseMatrix R = qr.matrixQR().triangularView<Eigen::Upper>();
        Q = qr.householderQ();
        for (int m = 0; m < dim; ++m) {
            if (R(m, m) < 0.0) {
                R.row(m) *= -1.0;
                Q.col(m) *= -1.0;
            }
        }
        double running = 0.0;
        for (int m = 0; m < dim; ++m) {
            const double g = std::log(std::abs(R(m, m)));
            logs[static_cast<std::size_t>(m)] += g;
            if (m < count) {
                running += g;
                const double det = std::log(std::abs(R.topLeftCorner(m + 1, m + 1).determinant()));
                rep.max_volume_defect = std::max(rep.max_volume_defect, std::abs(running - det));
            }
        }
        if (!Q.allFinite() || !std::isfinite(logs[0])) fail(ErrorCode::NumericalBlowup, "Lyapunov iteration diverged");
        std::vector<double> sigma(static_cast<std::size_t>(count));
        for (int m = 0; m < count; ++m) sigma[static_cast<std::size_t>(m)] = logs[static_cast<std::size_t>(m)] / (i * Tj);
        rep.history.push_back(std::move(sigma));
        for (int k : others) {
            tau[static_cast<std::size_t>(k)] = basis::wrap_angle(tau[static_cast<std::size_t>(k)] + torus.omega[static_cast<std::size_t>(k)] * Tj);
        }
    }

    std::vector<double> all(logs.size());
    for (std::size_t m = 0; m < logs.size(); ++m) all[m] = logs[m] / (opt.iterations * Tj);
    std::sort(all.begin(), all.end(), std::greater<>());
    rep.exponents.assign(all.begin(), all.begin() + count);

    const std::size_t start = static_cast<std::size_t>(std::floor(0.8 * opt.iterations));
    rep.settled = true;
    for (int m = 0; m < count; ++m) {
        double lo = rep.history[start][static_cast<std::size_t>(m)], hi = lo;
        for (std::size_t i = start; i < rep.history.size(); ++i) {
            lo = std::min(lo, rep.history[i][static_cast<std::size_t>(m)]);
            hi = std::max(hi, rep.history[i][static_cast<std::size_t>(m)]);
        }
        if (hi - lo > opt.settle_tol) rep.settled = false;
    }
    if (rep.settled) {
        rep.verdict = rep.exponents.front() <= opt.stable_tol ? vcf::Stability::Stable : vcf::Stability::Unstable;
    }
    return rep;
}

}  // namespace qpt::stability
