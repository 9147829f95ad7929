#include "qptorus/models.hpp"

#include "qptorus/basis.hpp"
#include "qptorus/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qpt::models {

void Excitation::omega_derivative(std::span<const double>, std::span<const double>, int,
                                  std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
}

void SecondOrderSystem::validate() const {
    if (n < 1) fail(ErrorCode::InvalidArgument, "system needs at least one DOF");
    for (const DenseMatrix* m : {&M0, &D0, &K0, &Theta0}) {
        if (m->rows() != n || m->cols() != n) fail(ErrorCode::ShapeError, "system matrices must be n x n");
    }
    if (output.size() != n) fail(ErrorCode::ShapeError, "output vector must have n entries");
    Eigen::FullPivLU<DenseMatrix> lu(M0);
    if (!lu.isInvertible()) fail(ErrorCode::InvalidArgument, "mass matrix is singular");
}

void SecondOrderSystem::force_at(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const {
    if (force) {
        force->evaluate(z, zdot, f);
    } else {
        std::fill(f.begin(), f.end(), 0.0);
    }
}

void SecondOrderSystem::force_jacobian_at(std::span<const double> z, std::span<const double> zdot,
                                          std::span<double> dfdz, std::span<double> dfdzdot) const {
    if (force) {
        force->jacobian(z, zdot, dfdz, dfdzdot);
    } else {
        std::fill(dfdz.begin(), dfdz.end(), 0.0);
        std::fill(dfdzdot.begin(), dfdzdot.end(), 0.0);
    }
}

void SecondOrderSystem::excitation_at(std::span<const double> tau, std::span<const double> omega,
                                      std::span<double> out) const {
    if (excitation) {
        excitation->evaluate(tau, omega, out);
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
}

// ---------------------------------------------------------------------------

LinearForce::LinearForce(DenseMatrix A, DenseMatrix B) : A_(std::move(A)), B_(std::move(B)) {
    if (A_.rows() != A_.cols() || B_.rows() != B_.cols() || A_.rows() != B_.rows()) {
        fail(ErrorCode::ShapeError, "LinearForce needs two square matrices of equal size");
    }
}

void LinearForce::evaluate(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const {
    const auto n = A_.rows();
    Eigen::Map<const Vector> x(z.data(), n), v(zdot.data(), n);
    Eigen::Map<Vector> out(f.data(), n);
    out.noalias() = A_ * x + B_ * v;
}

void LinearForce::jacobian(std::span<const double>, std::span<const double>, std::span<double> dfdz,
                           std::span<double> dfdzdot) const {
    std::copy(A_.data(), A_.data() + A_.size(), dfdz.begin());
    std::copy(B_.data(), B_.data() + B_.size(), dfdzdot.begin());
}

void DuffingVdpForce::evaluate(std::span<const double> z, std::span<const double> zdot, std::span<double> f) const {
    const double x = z[0];
    f[0] = mu_ * x * x * zdot[0] + alpha_ * x * x * x;
}

void DuffingVdpForce::jacobian(std::span<const double> z, std::span<const double> zdot, std::span<double> dfdz,
                               std::span<double> dfdzdot) const {
    const double x = z[0];
    dfdz[0] = 2.0 * mu_ * x * zdot[0] + 3.0 * alpha_ * x * x;
    dfdzdot[0] = mu_ * x * x;
}

void CubicSpringForce::evaluate(std::span<const double> z, std::span<const double>, std::span<double> f) const {
    std::fill(f.begin(), f.end(), 0.0);
    const double x = z[static_cast<std::size_t>(dof_)];
    f[static_cast<std::size_t>(dof_)] = k_ * x * x * x;
}

void CubicSpringForce::jacobian(std::span<const double> z, std::span<const double>, std::span<double> dfdz,
                                std::span<double> dfdzdot) const {
    std::fill(dfdz.begin(), dfdz.end(), 0.0);
    std::fill(dfdzdot.begin(), dfdzdot.end(), 0.0);
    const auto d = static_cast<std::size_t>(dof_);
    const double x = z[d];
    dfdz[d + static_cast<std::size_t>(n_) * d] = 3.0 * k_ * x * x;
}

CubicTensorForce::CubicTensorForce(int n, std::vector<double> a, std::vector<double> b, std::vector<double> c)
    : n_(n), a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    const auto size = static_cast<std::size_t>(n) * n * n * n;
    if (a_.size() != size || b_.size() != size || c_.size() != size) {
        fail(ErrorCode::ShapeError, "cubic coefficient tensors must have n^4 entries");
    }
}

void CubicTensorForce::evaluate(std::span<const double> q, std::span<const double> qd, std::span<double> f) const {
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int l = 0; l < n_; ++l) {
            for (int k = 0; k < n_; ++k) {
                for (int j = 0; j < n_; ++j) {
                    const std::size_t p = at(i, j, k, l);
                    s += a_[p] * q[j] * q[k] * q[l] + b_[p] * q[j] * q[k] * qd[l] + c_[p] * q[j] * qd[k] * qd[l];
                }
            }
        }
        f[static_cast<std::size_t>(i)] = s;
    }
}

void CubicTensorForce::jacobian(std::span<const double> q, std::span<const double> qd, std::span<double> dfdz,
                                std::span<double> dfdzdot) const {
    std::fill(dfdz.begin(), dfdz.end(), 0.0);
    std::fill(dfdzdot.begin(), dfdzdot.end(), 0.0);
    const auto n = static_cast<std::size_t>(n_);
    for (int i = 0; i < n_; ++i) {
        for (int l = 0; l < n_; ++l) {
            for (int k = 0; k < n_; ++k) {
                for (int j = 0; j < n_; ++j) {
                    const std::size_t p = at(i, j, k, l);
                    const auto ii = static_cast<std::size_t>(i);
                    const auto jj = static_cast<std::size_t>(j);
                    const auto kk = static_cast<std::size_t>(k);
                    const auto ll = static_cast<std::size_t>(l);
                    // a q_j q_k q_l
                    dfdz[ii + n * jj] += a_[p] * q[k] * q[l];
                    dfdz[ii + n * kk] += a_[p] * q[j] * q[l];
                    dfdz[ii + n * ll] += a_[p] * q[j] * q[k];
                    // b q_j q_k qd_l
                    dfdz[ii + n * jj] += b_[p] * q[k] * qd[l];
                    dfdz[ii + n * kk] += b_[p] * q[j] * qd[l];
                    dfdzdot[ii + n * ll] += b_[p] * q[j] * q[k];
                    // c q_j qd_k qd_l
                    dfdz[ii + n * jj] += c_[p] * qd[k] * qd[l];
                    dfdzdot[ii + n * kk] += c_[p] * q[j] * qd[l];
                    dfdzdot[ii + n * ll] += c_[p] * q[j] * qd[k];
                }
            }
        }
    }
}

CosineExcitation::CosineExcitation(std::vector<Vector> amplitudes, int omega_power)
    : amplitudes_(std::move(amplitudes)), power_(omega_power) {
    for (const auto& a : amplitudes_) {
        if (a.size() != amplitudes_.front().size()) fail(ErrorCode::ShapeError, "excitation amplitudes differ in length");
    }
}

void CosineExcitation::evaluate(std::span<const double> tau, std::span<const double> omega,
                                std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < amplitudes_.size(); ++i) {
        const double scale = std::cos(tau[i]) * (power_ == 0 ? 1.0 : std::pow(omega[i], power_));
        for (Eigen::Index r = 0; r < amplitudes_[i].size(); ++r) out[static_cast<std::size_t>(r)] += scale * amplitudes_[i](r);
    }
}

void CosineExcitation::omega_derivative(std::span<const double> tau, std::span<const double> omega, int i,
                                        std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const auto ii = static_cast<std::size_t>(i);
    if (power_ == 0 || ii >= amplitudes_.size()) return;
    const double scale = std::cos(tau[ii]) * power_ * std::pow(omega[ii], power_ - 1);
    for (Eigen::Index r = 0; r < amplitudes_[ii].size(); ++r) out[static_cast<std::size_t>(r)] = scale * amplitudes_[ii](r);
}

// ---------------------------------------------------------------------------

SecondOrderSystem duffing_vdp(double mu, double alpha, double omega0, const std::vector<double>& forcing) {
    if (forcing.empty() || forcing.size() > 3) {
        fail(ErrorCode::InvalidArgument, "Duffing-van der Pol takes 1 to 3 forcing amplitudes");
    }
    SecondOrderSystem sys;
    sys.name = "duffing_vdp";
    sys.n = 1;
    sys.M0 = DenseMatrix::Identity(1, 1);
    sys.D0 = DenseMatrix::Constant(1, 1, -mu);
    sys.K0 = DenseMatrix::Constant(1, 1, omega0 * omega0);
    sys.Theta0 = DenseMatrix::Identity(1, 1);
    sys.force = std::make_shared<DuffingVdpForce>(mu, alpha);
    std::vector<Vector> amps;
    for (double f : forcing) amps.push_back(Vector::Constant(1, f));
    sys.excitation = std::make_shared<CosineExcitation>(std::move(amps));
    sys.output = Vector::Ones(1);
    return sys;
}

SecondOrderSystem beam_system(const BeamParameters& p) {
    if (p.elements < 1) fail(ErrorCode::InvalidArgument, "beam needs at least one element");
    const int ne = p.elements;
    const double area = p.width * p.height;
    const double inertia = p.width * p.height * p.height * p.height / 12.0;
    const double le = p.length / ne;
    const double ei = p.youngs * inertia;
    const double rho_a = p.density * area;

    Eigen::Matrix4d ke;
    ke << 12, 6 * le, -12, 6 * le,
          6 * le, 4 * le * le, -6 * le, 2 * le * le,
          -12, -6 * le, 12, -6 * le,
          6 * le, 2 * le * le, -6 * le, 4 * le * le;
    ke *= ei / (le * le * le);
    Eigen::Matrix4d me;
    me << 156, 22 * le, 54, -13 * le,
          22 * le, 4 * le * le, 13 * le, -3 * le * le,
          54, 13 * le, 156, -22 * le,
          -13 * le, -3 * le * le, -22 * le, 4 * le * le;
    me *= rho_a * le / 420.0;

    const int full = 2 * (ne + 1);
    DenseMatrix Kf = DenseMatrix::Zero(full, full);
    DenseMatrix Mf = DenseMatrix::Zero(full, full);
    for (int e = 0; e < ne; ++e) {
        Kf.block(2 * e, 2 * e, 4, 4) += ke;
        Mf.block(2 * e, 2 * e, 4, 4) += me;
    }
    const int n = 2 * ne;
    const int tip = n - 2;  // transverse displacement at the free end
    SecondOrderSystem sys;
    sys.name = "beam";
    sys.n = n;
    sys.M0 = Mf.bottomRightCorner(n, n);
    const DenseMatrix Kb = Kf.bottomRightCorner(n, n);
    sys.K0 = Kb;
    sys.K0(tip, tip) += p.k_linear;
    sys.D0 = p.alpha * sys.M0 + p.beta * Kb;
    sys.Theta0 = DenseMatrix::Identity(n, n);
    sys.force = std::make_shared<CubicSpringForce>(n, tip, p.k_cubic);

    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> eig(sys.K0, sys.M0);
    if (eig.info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "beam eigenproblem failed");
    const double w1 = std::sqrt(eig.eigenvalues()(0));
    Vector phi = eig.eigenvectors().col(0);  // mass-normalized
    if (phi(tip) < 0.0) phi = -phi;
    std::vector<Vector> amps{p.excitation * w1 * w1 * (sys.M0 * phi)};
    sys.excitation = std::make_shared<CosineExcitation>(std::move(amps));
    sys.output = Vector::Zero(n);
    sys.output(tip) = 1.0;
    sys.info["omega_l1"] = w1;
    sys.info["tip_dof"] = tip;
    return sys;
}

// ---------------------------------------------------------------------------
// Cantilever modes

std::vector<double> cantilever_eigenvalues(int count) {
    std::vector<double> roots;
    for (int r = 1; r <= count; ++r) {
        // The r-th root sits within 0.4 of (r - 1/2) pi, alternating sides.
        double a = (r - 0.5) * std::numbers::pi - 0.4;
        double b = (r - 0.5) * std::numbers::pi + 0.4;
        auto g = [](double x) { return std::cos(x) + 1.0 / std::cosh(x); };  // same roots, bounded
        double ga = g(a);
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            const double gm = g(m);
            if ((gm < 0) == (ga < 0)) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        roots.push_back(0.5 * (a + b));
    }
    return roots;
}

double cantilever_mode(double lambda, double xi, int derivative) {
    // phi = cosh(lx) - cos(lx) - s (sinh(lx) - sin(lx)) with
    // s = (sinh l - sin l) / (cosh l + cos l). The hyperbolic part is
    // rewritten as 0.5 e^{x}(1 - s) + 0.5 e^{-x}(1 + s) to avoid cancellation.
    const double l = lambda;
    const double den = std::cosh(l) + std::cos(l);
    const double s = (std::sinh(l) - std::sin(l)) / den;
    // 1 - s = (cosh l + cos l - sinh l + sin l) / den = (e^{-l} + cos l + sin l) / den
    const double one_minus_s = (std::exp(-l) + std::cos(l) + std::sin(l)) / den;
    const double x = l * xi;
    const double ep = 0.5 * std::exp(x) * one_minus_s;
    const double em = 0.5 * std::exp(-x) * (1.0 + s);
    const double c = std::cos(x);
    const double sn = std::sin(x);
    double v = 0.0;
    switch (derivative) {
        case 0: v = ep + em - c + s * sn; break;
        case 1: v = ep - em + sn + s * c; break;
        case 2: v = ep + em + c - s * sn; break;
        case 3: v = ep - em - sn - s * c; break;
        case 4: v = ep + em - c + s * sn; break;
        default: fail(ErrorCode::InvalidArgument, "cantilever_mode supports derivatives 0..4");
    }
    return v * std::pow(l, derivative);
}

SecondOrderSystem pipe_system(const PipeParameters& p) {
    if (p.modes < 1) fail(ErrorCode::InvalidArgument, "pipe needs at least one mode");
    if (p.quadrature_points < 8) fail(ErrorCode::InvalidArgument, "pipe quadrature needs at least 8 points");
    const int n = p.modes;
    const auto lam = cantilever_eigenvalues(n);
    const auto [xs, ws] = basis::gauss_legendre(p.quadrature_points, 0.0, 1.0);
    const std::size_t nq = xs.size();

    // phi[d](q, j): derivative d of mode j at node q
    std::vector<DenseMatrix> phi(5, DenseMatrix(static_cast<Eigen::Index>(nq), n));
    for (int d = 0; d <= 4; ++d) {
        for (std::size_t q = 0; q < nq; ++q) {
            for (int j = 0; j < n; ++j) phi[static_cast<std::size_t>(d)](static_cast<Eigen::Index>(q), j) = cantilever_mode(lam[static_cast<std::size_t>(j)], xs[q], d);
        }
    }
    auto integrate = [&](auto&& f) {
        double s = 0.0;
        for (std::size_t q = 0; q < nq; ++q) s += ws[q] * f(static_cast<Eigen::Index>(q));
        return s;
    };
    const DenseMatrix& P0 = phi[0];
    const DenseMatrix& P1 = phi[1];
    const DenseMatrix& P2 = phi[2];
    const DenseMatrix& P3 = phi[3];
    const DenseMatrix& P4 = phi[4];

    const double u = p.flow_velocity;
    const double sqb = std::sqrt(p.mass_ratio);
    SecondOrderSystem sys;
    sys.name = "pipe";
    sys.n = n;
    sys.M0 = DenseMatrix::Identity(n, n);
    sys.D0 = DenseMatrix::Zero(n, n);
    sys.K0 = DenseMatrix::Zero(n, n);
    Vector g(n);
    for (int i = 0; i < n; ++i) {
        g(i) = integrate([&](Eigen::Index q) { return P0(q, i); });
        const double l4 = std::pow(lam[static_cast<std::size_t>(i)], 4);
        for (int j = 0; j < n; ++j) {
            const double bij = integrate([&](Eigen::Index q) { return P0(q, i) * P1(q, j); });
            const double cij = integrate([&](Eigen::Index q) { return P0(q, i) * P2(q, j); });
            const double dij = integrate([&](Eigen::Index q) { return xs[static_cast<std::size_t>(q)] * P0(q, i) * P2(q, j); });
            sys.D0(i, j) = 2.0 * sqb * u * bij + (i == j ? p.kelvin_voigt * l4 : 0.0);
            sys.K0(i, j) = (i == j ? l4 : 0.0) + (u * u - p.gravity) * cij + p.gravity * (dij + bij);
        }
    }
    sys.Theta0 = DenseMatrix::Identity(n, n);

    // Velocity-squared inertia terms need G(xi) = int_xi^1 int_0^s f(r) dr ds
    // = int_0^1 f(r) (1 - max(r, xi)) dr and H(xi) = int_0^xi f(r) dr with
    // f = phi_k' phi_l'. Both are smooth in xi, evaluated with split rules.
    const int nsub = std::max(16, p.quadrature_points / 4);
    const auto [sx, sw] = basis::gauss_legendre(nsub, 0.0, 1.0);
    std::vector<Vector> Hv(static_cast<std::size_t>(n * n), Vector(static_cast<Eigen::Index>(nq)));
    std::vector<Vector> Gv(static_cast<std::size_t>(n * n), Vector(static_cast<Eigen::Index>(nq)));
    for (std::size_t q = 0; q < nq; ++q) {
        const double xi = xs[q];
        for (int k = 0; k < n; ++k) {
            for (int l = 0; l < n; ++l) {
                double h = 0.0, gi = 0.0;
                for (int r = 0; r < nsub; ++r) {
                    // [0, xi]: weight (1 - xi)
                    const double a = xi * sx[static_cast<std::size_t>(r)];
                    const double fa = cantilever_mode(lam[static_cast<std::size_t>(k)], a, 1) * cantilever_mode(lam[static_cast<std::size_t>(l)], a, 1);
                    h += xi * sw[static_cast<std::size_t>(r)] * fa;
                    // [xi, 1]: weight (1 - r)
                    const double b = xi + (1.0 - xi) * sx[static_cast<std::size_t>(r)];
                    const double fb = cantilever_mode(lam[static_cast<std::size_t>(k)], b, 1) * cantilever_mode(lam[static_cast<std::size_t>(l)], b, 1);
                    gi += (1.0 - xi) * sw[static_cast<std::size_t>(r)] * fb * (1.0 - b);
                }
                gi += (1.0 - xi) * h;
                Hv[static_cast<std::size_t>(k + n * l)](static_cast<Eigen::Index>(q)) = h;
                Gv[static_cast<std::size_t>(k + n * l)](static_cast<Eigen::Index>(q)) = gi;
            }
        }
    }

    const auto n4 = static_cast<std::size_t>(n) * n * n * n;
    std::vector<double> a(n4, 0.0), b(n4, 0.0), c(n4, 0.0);
    auto idx = [n](int i, int j, int k, int l) {
        return static_cast<std::size_t>(i + n * (j + n * (k + n * l)));
    };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                for (int l = 0; l < n; ++l) {
                    const std::size_t id = idx(i, j, k, l);
                    a[id] = integrate([&](Eigen::Index q) {
                        return P0(q, i) * (P4(q, j) * P1(q, k) * P1(q, l) + 4.0 * P1(q, j) * P2(q, k) * P3(q, l) +
                                           P2(q, j) * P2(q, k) * P2(q, l) + u * u * P2(q, j) * P1(q, k) * P1(q, l));
                    });
                    b[id] = 2.0 * sqb * u * integrate([&](Eigen::Index q) { return P0(q, i) * P1(q, j) * P1(q, k) * P1(q, l); });
                    const auto& G = Gv[static_cast<std::size_t>(k + n * l)];
                    const auto& Hh = Hv[static_cast<std::size_t>(k + n * l)];
                    c[id] = integrate([&](Eigen::Index q) { return P0(q, i) * (P2(q, j) * G(q) - P1(q, j) * Hh(q)); });
                }
            }
        }
    }
    sys.force = std::make_shared<CubicTensorForce>(n, std::move(a), std::move(b), std::move(c));
    std::vector<Vector> amps{p.excitation * g};
    sys.excitation = std::make_shared<CosineExcitation>(std::move(amps), 2);
    sys.output = Vector(n);
    for (int j = 0; j < n; ++j) sys.output(j) = cantilever_mode(lam[static_cast<std::size_t>(j)], 1.0, 0);
    sys.info["flow_velocity"] = u;
    return sys;
}

}  // namespace qpt::models
