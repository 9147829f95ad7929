#include "qptorus/basis.hpp"

#include "qptorus/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace qpt::basis {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double factorial(int g) {
    double r = 1.0;
    for (int k = 2; k <= g; ++k) r *= k;
    return r;
}

// Global coefficient columns touched by CO interval l, w = 0..m.
int co_column(const BasisSpec& spec, int interval, int w) { return (interval * spec.degree + w) % spec.U; }

std::vector<double> co_local_nodes(const BasisSpec& spec, int interval) {
    const double step = kTwoPi / spec.U;
    std::vector<double> nodes(static_cast<std::size_t>(spec.degree) + 1);
    for (int w = 0; w <= spec.degree; ++w) nodes[static_cast<std::size_t>(w)] = (interval * spec.degree + w) * step;
    return nodes;
}

int co_interval_of(const BasisSpec& spec, double tau) {
    const double width = kTwoPi / spec.intervals;
    auto l = static_cast<int>(std::floor(tau / width));
    return std::clamp(l, 0, spec.intervals - 1);
}

BasisMatrices build_hb(const BasisSpec& spec) {
    const int U = spec.U;
    const int S = spec.S;
    BasisMatrices b;
    b.ups0 = DenseMatrix::Identity(U, U);
    b.ups1 = DenseMatrix::Zero(U, U);
    for (std::size_t l = 0; l < spec.orders.size(); ++l) {
        const auto c = static_cast<Eigen::Index>(1 + 2 * l);
        const double u = spec.orders[l];
        b.ups1(c, c + 1) = u;
        b.ups1(c + 1, c) = -u;
    }
    b.ups2 = b.ups1 * b.ups1;
    b.gamma0.resize(S, U);
    b.gamma0inv.resize(U, S);
    for (int s = 0; s < S; ++s) {
        const double tau = kTwoPi * s / S;
        b.gamma0(s, 0) = 1.0;
        b.gamma0inv(0, s) = 1.0 / S;
        for (std::size_t l = 0; l < spec.orders.size(); ++l) {
            const auto c = static_cast<Eigen::Index>(1 + 2 * l);
            const double u = spec.orders[l];
            b.gamma0(s, c) = std::cos(u * tau);
            b.gamma0(s, c + 1) = std::sin(u * tau);
            b.gamma0inv(c, s) = 2.0 * std::cos(u * tau) / S;
            b.gamma0inv(c + 1, s) = 2.0 * std::sin(u * tau) / S;
        }
    }
    b.gamma1 = b.gamma0 * b.ups1;
    b.phase1 = b.ups1;
    b.phase2 = b.ups2;
    return b;
}

BasisMatrices build_co(const BasisSpec& spec) {
    const int U = spec.U;
    const int m = spec.degree;
    const double width = kTwoPi / spec.intervals;
    const auto gauss = gauss_legendre_nodes(m);
    DenseMatrix L0 = DenseMatrix::Zero(U, U);
    DenseMatrix L1 = DenseMatrix::Zero(U, U);
    DenseMatrix Lbar1 = DenseMatrix::Zero(U, U);
    for (int l = 0; l < spec.intervals; ++l) {
        const auto nodes = co_local_nodes(spec, l);
        for (int q = 0; q < m; ++q) {
            const double tau = l * width + 0.5 * width * (1.0 + gauss[static_cast<std::size_t>(q)]);
            const auto [val, der] = lagrange_basis(nodes, tau);
            for (int w = 0; w <= m; ++w) {
                L0(l * m + q, co_column(spec, l, w)) += val[static_cast<std::size_t>(w)];
                L1(l * m + q, co_column(spec, l, w)) += der[static_cast<std::size_t>(w)];
            }
        }
        for (int w = 0; w < m; ++w) {
            const auto [val, der] = lagrange_basis(nodes, nodes[static_cast<std::size_t>(w)]);
            for (int v = 0; v <= m; ++v) Lbar1(l * m + w, co_column(spec, l, v)) += der[static_cast<std::size_t>(v)];
        }
    }
    BasisMatrices b;
    b.ups0 = L0;
    b.ups1 = L1;
    b.ups2 = L1 * Lbar1;
    b.gamma0 = DenseMatrix::Identity(U, U);
    b.gamma0inv = DenseMatrix::Identity(U, U);
    b.gamma1 = Lbar1;
    b.phase1 = Lbar1;
    b.phase2 = Lbar1 * Lbar1;
    return b;
}

DenseMatrix circulant(const std::vector<int>& offsets, const std::vector<double>& weights, int U, double scale) {
    DenseMatrix T = DenseMatrix::Zero(U, U);
    for (int j = 0; j < U; ++j) {
        for (std::size_t p = 0; p < offsets.size(); ++p) {
            const int col = ((j + offsets[p]) % U + U) % U;
            T(j, col) += weights[p] * scale;
        }
    }
    return T;
}

BasisMatrices build_fd(const BasisSpec& spec) {
    const int U = spec.U;
    const double dtau = kTwoPi / U;
    BasisMatrices b;
    b.ups0 = DenseMatrix::Identity(U, U);
    b.ups1 = circulant(spec.stencil, fd_stencil(spec.stencil, 1), U, 1.0 / dtau);
    b.ups2 = circulant(spec.stencil, fd_stencil(spec.stencil, 2), U, 1.0 / (dtau * dtau));
    b.gamma0 = DenseMatrix::Identity(U, U);
    b.gamma0inv = DenseMatrix::Identity(U, U);
    b.gamma1 = b.ups1;
    b.phase1 = b.ups1;
    b.phase2 = b.ups2;
    return b;
}

}  // namespace

std::string to_string(BasisKind kind) {
    switch (kind) {
        case BasisKind::HB: return "HB";
        case BasisKind::CO: return "CO";
        case BasisKind::FD: return "FD";
    }
    return "?";
}

BasisKind basis_kind_from_string(const std::string& name) {
    if (name == "HB" || name == "hb") return BasisKind::HB;
    if (name == "CO" || name == "co") return BasisKind::CO;
    if (name == "FD" || name == "fd") return BasisKind::FD;
    fail(ErrorCode::InvalidArgument, "unknown basis kind '" + name + "'");
}

BasisSpec BasisSpec::harmonic(std::vector<int> orders, int S) {
    BasisSpec s;
    s.kind = BasisKind::HB;
    s.U = 2 * static_cast<int>(orders.size()) + 1;
    s.orders = std::move(orders);
    s.S = S;
    return s;
}

BasisSpec BasisSpec::harmonic_upto(int N, int S) {
    std::vector<int> orders(static_cast<std::size_t>(std::max(N, 0)));
    for (int k = 0; k < N; ++k) orders[static_cast<std::size_t>(k)] = k + 1;
    return harmonic(std::move(orders), S);
}

BasisSpec BasisSpec::collocation(int intervals, int degree) {
    BasisSpec s;
    s.kind = BasisKind::CO;
    s.intervals = intervals;
    s.degree = degree;
    s.U = intervals * degree;
    s.S = s.U;
    return s;
}

BasisSpec BasisSpec::finite_difference(std::vector<int> stencil, int U) {
    BasisSpec s;
    s.kind = BasisKind::FD;
    s.stencil = std::move(stencil);
    s.U = U;
    s.S = U;
    return s;
}

void BasisSpec::validate() const {
    switch (kind) {
        case BasisKind::HB: {
            if (orders.empty()) fail(ErrorCode::InvalidArgument, "HB basis needs at least one harmonic order");
            for (std::size_t k = 0; k < orders.size(); ++k) {
                if (orders[k] <= 0 || (k > 0 && orders[k] <= orders[k - 1])) {
                    fail(ErrorCode::InvalidArgument, "HB orders must be positive and strictly increasing");
                }
            }
            if (U != 2 * static_cast<int>(orders.size()) + 1) {
                fail(ErrorCode::InvalidArgument, "HB basis requires U = 2N + 1");
            }
            if (S < U || 2 * orders.back() >= S) {
                fail(ErrorCode::AliasingError, "HB grid of S=" + std::to_string(S) + " points cannot resolve order " +
                                                   std::to_string(orders.back()) + " with U=" + std::to_string(U));
            }
            break;
        }
        case BasisKind::CO:
            if (intervals < 1 || degree < 1) fail(ErrorCode::InvalidArgument, "CO basis needs P >= 1 and m >= 1");
            if (U != intervals * degree || S != U) fail(ErrorCode::InvalidArgument, "CO basis requires U = S = P*m");
            break;
        case BasisKind::FD: {
            if (S != U) fail(ErrorCode::InvalidArgument, "FD basis requires S = U");
            std::set<int> distinct(stencil.begin(), stencil.end());
            if (distinct.size() != stencil.size()) fail(ErrorCode::StencilError, "FD stencil offsets must be distinct");
            if (!distinct.contains(0)) fail(ErrorCode::StencilError, "FD stencil must contain offset 0");
            if (stencil.size() < 3) fail(ErrorCode::StencilError, "FD stencil needs at least 3 offsets");
            if (static_cast<int>(stencil.size()) > U) fail(ErrorCode::StencilError, "FD stencil longer than U");
            break;
        }
    }
}

std::string BasisSpec::describe() const {
    std::ostringstream os;
    os << to_string(kind) << "(U=" << U << ", S=" << S;
    if (kind == BasisKind::HB) os << ", N=" << orders.size();
    if (kind == BasisKind::CO) os << ", P=" << intervals << ", m=" << degree;
    if (kind == BasisKind::FD) {
        os << ", K=[";
        for (std::size_t k = 0; k < stencil.size(); ++k) os << (k ? "," : "") << stencil[k];
        os << "]";
    }
    os << ")";
    return os.str();
}

BasisMatrices build(const BasisSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case BasisKind::HB: return build_hb(spec);
        case BasisKind::CO: return build_co(spec);
        case BasisKind::FD: return build_fd(spec);
    }
    fail(ErrorCode::InvalidArgument, "unknown basis kind");
}

std::vector<double> fd_stencil(const std::vector<int>& offsets, int order) {
    const auto nk = static_cast<Eigen::Index>(offsets.size());
    if (order < 0 || nk < order + 1) fail(ErrorCode::StencilError, "stencil too short for the derivative order");
    std::set<int> distinct(offsets.begin(), offsets.end());
    if (static_cast<Eigen::Index>(distinct.size()) != nk) fail(ErrorCode::StencilError, "duplicate stencil offsets");
    DenseMatrix A(nk, nk);
    for (Eigen::Index r = 0; r < nk; ++r) {
        for (Eigen::Index c = 0; c < nk; ++c) A(r, c) = std::pow(static_cast<double>(offsets[static_cast<std::size_t>(c)]), static_cast<double>(r));
    }
    Vector rhs = Vector::Zero(nk);
    rhs(order) = factorial(order);
    Eigen::FullPivLU<DenseMatrix> lu(A);
    if (!lu.isInvertible()) fail(ErrorCode::StencilError, "singular Vandermonde system");
    Vector alpha = lu.solve(rhs);
    return {alpha.data(), alpha.data() + alpha.size()};
}

std::pair<std::vector<double>, std::vector<double>> lagrange_basis(const std::vector<double>& nodes, double tau) {
    const std::size_t n = nodes.size();
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (nodes[a] == nodes[b]) fail(ErrorCode::StencilError, "duplicate Lagrange nodes");
        }
    }
    std::vector<double> values(n, 1.0), derivs(n, 0.0);
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t o = 0; o < n; ++o) {
            if (o != w) values[w] *= (tau - nodes[o]) / (nodes[w] - nodes[o]);
        }
        for (std::size_t o = 0; o < n; ++o) {
            if (o == w) continue;
            double term = 1.0 / (nodes[w] - nodes[o]);
            for (std::size_t p = 0; p < n; ++p) {
                if (p != w && p != o) term *= (tau - nodes[p]) / (nodes[w] - nodes[p]);
            }
            derivs[w] += term;
        }
    }
    return {values, derivs};
}

std::vector<double> gauss_legendre_nodes(int count) { return gauss_legendre(count, -1.0, 1.0).first; }

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int count, double a, double b) {
    if (count < 1) fail(ErrorCode::InvalidArgument, "Gauss-Legendre needs at least one node");
    // Golub-Welsch: eigen-decomposition of the Jacobi matrix.
    DenseMatrix J = DenseMatrix::Zero(count, count);
    for (int k = 1; k < count; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = beta;
        J(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(J);
    std::vector<double> x(static_cast<std::size_t>(count)), w(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double v0 = eig.eigenvectors()(0, k);
        x[static_cast<std::size_t>(k)] = 0.5 * (a + b) + 0.5 * (b - a) * eig.eigenvalues()(k);
        w[static_cast<std::size_t>(k)] = (b - a) * v0 * v0;
    }
    return {x, w};
}

double wrap_angle(double tau) {
    double r = std::fmod(tau, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

RowVector trig_interp_row(int count, double tau) {
    RowVector row(count);
    const int half = count / 2;
    const bool even = count % 2 == 0;
    const int kmax = even ? half - 1 : half;
    for (int q = 0; q < count; ++q) {
        const double theta = tau - kTwoPi * q / count;
        double v = 1.0;
        for (int k = 1; k <= kmax; ++k) v += 2.0 * std::cos(k * theta);
        if (even) v += std::cos(half * theta);
        row(q) = v / count;
    }
    return row;
}

RowVector trig_interp_row_derivative(int count, double tau) {
    RowVector row(count);
    const int half = count / 2;
    const bool even = count % 2 == 0;
    const int kmax = even ? half - 1 : half;
    for (int q = 0; q < count; ++q) {
        const double theta = tau - kTwoPi * q / count;
        double v = 0.0;
        for (int k = 1; k <= kmax; ++k) v -= 2.0 * k * std::sin(k * theta);
        if (even) v -= half * std::sin(half * theta);
        row(q) = v / count;
    }
    return row;
}

RowVector synthesize_row(const BasisSpec& spec, double tau) {
    tau = wrap_angle(tau);
    switch (spec.kind) {
        case BasisKind::HB: {
            RowVector row(spec.U);
            row(0) = 1.0;
            for (std::size_t l = 0; l < spec.orders.size(); ++l) {
                row(static_cast<Eigen::Index>(1 + 2 * l)) = std::cos(spec.orders[l] * tau);
                row(static_cast<Eigen::Index>(2 + 2 * l)) = std::sin(spec.orders[l] * tau);
            }
            return row;
        }
        case BasisKind::CO: {
            RowVector row = RowVector::Zero(spec.U);
            const int l = co_interval_of(spec, tau);
            const auto [val, der] = lagrange_basis(co_local_nodes(spec, l), tau);
            for (int w = 0; w <= spec.degree; ++w) row(co_column(spec, l, w)) += val[static_cast<std::size_t>(w)];
            return row;
        }
        case BasisKind::FD: return trig_interp_row(spec.U, tau);
    }
    return {};
}

RowVector synthesize_row_derivative(const BasisSpec& spec, double tau) {
    tau = wrap_angle(tau);
    switch (spec.kind) {
        case BasisKind::HB: {
            RowVector row = RowVector::Zero(spec.U);
            for (std::size_t l = 0; l < spec.orders.size(); ++l) {
                const double u = spec.orders[l];
                row(static_cast<Eigen::Index>(1 + 2 * l)) = -u * std::sin(u * tau);
                row(static_cast<Eigen::Index>(2 + 2 * l)) = u * std::cos(u * tau);
            }
            return row;
        }
        case BasisKind::CO: {
            RowVector row = RowVector::Zero(spec.U);
            const int l = co_interval_of(spec, tau);
            const auto [val, der] = lagrange_basis(co_local_nodes(spec, l), tau);
            for (int w = 0; w <= spec.degree; ++w) row(co_column(spec, l, w)) += der[static_cast<std::size_t>(w)];
            return row;
        }
        case BasisKind::FD: return trig_interp_row_derivative(spec.U, tau);
    }
    return {};
}

}  // namespace qpt::basis
