#include "qptorus/aus.hpp"

#include "qptorus/error.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace qpt::aus {

namespace {

using tensorkit::mode_product;

std::vector<std::size_t> reversed_axes(std::size_t count) {
    std::vector<std::size_t> perm(count);
    for (std::size_t k = 0; k < count; ++k) perm[k] = count - 1 - k;
    return perm;
}

}  // namespace

DenseMatrix sgrid(const std::vector<basis::BasisSpec>& specs) {
    const std::size_t d = specs.size();
    std::size_t total = 1;
    for (const auto& s : specs) total *= static_cast<std::size_t>(s.S);
    DenseMatrix grid(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(d));
    for (std::size_t g = 0; g < total; ++g) {
        std::size_t rem = g;
        for (std::size_t i = 0; i < d; ++i) {
            const auto S = static_cast<std::size_t>(specs[i].S);
            grid(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(i)) =
                2.0 * std::numbers::pi * static_cast<double>(rem % S) / static_cast<double>(S);
            rem /= S;
        }
    }
    return grid;
}

AusTransform::AusTransform(int n, std::vector<basis::BasisSpec> specs) : AusTransform(n, specs, {}) {}

AusTransform::AusTransform(int n, std::vector<basis::BasisSpec> specs, std::vector<basis::BasisMatrices> mats)
    : n_(n), specs_(std::move(specs)), mats_(std::move(mats)) {
    if (n_ < 1) fail(ErrorCode::InvalidArgument, "AUS needs n >= 1");
    if (specs_.empty()) fail(ErrorCode::InvalidArgument, "AUS needs at least one torus dimension");
    if (mats_.empty()) {
        for (const auto& s : specs_) mats_.push_back(basis::build(s));
    }
    if (mats_.size() != specs_.size()) fail(ErrorCode::ShapeError, "one basis matrix set per dimension expected");
    coeff_size_ = static_cast<std::size_t>(n_);
    grid_points_ = 1;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const auto& m = mats_[i];
        const auto U = static_cast<Eigen::Index>(specs_[i].U);
        const auto S = static_cast<Eigen::Index>(specs_[i].S);
        if (m.gamma0.rows() != S || m.gamma0.cols() != U || m.gamma0inv.rows() != U || m.gamma0inv.cols() != S ||
            m.gamma1.rows() != S || m.gamma1.cols() != U) {
            fail(ErrorCode::ShapeError, "basis matrices do not match their spec");
        }
        coeff_size_ *= static_cast<std::size_t>(U);
        grid_points_ *= static_cast<std::size_t>(S);
        DenseMatrix w0(U * U, S), w1(U * U, S);
        for (Eigen::Index s = 0; s < S; ++s) {
            for (Eigen::Index kp = 0; kp < U; ++kp) {
                for (Eigen::Index k = 0; k < U; ++k) {
                    w0(k + U * kp, s) = m.gamma0inv(k, s) * m.gamma0(s, kp);
                    w1(k + U * kp, s) = m.gamma0inv(k, s) * m.gamma1(s, kp);
                }
            }
        }
        w0_.push_back(std::move(w0));
        w1_.push_back(std::move(w1));
    }
    tensorkit::check_element_count(coeff_size_, coeff_size_);
}

void AusTransform::uts(const Vector& zd, std::span<const double> omega, Vector& z0, Vector& z0dot) const {
    if (static_cast<std::size_t>(zd.size()) != coeff_size_) fail(ErrorCode::ShapeError, "uts: coefficient length mismatch");
    if (omega.size() != specs_.size()) fail(ErrorCode::ShapeError, "uts: one frequency per dimension expected");
    const std::size_t d = specs_.size();
    Shape dims(d + 1);
    for (std::size_t i = 0; i < d; ++i) dims[d - 1 - i] = static_cast<std::size_t>(specs_[i].U);
    dims[d] = static_cast<std::size_t>(n_);
    std::vector<double> z(zd.data(), zd.data() + zd.size());
    std::vector<double> zdot;
    for (std::size_t step = 0; step < d; ++step) {
        const std::size_t i = d - 1 - step;  // dimension handled at this step
        const std::size_t axis = step;       // its axis in the current tensor
        const auto& m = mats_[i];
        Shape dz = dims;
        auto vel = mode_product(z, dz, axis, m.gamma1);
        for (double& v : vel) v *= omega[i];
        if (!zdot.empty()) {
            Shape dv = dims;
            auto carried = mode_product(zdot, dv, axis, m.gamma0);
            for (std::size_t k = 0; k < vel.size(); ++k) vel[k] += carried[k];
        }
        z = mode_product(z, dims, axis, m.gamma0);
        zdot = std::move(vel);
    }
    const auto perm = reversed_axes(d + 1);
    Shape out_dims(d + 1);
    for (std::size_t k = 0; k <= d; ++k) out_dims[k] = dims[perm[k]];
    auto zg = tensorkit::relayout(z, dims, perm, out_dims);
    auto vg = tensorkit::relayout(zdot, dims, perm, out_dims);
    z0 = Eigen::Map<const Vector>(zg.data(), static_cast<Eigen::Index>(zg.size()));
    z0dot = Eigen::Map<const Vector>(vg.data(), static_cast<Eigen::Index>(vg.size()));
}

Vector AusTransform::partial(const Vector& zd, int which) const {
    if (static_cast<std::size_t>(zd.size()) != coeff_size_) fail(ErrorCode::ShapeError, "partial: coefficient length mismatch");
    const std::size_t d = specs_.size();
    if (which < 0 || static_cast<std::size_t>(which) >= d) fail(ErrorCode::InvalidArgument, "partial: dimension out of range");
    Shape dims(d + 1);
    for (std::size_t i = 0; i < d; ++i) dims[d - 1 - i] = static_cast<std::size_t>(specs_[i].U);
    dims[d] = static_cast<std::size_t>(n_);
    std::vector<double> z(zd.data(), zd.data() + zd.size());
    for (std::size_t step = 0; step < d; ++step) {
        const std::size_t i = d - 1 - step;
        z = mode_product(z, dims, step, i == static_cast<std::size_t>(which) ? mats_[i].gamma1 : mats_[i].gamma0);
    }
    const auto perm = reversed_axes(d + 1);
    Shape out_dims(d + 1);
    for (std::size_t k = 0; k <= d; ++k) out_dims[k] = dims[perm[k]];
    auto zg = tensorkit::relayout(z, dims, perm, out_dims);
    return Eigen::Map<const Vector>(zg.data(), static_cast<Eigen::Index>(zg.size()));
}

Vector AusTransform::stu1(const Vector& f0) const {
    const std::size_t d = specs_.size();
    if (static_cast<std::size_t>(f0.size()) != grid_points_ * static_cast<std::size_t>(n_)) {
        fail(ErrorCode::ShapeError, "stu1: grid value length mismatch");
    }
    Shape in_dims(d + 1);
    in_dims[0] = static_cast<std::size_t>(n_);
    for (std::size_t i = 0; i < d; ++i) in_dims[i + 1] = static_cast<std::size_t>(specs_[i].S);
    const auto perm = reversed_axes(d + 1);
    Shape dims(d + 1);
    for (std::size_t k = 0; k <= d; ++k) dims[k] = in_dims[perm[k]];
    auto f = tensorkit::relayout(std::span<const double>(f0.data(), static_cast<std::size_t>(f0.size())), in_dims, perm, dims);
    // dims are now (S_d, ..., S_1, n)
    for (std::size_t step = 0; step < d; ++step) {
        const std::size_t i = d - 1 - step;
        f = mode_product(f, dims, step, mats_[i].gamma0inv);
    }
    return Eigen::Map<const Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
}

DenseMatrix AusTransform::stu2(const std::vector<double>& dfdz, const std::vector<double>& dfdzdot,
                               std::span<const double> omega) const {
    const std::size_t d = specs_.size();
    const auto n = static_cast<std::size_t>(n_);
    if (dfdz.size() != n * n * grid_points_ || dfdzdot.size() != dfdz.size()) {
        fail(ErrorCode::ShapeError, "stu2: Jacobian page length mismatch");
    }
    if (omega.size() != d) fail(ErrorCode::ShapeError, "stu2: one frequency per dimension expected");
    std::vector<double> A = dfdz;
    std::vector<double> B = dfdzdot;
    std::size_t R = n;
    std::size_t rest = grid_points_;
    for (std::size_t i = 0; i < d; ++i) {
        const auto S = static_cast<std::size_t>(specs_[i].S);
        const auto U = static_cast<std::size_t>(specs_[i].U);
        rest /= S;
        const bool last = i + 1 == d;
        const Shape in_dims{R, R, S, rest};
        const std::array<std::size_t, 4> to_front{2, 0, 1, 3};
        const Shape front_dims{S, R, R, rest};
        const auto XA = tensorkit::relayout(A, in_dims, to_front, front_dims);
        const auto XB = tensorkit::relayout(B, in_dims, to_front, front_dims);
        const std::size_t cols = R * R * rest;

        // Only pages with some nonzero entry contribute.
        std::vector<Eigen::Index> live;
        for (std::size_t c = 0; c < cols; ++c) {
            const double* a = XA.data() + c * S;
            const double* b = XB.data() + c * S;
            bool nz = false;
            for (std::size_t s = 0; s < S && !nz; ++s) nz = a[s] != 0.0 || b[s] != 0.0;
            if (nz) live.push_back(static_cast<Eigen::Index>(c));
        }
        const auto L = static_cast<Eigen::Index>(live.size());
        DenseMatrix xa(static_cast<Eigen::Index>(S), L), xb(static_cast<Eigen::Index>(S), L);
        for (Eigen::Index c = 0; c < L; ++c) {
            const auto src = static_cast<std::size_t>(live[static_cast<std::size_t>(c)]) * S;
            xa.col(c) = Eigen::Map<const Vector>(XA.data() + src, static_cast<Eigen::Index>(S));
            xb.col(c) = Eigen::Map<const Vector>(XB.data() + src, static_cast<Eigen::Index>(S));
        }
        DenseMatrix ya = w0_[i] * xa;
        ya.noalias() += omega[i] * (w1_[i] * xb);
        DenseMatrix yb;
        if (!last) yb = w0_[i] * xb;

        const std::size_t UU = U * U;
        auto scatter = [&](const DenseMatrix& y) {
            std::vector<double> full(UU * cols, 0.0);
            for (Eigen::Index c = 0; c < L; ++c) {
                const auto dst = static_cast<std::size_t>(live[static_cast<std::size_t>(c)]) * UU;
                std::copy(y.col(c).data(), y.col(c).data() + UU, full.begin() + static_cast<std::ptrdiff_t>(dst));
            }
            // (k, k', R, R', rest) -> (k, R, k', R', rest)
            const Shape from{U, U, R, R, rest};
            const std::array<std::size_t, 5> perm{0, 2, 1, 3, 4};
            const Shape to{U, R, U, R, rest};
            return tensorkit::relayout(full, from, perm, to);
        };
        A = scatter(ya);
        if (!last) B = scatter(yb);
        R *= U;
    }
    return Eigen::Map<const DenseMatrix>(A.data(), static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(R));
}

// ---------------------------------------------------------------------------

NonlinearEvaluator::NonlinearEvaluator(const models::SecondOrderSystem& sys, const AusTransform& transform)
    : sys_(sys), tf_(transform) {
    if (sys.n != transform.n()) fail(ErrorCode::ShapeError, "system and transform disagree on n");
}

void NonlinearEvaluator::refresh(const Vector& zd, std::span<const double> omega) {
    if (cache_enabled_ && valid_ && key_z_.size() == zd.size() && key_z_ == zd &&
        std::equal(omega.begin(), omega.end(), key_omega_.begin(), key_omega_.end())) {
        return;
    }
    tf_.uts(zd, omega, z0_, z0dot_);
    ++grid_evaluations_;
    key_z_ = zd;
    key_omega_.assign(omega.begin(), omega.end());
    valid_ = true;
}

const Vector& NonlinearEvaluator::grid_state(const Vector& zd, std::span<const double> omega) {
    refresh(zd, omega);
    return z0_;
}

const Vector& NonlinearEvaluator::grid_velocity(const Vector& zd, std::span<const double> omega) {
    refresh(zd, omega);
    return z0dot_;
}

NonlinearResult NonlinearEvaluator::evaluate(const Vector& zd, std::span<const double> omega, bool jacobian,
                                             bool omega_derivatives) {
    refresh(zd, omega);
    const auto n = static_cast<std::size_t>(sys_.n);
    const std::size_t G = tf_.grid_points();
    NonlinearResult out;
    if (!sys_.force) {
        out.fd = Vector::Zero(static_cast<Eigen::Index>(tf_.coeff_size()));
        if (jacobian) {
            out.dfd = DenseMatrix::Zero(static_cast<Eigen::Index>(tf_.coeff_size()),
                                        static_cast<Eigen::Index>(tf_.coeff_size()));
        }
        if (omega_derivatives) out.dfd_domega.assign(omega.size(), out.fd);
        return out;
    }
    Vector f0(static_cast<Eigen::Index>(n * G));
    for (std::size_t g = 0; g < G; ++g) {
        sys_.force->evaluate(std::span<const double>(z0_.data() + g * n, n),
                             std::span<const double>(z0dot_.data() + g * n, n), std::span<double>(f0.data() + g * n, n));
    }
    out.fd = tf_.stu1(f0);
    if (!jacobian && !omega_derivatives) return out;

    std::vector<double> A(n * n * G), B(n * n * G);
    for (std::size_t g = 0; g < G; ++g) {
        sys_.force->jacobian(std::span<const double>(z0_.data() + g * n, n),
                             std::span<const double>(z0dot_.data() + g * n, n),
                             std::span<double>(A.data() + g * n * n, n * n), std::span<double>(B.data() + g * n * n, n * n));
    }
    if (omega_derivatives) {
        for (std::size_t i = 0; i < omega.size(); ++i) {
            const Vector v = tf_.partial(zd, static_cast<int>(i));
            Vector bv(static_cast<Eigen::Index>(n * G));
            for (std::size_t g = 0; g < G; ++g) {
                Eigen::Map<const DenseMatrix> Bg(B.data() + g * n * n, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
                bv.segment(static_cast<Eigen::Index>(g * n), static_cast<Eigen::Index>(n)) =
                    Bg * v.segment(static_cast<Eigen::Index>(g * n), static_cast<Eigen::Index>(n));
            }
            out.dfd_domega.push_back(tf_.stu1(bv));
        }
    }
    if (jacobian) out.dfd = tf_.stu2(A, B, omega);
    return out;
}

// ---------------------------------------------------------------------------

double staged_operation_count(int n, int d, int S, int U) {
    double total = 0.0;
    for (int i = 1; i <= d; ++i) {
        const double u_before = std::pow(static_cast<double>(U), i - 1);
        const double s_after = std::pow(static_cast<double>(S), d - i);
        total += (static_cast<double>(S) * U + static_cast<double>(U) * S * S) * u_before * u_before * s_after;
    }
    return static_cast<double>(n) * n * total;
}

double monolithic_operation_count(int n, int d, int S, int U) {
    const double sd = std::pow(static_cast<double>(S), d);
    const double ud = std::pow(static_cast<double>(U), d);
    return static_cast<double>(n) * n * (sd * ud + ud * sd * sd);
}

double operation_ratio(int d, int S, int U) {
    if (d < 1 || S < 1 || U < 1) fail(ErrorCode::InvalidArgument, "operation_ratio needs positive d, S, U");
    return monolithic_operation_count(1, d, S, U) / staged_operation_count(1, d, S, U);
}

}  // namespace qpt::aus
