#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qptorus/continuation.hpp"
#include "qptorus/error.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>

using namespace qpt;
using namespace qpt::continuation;
using basis::BasisSpec;
using qpt::testing::fd_jacobian;
using qpt::testing::random_vector;
using qpt::testing::rel_err;

namespace {

FrequencySetup param(double w) { return {FrequencyRole::Parameter, w}; }
FrequencySetup ratio(int ref, double r, double w) { return {FrequencyRole::Ratio, w, r, ref}; }
FrequencySetup unknown(double w) { return {FrequencyRole::Unknown, w}; }
FrequencySetup fixed(double w) { return {FrequencyRole::Fixed, w, 1.0, 0, w}; }

std::shared_ptr<const vcf::VcfContext> duffing_ctx(std::vector<double> forcing, std::vector<BasisSpec> specs) {
    return std::make_shared<const vcf::VcfContext>(models::duffing_vdp(0.2, 0.5, 2.0, forcing), std::move(specs));
}

vcf::TorusPoint linear_seed(TorusProblem& pb, const std::shared_ptr<const vcf::VcfContext>& ctx, std::vector<double> omega) {
    vcf::VcfOperator op(ctx, omega);
    vcf::TorusPoint pt;
    pt.zd = op.Kd().lu().solve(op.Ed());
    pt.omega = omega;
    pt.p = omega[0];
    auto res = solve_fixed(pb, pb.pack(pt), 30, 1e-10);
    REQUIRE(res.converged);
    return pb.unpack(res.x);
}

}  // namespace

TEST_CASE("constraint bookkeeping") {
    const auto hb = BasisSpec::harmonic_upto(1, 4);
    auto ctx1 = duffing_ctx({1.0}, {hb});
    TorusProblem p1(ctx1, {param(2.0)});
    CHECK(p1.unknowns() == 4);
    CHECK(p1.evaluate(Vector::Ones(4), true).G.rows() == 3);

    auto ctx3 = duffing_ctx({2.0, 1.0, 0.5}, {hb, hb, hb});
    TorusProblem p3(ctx3, {param(2.0), ratio(0, std::sqrt(5.0), 2.0 / std::sqrt(5.0)), ratio(0, std::sqrt(11.0), 2.0 / std::sqrt(11.0))});
    Vector x = Vector::Zero(p3.unknowns());
    x(27) = 2.0;
    x(28) = 2.0 / std::sqrt(5.0);
    x(29) = 2.0 / std::sqrt(11.0);
    const auto ev = p3.evaluate(x, true);
    CHECK(ev.F.size() == 29);
    CHECK(std::abs(ev.F(27)) < 1e-15);
    CHECK(std::abs(ev.F(28)) < 1e-15);
    CHECK(ev.G(27, 27) == 1.0);
    CHECK(ev.G(27, 28) == doctest::Approx(-std::sqrt(5.0)));

    auto ctx2 = duffing_ctx({1.0}, {hb, hb});
    TorusProblem p2(ctx2, {param(2.0), unknown(1.0)});
    CHECK(p2.phase_row_count() == 1);

    auto code = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    CHECK(code([&] { TorusProblem bad(ctx2, {fixed(2.0), unknown(1.0)}); }) == ErrorCode::ConstraintMismatch);
    CHECK(code([&] { TorusProblem bad(ctx2, {param(2.0), param(1.0)}); }) == ErrorCode::ConstraintMismatch);
    CHECK(code([&] { TorusProblem bad(ctx2, {unknown(2.0), param(1.0)}); }) == ErrorCode::ConstraintMismatch);
    CHECK(code([&] { TorusProblem bad(ctx2, {param(2.0), ratio(1, 2.0, 1.0)}); }) == ErrorCode::ConstraintMismatch);
    CHECK(code([&] { TorusProblem bad(ctx2, {param(2.0)}); }) == ErrorCode::ConstraintMismatch);
}

TEST_CASE("phase rows") {
    const auto spec = BasisSpec::harmonic({1}, 4);
    auto ctx = duffing_ctx({1.0}, {spec, spec});
    TorusProblem pb(ctx, {param(2.0), unknown(1.0)});
    // z = cos(tau_2): dimension-2 cos slot, k1 = 0
    Vector z = Vector::Zero(9);
    z(1) = 1.0;
    pb.set_reference(z);
    // L1 z = -sin(tau_2) slot, L2 z = -cos; ell = L1 z + L1^T L2 z = -2 e_sin
    Vector expect = Vector::Zero(9);
    expect(2) = -2.0;
    CHECK((pb.phase_rows().row(0).transpose() - expect).norm() < 1e-14);

    // identity ell^T L1 z = |L1 z|^2 + |L2 z|^2 for random HB coefficients
    const auto hb = BasisSpec::harmonic_upto(3, 8);
    auto ctx2 = duffing_ctx({1.0}, {hb, hb});
    TorusProblem pb2(ctx2, {param(2.0), unknown(1.0)});
    for (int t = 0; t < 5; ++t) {
        const Vector r = random_vector(49);
        pb2.set_reference(r);
        const Vector l1 = ctx2->apply_phase1(1, r), l2 = ctx2->apply_phase2(1, r);
        CHECK(pb2.phase_rows().row(0).dot(l1) == doctest::Approx(l1.squaredNorm() + l2.squaredNorm()));
    }

    // constant coefficients: degenerate row falls back to a pinning row
    Vector c = Vector::Zero(49);
    c(0) = 1.0;
    pb2.set_reference(c);
    CHECK(pb2.phase_rows().row(0).norm() == 1.0);
}

TEST_CASE("bordered Jacobian matches finite differences") {
    const auto hb = BasisSpec::harmonic_upto(2, 8);
    const auto co = BasisSpec::collocation(3, 2);
    auto ctx = duffing_ctx({1.0}, {hb, co});
    TorusProblem pb(ctx, {param(1.3), unknown(2.1)});
    for (int t = 0; t < 3; ++t) {
        Vector x(pb.unknowns());
        x.head(pb.coeff_size()) = random_vector(pb.coeff_size(), 0.7);
        x(pb.coeff_size()) = 1.3;
        x(pb.coeff_size() + 1) = 2.1;
        pb.set_reference(random_vector(pb.coeff_size()));
        const auto ev = pb.evaluate(x, true);
        const DenseMatrix J = fd_jacobian([&](const Vector& y) { return pb.evaluate(y, false).F; }, x);
        CHECK(rel_err(ev.G, J) < 1e-6);
    }
}

TEST_CASE("model-parameter column by finite differences") {
    auto factory = [](double f) { return models::duffing_vdp(0.2, 0.5, 2.0, {f}); };
    TorusProblem pb(factory, {BasisSpec::harmonic_upto(3, 16)}, {fixed(2.5)}, 1.0);
    CHECK(!pb.parameter_is_frequency());
    CHECK(pb.unknowns() == 9);
    Vector x(9);
    x.head(7) = random_vector(7);
    x(7) = 2.5;
    x(8) = 1.0;
    const auto ev = pb.evaluate(x, true);
    const DenseMatrix J = fd_jacobian([&](const Vector& y) { return pb.evaluate(y, false).F; }, x);
    CHECK(rel_err(ev.G.col(8), J.col(8)) < 1e-5);
    CHECK(rel_err(ev.G.leftCols(8), J.leftCols(8)) < 1e-6);
}

TEST_CASE("predictor error is second order") {
    models::SecondOrderSystem s = models::duffing_vdp(0.2, 0.0, 2.0, {1.0});
    s.force = nullptr;
    s.D0(0, 0) = 0.4;
    auto ctx = std::make_shared<const vcf::VcfContext>(s, std::vector<BasisSpec>{BasisSpec::harmonic_upto(1, 4)});
    TorusProblem pb(ctx, {param(0.5)});
    const auto seed = linear_seed(pb, ctx, {0.5});
    const Vector x = pb.pack(seed);
    const Vector t = tangent(pb, x, nullptr, 1);
    CHECK(t(pb.p_index()) > 0.0);
    double prev = 0;
    for (double h : {0.2, 0.1, 0.05}) {
        const auto res = correct(pb, x + h * t, t, 20, 1e-12);
        REQUIRE(res.converged);
        const double err = (res.x - (x + h * t)).norm();
        if (prev > 0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.15));
        prev = err;
    }
}

TEST_CASE("Duffing d=1 sweep has one peak") {
    auto ctx = duffing_ctx({2.0}, {BasisSpec::harmonic_upto(5, 32)});
    TorusProblem pb(ctx, {param(1.5)});
    const auto seed = linear_seed(pb, ctx, {1.5});
    ContinuationOptions opt;
    opt.p_min = 1.5;
    opt.p_max = 4.0;
    opt.step = {0.05, 1e-4, 0.2};
    opt.max_points = 400;
    const Branch b = continue_branch(pb, seed, opt);
    CHECK(!b.stalled);
    CHECK(b.points.size() > 10);
    CHECK(b.points.back().point.p > 3.5);
    CHECK(count_peaks(b) == 1);
    for (std::size_t k = 1; k < b.points.size(); ++k) {
        CHECK(b.points[k].residual < 1e-8);
        CHECK(b.points[k].point.tangent.dot(b.points[k - 1].point.tangent) > 0.0);
        CHECK(b.points[k].step >= opt.step.min);
        CHECK(b.points[k].step <= opt.step.max);
    }
    // determinism
    const Branch again = continue_branch(pb, seed, opt);
    REQUIRE(again.points.size() == b.points.size());
    for (std::size_t k = 0; k < b.points.size(); ++k) CHECK(again.points[k].point.zd == b.points[k].point.zd);
}

TEST_CASE("scaled metric weights") {
    auto ctx = duffing_ctx({2.0, 1.0}, {BasisSpec::harmonic_upto(3, 16), BasisSpec::finite_difference({-1, 0, 1}, 12)});
    TorusProblem pb(ctx, {param(2.0), ratio(0, std::sqrt(5.0), 2.0 / std::sqrt(5.0))});
    const Vector w = metric_weights(pb);
    REQUIRE(w.size() == pb.unknowns());
    const int nc = 7 * 12;
    // squared weights sum to 1 + (U_hb - 1)/2 for HB times 1 for FD
    CHECK(w.head(nc).cwiseAbs2().sum() == doctest::Approx(4.0));
    CHECK(w.tail(pb.unknowns() - nc).isOnes());
    CHECK(w.head(nc).maxCoeff() == doctest::Approx(1.0 / std::sqrt(12.0)));
}

TEST_CASE("scaled sweep matches the arclength sweep") {
    auto ctx = duffing_ctx({2.0}, {BasisSpec::finite_difference({-2, -1, 0, 1, 2}, 24)});
    TorusProblem pb(ctx, {param(1.5)});
    const auto seed = linear_seed(pb, ctx, {1.5});
    ContinuationOptions opt;
    opt.p_min = 1.5;
    opt.p_max = 4.0;
    opt.max_points = 2000;
    const Branch plain = continue_branch(pb, seed, opt);
    opt.normalization = Normalization::Scaled;
    const Branch scaled = continue_branch(pb, seed, opt);
    CHECK(!scaled.stalled);
    CHECK(scaled.points.back().point.p > 3.5);
    CHECK(count_peaks(scaled) == count_peaks(plain));
    CHECK(scaled.points.size() < plain.points.size());
    for (const auto& bp : scaled.points) CHECK(bp.residual < 1e-8);
}

TEST_CASE("empty range returns the seed") {
    auto ctx = duffing_ctx({1.0}, {BasisSpec::harmonic_upto(3, 16)});
    TorusProblem pb(ctx, {param(2.0)});
    const auto seed = linear_seed(pb, ctx, {2.0});
    ContinuationOptions opt;
    opt.p_min = 2.0;
    opt.p_max = 2.0;
    CHECK(continue_branch(pb, seed, opt).points.size() == 1);
}

TEST_CASE("autonomous torus direction under a phase condition") {
    // forced vdP: the free oscillation frequency omega_2 is an unknown
    const auto hb = BasisSpec::harmonic_upto(3, 16);
    auto ctx = duffing_ctx({0.5}, {hb, hb});
    TorusProblem pb(ctx, {param(3.3), unknown(2.2)});
    vcf::TorusPoint pt;
    pt.omega = {3.3, 2.2};
    pt.p = 3.3;
    vcf::VcfOperator op(ctx, pt.omega);
    pt.zd = Vector::Zero(49);
    pt.zd(1 * 7 + 0) = op.Ed()(7) / (4.0 - 3.3 * 3.3);
    pt.zd(0 * 7 + 1) = 2.0;
    pb.set_reference(pt.zd);
    const auto res = solve_fixed(pb, pb.pack(pt), 40, 1e-9);
    REQUIRE(res.converged);
    const auto sol = pb.unpack(res.x);
    CHECK(sol.omega[1] > 1.5);
    CHECK(sol.omega[1] < 3.0);
    CHECK(pb.amplitude(sol) > 1.0);
    // phase condition holds at the converged point
    CHECK(std::abs(pb.phase_rows().row(0).dot(sol.zd - pt.zd)) < 1e-9);

    ContinuationOptions opt;
    opt.p_min = 3.2;
    opt.p_max = 4.5;
    opt.step = {0.02, 1e-4, 0.05};
    opt.max_points = 8;
    const Branch b = continue_branch(pb, sol, opt);
    CHECK(!b.stalled);
    CHECK(b.points.size() == 8);
    for (const auto& p : b.points) CHECK(p.residual < 1e-8);
}

TEST_CASE("peak counting") {
    Branch b;
    const double amps[] = {1, 1, 5, 1, 1, 1, 4, 1, 1.2, 1};
    for (int k = 0; k < 10; ++k) {
        BranchPoint p;
        p.point.p = k;
        p.amplitude = amps[k];
        b.points.push_back(p);
    }
    CHECK(weighted_median_amplitude(b) == 1.0);
    CHECK(count_peaks(b) == 2);
    // crowding points at one peak does not shift the median
    for (int k = 0; k < 20; ++k) {
        BranchPoint p;
        p.point.p = 9.0 + 1e-3 * k;
        p.amplitude = 3.0 + k;
        b.points.push_back(p);
    }
    CHECK(weighted_median_amplitude(b) == 1.0);
}

TEST_CASE("tangent normalization") {
    Vector t(3);
    t << 0.0, 3.0, 4.0;
    const Vector u = normalize_tangent(t, 2, Normalization::Parameter);
    CHECK(std::abs(u(2)) == doctest::Approx(1.0));
    Vector fold(3);
    fold << 1.0, 0.0, 1e-4;
    CHECK(normalize_tangent(fold, 2, Normalization::Parameter).norm() == doctest::Approx(1.0));
}
