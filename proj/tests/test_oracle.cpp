#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qptorus/continuation.hpp"
#include "qptorus/error.hpp"
#include "qptorus/oracle.hpp"
#include "qptorus/stability.hpp"

#include <cmath>
#include <numbers>

using namespace qpt;
using namespace qpt::oracle;
using basis::BasisSpec;

namespace {
constexpr double kPi = std::numbers::pi;

models::SecondOrderSystem oscillator(double c, double k) {
    models::SecondOrderSystem s;
    s.name = "linear";
    s.n = 1;
    s.M0 = DenseMatrix::Identity(1, 1);
    s.D0 = DenseMatrix::Constant(1, 1, c);
    s.K0 = DenseMatrix::Constant(1, 1, k);
    s.Theta0 = DenseMatrix::Identity(1, 1);
    s.output = Vector::Ones(1);
    return s;
}

Vector state(double z, double v) {
    Vector x(2);
    x << z, v;
    return x;
}
}  // namespace

TEST_CASE("energy of an undamped oscillator is conserved") {
    const double w0 = 2.0, T = 2 * kPi / w0;
    const auto run = integrate(oscillator(0.0, w0 * w0), {}, state(1.0, 0.0), 0.0, 100 * T + T / 1000, T / 1000);
    REQUIRE(run.samples() == 100001);
    const double e0 = 0.5 * w0 * w0;
    double drift = 0.0;
    for (Eigen::Index k = 0; k < run.samples(); ++k) {
        const double e = 0.5 * run.states(k, 1) * run.states(k, 1) + 0.5 * w0 * w0 * run.states(k, 0) * run.states(k, 0);
        drift = std::max(drift, std::abs(e - e0) / e0);
    }
    CHECK(drift <= 1e-6);
    CHECK(run.states(100000, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equilibrium stays at rest") {
    const auto sys = models::duffing_vdp(0.2, 0.5, 2.0, {0.0});
    const std::vector<double> w{2.0};
    const auto run = integrate(sys, w, Vector::Zero(2), 10.0, 10.0, 0.01);
    CHECK(run.states.cwiseAbs().maxCoeff() == 0.0);
    CHECK(run.time(0) == doctest::Approx(10.0));
}

TEST_CASE("RK4 is fourth order") {
    const double c = 0.4, k = 4.0, t_end = 10.0;
    const double wd = std::sqrt(k - c * c / 4);
    const double exact = std::exp(-c / 2 * t_end) * (std::cos(wd * t_end) + c / (2 * wd) * std::sin(wd * t_end));
    auto err = [&](double dt) {
        const auto run = integrate(oscillator(c, k), {}, state(1.0, 0.0), t_end, dt, dt);
        return std::abs(run.states(0, 0) - exact);
    };
    const double ratio = err(0.1) / err(0.05);
    CHECK(ratio == doctest::Approx(16.0).epsilon(0.1));
}

TEST_CASE("non-finite states signal a blowup") {
    // negative stiffness and cubic softening run away in finite time
    const auto sys = models::duffing_vdp(0.0, -10.0, 1.0, {0.0});
    const std::vector<double> w{1.0};
    try {
        (void)integrate(sys, w, state(5.0, 5.0), 100.0, 1.0, 0.01);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Blowup);
    }
    CHECK_THROWS_AS((void)integrate(sys, w, state(0, 0), 1.0, 1.0, 0.0), Error);
}

TEST_CASE("single tone spectrum") {
    const double w1 = 2.65, dt = 2 * kPi / w1 / 500;
    std::vector<double> x(500 * 200);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::cos(w1 * static_cast<double>(k) * dt);
    const auto s = spectrum(x, dt, w1);
    REQUIRE(s.peaks.size() == 1);
    CHECK(s.peaks[0].ratio == doctest::Approx(1.0));
    CHECK(std::abs(s.peaks[0].amplitude - 1.0) <= 1e-3);
}

TEST_CASE("two-tone spectrum") {
    const double w1 = 2.65, w2 = w1 / std::sqrt(5.0), dt = 2 * kPi / w1 / 500;
    std::vector<double> x(500 * 200);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = static_cast<double>(k) * dt;
        x[k] = std::cos(w1 * t) + 0.5 * std::sin(w2 * t + 0.3);
    }
    const auto s = spectrum(x, dt, w1);
    REQUIRE(s.peaks.size() == 2);
    const double bin = s.ratio[1];
    CHECK(std::abs(s.peaks[0].ratio - 1 / std::sqrt(5.0)) <= bin);
    CHECK(std::abs(s.peaks[1].ratio - 1.0) <= bin);
    CHECK(std::abs(s.peaks[0].amplitude - 0.5) <= 1e-3);
    CHECK(std::abs(s.peaks[1].amplitude - 1.0) <= 1e-3);
}

TEST_CASE("self comparison is exact") {
    const auto sys = models::duffing_vdp(0.2, 0.5, 2.0, {2.0});
    const std::vector<double> w{2.7};
    const auto run = integrate(sys, w, state(0.5, 0.0), 10.0, 20 * 2 * kPi / 2.7, 2 * kPi / 2.7 / 200);
    const auto c = compare(run, run.states, Vector::Ones(1), 2.7);
    CHECK(c.relative_l2 == 0.0);
    CHECK(c.max_peak_error == 0.0);
    CHECK(c.peaks_match);
    CHECK_FALSE(c.matches.empty());
}

TEST_CASE("converged periodic Duffing point agrees with time integration") {
    const double w1 = 2.2, T = 2 * kPi / w1;
    const auto sys = models::duffing_vdp(0.2, 0.5, 2.0, {2.0});
    const std::vector<BasisSpec> specs{BasisSpec::harmonic_upto(7, 32)};
    auto ctx = std::make_shared<const vcf::VcfContext>(sys, specs);
    continuation::TorusProblem pb(ctx, {{continuation::FrequencyRole::Parameter, w1}});
    vcf::VcfOperator op(ctx, {w1});
    vcf::TorusPoint guess{op.Kd().lu().solve(op.Ed()), {w1}, w1, {}, vcf::Stability::Unknown};
    const auto sol = continuation::solve_fixed(pb, pb.pack(guess), 40, 1e-12);
    REQUIRE(sol.converged);
    vcf::TorusPoint pt{sol.x.head(pb.coeff_size()), {w1}, w1, {}, vcf::Stability::Unknown};

    const stability::TorusTrajectory traj{specs, 1, pt.zd, pt.omega};
    const auto floq = stability::classify_floquet(stability::multipliers(stability::monodromy(sys, traj, 512)), 1e-6);
    REQUIRE(floq.verdict == vcf::Stability::Stable);

    const Vector x0 = torus_state(specs, 1, pt.zd, pt.omega, 0.0);
    const auto run = integrate(sys, pt.omega, x0, 50 * T, 50 * T, T / 500);
    const auto c = compare(pt, specs, run, sys.output);
    CHECK(c.relative_l2 <= 1e-3);
    CHECK(c.peaks_match);
    for (const auto& p : c.candidate.peaks) CHECK(std::abs(p.ratio - std::round(p.ratio)) < 1e-9);
}
