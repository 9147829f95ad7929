// Acceptance checks, one criterion per invocation: `acceptance <id>`.
// Without an argument every criterion runs in turn. Each prints a single
// "criterion N: PASS|FAIL (...)" line; the exit status is nonzero on FAIL.

#include "qptorus/aus.hpp"
#include "qptorus/basis.hpp"
#include "qptorus/continuation.hpp"
#include "qptorus/error.hpp"
#include "qptorus/models.hpp"
#include "qptorus/oracle.hpp"
#include "qptorus/stability.hpp"
#include "qptorus/tensorkit.hpp"
#include "qptorus/vcf.hpp"
#include "support.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

using namespace qpt;
using basis::BasisSpec;
using continuation::Branch;
using continuation::BranchPoint;
using continuation::FrequencyRole;
using continuation::FrequencySetup;
using continuation::TorusProblem;
using qpt::testing::fd_jacobian;
using qpt::testing::random_matrix;
using qpt::testing::random_vector;
using qpt::testing::rel_err;

namespace {

constexpr double kPi = std::numbers::pi;

// Tolerances, pinned.
constexpr double kAssembleSeconds = 1.0;
constexpr double kPeakFactor = 1.5;
constexpr double kOffPeakDeviation = 0.05;
constexpr double kPeakDeviation = 0.15;
constexpr double kSlopeThreshold = 2.0;   // |dA/domega_1| above this counts as "at a peak"
constexpr double kFoldGap = 0.03;         // grid frequencies this close to a fold are skipped
constexpr double kTiL2 = 1e-2;
constexpr double kTiPeak = 0.02;
constexpr double kNaturalFrequency = 15.60;
constexpr double kNaturalTol = 0.01;
constexpr double kOnsetTol = 0.05;        // lower fold of the resonance within 5% of omega_l1
constexpr int kNsIterations = 15;
constexpr double kRoundTrip = 1e-8;
constexpr double kExponentMax = 1e-2;
constexpr double kLinearExponentTol = 1e-3;
constexpr double kRoundTripGamma = 1e-12;
constexpr double kJacobianTol = 1e-5;
constexpr double kLinearMapTol = 1e-12;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Duffing-vdP helpers

const double kRatios[3] = {1.0, std::sqrt(5.0), std::sqrt(11.0)};

models::SecondOrderSystem duffing(int d) {
    const std::vector<double> f{2.0, 1.0, 0.5};
    return models::duffing_vdp(0.2, 0.5, 2.0, std::vector<double>(f.begin(), f.begin() + d));
}

std::vector<FrequencySetup> duffing_frequencies(int d, double w1) {
    std::vector<FrequencySetup> fr(static_cast<std::size_t>(d));
    fr[0] = {FrequencyRole::Parameter, w1};
    for (int i = 1; i < d; ++i) fr[static_cast<std::size_t>(i)] = {FrequencyRole::Ratio, w1 / kRatios[i], kRatios[i], 0};
    return fr;
}

std::vector<double> duffing_omega(int d, double w1) {
    std::vector<double> w(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = w1 / kRatios[i];
    return w;
}

std::vector<BasisSpec> hb_specs(int d) { return std::vector<BasisSpec>(static_cast<std::size_t>(d), BasisSpec::harmonic_upto(5, 32)); }

// Converged point at fixed omega_1, starting from the linear response or from `warm`.
continuation::NewtonResult duffing_solve(TorusProblem& pb, int d, double w1, const Vector* warm, int max_iterations = 50) {
    vcf::TorusPoint g;
    g.omega = duffing_omega(d, w1);
    g.p = w1;
    if (warm) {
        g.zd = *warm;
    } else {
        vcf::VcfOperator op(pb.context(w1), g.omega);
        g.zd = op.Kd().partialPivLu().solve(op.Ed());
    }
    return continuation::solve_fixed(pb, pb.pack(g), max_iterations, 1e-10);
}

Branch duffing_branch(const std::vector<BasisSpec>& specs, double p0, double p1,
                      continuation::Normalization norm = continuation::Normalization::Arclength, double max_step = 0.2) {
    const int d = static_cast<int>(specs.size());
    auto ctx = std::make_shared<const vcf::VcfContext>(duffing(d), specs);
    TorusProblem pb(ctx, duffing_frequencies(d, p0));
    const auto seed = duffing_solve(pb, d, p0, nullptr);
    if (!seed.converged) fail(ErrorCode::BranchStall, "seed did not converge");
    continuation::ContinuationOptions opt;
    opt.p_min = p0;
    opt.p_max = p1;
    opt.max_points = 3000;
    opt.normalization = norm;
    opt.step.max = max_step;
    return continuation::continue_branch(pb, pb.unpack(seed.x), opt);
}

// Amplitude at w from the first branch segment crossing it; NaN when none does.
double first_crossing(const Branch& b, double w) {
    for (std::size_t i = 0; i + 1 < b.points.size(); ++i) {
        const double a = b.points[i].point.p, c = b.points[i + 1].point.p;
        if ((a - w) * (c - w) <= 0.0 && a != c) {
            const double s = (w - a) / (c - a);
            return (1 - s) * b.points[i].amplitude + s * b.points[i + 1].amplitude;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> folds(const Branch& b) {
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < b.points.size(); ++i) {
        const double a = b.points[i].point.p - b.points[i - 1].point.p;
        const double c = b.points[i + 1].point.p - b.points[i].point.p;
        if (a * c < 0.0) out.push_back(b.points[i].point.p);
    }
    return out;
}

// Floquet verdicts and tags along a periodic branch; NS moves to the
// neighbour whose complex pair sits closer to the unit circle.
struct Tagged {
    std::vector<std::string> tags;
    std::vector<stability::FloquetReport> reports;
};

Tagged floquet_tags(const models::SecondOrderSystem& sys, const std::vector<BasisSpec>& specs, const Branch& b, int steps) {
    Tagged out;
    std::vector<double> gap;
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& pt = b.points[i].point;
        const stability::TorusTrajectory tr{specs, sys.n, pt.zd, pt.omega};
        auto rep = stability::classify_floquet(stability::multipliers(stability::monodromy(sys, tr, steps)), 1e-6);
        double g = std::numeric_limits<double>::infinity();
        for (const auto& m : rep.multipliers)
            if (std::abs(m.imag()) > 1e-10 * std::max(1.0, std::abs(m))) g = std::min(g, std::abs(std::abs(m) - 1.0));
        std::string tag = i == 0 ? "" : stability::to_string(stability::bifurcation_between(out.reports.back(), rep));
        if (tag == "NS" && gap.back() < g && out.tags.back().empty()) {
            out.tags.back() = "NS";
            tag.clear();
        }
        out.tags.push_back(tag);
        out.reports.push_back(std::move(rep));
        gap.push_back(g);
    }
    return out;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    const std::size_t expect[3] = {12, 123, 1334};
    bool ok = true;
    std::string detail;
    double worst = 0.0;
    for (int d = 1; d <= 3; ++d) {
        const auto t0 = std::chrono::steady_clock::now();
        auto ctx = std::make_shared<const vcf::VcfContext>(duffing(d), hb_specs(d));
        const vcf::VcfOperator op(ctx, duffing_omega(d, 2.65));
        const double t = seconds_since(t0);
        worst = std::max(worst, t);
        const std::size_t got = vcf::unknown_count(1, hb_specs(d));
        ok = ok && got == expect[d - 1] && op.Kd().rows() + d == static_cast<Eigen::Index>(got);
        detail += "d=" + std::to_string(d) + ": " + std::to_string(got) + " unknowns; ";
    }
    ok = ok && worst < kAssembleSeconds;
    return {ok, detail + "slowest assembly " + fmt("%.3f", worst) + " s, limit 1 s"};
}

Outcome criterion2() {
    int peaks[3] = {0, 0, 0};
    const auto t0 = std::chrono::steady_clock::now();
    for (int d = 1; d <= 2; ++d) {
        const Branch b = duffing_branch(hb_specs(d), 1.5, 9.0);
        if (b.stalled) fail(ErrorCode::BranchStall, "d=" + std::to_string(d) + " sweep stalled: " + b.message);
        peaks[d - 1] = continuation::count_peaks(b, kPeakFactor);
    }
    const double t12 = seconds_since(t0);

    // d = 3 at 20 coarse frequencies: cold start from the linear response,
    // then the last converged point, then four sub-steps from it
    auto ctx = std::make_shared<const vcf::VcfContext>(duffing(3), hb_specs(3));
    TorusProblem pb(ctx, duffing_frequencies(3, 1.5));
    Branch coarse;
    std::optional<Vector> warm;
    double last = 0.0;
    int unconverged = 0;
    for (int k = 0; k < 20; ++k) {
        const double w1 = 1.5 + 9.0 * k / 19.0;
        auto r = duffing_solve(pb, 3, w1, nullptr, 20);
        if (!r.converged && warm) r = duffing_solve(pb, 3, w1, &*warm, 20);
        if (!r.converged && warm) {
            Vector z = *warm;
            for (int sub = 1; sub <= 4; ++sub) {
                r = duffing_solve(pb, 3, last + (w1 - last) * sub / 4.0, &z, 20);
                if (!r.converged) break;
                z = r.x.head(pb.coeff_size());
            }
        }
        if (!r.converged) {
            ++unconverged;
            continue;
        }
        warm = r.x.head(pb.coeff_size());
        last = w1;
        BranchPoint bp;
        bp.point = pb.unpack(r.x);
        bp.amplitude = pb.amplitude(bp.point);
        coarse.points.push_back(bp);
    }
    peaks[2] = continuation::count_peaks(coarse, kPeakFactor);
    const bool ok = peaks[0] == 1 && peaks[1] == 2 && peaks[2] == 3 && unconverged == 0;
    return {ok, "peaks d=1/2/3: " + std::to_string(peaks[0]) + "/" + std::to_string(peaks[1]) + "/" +
                    std::to_string(peaks[2]) + ", expected 1/2/3; d=1,2 sweeps " + fmt("%.1f", t12) + " s; d=3 at 20 points, " +
                    std::to_string(unconverged) + " unconverged"};
}

Outcome criterion3() {
    const BasisSpec hb = BasisSpec::harmonic_upto(5, 32);
    const BasisSpec co = BasisSpec::collocation(8, 4);
    const BasisSpec fd = BasisSpec::finite_difference({-3, -2, -1, 0, 1}, 32);
    const std::vector<std::pair<std::string, BasisSpec>> kinds{{"HB", hb}, {"CO", co}, {"FD", fd}};
    std::vector<std::string> names;
    std::vector<Branch> branches;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& a : kinds) {
        for (const auto& b : kinds) {
            names.push_back(a.first + "+" + b.first);
            // grid-valued bases carry many more coefficients; the scaled norm keeps steps comparable
            branches.push_back(duffing_branch({a.second, b.second}, 2.2, 3.0, continuation::Normalization::Scaled, 0.1));
            if (branches.back().stalled) return {false, names.back() + " stalled: " + branches.back().message};
        }
    }
    const double elapsed = seconds_since(t0);

    std::vector<double> fold_at;
    for (const auto& b : branches)
        for (double f : folds(b)) fold_at.push_back(f);

    std::vector<double> grid;
    for (int k = 0; k <= 80; ++k) grid.push_back(2.2 + 0.01 * k);
    const auto& ref = branches[0];
    double worst_off = 0.0, worst_on = 0.0;
    int used = 0, on_peak = 0;
    for (std::size_t g = 1; g + 1 < grid.size(); ++g) {
        const double w = grid[g];
        if (std::any_of(fold_at.begin(), fold_at.end(), [&](double f) { return std::abs(f - w) < kFoldGap; })) continue;
        const double slope = (first_crossing(ref, grid[g + 1]) - first_crossing(ref, grid[g - 1])) / (grid[g + 1] - grid[g - 1]);
        std::vector<double> amp;
        for (const auto& b : branches) amp.push_back(first_crossing(b, w));
        if (std::any_of(amp.begin(), amp.end(), [](double a) { return std::isnan(a); }) || std::isnan(slope)) continue;
        const double hi = *std::max_element(amp.begin(), amp.end()), lo = *std::min_element(amp.begin(), amp.end());
        const double dev = (hi - lo) / hi;
        const bool peak = std::abs(slope) > kSlopeThreshold;
        ++used;
        if (peak) {
            ++on_peak;
            worst_on = std::max(worst_on, dev);
        } else {
            worst_off = std::max(worst_off, dev);
        }
    }
    const bool ok = used > 0 && worst_off <= kOffPeakDeviation && worst_on <= kPeakDeviation;
    return {ok, std::to_string(used) + " grid frequencies (" + std::to_string(on_peak) + " at peaks); worst pairwise deviation " +
                    fmt("%.4f", worst_off) + " away from peaks (limit 0.05), " + fmt("%.4f", worst_on) +
                    " at peaks (limit 0.15); nine branches in " + fmt("%.1f", elapsed) + " s"};
}

Outcome criterion4() {
    const double target = 2.65;
    const auto specs = hb_specs(2);
    const Branch b = duffing_branch(specs, 2.2, 3.0);
    // first crossing of the target on the branch leaving 2.2 is the upper (resonant) sheet
    std::size_t i = 0;
    while (i + 1 < b.points.size() && !(b.points[i].point.p <= target && b.points[i + 1].point.p >= target)) ++i;
    if (i + 1 >= b.points.size()) return {false, "branch never reaches omega_1 = 2.65"};
    const auto& A = b.points[i].point;
    const auto& B = b.points[i + 1].point;
    const double s = (target - A.p) / (B.p - A.p);
    auto ctx = std::make_shared<const vcf::VcfContext>(duffing(2), specs);
    TorusProblem pb(ctx, duffing_frequencies(2, target));
    const Vector warm = (1 - s) * A.zd + s * B.zd;
    const auto r = duffing_solve(pb, 2, target, &warm);
    if (!r.converged) return {false, "torus at omega_1 = 2.65 did not converge"};
    const auto pt = pb.unpack(r.x);

    const auto sys = duffing(2);
    const double T1 = 2 * kPi / target;
    const double dt = T1 / 500;
    const Vector x0 = oracle::torus_state(specs, 1, pt.zd, pt.omega, 0.0);
    const auto run = oracle::integrate(sys, pt.omega, x0, 200 * T1, 50 * T1 + 0.5 * dt, dt);
    oracle::CompareOptions opt;
    opt.peak_fraction = 0.01;
    opt.amplitude_tol = kTiPeak;
    const auto cmp = oracle::compare(pt, specs, run, sys.output, opt);
    const bool ok = cmp.relative_l2 <= kTiL2 && cmp.peaks_match;
    return {ok, "amplitude " + fmt("%.4f", pb.amplitude(pt)) + "; relative L2 " + fmt("%.3e", cmp.relative_l2) +
                    " (limit 1e-2); " + std::to_string(cmp.matches.size()) + " peaks >= 1% of max, worst amplitude error " +
                    fmt("%.3e", cmp.max_peak_error) + " (limit 0.02), matched " + (cmp.peaks_match ? "yes" : "no")};
}

struct BeamBranch {
    models::SecondOrderSystem sys;
    std::vector<BasisSpec> specs;
    Branch branch;
    Tagged tags;
};

BeamBranch beam_branch(int elements, double p0, double p1) {
    BeamBranch out;
    out.sys = models::beam_system({.elements = elements});
    out.specs = {BasisSpec::harmonic_upto(7, 64)};
    auto ctx = std::make_shared<const vcf::VcfContext>(out.sys, out.specs);
    TorusProblem pb(ctx, {{FrequencyRole::Parameter, p0}});
    vcf::VcfOperator op(ctx, {p0});
    vcf::TorusPoint g{op.Kd().partialPivLu().solve(op.Ed()), {p0}, p0, {}, vcf::Stability::Unknown};
    const auto seed = continuation::solve_fixed(pb, pb.pack(g), 50, 1e-10);
    if (!seed.converged) fail(ErrorCode::BranchStall, "beam seed did not converge");
    continuation::ContinuationOptions opt;
    opt.p_min = p0;
    opt.p_max = p1;
    opt.max_points = 1000;
    opt.step.initial = 0.1;
    opt.step.max = 0.3;
    out.branch = continuation::continue_branch(pb, pb.unpack(seed.x), opt);
    if (out.branch.stalled) fail(ErrorCode::BranchStall, "beam branch stalled: " + out.branch.message);
    out.tags = floquet_tags(out.sys, out.specs, out.branch, 256);
    return out;
}

Outcome criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto bb = beam_branch(8, 10.0, 40.0);
    const double wl1 = bb.sys.info.at("omega_l1");
    int ns = 0, sn = 0;
    for (const auto& t : bb.tags.tags) {
        ns += t == "NS";
        sn += t == "SN";
    }
    const int peaks = continuation::count_peaks(bb.branch, kPeakFactor);
    std::size_t top = 0;
    for (std::size_t i = 0; i < bb.branch.points.size(); ++i)
        if (bb.branch.points[i].amplitude > bb.branch.points[top].amplitude) top = i;
    const double w_peak = bb.branch.points[top].point.p;
    // the hardening resonance leaves omega_l1 and folds back down close to it
    double onset = std::numeric_limits<double>::infinity();
    for (double f : folds(bb.branch))
        if (f < w_peak) onset = std::min(onset, f);
    for (std::size_t i = 0; i < bb.branch.points.size(); ++i)
        if (bb.tags.tags[i] == "SN" && i > top) onset = std::min(onset, bb.branch.points[i].point.p);
    const bool freq_ok = std::abs(wl1 - kNaturalFrequency) <= kNaturalTol * kNaturalFrequency;
    const bool peak_ok = peaks >= 1 && w_peak > wl1 && std::abs(onset - wl1) <= kOnsetTol * wl1;
    const bool ok = freq_ok && peak_ok && ns >= 1 && sn >= 1;
    return {ok, "omega_l1 " + fmt("%.4f", wl1) + " (15.60 +- 1%); " + std::to_string(peaks) + " peak(s), crest at " +
                    fmt("%.3f", w_peak) + ", lower fold at " + fmt("%.3f", onset) + " (within 5% of omega_l1); " +
                    std::to_string(ns) + " NS, " + std::to_string(sn) + " SN tags; " +
                    std::to_string(bb.branch.points.size()) + " points in " + fmt("%.1f", seconds_since(t0)) + " s"};
}

// NS seed corrected with the size of its torus part held and omega_1 free.
struct HandOff {
    continuation::NewtonResult result;
    vcf::TorusPoint point;
    double tau2_content = 0.0;
    double omega2 = 0.0;
};

HandOff hand_off(const models::SecondOrderSystem& sys, const BasisSpec& spec1, const BasisSpec& spec2,
                 const vcf::TorusPoint& periodic, double eps, int steps, int max_iterations) {
    const stability::TorusTrajectory tr{{spec1}, sys.n, periodic.zd, periodic.omega};
    const auto seed = stability::ns_torus_init(sys, tr, spec1, spec2, steps, eps);
    const auto flat = stability::ns_torus_init(sys, tr, spec1, spec2, steps, 0.0);
    auto ctx = std::make_shared<const vcf::VcfContext>(sys, std::vector<BasisSpec>{spec1, spec2});
    TorusProblem pb(ctx, {{FrequencyRole::Parameter, seed.omega[0]}, {FrequencyRole::Unknown, seed.omega[1]}});
    const vcf::TorusPoint guess{seed.zd, seed.omega, seed.omega[0], {}, vcf::Stability::Unknown};
    const Vector dir = seed.zd - flat.zd;
    Vector t = Vector::Zero(pb.unknowns());
    t.head(dir.size()) = dir / dir.norm();
    HandOff out;
    out.result = continuation::correct(pb, pb.pack(guess), t, max_iterations, 1e-8);
    out.point = pb.unpack(out.result.x);
    out.tau2_content = ctx->apply_phase1(1, out.point.zd).norm();
    out.omega2 = out.point.omega[1];
    return out;
}

Outcome criterion6() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto bb = beam_branch(8, 10.0, 18.0);
    const BasisSpec spec2 = BasisSpec::harmonic_upto(3, 32);
    std::vector<std::size_t> ns;
    for (std::size_t i = 0; i < bb.tags.tags.size(); ++i)
        if (bb.tags.tags[i] == "NS") ns.push_back(i);
    if (ns.size() < 2) return {false, "fewer than two NS points on the beam branch below 18 rad/s"};

    bool ok = true;
    std::string detail;
    const double eps[2] = {0.30, 0.28};
    for (int k = 0; k < 2; ++k) {
        const auto& pt = bb.branch.points[ns[static_cast<std::size_t>(k)]].point;
        try {
            const auto h = hand_off(bb.sys, bb.specs[0], spec2, pt, eps[k], 2048, kNsIterations);
            const bool good = h.result.converged && h.result.iterations <= kNsIterations && h.tau2_content > 1e-6;
            ok = ok && good;
            detail += "eps " + fmt("%.2f", eps[k]) + " at omega_1 " + fmt("%.3f", pt.p) + ": " +
                      (h.result.converged ? "converged" : "not converged") + " in " + std::to_string(h.result.iterations) +
                      " steps, omega_2 " + fmt("%.3f", h.omega2) + "; ";
        } catch (const Error& e) {
            ok = false;
            detail += "eps " + fmt("%.2f", eps[k]) + ": " + e.what() + "; ";
        }
    }

    // epsilon = 0 embeds the periodic orbit; refine it first so the residual is the seed's own
    const auto& p1 = bb.branch.points[ns[0]].point;
    auto ctx1 = std::make_shared<const vcf::VcfContext>(bb.sys, bb.specs);
    TorusProblem pb1(ctx1, {{FrequencyRole::Parameter, p1.p}});
    const auto refined = continuation::solve_fixed(pb1, pb1.pack(p1), 20, 1e-12);
    const auto periodic = pb1.unpack(refined.x);
    const stability::TorusTrajectory tr{bb.specs, bb.sys.n, periodic.zd, periodic.omega};
    const auto flat = stability::ns_torus_init(bb.sys, tr, bb.specs[0], spec2, 2048, 0.0);
    auto ctx2 = std::make_shared<const vcf::VcfContext>(bb.sys, std::vector<BasisSpec>{bb.specs[0], spec2});
    vcf::VcfOperator op(ctx2, flat.omega);
    aus::NonlinearEvaluator nl(ctx2->system(), ctx2->transform());
    const double res = op.residual(flat.zd, nl).norm();
    ok = ok && res < kRoundTrip;
    detail += "eps 0 round trip residual " + fmt("%.2e", res) + " (limit 1e-8); " + fmt("%.0f", seconds_since(t0)) + " s";
    return {ok, detail};
}

stability::LyapunovOptions lyapunov_options(int count) {
    stability::LyapunovOptions opt;
    opt.j = 0;
    opt.samples = {64};
    opt.iterations = 10000;
    opt.steps = 256;
    opt.count = count;
    return opt;
}

Outcome criterion7() {
    std::string detail;
    bool ok = true;

    // reduced beam: QP points right after the NS hand-off
    {
        const auto bb = beam_branch(2, 10.0, 18.0);
        std::size_t idx = 0;
        bool found = false;
        // the last NS on the way up is where the periodic orbit regains stability
        for (std::size_t i = 0; i < bb.tags.tags.size(); ++i) {
            if (bb.tags.tags[i] == "NS" && bb.tags.reports[i].complex_outside > 0) {
                idx = i;
                found = true;
            }
        }
        if (!found) return {false, "no NS point with an outgoing complex pair on the Ne=2 beam"};
        const BasisSpec spec2 = BasisSpec::harmonic_upto(3, 32);
        const auto h = hand_off(bb.sys, bb.specs[0], spec2, bb.branch.points[idx].point, 0.30, 2048, kNsIterations);
        if (!h.result.converged) return {false, "Ne=2 beam NS seed did not converge"};
        const std::vector<BasisSpec> specs{bb.specs[0], spec2};
        auto ctx = std::make_shared<const vcf::VcfContext>(bb.sys, specs);
        TorusProblem pb(ctx, {{FrequencyRole::Parameter, h.point.p}, {FrequencyRole::Unknown, h.point.omega[1]}});
        continuation::ContinuationOptions opt;
        opt.p_min = 10.0;
        opt.p_max = 18.0;
        opt.max_points = 3;
        opt.step.initial = 0.01;
        opt.step.max = 0.02;
        const auto qp = continuation::continue_branch(pb, h.point, opt);
        double worst = -1e300;
        bool settled = true;
        for (const auto& bp : qp.points) {
            const stability::TorusTrajectory tr{specs, bb.sys.n, bp.point.zd, bp.point.omega};
            const auto rep = stability::lyapunov_exponents(bb.sys, tr, lyapunov_options(4));
            worst = std::max(worst, rep.exponents.front());
            settled = settled && rep.settled;
        }
        ok = ok && !qp.points.empty() && worst <= kExponentMax && settled;
        detail += "beam Ne=2: " + std::to_string(qp.points.size()) + " QP points near omega_1 " + fmt("%.3f", h.point.p) +
                  ", max exponent " + fmt("%.2e", worst) + (settled ? " settled" : " not settled") + "; ";
    }

    // Duffing d=2 at omega_1 = 2.4
    {
        auto ctx = std::make_shared<const vcf::VcfContext>(duffing(2), hb_specs(2));
        TorusProblem pb(ctx, duffing_frequencies(2, 2.4));
        const auto r = duffing_solve(pb, 2, 2.4, nullptr);
        if (!r.converged) return {false, "Duffing d=2 point at 2.4 did not converge"};
        const auto pt = pb.unpack(r.x);
        const stability::TorusTrajectory tr{hb_specs(2), 1, pt.zd, pt.omega};
        const auto rep = stability::lyapunov_exponents(duffing(2), tr, lyapunov_options(2));
        ok = ok && rep.exponents.front() <= kExponentMax && rep.settled;
        detail += "Duffing d=2 at 2.4: max exponent " + fmt("%.3e", rep.exponents.front()) +
                  (rep.settled ? " settled" : " not settled") + "; ";
    }

    // linear system: exponents are the real parts of the eigenvalues
    {
        models::SecondOrderSystem s;
        s.name = "linear";
        s.n = 2;
        s.M0 = s.Theta0 = DenseMatrix::Identity(2, 2);
        s.D0 = DenseMatrix::Zero(2, 2);
        s.K0 = DenseMatrix::Zero(2, 2);
        s.D0.diagonal() << 0.2, 0.6;
        s.K0.diagonal() << 4.0, 9.0;
        s.output = Vector::Ones(2);
        const BasisSpec hb = BasisSpec::harmonic_upto(1, 4);
        const stability::TorusTrajectory tr{{hb, hb}, 2, Vector::Zero(18), {1.3, 1.3 / std::sqrt(5.0)}};
        auto opt = lyapunov_options(4);
        opt.samples = {4};
        opt.iterations = 2000;
        opt.steps = 64;
        const auto rep = stability::lyapunov_exponents(s, tr, opt);
        const double expect[4] = {-0.1, -0.1, -0.3, -0.3};
        double err = 0.0;
        for (int k = 0; k < 4; ++k) err = std::max(err, std::abs(rep.exponents[static_cast<std::size_t>(k)] - expect[k]));
        ok = ok && err <= kLinearExponentTol;
        detail += "linear oracle max error " + fmt("%.2e", err) + " (limit 1e-3)";
    }
    return {ok, detail};
}

Outcome criterion8() {
    const double printed[4] = {1.0, 71.5, 6297.6, 5782192.5};
    bool ok = true;
    std::string detail;
    for (int d = 1; d <= 4; ++d) {
        const double r = aus::operation_ratio(d, 32, 11);
        // printed precision is one decimal place
        const double rounded = std::round(r * 10.0) / 10.0;
        const bool match = std::abs(rounded - printed[d - 1]) < 1e-9 * std::max(1.0, printed[d - 1]);
        ok = ok && match;
        detail += "d=" + std::to_string(d) + " " + fmt("%.1f", rounded) + (match ? "" : " vs printed " + fmt("%.1f", printed[d - 1])) + "; ";
    }
    return {ok, detail + "S=32, U=11"};
}

// ---------------------------------------------------------------------------
// property suites

std::vector<std::vector<BasisSpec>> spec_sets() {
    return {
        {BasisSpec::harmonic_upto(3, 8)},
        {BasisSpec::harmonic_upto(2, 7), BasisSpec::harmonic({1, 3}, 9)},
        {BasisSpec::collocation(3, 2), BasisSpec::harmonic_upto(1, 4)},
        {BasisSpec::finite_difference({-1, 0, 1}, 5), BasisSpec::collocation(2, 3)},
        {BasisSpec::harmonic_upto(1, 3), BasisSpec::finite_difference({-2, -1, 0, 1}, 4), BasisSpec::collocation(2, 2)},
    };
}

models::SecondOrderSystem linear_force_system(int n, const DenseMatrix& A, const DenseMatrix& B) {
    models::SecondOrderSystem s;
    s.name = "lin";
    s.n = n;
    s.M0 = s.K0 = s.Theta0 = DenseMatrix::Identity(n, n);
    s.D0 = DenseMatrix::Zero(n, n);
    s.force = std::make_shared<models::LinearForce>(A, B);
    s.output = Vector::Ones(n);
    return s;
}

struct Tally {
    int failed = 0;
    std::vector<std::string> notes;
    void check(bool ok, const std::string& what) {
        if (!ok) {
            ++failed;
            notes.push_back(what);
        }
    }
};

void gamma_round_trips(Tally& t) {
    double worst = 0.0;
    for (const auto& spec : {BasisSpec::harmonic_upto(5, 32), BasisSpec::harmonic({1, 3, 4}, 9), BasisSpec::collocation(8, 4),
                             BasisSpec::collocation(4, 3), BasisSpec::finite_difference({-3, -2, -1, 0, 1}, 32)}) {
        const auto b = basis::build(spec);
        const auto U = b.gamma0inv.rows();
        worst = std::max(worst, (b.gamma0inv * b.gamma0 - DenseMatrix::Identity(U, U)).cwiseAbs().maxCoeff());
        if (spec.kind == basis::BasisKind::HB) worst = std::max(worst, (b.gamma1 - b.gamma0 * b.ups1).cwiseAbs().maxCoeff());
    }
    t.check(worst <= kRoundTripGamma, "Gamma round trip " + fmt("%.1e", worst));
}

void jacobians(Tally& t) {
    double worst = 0.0;
    // model Jacobians at 20 random states
    const std::vector<models::SecondOrderSystem> systems{duffing(2), models::beam_system({.elements = 3}),
                                                         models::pipe_system({.modes = 3, .flow_velocity = 2.0})};
    for (const auto& s : systems) {
        const int n = s.n;
        for (int trial = 0; trial < 20; ++trial) {
            const Vector z = random_vector(n, 0.5), v = random_vector(n, 0.5);
            DenseMatrix jz(n, n), jv(n, n);
            s.force_jacobian_at({z.data(), static_cast<std::size_t>(n)}, {v.data(), static_cast<std::size_t>(n)},
                                {jz.data(), static_cast<std::size_t>(n * n)}, {jv.data(), static_cast<std::size_t>(n * n)});
            auto f = [&](const Vector& zz, const Vector& vv) {
                Vector out(n);
                s.force_at({zz.data(), static_cast<std::size_t>(n)}, {vv.data(), static_cast<std::size_t>(n)},
                           {out.data(), static_cast<std::size_t>(n)});
                return out;
            };
            worst = std::max(worst, rel_err(jz, fd_jacobian([&](const Vector& x) { return f(x, v); }, z)));
            worst = std::max(worst, rel_err(jv, fd_jacobian([&](const Vector& x) { return f(z, x); }, v)));
        }
    }
    t.check(worst <= kJacobianTol, "model Jacobians " + fmt("%.1e", worst));

    // jacobian_z, jacobian_omega and stu2 (through the evaluator) at 20 random states
    double wz = 0.0, ww = 0.0, ws = 0.0;
    const auto sets = spec_sets();
    for (int trial = 0; trial < 20; ++trial) {
        const auto& specs = sets[static_cast<std::size_t>(trial) % sets.size()];
        const int d = static_cast<int>(specs.size());
        auto ctx = std::make_shared<const vcf::VcfContext>(duffing(d), specs);
        aus::NonlinearEvaluator nl(ctx->system(), ctx->transform());
        const auto N = static_cast<Eigen::Index>(ctx->coeff_size());
        const Vector z = random_vector(N, 0.8);
        std::vector<double> omega(static_cast<std::size_t>(d));
        for (auto& w : omega) w = 0.8 + std::abs(random_vector(1)(0));
        vcf::VcfOperator op(ctx, omega);
        wz = std::max(wz, rel_err(op.jacobian_z(z, nl), fd_jacobian([&](const Vector& x) { return op.residual(x, nl); }, z)));
        for (int i = 0; i < d; ++i) {
            auto f = [&](const Vector& w) {
                auto o = omega;
                o[static_cast<std::size_t>(i)] = w(0);
                return vcf::VcfOperator(ctx, o).residual(z, nl);
            };
            ww = std::max(ww, rel_err(op.jacobian_omega(i, z, nl), fd_jacobian(f, Vector::Constant(1, omega[static_cast<std::size_t>(i)]))));
        }
        const auto res = nl.evaluate(z, omega, true);
        ws = std::max(ws, rel_err(res.dfd, fd_jacobian([&](const Vector& x) { return nl.evaluate(x, omega, false).fd; }, z)));
    }
    t.check(wz <= kJacobianTol, "jacobian_z " + fmt("%.1e", wz));
    t.check(ww <= kJacobianTol, "jacobian_omega " + fmt("%.1e", ww));
    t.check(ws <= kJacobianTol, "stu2 " + fmt("%.1e", ws));
}

void linear_map_exactness(Tally& t) {
    double worst = 0.0;
    for (const auto& specs : spec_sets()) {
        const int n = 2;
        const auto s = linear_force_system(n, random_matrix(n, n), random_matrix(n, n));
        const aus::AusTransform tf(n, specs);
        aus::NonlinearEvaluator nl(s, tf);
        const Vector om = random_vector(static_cast<Eigen::Index>(specs.size())).cwiseAbs().array() + 0.5;
        const std::vector<double> omega(om.data(), om.data() + om.size());
        const auto N = static_cast<Eigen::Index>(tf.coeff_size());
        const DenseMatrix J = nl.evaluate(Vector::Zero(N), omega, true).dfd;
        DenseMatrix exact(N, N);
        for (Eigen::Index c = 0; c < N; ++c) exact.col(c) = nl.evaluate(Vector::Unit(N, c), omega, false).fd;
        worst = std::max(worst, (J - exact).cwiseAbs().maxCoeff() / std::max(1.0, exact.cwiseAbs().maxCoeff()));
        // uts followed by stu1 is the identity on coefficients
        const Vector zd = random_vector(N);
        Vector z0, z0dot;
        tf.uts(zd, omega, z0, z0dot);
        worst = std::max(worst, (tf.stu1(z0) - zd).cwiseAbs().maxCoeff());
    }
    t.check(worst <= kLinearMapTol, "AUS linear map " + fmt("%.1e", worst));
}

void fd_order(Tally& t) {
    // observed order of the first-derivative stencils against their nominal order
    const std::vector<std::pair<std::vector<int>, int>> cases{{{-1, 0, 1}, 2}, {{-2, -1, 0, 1, 2}, 4}, {{-3, -2, -1, 0, 1}, 4}};
    for (const auto& [K, order] : cases) {
        std::vector<double> errs;
        for (int U : {32, 64, 128}) {
            const auto b = basis::build(BasisSpec::finite_difference(K, U));
            Vector z(U), dz(U);
            for (int j = 0; j < U; ++j) {
                const double tau = 2 * kPi * j / U;
                z(j) = std::cos(3 * tau);
                dz(j) = -3 * std::sin(3 * tau);
            }
            errs.push_back((b.ups1 * z - dz).cwiseAbs().maxCoeff());
        }
        const double observed = std::log2(errs[1] / errs[2]);
        t.check(std::abs(observed - order) < 0.2, "FD order " + fmt("%.2f", observed) + " vs " + std::to_string(order));
    }
}

void relayout_bijective(Tally& t) {
    for (auto [n, S, U] : {std::array<std::size_t, 3>{1, 4, 3}, {3, 5, 7}, {2, 8, 11}, {4, 32, 15}}) {
        std::vector<double> data(n * S * U);
        std::iota(data.begin(), data.end(), 0.0);
        const std::array<std::size_t, 3> fwd{2, 0, 1}, inv{1, 2, 0};
        const auto moved = tensorkit::relayout(data, {n, S, U}, fwd, {U, n * S});
        const auto back = tensorkit::relayout(moved, {U, n, S}, inv, {n * S, U});
        auto sorted = moved;
        std::sort(sorted.begin(), sorted.end());
        t.check(back == data && sorted == data, "relayout not a bijection");
    }
}

void phase_row_identity(Tally& t) {
    auto ctx = std::make_shared<const vcf::VcfContext>(
        duffing(2), std::vector<BasisSpec>{BasisSpec::harmonic_upto(2, 8), BasisSpec::harmonic_upto(3, 8)});
    const auto N = static_cast<Eigen::Index>(ctx->coeff_size());
    double worst = 0.0;
    bool positive = true;
    for (int trial = 0; trial < 20; ++trial) {
        for (int i = 0; i < 2; ++i) {
            const Vector z = random_vector(N);
            const Vector l1 = ctx->apply_phase1(i, z), l2 = ctx->apply_phase2(i, z);
            const double lhs = l1.dot(l1) + l2.dot(ctx->apply_phase1(i, l1));
            const double rhs = l1.squaredNorm() + l2.squaredNorm();
            worst = std::max(worst, std::abs(lhs - rhs) / rhs);
            positive = positive && lhs > 0.0;
        }
    }
    t.check(worst < 1e-12 && positive, "phase-row identity " + fmt("%.1e", worst));
}

Outcome criterion9() {
    Tally t;
    gamma_round_trips(t);
    jacobians(t);
    linear_map_exactness(t);
    fd_order(t);
    relayout_bijective(t);
    phase_row_identity(t);
    std::string detail = "Gamma round trips, Jacobians vs finite differences, AUS linear maps, FD order, relayout, phase rows";
    for (const auto& n : t.notes) detail += "; failed: " + n;
    return {t.failed == 0, detail};
}

Outcome run(int id) {
    switch (id) {
        case 1: return criterion1();
        case 2: return criterion2();
        case 3: return criterion3();
        case 4: return criterion4();
        case 5: return criterion5();
        case 6: return criterion6();
        case 7: return criterion7();
        case 8: return criterion8();
        case 9: return criterion9();
        default: return {false, "unknown criterion"};
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    int failures = 0;
    for (int id : ids) {
        Outcome o;
        try {
            o = run(id);
        } catch (const std::exception& e) {
            o = {false, e.what()};
        }
        std::printf("criterion %d: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
