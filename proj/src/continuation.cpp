#include "qptorus/continuation.hpp"

#include "qptorus/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace qpt::continuation {

std::string to_string(FrequencyRole role) {
    switch (role) {
        case FrequencyRole::Parameter: return "parameter";
        case FrequencyRole::Ratio: return "ratio";
        case FrequencyRole::Unknown: return "unknown";
        case FrequencyRole::Fixed: return "fixed";
    }
    return "fixed";
}

FrequencyRole frequency_role_from_string(const std::string& s) {
    if (s == "parameter") return FrequencyRole::Parameter;
    if (s == "ratio") return FrequencyRole::Ratio;
    if (s == "unknown") return FrequencyRole::Unknown;
    if (s == "fixed") return FrequencyRole::Fixed;
    fail(ErrorCode::ConfigError, "unknown frequency role '" + s + "'");
}

// ---------------------------------------------------------------------------

TorusProblem::TorusProblem(std::shared_ptr<const vcf::VcfContext> ctx, std::vector<FrequencySetup> frequencies)
    : specs_(ctx->specs()), freqs_(std::move(frequencies)) {
    d_ = ctx->d();
    N_ = static_cast<Eigen::Index>(ctx->coeff_size());
    nx_ = N_ + d_;
    int param = -1;
    for (int i = 0; i < static_cast<int>(freqs_.size()); ++i) {
        if (freqs_[static_cast<std::size_t>(i)].role == FrequencyRole::Parameter) {
            if (param >= 0) fail(ErrorCode::ConstraintMismatch, "more than one frequency is marked as the parameter");
            param = i;
        }
    }
    if (param < 0) fail(ErrorCode::ConstraintMismatch, "no frequency is marked as the continuation parameter");
    p_index_ = N_ + param;
    Slot s;
    s.ctx = std::move(ctx);
    s.nl = std::make_unique<aus::NonlinearEvaluator>(s.ctx->system(), s.ctx->transform());
    slots_.push_back(std::move(s));
    check_roles();
}

TorusProblem::TorusProblem(SystemFactory factory, std::vector<basis::BasisSpec> specs,
                           std::vector<FrequencySetup> frequencies, double p0)
    : factory_(std::move(factory)), specs_(std::move(specs)), freqs_(std::move(frequencies)) {
    auto& s = slot(p0);
    d_ = s.ctx->d();
    N_ = static_cast<Eigen::Index>(s.ctx->coeff_size());
    nx_ = N_ + d_ + 1;
    p_index_ = nx_ - 1;
    for (const auto& f : freqs_) {
        if (f.role == FrequencyRole::Parameter) {
            fail(ErrorCode::ConstraintMismatch, "a model parameter is continued, so no frequency may be the parameter");
        }
    }
    check_roles();
}

void TorusProblem::check_roles() const {
    if (static_cast<int>(freqs_.size()) != d_) fail(ErrorCode::ConstraintMismatch, "one frequency setup per torus dimension expected");
    const int e = slots_.front().ctx->system().excitation_count();
    for (int i = 0; i < d_; ++i) {
        const auto& f = freqs_[static_cast<std::size_t>(i)];
        if (f.role == FrequencyRole::Unknown && i < e) {
            fail(ErrorCode::ConstraintMismatch, "frequency " + std::to_string(i + 1) + " is imposed by the excitation and cannot be unknown");
        }
        if (f.role == FrequencyRole::Ratio) {
            if (f.reference < 0 || f.reference >= d_ || f.reference == i) {
                fail(ErrorCode::ConstraintMismatch, "ratio of frequency " + std::to_string(i + 1) + " has an invalid reference");
            }
            if (!(f.ratio > 0.0)) fail(ErrorCode::ConstraintMismatch, "frequency ratios must be positive");
        }
    }
    // rows before the continuation row must number unknowns - 1
    Eigen::Index rows = N_;
    for (const auto& f : freqs_) rows += f.role == FrequencyRole::Parameter ? 0 : 1;
    if (rows != nx_ - 1) fail(ErrorCode::ConstraintMismatch, "constraint rows do not match the unknown count");
}

int TorusProblem::phase_row_count() const {
    return static_cast<int>(std::count_if(freqs_.begin(), freqs_.end(),
                                          [](const FrequencySetup& f) { return f.role == FrequencyRole::Unknown; }));
}

TorusProblem::Slot& TorusProblem::slot(double p) {
    if (!factory_) return slots_.front();
    for (auto& s : slots_) {
        if (s.p == p) return s;
    }
    Slot s;
    s.p = p;
    s.ctx = std::make_shared<const vcf::VcfContext>(factory_(p), specs_);
    s.nl = std::make_unique<aus::NonlinearEvaluator>(s.ctx->system(), s.ctx->transform());
    slots_.insert(slots_.begin(), std::move(s));
    if (slots_.size() > 2) slots_.pop_back();
    return slots_.front();
}

std::shared_ptr<const vcf::VcfContext> TorusProblem::context(double p) { return slot(p).ctx; }

Vector TorusProblem::pack(const vcf::TorusPoint& pt) const {
    if (pt.zd.size() != N_ || static_cast<int>(pt.omega.size()) != d_) fail(ErrorCode::ShapeError, "torus point does not fit the problem");
    Vector x(nx_);
    x.head(N_) = pt.zd;
    for (int i = 0; i < d_; ++i) x(N_ + i) = pt.omega[static_cast<std::size_t>(i)];
    if (factory_) x(p_index_) = pt.p;
    return x;
}

vcf::TorusPoint TorusProblem::unpack(const Vector& x) const {
    vcf::TorusPoint pt;
    pt.zd = x.head(N_);
    pt.omega.assign(x.data() + N_, x.data() + N_ + d_);
    pt.p = x(p_index_);
    return pt;
}

void TorusProblem::set_reference(const Vector& zd) {
    reference_ = zd;
    const auto& ctx = *slots_.front().ctx;
    phase_rows_.resize(phase_row_count(), N_);
    int row = 0;
    for (int i = 0; i < d_; ++i) {
        if (freqs_[static_cast<std::size_t>(i)].role != FrequencyRole::Unknown) continue;
        const auto& b = ctx.bases()[static_cast<std::size_t>(i)];
        const Vector l1 = ctx.apply_phase1(i, zd);
        Vector ell = l1 + ctx.apply_on_dimension(i, b.phase1.transpose(), ctx.apply_phase2(i, zd));
        if (ell.norm() <= 1e-10 * std::max(1.0, zd.norm())) {
            // degenerate torus direction: pin one coefficient instead
            Eigen::Index k = 0;
            if (l1.cwiseAbs().maxCoeff(&k) <= 1e-14) {
                Eigen::Index stride = 1;
                for (int j = d_ - 1; j > i; --j) stride *= specs_[static_cast<std::size_t>(j)].U;
                k = std::min(2, specs_[static_cast<std::size_t>(i)].U - 1) * stride;
            }
            ell = Vector::Unit(N_, k);
        }
        phase_rows_.row(row++) = ell.transpose();
    }
}

Vector TorusProblem::torus_residual(Slot& s, const Vector& zd, const std::vector<double>& omega) {
    vcf::VcfOperator op(s.ctx, omega);
    return op.residual(zd, *s.nl);
}

TorusProblem::Evaluation TorusProblem::evaluate(const Vector& x, bool jacobian) {
    if (x.size() != nx_) fail(ErrorCode::ShapeError, "unknown vector has the wrong length");
    if (reference_.size() != N_ && phase_row_count() > 0) set_reference(x.head(N_));
    const Vector zd = x.head(N_);
    const std::vector<double> omega(x.data() + N_, x.data() + N_ + d_);
    const double p = x(p_index_);
    auto& s = slot(p);

    Evaluation ev;
    ev.F.resize(nx_ - 1);
    if (jacobian) ev.G = DenseMatrix::Zero(nx_ - 1, nx_);
    {
        vcf::VcfOperator op(s.ctx, omega);
        if (jacobian) {
            auto lin = op.linearize(zd, *s.nl);
            ev.F.head(N_) = lin.R;
            ev.G.topLeftCorner(N_, N_) = lin.Jz;
            for (int i = 0; i < d_; ++i) ev.G.block(0, N_ + i, N_, 1) = lin.Jw[static_cast<std::size_t>(i)];
        } else {
            ev.F.head(N_) = op.residual(zd, *s.nl);
        }
    }
    if (jacobian && factory_) {
        // one-sided difference in the model parameter
        const double h = 1e-7 * std::max(1.0, std::abs(p));
        const Vector r0 = ev.F.head(N_);
        auto& sh = slot(p + h);
        ev.G.block(0, p_index_, N_, 1) = (torus_residual(sh, zd, omega) - r0) / h;
    }

    Eigen::Index row = N_;
    int phase = 0;
    for (int i = 0; i < d_; ++i) {
        const auto& f = freqs_[static_cast<std::size_t>(i)];
        switch (f.role) {
            case FrequencyRole::Parameter: continue;
            case FrequencyRole::Ratio:
                ev.F(row) = omega[static_cast<std::size_t>(f.reference)] - f.ratio * omega[static_cast<std::size_t>(i)];
                if (jacobian) {
                    ev.G(row, N_ + f.reference) = 1.0;
                    ev.G(row, N_ + i) = -f.ratio;
                }
                break;
            case FrequencyRole::Fixed:
                ev.F(row) = omega[static_cast<std::size_t>(i)] - f.value;
                if (jacobian) ev.G(row, N_ + i) = 1.0;
                break;
            case FrequencyRole::Unknown:
                ev.F(row) = phase_rows_.row(phase).dot(zd - reference_);
                if (jacobian) ev.G.block(row, 0, 1, N_) = phase_rows_.row(phase);
                ++phase;
                break;
        }
        ++row;
    }
    return ev;
}

double TorusProblem::amplitude(const vcf::TorusPoint& pt) {
    const auto ctx = context(pt.p);
    Vector z0, z0dot;
    ctx->transform().uts(pt.zd, pt.omega, z0, z0dot);
    const auto n = static_cast<Eigen::Index>(ctx->n());
    const Eigen::Map<const DenseMatrix> grid(z0.data(), n, z0.size() / n);
    return (ctx->system().output.transpose() * grid).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

namespace {

bool finite(const Vector& v) { return v.allFinite(); }

bool frequencies_positive(const TorusProblem& problem, const Vector& x) {
    for (int i = 0; i < problem.d(); ++i) {
        if (!(x(problem.coeff_size() + i) > 0.0)) return false;
    }
    return true;
}

}  // namespace

NewtonResult solve_fixed(TorusProblem& problem, const Vector& x0, int max_iterations, double tolerance) {
    NewtonResult out;
    out.x = x0;
    const Eigen::Index nx = problem.unknowns(), pi = problem.p_index();
    for (int it = 0;; ++it) {
        auto ev = problem.evaluate(out.x, it < max_iterations);
        out.residual = ev.F.norm();
        out.iterations = it;
        if (!std::isfinite(out.residual)) return out;
        if (out.residual < tolerance) {
            out.converged = true;
            return out;
        }
        if (it >= max_iterations) return out;
        DenseMatrix A(nx, nx);
        A.topRows(nx - 1) = ev.G;
        A.row(nx - 1).setZero();
        A(nx - 1, pi) = 1.0;
        Vector rhs(nx);
        rhs.head(nx - 1) = -ev.F;
        rhs(nx - 1) = x0(pi) - out.x(pi);
        const Vector dx = A.partialPivLu().solve(rhs);
        if (!finite(dx)) return out;
        out.x += dx;
    }
}

Vector tangent(TorusProblem& problem, const Vector& x, const Vector* previous, int direction) {
    const Eigen::Index nx = problem.unknowns(), pi = problem.p_index();
    const auto ev = problem.evaluate(x, true);
    DenseMatrix A(nx, nx);
    A.topRows(nx - 1) = ev.G;
    if (previous) {
        A.row(nx - 1) = previous->transpose();
    } else {
        A.row(nx - 1).setZero();
        A(nx - 1, pi) = 1.0;
    }
    const Eigen::FullPivLU<DenseMatrix> lu(A);
    if (!lu.isInvertible()) fail(ErrorCode::FoldHandling, "bordered tangent system is singular");
    Vector t = lu.solve(Vector::Unit(nx, nx - 1));
    if (!finite(t) || t.norm() == 0.0) fail(ErrorCode::FoldHandling, "bordered tangent system is singular");
    t.normalize();
    if (previous) {
        if (t.dot(*previous) < 0.0) t = -t;
    } else if (t(pi) * direction < 0.0) {
        t = -t;
    }
    return t;
}

Vector normalize_tangent(const Vector& t, Eigen::Index p_index, Normalization mode) {
    const Vector u = t.normalized();
    if (mode == Normalization::Parameter && std::abs(u(p_index)) >= 0.05) return u / std::abs(u(p_index));
    return u;
}

Vector metric_weights(const TorusProblem& problem) {
    Vector w = Vector::Ones(1);
    for (const auto& spec : problem.specs()) {
        Vector wi(spec.U);
        if (spec.kind == basis::BasisKind::HB) {
            wi.setConstant(1.0 / std::sqrt(2.0));
            wi(0) = 1.0;
        } else {
            wi.setConstant(1.0 / std::sqrt(static_cast<double>(spec.U)));
        }
        w = tensorkit::kron(w, wi);
    }
    Vector out = Vector::Ones(problem.unknowns());
    const Eigen::Index N = problem.coeff_size();
    for (Eigen::Index k = 0; k < N; ++k) out(k) = w(k % w.size());
    return out;
}

NewtonResult correct(TorusProblem& problem, const Vector& predicted, const Vector& t, int max_iterations,
                     double tolerance) {
    NewtonResult out;
    out.x = predicted;
    const Eigen::Index nx = problem.unknowns();
    for (int it = 0;; ++it) {
        auto ev = problem.evaluate(out.x, it < max_iterations);
        out.residual = ev.F.norm();
        out.iterations = it;
        if (!std::isfinite(out.residual) || out.residual > 1e12) return out;
        if (out.residual < tolerance) {
            out.converged = true;
            return out;
        }
        if (it >= max_iterations) return out;
        DenseMatrix A(nx, nx);
        A.topRows(nx - 1) = ev.G;
        A.row(nx - 1) = t.transpose();
        Vector rhs(nx);
        rhs.head(nx - 1) = -ev.F;
        rhs(nx - 1) = -t.dot(out.x - predicted);
        const Vector dx = A.partialPivLu().solve(rhs);
        if (!finite(dx)) return out;
        out.x += dx;
    }
}

Branch continue_branch(TorusProblem& problem, const vcf::TorusPoint& seed, const ContinuationOptions& opt,
                       const std::function<void(const BranchPoint&)>& on_point) {
    if (!(opt.tolerance > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
    if (!(opt.step.min > 0.0 && opt.step.min <= opt.step.initial && opt.step.initial <= opt.step.max)) {
        fail(ErrorCode::InvalidArgument, "step sizes must satisfy 0 < min <= initial <= max");
    }
    const auto start = std::chrono::steady_clock::now();
    const Eigen::Index pi = problem.p_index();
    Branch branch;
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    Vector x = problem.pack(seed);
    problem.set_reference(seed.zd);
    {
        BranchPoint bp;
        bp.point = problem.unpack(x);
        bp.residual = problem.evaluate(x, false).F.norm();
        bp.amplitude = problem.amplitude(bp.point);
        bp.point.tangent = Vector();
        branch.points.push_back(bp);
    }
    const bool in_range = x(pi) >= opt.p_min && x(pi) <= opt.p_max;
    if (!(opt.p_max > opt.p_min) || !in_range || opt.max_points <= 1) {
        if (on_point) on_point(branch.points.back());
        branch.seconds = elapsed();
        return branch;
    }

    // squared metric weights; the plain norm unless scaled
    const bool scaled = opt.normalization == Normalization::Scaled;
    const Vector w2 = scaled ? Vector(metric_weights(problem).cwiseAbs2()) : Vector();
    auto wnorm = [&](const Vector& v) { return scaled ? std::sqrt(v.cwiseAbs2().dot(w2)) : v.norm(); };
    auto row = [&](const Vector& v) { return scaled ? Vector(w2.cwiseProduct(v)) : v; };

    Vector t;
    try {
        t = tangent(problem, x, nullptr, opt.direction >= 0 ? 1 : -1);
        if (scaled) t /= wnorm(t);
    } catch (const Error& e) {
        branch.stalled = true;
        branch.message = e.what();
        branch.seconds = elapsed();
        return branch;
    }
    branch.points.back().point.tangent = t;
    if (on_point) on_point(branch.points.back());

    double s = std::clamp(opt.step.initial, opt.step.min, opt.step.max);
    while (static_cast<int>(branch.points.size()) < opt.max_points) {
        const Vector tn = scaled ? t : normalize_tangent(t, pi, opt.normalization);
        const Vector pred = x + s * tn;
        NewtonResult res;
        bool ok = frequencies_positive(problem, pred);
        if (ok) {
            res = correct(problem, pred, row(tn), opt.max_iterations, opt.tolerance);
            branch.total_iterations += res.iterations;
            ok = res.converged && frequencies_positive(problem, res.x) && wnorm(res.x - pred) <= s * wnorm(tn);
        }
        Vector t_new;
        if (ok) {
            try {
                problem.set_reference(res.x.head(problem.coeff_size()));
                const Vector prev = row(t);
                t_new = tangent(problem, res.x, &prev, 0);
                if (scaled) t_new /= wnorm(t_new);
            } catch (const Error&) {
                problem.set_reference(x.head(problem.coeff_size()));
                ok = false;
            }
        }
        if (!ok) {
            s *= opt.step.shrink;
            if (s < opt.step.min) {
                branch.stalled = true;
                branch.message = "corrector failed at the minimum step near p = " + std::to_string(x(pi));
                break;
            }
            continue;
        }
        const double p_new = res.x(pi);
        if (p_new < opt.p_min || p_new > opt.p_max) {
            problem.set_reference(x.head(problem.coeff_size()));
            break;
        }
        BranchPoint bp;
        bp.point = problem.unpack(res.x);
        bp.point.tangent = t_new;
        bp.residual = res.residual;
        bp.iterations = res.iterations;
        bp.step = s;
        bp.amplitude = problem.amplitude(bp.point);
        branch.points.push_back(bp);
        if (on_point) on_point(bp);
        x = res.x;
        t = t_new;
        if (res.iterations <= opt.step.fast_iterations) s = std::min(s * opt.step.grow, opt.step.max);
    }
    branch.seconds = elapsed();
    return branch;
}

double weighted_median_amplitude(const Branch& branch) {
    const auto& pts = branch.points;
    if (pts.empty()) return 0.0;
    if (pts.size() == 1) return pts.front().amplitude;
    std::vector<std::pair<double, double>> aw;  // amplitude, weight
    double total = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        double w = 0.0;
        if (k > 0) w += 0.5 * std::abs(pts[k].point.p - pts[k - 1].point.p);
        if (k + 1 < pts.size()) w += 0.5 * std::abs(pts[k + 1].point.p - pts[k].point.p);
        aw.emplace_back(pts[k].amplitude, w);
        total += w;
    }
    if (total == 0.0) {
        for (auto& [a, w] : aw) w = 1.0;
        total = static_cast<double>(aw.size());
    }
    std::sort(aw.begin(), aw.end());
    double acc = 0.0;
    for (const auto& [a, w] : aw) {
        acc += w;
        if (acc >= 0.5 * total) return a;
    }
    return aw.back().first;
}

int count_peaks(const Branch& branch, double factor) {
    // Each excursion above the threshold counts once, provided its maximum is
    // an interior point; grid-sampled amplitudes jitter near a crest.
    const auto& pts = branch.points;
    const double threshold = factor * weighted_median_amplitude(branch);
    int peaks = 0;
    std::size_t k = 0;
    while (k < pts.size()) {
        if (pts[k].amplitude <= threshold) {
            ++k;
            continue;
        }
        std::size_t best = k;
        while (k < pts.size() && pts[k].amplitude > threshold) {
            if (pts[k].amplitude > pts[best].amplitude) best = k;
            ++k;
        }
        if (best > 0 && best + 1 < pts.size()) ++peaks;
    }
    return peaks;
}

}  // namespace qpt::continuation
