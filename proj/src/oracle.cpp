#include "qptorus/oracle.hpp"

#include "qptorus/error.hpp"

#include <Eigen/LU>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace qpt::oracle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Field {
public:
    Field(const models::SecondOrderSystem& sys, std::span<const double> omega)
        : sys_(sys), omega_(omega.begin(), omega.end()), lu_(sys.M0), f_(sys.n), e_(sys.n),
          tau_(static_cast<std::size_t>(sys.excitation_count())) {
        if (static_cast<int>(omega_.size()) < sys.excitation_count()) {
            fail(ErrorCode::InvalidArgument, "integrate: one frequency per excitation phase");
        }
    }

    Vector operator()(double t, const Vector& x) {
        const int n = sys_.n;
        const Vector z = x.head(n), v = x.tail(n);
        Vector rhs = -(sys_.D0 * v + sys_.K0 * z);
        f_.setZero();
        if (sys_.force) sys_.force_at(span(z), span(v), {f_.data(), static_cast<std::size_t>(n)});
        e_.setZero();
        if (sys_.excitation) {
            for (std::size_t i = 0; i < tau_.size(); ++i) tau_[i] = std::fmod(omega_[i] * t, kTwoPi);
            sys_.excitation_at(tau_, omega_, {e_.data(), static_cast<std::size_t>(n)});
        }
        rhs -= sys_.Theta0 * (f_ - e_);
        Vector out(2 * n);
        out.head(n) = v;
        out.tail(n) = lu_.solve(rhs);
        return out;
    }

private:
    static std::span<const double> span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

    const models::SecondOrderSystem& sys_;
    std::vector<double> omega_;
    Eigen::PartialPivLU<DenseMatrix> lu_;
    Vector f_, e_;
    std::vector<double> tau_;
};

// Flat-top window coefficients (amplitude accurate to ~1e-4 between bins).
std::vector<double> flat_top(std::size_t N) {
    constexpr double a[] = {0.21557895, 0.41663158, 0.277263158, 0.083578947, 0.006947368};
    std::vector<double> w(N);
    for (std::size_t k = 0; k < N; ++k) {
        const double x = kTwoPi * static_cast<double>(k) / static_cast<double>(N);
        w[k] = a[0] - a[1] * std::cos(x) + a[2] * std::cos(2 * x) - a[3] * std::cos(3 * x) + a[4] * std::cos(4 * x);
    }
    return w;
}

}  // namespace

TiRun integrate(const models::SecondOrderSystem& sys, std::span<const double> omega, const Vector& x0,
                double transient, double window, double dt) {
    sys.validate();
    if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "integrate: dt must be positive");
    if (transient < 0.0 || window < 0.0) fail(ErrorCode::InvalidArgument, "integrate: negative duration");
    if (x0.size() != 2 * sys.n) fail(ErrorCode::ShapeError, "integrate: initial state must have 2n entries");
    Field f(sys, omega);

    const auto skip = static_cast<long long>(std::llround(transient / dt));
    const auto keep = static_cast<Eigen::Index>(std::floor(window / dt + 1e-9));
    TiRun run;
    run.n = sys.n;
    run.dt = dt;
    run.transient = static_cast<double>(skip) * dt;
    run.omega.assign(omega.begin(), omega.end());
    run.states.resize(keep, 2 * sys.n);

    Vector x = x0;
    long long step = 0;
    auto advance = [&] {
        const double t = static_cast<double>(step) * dt;
        const Vector k1 = f(t, x);
        const Vector k2 = f(t + dt / 2, x + dt / 2 * k1);
        const Vector k3 = f(t + dt / 2, x + dt / 2 * k2);
        const Vector k4 = f(t + dt, x + dt * k3);
        x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        ++step;
        if (!x.allFinite()) fail(ErrorCode::Blowup, "time integration produced a non-finite state at t = " + std::to_string(step * dt));
    };
    while (step < skip) advance();
    for (Eigen::Index k = 0; k < keep; ++k) {
        run.states.row(k) = x.transpose();
        if (k + 1 < keep) advance();
    }
    return run;
}

Vector torus_state(const std::vector<basis::BasisSpec>& specs, int n, const Vector& zd, std::span<const double> omega,
                   double t) {
    DenseMatrix taus(1, static_cast<Eigen::Index>(specs.size()));
    for (std::size_t i = 0; i < specs.size(); ++i) taus(0, static_cast<Eigen::Index>(i)) = std::fmod(omega[i] * t, kTwoPi);
    DenseMatrix z, zdot;
    vcf::synthesize(specs, n, zd, omega, taus, z, &zdot);
    Vector x(2 * n);
    x.head(n) = z.row(0).transpose();
    x.tail(n) = zdot.row(0).transpose();
    return x;
}

DenseMatrix sample_torus(const std::vector<basis::BasisSpec>& specs, int n, const Vector& zd,
                         std::span<const double> omega, const TiRun& run) {
    const auto d = static_cast<Eigen::Index>(specs.size());
    DenseMatrix taus(run.samples(), d);
    for (Eigen::Index k = 0; k < run.samples(); ++k) {
        for (Eigen::Index i = 0; i < d; ++i) taus(k, i) = std::fmod(omega[static_cast<std::size_t>(i)] * run.time(k), kTwoPi);
    }
    DenseMatrix z, zdot;
    vcf::synthesize(specs, n, zd, omega, taus, z, &zdot);
    DenseMatrix out(run.samples(), 2 * n);
    out << z, zdot;
    return out;
}

Spectrum spectrum(std::span<const double> signal, double dt, double omega1, double floor) {
    Spectrum s;
    const std::size_t N = signal.size();
    if (N < 8) return s;
    const auto w = flat_top(N);
    double wsum = 0.0;
    std::vector<double> x(N);
    for (std::size_t k = 0; k < N; ++k) {
        x[k] = signal[k] * w[k];
        wsum += w[k];
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> X;
    fft.fwd(X, x);
    const std::size_t half = N / 2 + 1;
    const double df = kTwoPi / (static_cast<double>(N) * dt);
    s.ratio.resize(half);
    s.amplitude.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
        s.ratio[k] = static_cast<double>(k) * df / omega1;
        s.amplitude[k] = std::abs(X[k]) / wsum * (k == 0 || 2 * k == N ? 1.0 : 2.0);
    }
    const double top = *std::max_element(s.amplitude.begin(), s.amplitude.end());
    for (std::size_t k = 0; k < half; ++k) {
        const double a = s.amplitude[k];
        if (a < floor * top || a <= 0.0) continue;
        const bool left = k == 0 || a > s.amplitude[k - 1];
        const bool right = k + 1 == half || a >= s.amplitude[k + 1];
        if (left && right) s.peaks.push_back({s.ratio[k], a});
    }
    return s;
}

Comparison compare(const TiRun& run, const DenseMatrix& candidate, const Vector& observe, double omega1,
                   const CompareOptions& opt) {
    if (candidate.rows() != run.states.rows() || candidate.cols() != run.states.cols()) {
        fail(ErrorCode::ShapeError, "compare: candidate samples do not match the run");
    }
    if (observe.size() != run.n) fail(ErrorCode::ShapeError, "compare: observation vector must have n entries");
    Comparison c;
    const auto ref_z = run.states.leftCols(run.n);
    const auto cand_z = candidate.leftCols(run.n);
    const double denom = cand_z.norm();
    const double diff = (ref_z - cand_z).norm();
    c.relative_l2 = denom > 0.0 ? diff / denom : diff;

    const Vector a = ref_z * observe;
    const Vector b = cand_z * observe;
    c.reference = spectrum({a.data(), static_cast<std::size_t>(a.size())}, run.dt, omega1);
    c.candidate = spectrum({b.data(), static_cast<std::size_t>(b.size())}, run.dt, omega1);
    if (c.reference.peaks.empty()) return c;
    double top = 0.0;
    for (const auto& p : c.reference.peaks) top = std::max(top, p.amplitude);
    const double bin = c.reference.ratio.size() > 1 ? c.reference.ratio[1] : 0.0;
    for (const auto& p : c.reference.peaks) {
        if (p.amplitude < opt.peak_fraction * top) continue;
        PeakMatch m{p.ratio, p.amplitude, 0.0, 1.0};
        for (const auto& q : c.candidate.peaks) {
            if (std::abs(q.ratio - p.ratio) <= opt.bin_slack * bin + 1e-12 && q.amplitude > m.candidate) m.candidate = q.amplitude;
        }
        if (m.candidate > 0.0) m.relative_error = std::abs(m.candidate - m.reference) / m.reference;
        c.max_peak_error = std::max(c.max_peak_error, m.relative_error);
        c.matches.push_back(m);
    }
    c.peaks_match = c.max_peak_error <= opt.amplitude_tol;
    return c;
}

Comparison compare(const vcf::TorusPoint& point, const std::vector<basis::BasisSpec>& specs, const TiRun& run,
                   const Vector& observe, const CompareOptions& opt) {
    if (point.omega.size() != specs.size()) fail(ErrorCode::ShapeError, "compare: one frequency per dimension");
    const DenseMatrix cand = sample_torus(specs, run.n, point.zd, point.omega, run);
    return compare(run, cand, observe, point.omega[0], opt);
}

}  // namespace qpt::oracle
