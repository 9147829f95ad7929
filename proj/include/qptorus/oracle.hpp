#pragma once

// Time-integration reference: fixed-step RK4 on the first-order form,
// flat-top spectra and torus-vs-TI comparison metrics.

#include "qptorus/models.hpp"
#include "qptorus/vcf.hpp"

#include <span>
#include <vector>

namespace qpt::oracle {

struct TiRun {
    int n = 0;
    double dt = 0.0;
    double transient = 0.0;     // skipped before the first stored sample
    std::vector<double> omega;  // excitation frequencies used
    DenseMatrix states;         // samples x 2n, rows at t = transient + k dt

    [[nodiscard]] Eigen::Index samples() const { return states.rows(); }
    [[nodiscard]] double window() const { return static_cast<double>(states.rows()) * dt; }
    [[nodiscard]] double time(Eigen::Index k) const { return transient + static_cast<double>(k) * dt; }
};

/// Integrates from x0 = [z; z'] at t = 0, drops `transient`, then stores
/// floor(window / dt) samples. Non-finite states throw Blowup.
[[nodiscard]] TiRun integrate(const models::SecondOrderSystem& sys, std::span<const double> omega, const Vector& x0,
                              double transient, double window, double dt);

/// [z; z'] of the torus at tau = omega t.
[[nodiscard]] Vector torus_state(const std::vector<basis::BasisSpec>& specs, int n, const Vector& zd,
                                 std::span<const double> omega, double t);

/// Torus sampled at the run's time stamps (same layout as TiRun::states).
[[nodiscard]] DenseMatrix sample_torus(const std::vector<basis::BasisSpec>& specs, int n, const Vector& zd,
                                       std::span<const double> omega, const TiRun& run);

struct Peak {
    double ratio = 0.0;      // omega / omega_1
    double amplitude = 0.0;
};

struct Spectrum {
    std::vector<double> ratio;
    std::vector<double> amplitude;
    std::vector<Peak> peaks;  // sorted by ratio
};

/// One-sided amplitude spectrum of uniformly sampled data under a flat-top
/// window. Peaks are local maxima at or above floor * max.
[[nodiscard]] Spectrum spectrum(std::span<const double> signal, double dt, double omega1, double floor = 1e-3);

struct PeakMatch {
    double ratio = 0.0;
    double reference = 0.0;  // TI amplitude
    double candidate = 0.0;  // torus amplitude, 0 when unmatched
    double relative_error = 0.0;
};

struct CompareOptions {
    double peak_fraction = 0.01;  // peaks below this fraction of the largest are ignored
    double amplitude_tol = 0.02;
    int bin_slack = 2;            // frequency match tolerance in bins
};

struct Comparison {
    double relative_l2 = 0.0;     // displacements over the window
    Spectrum reference;           // TI
    Spectrum candidate;           // torus
    std::vector<PeakMatch> matches;
    double max_peak_error = 0.0;
    bool peaks_match = true;
};

/// Compares candidate samples (same layout and times as run.states) against
/// the run, observing c^T z for the spectra.
[[nodiscard]] Comparison compare(const TiRun& run, const DenseMatrix& candidate, const Vector& observe,
                                 double omega1, const CompareOptions& opt = {});

/// Synthesizes the torus along tau = omega t and compares it with the run.
[[nodiscard]] Comparison compare(const vcf::TorusPoint& point, const std::vector<basis::BasisSpec>& specs,
                                 const TiRun& run, const Vector& observe, const CompareOptions& opt = {});

}  // namespace qpt::oracle
