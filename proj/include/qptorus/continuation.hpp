#pragma once

// Pseudo-arclength continuation of torus branches.
//
// Unknowns x = [zd; omega_1..omega_d] plus the model parameter p when p is
// not a frequency. Each frequency gets a role: the continuation parameter,
// a fixed ratio to another frequency, an unknown (closed by a phase row),
// or a fixed value.

#include "qptorus/vcf.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qpt::continuation {

enum class FrequencyRole { Parameter, Ratio, Unknown, Fixed };

[[nodiscard]] std::string to_string(FrequencyRole role);
[[nodiscard]] FrequencyRole frequency_role_from_string(const std::string& s);

struct FrequencySetup {
    FrequencyRole role = FrequencyRole::Fixed;
    double initial = 1.0;
    double ratio = 1.0;  // Ratio: omega[reference] = ratio * omega_i
    int reference = 0;
    double value = 0.0;  // Fixed
};

// Scaled is arclength with the coefficients weighted so that their part of
// the norm approximates the L2 norm of the torus function.
enum class Normalization { Arclength, Parameter, Scaled };

struct StepOptions {
    double initial = 0.05;
    double min = 1e-5;
    double max = 0.2;
    double grow = 2.0;
    double shrink = 0.5;
    int fast_iterations = 3;  // grow after at most this many Newton steps
};

struct ContinuationOptions {
    StepOptions step;
    int max_iterations = 15;
    double tolerance = 1e-8;
    int max_points = 200;
    double p_min = 0.0;
    double p_max = 1.0;
    int direction = 1;  // initial sign of dp
    Normalization normalization = Normalization::Arclength;
};

/// Builds the system at model-parameter value p.
using SystemFactory = std::function<models::SecondOrderSystem(double p)>;

/// Bordered torus equations without the continuation row.
class TorusProblem {
public:
    /// p is frequency `parameter` (its role must be Parameter).
    TorusProblem(std::shared_ptr<const vcf::VcfContext> ctx, std::vector<FrequencySetup> frequencies);
    /// p is a model parameter; every frequency needs a non-parameter role.
    TorusProblem(SystemFactory factory, std::vector<basis::BasisSpec> specs, std::vector<FrequencySetup> frequencies,
                 double p0);

    [[nodiscard]] int d() const { return d_; }
    [[nodiscard]] Eigen::Index coeff_size() const { return N_; }
    [[nodiscard]] Eigen::Index unknowns() const { return nx_; }
    [[nodiscard]] Eigen::Index p_index() const { return p_index_; }
    [[nodiscard]] bool parameter_is_frequency() const { return !factory_; }
    [[nodiscard]] const std::vector<FrequencySetup>& frequencies() const { return freqs_; }
    [[nodiscard]] const std::vector<basis::BasisSpec>& specs() const { return specs_; }
    [[nodiscard]] int phase_row_count() const;

    [[nodiscard]] Vector pack(const vcf::TorusPoint& pt) const;
    [[nodiscard]] vcf::TorusPoint unpack(const Vector& x) const;

    /// Anchors the phase rows at zd (called for every accepted point).
    void set_reference(const Vector& zd);
    /// Rows used as phase conditions (rows x N), for inspection.
    [[nodiscard]] const DenseMatrix& phase_rows() const { return phase_rows_; }

    struct Evaluation {
        Vector F;       // nx - 1 rows
        DenseMatrix G;  // (nx - 1) x nx, empty unless requested
    };
    [[nodiscard]] Evaluation evaluate(const Vector& x, bool jacobian);

    /// max over the grid of |c^T z(tau)|
    [[nodiscard]] double amplitude(const vcf::TorusPoint& pt);
    [[nodiscard]] std::shared_ptr<const vcf::VcfContext> context(double p);
    [[nodiscard]] std::shared_ptr<const vcf::VcfContext> context_for(const Vector& x) { return context(x(p_index_)); }

private:
    struct Slot {
        double p = 0.0;
        std::shared_ptr<const vcf::VcfContext> ctx;
        std::unique_ptr<aus::NonlinearEvaluator> nl;
    };
    void check_roles() const;
    Slot& slot(double p);
    [[nodiscard]] Vector torus_residual(Slot& s, const Vector& zd, const std::vector<double>& omega);

    SystemFactory factory_;
    std::vector<basis::BasisSpec> specs_;
    std::vector<FrequencySetup> freqs_;
    int d_ = 0;
    Eigen::Index N_ = 0, nx_ = 0, p_index_ = 0;
    std::vector<Slot> slots_;  // most recent first, at most two
    DenseMatrix phase_rows_;
    Vector reference_;
};

struct BranchPoint {
    vcf::TorusPoint point;
    double amplitude = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double step = 0.0;
    std::string tag;  // "", "NS" or "SN"
};

struct Branch {
    std::vector<BranchPoint> points;
    int total_iterations = 0;
    double seconds = 0.0;
    bool stalled = false;
    std::string message;
};

struct NewtonResult {
    Vector x;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Newton on the torus equations with p held at x0(p_index).
[[nodiscard]] NewtonResult solve_fixed(TorusProblem& problem, const Vector& x0, int max_iterations, double tolerance);

/// Unit tangent of the branch at x. With `previous` the bordering row is the
/// previous tangent and the sign follows it; otherwise the p unit vector is
/// used and the sign follows `direction`.
[[nodiscard]] Vector tangent(TorusProblem& problem, const Vector& x, const Vector* previous, int direction);

/// Scales a unit tangent per the normalization policy (parameter mode falls
/// back to arclength when |t_p| is small, i.e. near a fold).
[[nodiscard]] Vector normalize_tangent(const Vector& t, Eigen::Index p_index, Normalization mode);

/// Per-unknown weights of the scaled arclength norm: HB constant 1, HB
/// cos/sin 1/sqrt(2), grid-valued bases 1/sqrt(U), frequencies and p 1.
[[nodiscard]] Vector metric_weights(const TorusProblem& problem);

/// Newton corrector on [G; t^T] from the predicted point.
[[nodiscard]] NewtonResult correct(TorusProblem& problem, const Vector& predicted, const Vector& t,
                                   int max_iterations, double tolerance);

/// Traces a branch from a converged seed. Never throws on stall: the partial
/// branch is returned with `stalled` set.
[[nodiscard]] Branch continue_branch(TorusProblem& problem, const vcf::TorusPoint& seed, const ContinuationOptions& opt,
                                     const std::function<void(const BranchPoint&)>& on_point = {});

/// Number of local amplitude maxima along the branch exceeding factor x the
/// median amplitude (one per excursion above that level). The median weights each point by the parameter span it covers,
/// so densely sampled folds do not dominate it.
[[nodiscard]] int count_peaks(const Branch& branch, double factor = 1.5);
[[nodiscard]] double weighted_median_amplitude(const Branch& branch);

}  // namespace qpt::continuation
