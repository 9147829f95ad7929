#include "qptorus/runner.hpp"

#include "qptorus/error.hpp"
#include "qptorus/oracle.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace qpt::runner {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<int> g_level{1};

void log(int level, const std::string& msg) {
    if (g_level.load() >= level) {
        std::fputs(msg.c_str(), stdout);
        std::fputc('\n', stdout);
        std::fflush(stdout);
    }
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

json bases_json(const std::vector<basis::BasisSpec>& specs) {
    json a = json::array();
    for (const auto& s : specs) a.push_back(json::parse(config::basis_to_json(s)));
    return a;
}

std::vector<basis::BasisSpec> bases_from(const json& a) {
    std::vector<basis::BasisSpec> out;
    for (const auto& b : a) out.push_back(config::basis_from_json(b.dump()));
    return out;
}

bool same_bases(const std::vector<basis::BasisSpec>& a, const std::vector<basis::BasisSpec>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (config::basis_to_json(a[i]) != config::basis_to_json(b[i])) return false;
    }
    return true;
}

Vector to_vector(const json& a) {
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------
// Branch storage

struct StoredPoint {
    continuation::BranchPoint bp;
    std::string stability = "unknown";
};

struct StoredBranch {
    std::string model;
    int n = 0;
    std::string parameter;
    std::vector<basis::BasisSpec> bases;
    std::vector<StoredPoint> points;
};

std::string csv_header(int d) {
    std::string h = "index,p";
    for (int i = 1; i <= d; ++i) h += ",omega_" + std::to_string(i);
    return h + ",amplitude,residual,iterations,step,stability,tag\n";
}

std::string csv_row(std::size_t index, const StoredPoint& sp) {
    const auto& bp = sp.bp;
    std::string r = std::to_string(index) + "," + num(bp.point.p);
    for (double w : bp.point.omega) r += "," + num(w);
    r += "," + num(bp.amplitude) + "," + num(bp.residual) + "," + std::to_string(bp.iterations) + "," + num(bp.step);
    return r + "," + sp.stability + "," + bp.tag + "\n";
}

void write_branch(const config::RunConfig& cfg, const StoredBranch& b) {
    std::string csv = csv_header(static_cast<int>(b.bases.size()));
    json pts = json::array();
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& sp = b.points[i];
        csv += csv_row(i, sp);
        pts.push_back({{"index", i},
                       {"p", sp.bp.point.p},
                       {"omega", sp.bp.point.omega},
                       {"amplitude", sp.bp.amplitude},
                       {"residual", sp.bp.residual},
                       {"iterations", sp.bp.iterations},
                       {"step", sp.bp.step},
                       {"stability", sp.stability},
                       {"tag", sp.bp.tag},
                       {"zd", to_std(sp.bp.point.zd)}});
    }
    write_text(cfg.output_path(".branch.csv"), csv);
    const json doc{{"schema", "qptorus-points/1"}, {"model", b.model},   {"n", b.n},
                   {"parameter", b.parameter},      {"bases", bases_json(b.bases)}, {"points", pts}};
    write_text(cfg.output_path(".points.json"), doc.dump(1) + "\n");
}

StoredBranch read_branch(const config::RunConfig& cfg, const fs::path& branch) {
    const fs::path path = points_file(branch);
    if (!fs::exists(path)) fail(ErrorCode::ConfigError, "branch file not found: " + path.string());
    const json doc = read_json(path);
    StoredBranch b;
    try {
        if (doc.at("schema") != "qptorus-points/1") fail(ErrorCode::ConfigError, path.string() + ": not a points file");
        b.model = doc.at("model").get<std::string>();
        b.n = doc.at("n").get<int>();
        b.parameter = doc.at("parameter").get<std::string>();
        b.bases = bases_from(doc.at("bases"));
        for (const auto& p : doc.at("points")) {
            StoredPoint sp;
            sp.bp.point.p = p.at("p").get<double>();
            sp.bp.point.omega = p.at("omega").get<std::vector<double>>();
            sp.bp.point.zd = to_vector(p.at("zd"));
            sp.bp.amplitude = p.at("amplitude").get<double>();
            sp.bp.residual = p.at("residual").get<double>();
            sp.bp.iterations = p.at("iterations").get<int>();
            sp.bp.step = p.at("step").get<double>();
            sp.bp.tag = p.at("tag").get<std::string>();
            sp.stability = p.at("stability").get<std::string>();
            b.points.push_back(std::move(sp));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    if (b.model != cfg.model.name || !same_bases(b.bases, cfg.bases) || b.parameter != cfg.parameter) {
        fail(ErrorCode::ConfigError, path.string() + " was not produced with this configuration's model, bases and parameter");
    }
    return b;
}

const StoredPoint& point_at(const StoredBranch& b, std::size_t index) {
    if (index >= b.points.size()) {
        fail(ErrorCode::ConfigError, "point index " + std::to_string(index) + " out of range (branch has " +
                                         std::to_string(b.points.size()) + " points)");
    }
    return b.points[index];
}

models::SecondOrderSystem system_at(const config::RunConfig& cfg, double p) {
    return cfg.parameter_is_frequency() ? config::build_model(cfg.model)
                                        : config::build_model(cfg.model, cfg.model_parameter(), p);
}

std::unique_ptr<continuation::TorusProblem> make_problem(const config::RunConfig& cfg) {
    if (cfg.parameter_is_frequency()) {
        auto ctx = std::make_shared<const vcf::VcfContext>(config::build_model(cfg.model), cfg.bases);
        return std::make_unique<continuation::TorusProblem>(std::move(ctx), cfg.frequencies);
    }
    const auto model = cfg.model;
    const auto name = cfg.model_parameter();
    return std::make_unique<continuation::TorusProblem>(
        [model, name](double p) { return config::build_model(model, name, p); }, cfg.bases, cfg.frequencies,
        cfg.model.scalars.at(name));
}

std::vector<double> initial_omega(const config::RunConfig& cfg) {
    std::vector<double> w(cfg.frequencies.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = cfg.frequencies[i].initial;
    // ratio roles follow their reference
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto& f = cfg.frequencies[i];
        if (f.role == continuation::FrequencyRole::Ratio) w[i] = cfg.frequencies[static_cast<std::size_t>(f.reference)].initial / f.ratio;
    }
    return w;
}

struct Seed {
    vcf::TorusPoint point;
    Vector direction;  // torus part of an NS seed; empty otherwise
};

Seed read_seed(const config::RunConfig& cfg) {
    const json doc = read_json(cfg.seed.path);
    Seed seed;
    auto& pt = seed.point;
    try {
        if (doc.at("schema") != "qptorus-seed/1") fail(ErrorCode::ConfigError, cfg.seed.path.string() + ": not a seed file");
        if (doc.at("model").get<std::string>() != cfg.model.name || !same_bases(bases_from(doc.at("bases")), cfg.bases)) {
            fail(ErrorCode::ConfigError, "seed file does not match the configured model and bases");
        }
        pt.zd = to_vector(doc.at("zd"));
        pt.omega = doc.at("omega").get<std::vector<double>>();
        pt.p = doc.at("p").get<double>();
        if (doc.contains("direction")) seed.direction = to_vector(doc.at("direction"));
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, cfg.seed.path.string() + ": " + e.what());
    }
    if (static_cast<int>(pt.omega.size()) != cfg.d()) fail(ErrorCode::ConfigError, "seed frequency count does not match the bases");
    if (cfg.parameter_is_frequency()) {
        pt.p = pt.omega[0];
    } else {
        pt.p = cfg.model.scalars.at(cfg.model_parameter());
    }
    if (seed.direction.size() != 0 && seed.direction.size() != pt.zd.size()) fail(ErrorCode::ConfigError, "seed direction has the wrong length");
    return seed;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void set_log_level(int level) { g_level.store(level); }
int log_level() { return g_level.load(); }

fs::path points_file(const fs::path& branch) {
    const std::string s = branch.string();
    const std::string csv = ".branch.csv";
    if (s.size() > csv.size() && s.compare(s.size() - csv.size(), csv.size(), csv) == 0) {
        return fs::path(s.substr(0, s.size() - csv.size()) + ".points.json");
    }
    return branch;
}

std::size_t unknown_count(const config::RunConfig& cfg) {
    const auto sys = system_at(cfg, cfg.parameter_is_frequency() ? 0.0 : cfg.model.scalars.at(cfg.model_parameter()));
    return vcf::unknown_count(sys.n, cfg.bases) + (cfg.parameter_is_frequency() ? 0 : 1);
}

std::string cmd_continue(const config::RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto problem = make_problem(cfg);
    const auto& opt = cfg.continuation;

    vcf::TorusPoint guess;
    Vector direction;
    if (cfg.seed.source == "file") {
        auto seed = read_seed(cfg);
        guess = std::move(seed.point);
        direction = std::move(seed.direction);
    } else {
        guess.omega = initial_omega(cfg);
        guess.p = cfg.parameter_is_frequency() ? guess.omega[0] : cfg.model.scalars.at(cfg.model_parameter());
        vcf::VcfOperator op(problem->context(guess.p), guess.omega);
        guess.zd = op.Kd().partialPivLu().solve(op.Ed());
    }
    // An NS seed is corrected with the size of its torus part held and the
    // parameter free; a fixed parameter lets Newton fall back onto the
    // periodic orbit, or fail when the torus lives on the other side.
    continuation::NewtonResult seed;
    const bool held = direction.size() > 0 && direction.norm() > 0.0;
    if (held) {
        Vector t = Vector::Zero(problem->unknowns());
        t.head(direction.size()) = direction / direction.norm();
        seed = continuation::correct(*problem, problem->pack(guess), t, cfg.seed.max_iterations, opt.tolerance);
    } else {
        seed = continuation::solve_fixed(*problem, problem->pack(guess), cfg.seed.max_iterations, opt.tolerance);
    }
    log(1, "seed: residual " + num(seed.residual) + " after " + std::to_string(seed.iterations) + " Newton steps");

    StoredBranch stored;
    stored.model = cfg.model.name;
    stored.n = problem->context(guess.p)->n();
    stored.parameter = cfg.parameter;
    stored.bases = cfg.bases;

    json summary{{"schema", "qptorus-summary/1"},
                 {"command", "continue"},
                 {"model", cfg.model.name},
                 {"d", cfg.d()},
                 {"unknowns", problem->unknowns()},
                 {"seed_mode", held ? "torus-size-held" : "parameter-fixed"},
                 {"seed_iterations", seed.iterations},
                 {"seed_residual", seed.residual}};

    continuation::Branch branch;
    if (!seed.converged) {
        branch.stalled = true;
        branch.message = "seed did not converge (residual " + num(seed.residual) + ")";
    } else {
        const std::size_t d = cfg.frequencies.size();
        std::size_t count = 0;
        branch = continuation::continue_branch(*problem, problem->unpack(seed.x), opt, [&](const continuation::BranchPoint& bp) {
            std::string line = "point " + std::to_string(count++) + ": p = " + num(bp.point.p) + "  amplitude = " + num(bp.amplitude);
            if (d > 1) line += "  omega_2 = " + num(bp.point.omega[1]);
            log(1, line);
        });
        branch.seconds = elapsed_since(t0);
    }
    for (const auto& bp : branch.points) stored.points.push_back({bp, "unknown"});
    write_branch(cfg, stored);

    const auto points = static_cast<double>(branch.points.size());
    summary["points"] = branch.points.size();
    summary["iterations"] = branch.total_iterations;
    summary["total_seconds"] = elapsed_since(t0);
    summary["seconds_per_point"] = points > 0 ? elapsed_since(t0) / points : 0.0;
    summary["peaks"] = continuation::count_peaks(branch);
    summary["stalled"] = branch.stalled;
    summary["message"] = branch.message;
    const std::string text = summary.dump(1) + "\n";
    write_text(cfg.output_path(".summary.json"), text);
    if (branch.stalled) fail(ErrorCode::BranchStall, branch.message);
    return text;
}

std::string cmd_stability(const config::RunConfig& cfg, const fs::path& branch_path) {
    const auto t0 = std::chrono::steady_clock::now();
    StoredBranch b = read_branch(cfg, branch_path);
    if (b.points.empty()) fail(ErrorCode::ConfigError, "branch has no points");
    const int d = cfg.d();
    const bool floquet = d == 1 && cfg.stability.floquet;
    const bool lyap = d >= 2 && cfg.stability.lyapunov;

    struct Row {
        std::string max_mod, cplx, real, max_exp, settled;
        double unit_gap = std::numeric_limits<double>::infinity();  // closest complex pair to the circle
    };
    std::vector<Row> rows(b.points.size());
    std::optional<stability::FloquetReport> prev;
    double worst_exponent = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        auto& sp = b.points[i];
        auto& row = rows[i];
        const auto sys = system_at(cfg, sp.bp.point.p);
        const stability::TorusTrajectory traj{cfg.bases, sys.n, sp.bp.point.zd, sp.bp.point.omega};
        vcf::Stability verdict = vcf::Stability::Unknown;
        sp.bp.tag.clear();
        if (floquet) {
            const auto rep = stability::classify_floquet(
                stability::multipliers(stability::monodromy(sys, traj, cfg.stability.steps)), cfg.stability.tolerance);
            verdict = rep.verdict;
            if (prev) sp.bp.tag = stability::to_string(stability::bifurcation_between(*prev, rep));
            prev = rep;
            for (const auto& m : rep.multipliers) {
                if (std::abs(m.imag()) > 1e-10 * std::max(1.0, std::abs(m))) row.unit_gap = std::min(row.unit_gap, std::abs(std::abs(m) - 1.0));
            }
            // the NS tag goes to whichever neighbour has its pair closer to the circle
            if (sp.bp.tag == "NS" && rows[i - 1].unit_gap < row.unit_gap && b.points[i - 1].bp.tag.empty()) {
                b.points[i - 1].bp.tag = "NS";
                sp.bp.tag.clear();
            }
            row.max_mod = num(rep.max_modulus);
            row.cplx = std::to_string(rep.complex_outside);
            row.real = std::to_string(rep.real_outside);
        } else if (lyap) {
            const auto rep = stability::lyapunov_exponents(sys, traj, cfg.stability.lyap);
            verdict = rep.verdict;
            row.max_exp = num(rep.exponents.front());
            row.settled = rep.settled ? "true" : "false";
            worst_exponent = std::max(worst_exponent, rep.exponents.front());
            if (cfg.stability.histories) {
                std::string h = "iteration";
                for (std::size_t m = 0; m < rep.exponents.size(); ++m) h += ",sigma_" + std::to_string(m + 1);
                h += "\n";
                for (std::size_t k = 0; k < rep.history.size(); ++k) {
                    h += std::to_string(k + 1);
                    for (double v : rep.history[k]) h += "," + num(v);
                    h += "\n";
                }
                write_text(cfg.output_path(".lyapunov_" + std::to_string(i) + ".csv"), h);
            }
        }
        sp.stability = vcf::to_string(verdict);
        log(1, "point " + std::to_string(i) + ": " + sp.stability);
    }

    std::string csv = "index,p,amplitude,verdict,max_modulus,complex_outside,real_outside,max_exponent,settled,tag\n";
    int ns = 0, sn = 0, stable = 0, unstable = 0;
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& sp = b.points[i];
        const auto& row = rows[i];
        ns += sp.bp.tag == "NS";
        sn += sp.bp.tag == "SN";
        stable += sp.stability == "stable";
        unstable += sp.stability == "unstable";
        csv += std::to_string(i) + "," + num(sp.bp.point.p) + "," + num(sp.bp.amplitude) + "," + sp.stability + "," +
               row.max_mod + "," + row.cplx + "," + row.real + "," + row.max_exp + "," + row.settled + "," + sp.bp.tag + "\n";
        if (!sp.bp.tag.empty()) log(1, sp.bp.tag + " at point " + std::to_string(i) + ", p = " + num(sp.bp.point.p));
    }
    write_text(cfg.output_path(".stability.csv"), csv);
    write_branch(cfg, b);
    json summary{{"schema", "qptorus-summary/1"},
                 {"command", "stability"},
                 {"method", floquet ? "floquet" : (lyap ? "lyapunov" : "none")},
                 {"points", b.points.size()},
                 {"stable", stable},
                 {"unstable", unstable},
                 {"ns", ns},
                 {"sn", sn},
                 {"total_seconds", elapsed_since(t0)}};
    if (lyap) summary["max_exponent"] = worst_exponent;
    const std::string text = summary.dump(1) + "\n";
    write_text(cfg.output_path(".stability_summary.json"), text);
    return text;
}

std::string cmd_ns_init(const config::RunConfig& cfg, const fs::path& branch_path, std::size_t index, double epsilon) {
    const StoredBranch b = read_branch(cfg, branch_path);
    const auto& sp = point_at(b, index);
    if (cfg.d() != 1) fail(ErrorCode::ConfigError, "ns-init starts from a periodic (d = 1) branch");
    if (!(epsilon >= 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be non-negative");
    const auto sys = system_at(cfg, sp.bp.point.p);
    const stability::TorusTrajectory periodic{cfg.bases, sys.n, sp.bp.point.zd, sp.bp.point.omega};
    const basis::BasisSpec spec2 = cfg.ns_init.basis.value_or(cfg.bases[0]);
    const auto seed = stability::ns_torus_init(sys, periodic, cfg.bases[0], spec2, cfg.ns_init.steps, epsilon,
                                               cfg.ns_init.unit_tol);
    const auto flat = stability::ns_torus_init(sys, periodic, cfg.bases[0], spec2, cfg.ns_init.steps, 0.0,
                                               cfg.ns_init.unit_tol);
    const std::vector<basis::BasisSpec> specs{cfg.bases[0], spec2};
    auto ctx = std::make_shared<const vcf::VcfContext>(sys, specs);
    vcf::VcfOperator op(ctx, seed.omega);
    aus::NonlinearEvaluator nl(ctx->system(), ctx->transform());
    const double residual = op.residual(seed.zd, nl).norm();

    json doc{{"schema", "qptorus-seed/1"},
                   {"model", cfg.model.name},
                   {"n", sys.n},
                   {"bases", bases_json(specs)},
                   {"omega", seed.omega},
                   {"p", sp.bp.point.p},
                   {"epsilon", epsilon},
                   {"alpha", seed.alpha},
                   {"multiplier", {seed.multiplier.real(), seed.multiplier.imag()}},
                   {"source_index", index},
                   {"zd", to_std(seed.zd)}};
    if (epsilon > 0.0) doc["direction"] = to_std(seed.zd - flat.zd);
    write_text(cfg.output_path(".seed.json"), doc.dump(1) + "\n");
    log(1, "ns-init: alpha = " + num(seed.alpha) + ", omega_2 = " + num(seed.omega[1]) + ", residual = " + num(residual));
    const json summary{{"schema", "qptorus-summary/1"},
                       {"command", "ns-init"},
                       {"index", index},
                       {"epsilon", epsilon},
                       {"alpha", seed.alpha},
                       {"omega", seed.omega},
                       {"multiplier_modulus", std::abs(seed.multiplier)},
                       {"seed_residual", residual}};
    return summary.dump(1) + "\n";
}

std::string cmd_compare(const config::RunConfig& cfg, const fs::path& branch_path, std::size_t index, bool self_compare) {
    const auto t0 = std::chrono::steady_clock::now();
    const StoredBranch b = read_branch(cfg, branch_path);
    const auto& sp = point_at(b, index);
    const auto sys = system_at(cfg, sp.bp.point.p);
    const auto& pt = sp.bp.point;
    const double T1 = 2.0 * std::numbers::pi / pt.omega[0];
    const double dt = T1 / cfg.oracle.dt_per_period;
    const Vector x0 = oracle::torus_state(cfg.bases, sys.n, pt.zd, pt.omega, 0.0);
    log(1, "integrating " + num(cfg.oracle.transient_periods + cfg.oracle.window_periods) + " periods");
    const auto run = oracle::integrate(sys, pt.omega, x0, cfg.oracle.transient_periods * T1,
                                       cfg.oracle.window_periods * T1 + 0.5 * dt, dt);
    const auto cmp = self_compare ? oracle::compare(run, run.states, sys.output, pt.omega[0])
                                  : oracle::compare(pt, cfg.bases, run, sys.output);

    auto spectrum_csv = [](const oracle::Spectrum& s) {
        std::string out = "ratio,amplitude\n";
        for (std::size_t k = 0; k < s.ratio.size(); ++k) out += num(s.ratio[k]) + "," + num(s.amplitude[k]) + "\n";
        return out;
    };
    auto peaks_json = [](const oracle::Spectrum& s) {
        json a = json::array();
        for (const auto& p : s.peaks) a.push_back({{"ratio", p.ratio}, {"amplitude", p.amplitude}});
        return a;
    };
    const std::string tag = "_" + std::to_string(index);
    write_text(cfg.output_path(".spectrum" + tag + "_ti.csv"), spectrum_csv(cmp.reference));
    write_text(cfg.output_path(".spectrum" + tag + "_torus.csv"), spectrum_csv(cmp.candidate));
    json matches = json::array();
    for (const auto& m : cmp.matches) {
        matches.push_back({{"ratio", m.ratio}, {"ti", m.reference}, {"torus", m.candidate}, {"relative_error", m.relative_error}});
    }
    json metrics{{"schema", "qptorus-compare/1"},
                 {"index", index},
                 {"self", self_compare},
                 {"p", pt.p},
                 {"omega", pt.omega},
                 {"dt", dt},
                 {"transient", run.transient},
                 {"window", run.window()},
                 {"relative_l2", cmp.relative_l2},
                 {"max_peak_error", cmp.max_peak_error},
                 {"peaks_match", cmp.peaks_match},
                 {"matches", matches},
                 {"ti_peaks", peaks_json(cmp.reference)},
                 {"torus_peaks", peaks_json(cmp.candidate)}};
    write_text(cfg.output_path(".compare" + tag + ".json"), metrics.dump(1) + "\n");
    log(1, "compare: relative L2 = " + num(cmp.relative_l2) + ", worst peak error = " + num(cmp.max_peak_error));
    const json summary{{"schema", "qptorus-summary/1"},
                       {"command", "compare"},
                       {"index", index},
                       {"relative_l2", cmp.relative_l2},
                       {"max_peak_error", cmp.max_peak_error},
                       {"peaks_match", cmp.peaks_match},
                       {"total_seconds", elapsed_since(t0)}};
    return summary.dump(1) + "\n";
}

}  // namespace qpt::runner
