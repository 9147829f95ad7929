// Command-line front end. Links only the C API.

#include "qptorus/qptorus.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

namespace {

int report(qpt_status s) {
    if (s != QPT_OK) std::fprintf(stderr, "qptorus: %s\n", qpt_last_error());
    return s == QPT_INVALID_ARGUMENT ? 1 : static_cast<int>(s);
}

struct Session {
    qpt_session* h = nullptr;
    ~Session() { qpt_session_close(h); }
};

}  // namespace

int main(int argc, char** argv) {
    if (const char* lvl = std::getenv("QPTORUS_LOG_LEVEL")) qpt_set_log_level(std::atoi(lvl));

    CLI::App app{"Continuation of quasi-periodic tori"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qpt_version()));

    std::string config, branch;
    std::size_t index = 0;
    double epsilon = 0.0;
    bool self = false;
    int S = 32, U = 11, d = 1;

    auto* cont = app.add_subcommand("continue", "trace a branch from the configured seed");
    cont->add_option("config", config, "run configuration (JSON)")->required();

    auto* stab = app.add_subcommand("stability", "Floquet or Lyapunov verdicts along a branch");
    stab->add_option("config", config)->required();
    stab->add_option("branch", branch, "points JSON or branch CSV")->required();

    auto* ns = app.add_subcommand("ns-init", "seed a d=2 torus next to an NS point");
    ns->add_option("config", config)->required();
    ns->add_option("branch", branch)->required();
    ns->add_option("index", index)->required();
    ns->add_option("epsilon", epsilon)->required();

    auto* cmp = app.add_subcommand("compare", "time integration against a branch point");
    cmp->add_option("config", config)->required();
    cmp->add_option("branch", branch)->required();
    cmp->add_option("index", index)->required();
    cmp->add_flag("--self", self, "compare the integration with itself");

    auto* ops = app.add_subcommand("opcount", "operation-count ratio of the staged transform");
    ops->add_option("S", S)->required();
    ops->add_option("U", U)->required();
    ops->add_option("d", d)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (ops->parsed()) {
        double r = 0.0;
        if (const auto s = qpt_operation_ratio(S, U, d, &r); s != QPT_OK) return report(s);
        std::printf("%.10g\n", r);
        return 0;
    }

    Session session;
    if (const auto s = qpt_session_open(config.c_str(), &session.h); s != QPT_OK) return report(s);
    qpt_status s = QPT_OK;
    if (cont->parsed()) {
        s = qpt_run_continue(session.h);
    } else if (stab->parsed()) {
        s = qpt_run_stability(session.h, branch.c_str());
    } else if (ns->parsed()) {
        s = qpt_run_ns_init(session.h, branch.c_str(), index, epsilon);
    } else if (cmp->parsed()) {
        s = qpt_run_compare(session.h, branch.c_str(), index, self ? 1 : 0);
    }
    return report(s);
}
