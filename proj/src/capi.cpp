#include "qptorus/qptorus.h"

#include "qptorus/aus.hpp"
#include "qptorus/error.hpp"
#include "qptorus/runner.hpp"

#include <exception>
#include <string>

struct qpt_session {
    qpt::config::RunConfig cfg;
    std::string summary;
};

namespace {

thread_local std::string g_error;

qpt_status status_of(qpt::ErrorCode code) {
    using qpt::ErrorCode;
    switch (code) {
        case ErrorCode::ConfigError:
        case ErrorCode::IoError:
        case ErrorCode::ConstraintMismatch:
        case ErrorCode::AliasingError:
        case ErrorCode::StencilError:
        case ErrorCode::DimensionTooLarge: return QPT_CONFIG_ERROR;
        case ErrorCode::BranchStall: return QPT_BRANCH_STALL;
        case ErrorCode::NotAnNSPoint: return QPT_NOT_NS_POINT;
        case ErrorCode::Blowup:
        case ErrorCode::NumericalBlowup: return QPT_BLOWUP;
        case ErrorCode::InvalidArgument: return QPT_INVALID_ARGUMENT;
        default: return QPT_ERROR;
    }
}

template <class F>
qpt_status guarded(F&& f) {
    try {
        f();
        return QPT_OK;
    } catch (const qpt::Error& e) {
        g_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        g_error = e.what();
        return QPT_ERROR;
    } catch (...) {
        g_error = "unknown error";
        return QPT_ERROR;
    }
}

qpt_status need(const void* p, const char* what) {
    if (p) return QPT_OK;
    g_error = std::string("null ") + what;
    return QPT_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

qpt_status qpt_session_open(const char* config_path, qpt_session** out) {
    if (auto s = need(out, "output handle")) return s;
    *out = nullptr;
    if (auto s = need(config_path, "config path")) return s;
    return guarded([&] { *out = new qpt_session{qpt::config::load(config_path), {}}; });
}

qpt_status qpt_session_open_json(const char* json_text, const char* base_dir, qpt_session** out) {
    if (auto s = need(out, "output handle")) return s;
    *out = nullptr;
    if (auto s = need(json_text, "config text")) return s;
    return guarded([&] { *out = new qpt_session{qpt::config::parse(json_text, base_dir ? base_dir : "."), {}}; });
}

void qpt_session_close(qpt_session* session) { delete session; }

qpt_status qpt_unknown_count(qpt_session* session, size_t* out) {
    if (auto s = need(session, "session")) return s;
    if (auto s = need(out, "output")) return s;
    return guarded([&] { *out = qpt::runner::unknown_count(session->cfg); });
}

qpt_status qpt_run_continue(qpt_session* session) {
    if (auto s = need(session, "session")) return s;
    return guarded([&] { session->summary = qpt::runner::cmd_continue(session->cfg); });
}

qpt_status qpt_run_stability(qpt_session* session, const char* branch_path) {
    if (auto s = need(session, "session")) return s;
    if (auto s = need(branch_path, "branch path")) return s;
    return guarded([&] { session->summary = qpt::runner::cmd_stability(session->cfg, branch_path); });
}

qpt_status qpt_run_ns_init(qpt_session* session, const char* branch_path, size_t index, double epsilon) {
    if (auto s = need(session, "session")) return s;
    if (auto s = need(branch_path, "branch path")) return s;
    return guarded([&] { session->summary = qpt::runner::cmd_ns_init(session->cfg, branch_path, index, epsilon); });
}

qpt_status qpt_run_compare(qpt_session* session, const char* branch_path, size_t index, int self_compare) {
    if (auto s = need(session, "session")) return s;
    if (auto s = need(branch_path, "branch path")) return s;
    return guarded([&] { session->summary = qpt::runner::cmd_compare(session->cfg, branch_path, index, self_compare != 0); });
}

const char* qpt_last_summary_json(const qpt_session* session) { return session ? session->summary.c_str() : ""; }

qpt_status qpt_operation_ratio(int S, int U, int d, double* out) {
    if (auto s = need(out, "output")) return s;
    return guarded([&] {
        if (S < 1 || U < 1 || d < 1) qpt::fail(qpt::ErrorCode::InvalidArgument, "S, U and d must be positive");
        *out = qpt::aus::operation_ratio(d, S, U);
    });
}

const char* qpt_last_error(void) { return g_error.c_str(); }

const char* qpt_version(void) { return "1.0.0"; }

void qpt_set_log_level(int level) { qpt::runner::set_log_level(level); }

}  // extern "C"
