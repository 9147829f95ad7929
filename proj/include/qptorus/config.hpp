#pragma once

// Run configuration (JSON, schema "qptorus-config/1").

#include "qptorus/continuation.hpp"
#include "qptorus/stability.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qpt::config {

inline constexpr const char* kSchema = "qptorus-config/1";

struct ModelConfig {
    std::string name;                       // duffing_vdp | beam | pipe
    std::map<std::string, double> scalars;  // every numeric parameter
    std::vector<double> forcing;            // duffing_vdp only
};

/// Builds the model; `override_name` replaces one scalar (continuation in a
/// model parameter). Unknown names throw ConfigError.
[[nodiscard]] models::SecondOrderSystem build_model(const ModelConfig& m, const std::string& override_name = {},
                                                    double override_value = 0.0);

struct SeedConfig {
    std::string source = "linear-solve";  // linear-solve | file
    std::filesystem::path path;
    int max_iterations = 50;
};

struct StabilityConfig {
    bool floquet = true;
    int steps = 256;          // N_M for Floquet
    double tolerance = 1e-6;  // |mu| > 1 + tolerance counts as outside
    bool lyapunov = false;
    stability::LyapunovOptions lyap;
    bool histories = false;   // write exponent histories
};

struct NsInitConfig {
    std::optional<basis::BasisSpec> basis;  // second dimension; defaults to the first
    int steps = 2048;
    double unit_tol = 0.05;
};

struct OracleConfig {
    int dt_per_period = 500;
    double transient_periods = 200;
    double window_periods = 50;
};

struct RunConfig {
    std::filesystem::path base_dir;
    ModelConfig model;
    std::vector<basis::BasisSpec> bases;
    std::vector<continuation::FrequencySetup> frequencies;
    std::string parameter = "omega1";  // omega1 or model.<name>
    continuation::ContinuationOptions continuation;
    SeedConfig seed;
    StabilityConfig stability;
    NsInitConfig ns_init;
    OracleConfig oracle;
    std::filesystem::path output_dir;
    std::string prefix = "run";

    [[nodiscard]] int d() const { return static_cast<int>(bases.size()); }
    [[nodiscard]] bool parameter_is_frequency() const { return parameter.rfind("model.", 0) != 0; }
    [[nodiscard]] std::string model_parameter() const { return parameter_is_frequency() ? std::string{} : parameter.substr(6); }
    [[nodiscard]] std::filesystem::path output_path(const std::string& suffix) const;
};

/// Parses and validates; relative paths resolve against base_dir.
[[nodiscard]] RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir);
[[nodiscard]] RunConfig load(const std::filesystem::path& path);

/// Basis specs to and from their JSON text form, e.g. {"type":"HB","harmonics":5,"S":32}.
[[nodiscard]] basis::BasisSpec basis_from_json(const std::string& json_text);
[[nodiscard]] std::string basis_to_json(const basis::BasisSpec& spec);

}  // namespace qpt::config
