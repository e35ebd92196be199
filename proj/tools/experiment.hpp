#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "discountlab/error.hpp"
#include "discountlab/limits.hpp"

namespace discountlab::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Pipeline { Structure, Solve, Duality, Sweep, Mather, Selection, Ergodic, Full };

std::string_view to_string(Pipeline p);

/// Ergodic pre-normalization of the costs before limit pipelines.
enum class Normalize { Auto, Yes, No };

struct ExperimentSpec {
    std::string instance = "constant-coupling"; // zoo id or path to a system JSON
    Pipeline pipeline = Pipeline::Solve;
    Normalize normalize = Normalize::Auto;

    double lambda = 0.5;
    double lambda_start = 0.5;
    double ratio = 0.5;
    int rungs = 18;
    double tol = kDiscountedTol;
    double ergodic_lambda = 1.0;
    double ergodic_tol = kErgodicTol;
    double damping = 0.5;

    int n = 1;
    int N = 0;              // 0: instance default
    double xi_radius = 0.0; // 0: instance default
    int xi_count = 0;       // 0: instance default

    int z = 0; // probe point for plot data and the Mather extraction
    int k = 0;
    int samples = 2000;     // structure-check samples
    int face_samples = 32;
    std::uint64_t seed = 7;
    std::string output_dir = "out";
};

/// Config errors carry the offending line (0 when not line-specific).
class ConfigError : public Error {
public:
    ConfigError(Errc code, int line, const std::string& what)
        : Error(code, line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Flat `key = value` document, `#` starts a comment. Throws ConfigError with
/// ParseError, UnknownKey or BadValue.
ExperimentSpec parse_config(std::string_view text);

/// Every key in a fixed order; parse_config(serialize(s)) == s.
std::string serialize(const ExperimentSpec& spec);

struct ExitReport {
    int exit_code = 0; // 0 pass, 1 audit failure, 2 usage or IO error
    nlohmann::json result;
    std::string error;
};

/// Runs the pipeline and writes result.json, CSV tables and manifest.json
/// into spec.output_dir.
ExitReport run_experiment(const ExperimentSpec& spec);

/// Whitespace-separated columns lambda, value_at_probe, sup_norm, cauchy_gap
/// with a `#` header; the gap of the first row is nan.
void emit_plotdata(const SweepResult& sweep, const std::string& path, int z = 0, int k = 0);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Copy of `j` with every "wall_time" member removed.
nlohmann::json strip_wall_time(const nlohmann::json& j);

/// Loads a serialized system (verify subcommand); throws BadSystemFile or Io.
DiscreteSystem load_system(const std::string& path);

} // namespace discountlab::cli
