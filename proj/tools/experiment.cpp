#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "discountlab/instances.hpp"
#include "discountlab/parallel.hpp"
#include "discountlab/zoo.hpp"

namespace discountlab::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::pair<Pipeline, std::string_view> kPipelines[] = {
    {Pipeline::Structure, "structure"}, {Pipeline::Solve, "solve"},
    {Pipeline::Duality, "duality"},     {Pipeline::Sweep, "sweep"},
    {Pipeline::Mather, "mather"},       {Pipeline::Selection, "selection"},
    {Pipeline::Ergodic, "ergodic"},     {Pipeline::Full, "full"},
};

constexpr std::pair<Normalize, std::string_view> kNormalize[] = {
    {Normalize::Auto, "auto"}, {Normalize::Yes, "yes"}, {Normalize::No, "no"}};

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v, int line, std::string_view key) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(Errc::BadValue, line,
                          "'" + std::string(v) + "' is not a valid value for " + std::string(key));
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(out))
            throw ConfigError(Errc::BadValue, line, std::string(key) + " must be finite");
    }
    return out;
}

struct Field {
    std::function<void(ExperimentSpec&, std::string_view, int)> parse;
    std::function<std::string(const ExperimentSpec&)> print;
};

void positive(double v, int line, std::string_view key) {
    if (!(v > 0.0)) throw ConfigError(Errc::BadValue, line, std::string(key) + " must be > 0");
}

template <class T>
Field number(T ExperimentSpec::*member, std::function<void(T, int, std::string_view)> check,
             std::string_view key) {
    return {[=](ExperimentSpec& s, std::string_view v, int line) {
                T x = parse_number<T>(v, line, key);
                if (check) check(x, line, key);
                s.*member = x;
            },
            [=](const ExperimentSpec& s) {
                if constexpr (std::is_floating_point_v<T>) return fmt17(s.*member);
                else return std::to_string(s.*member);
            }};
}

/// Keys in serialization order.
const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        t.emplace_back("instance",
                       Field{[](ExperimentSpec& s, std::string_view v, int line) {
                                 if (v.empty())
                                     throw ConfigError(Errc::BadValue, line, "instance is empty");
                                 s.instance = std::string(v);
                             },
                             [](const ExperimentSpec& s) { return s.instance; }});
        t.emplace_back("pipeline",
                       Field{[](ExperimentSpec& s, std::string_view v, int line) {
                                 for (auto [p, name] : kPipelines)
                                     if (name == v) {
                                         s.pipeline = p;
                                         return;
                                     }
                                 throw ConfigError(Errc::BadValue, line,
                                                   "unknown pipeline '" + std::string(v) + "'");
                             },
                             [](const ExperimentSpec& s) {
                                 return std::string(to_string(s.pipeline));
                             }});
        t.emplace_back("normalize",
                       Field{[](ExperimentSpec& s, std::string_view v, int line) {
                                 for (auto [p, name] : kNormalize)
                                     if (name == v) {
                                         s.normalize = p;
                                         return;
                                     }
                                 throw ConfigError(Errc::BadValue, line,
                                                   "normalize must be auto, yes or no");
                             },
                             [](const ExperimentSpec& s) {
                                 for (auto [p, name] : kNormalize)
                                     if (p == s.normalize) return std::string(name);
                                 return std::string("auto");
                             }});
        using DCheck = std::function<void(double, int, std::string_view)>;
        using ICheck = std::function<void(int, int, std::string_view)>;
        DCheck pos = positive;
        t.emplace_back("lambda", number(&ExperimentSpec::lambda, pos, "lambda"));
        t.emplace_back("lambda_start", number(&ExperimentSpec::lambda_start, pos, "lambda_start"));
        t.emplace_back("ratio", number(&ExperimentSpec::ratio,
                                       DCheck([](double v, int line, std::string_view) {
                                           if (!(v > 0.0 && v < 1.0))
                                               throw ConfigError(Errc::BadValue, line,
                                                                 "ratio must lie in (0, 1)");
                                       }),
                                       "ratio"));
        t.emplace_back("rungs", number(&ExperimentSpec::rungs,
                                       ICheck([](int v, int line, std::string_view) {
                                           if (v < 2)
                                               throw ConfigError(Errc::BadValue, line,
                                                                 "rungs must be >= 2");
                                       }),
                                       "rungs"));
        t.emplace_back("tol", number(&ExperimentSpec::tol, pos, "tol"));
        t.emplace_back("ergodic_lambda",
                       number(&ExperimentSpec::ergodic_lambda, pos, "ergodic_lambda"));
        t.emplace_back("ergodic_tol", number(&ExperimentSpec::ergodic_tol, pos, "ergodic_tol"));
        t.emplace_back("damping", number(&ExperimentSpec::damping,
                                         DCheck([](double v, int line, std::string_view) {
                                             if (!(v > 0.0 && v <= 1.0))
                                                 throw ConfigError(Errc::BadValue, line,
                                                                   "damping must lie in (0, 1]");
                                         }),
                                         "damping"));
        ICheck nonneg = [](int v, int line, std::string_view key) {
            if (v < 0) throw ConfigError(Errc::BadValue, line, std::string(key) + " must be >= 0");
        };
        t.emplace_back("n", number(&ExperimentSpec::n,
                                   ICheck([](int v, int line, std::string_view) {
                                       if (v != 1 && v != 2)
                                           throw ConfigError(Errc::BadValue, line,
                                                             "n must be 1 or 2");
                                   }),
                                   "n"));
        t.emplace_back("N", number(&ExperimentSpec::N, nonneg, "N"));
        t.emplace_back("xi_radius", number(&ExperimentSpec::xi_radius,
                                           DCheck([](double v, int line, std::string_view) {
                                               if (v < 0.0)
                                                   throw ConfigError(Errc::BadValue, line,
                                                                     "xi_radius must be >= 0");
                                           }),
                                           "xi_radius"));
        t.emplace_back("xi_count", number(&ExperimentSpec::xi_count,
                                          ICheck([](int v, int line, std::string_view) {
                                              if (v < 0 || (v > 0 && v % 2 == 0))
                                                  throw ConfigError(Errc::BadValue, line,
                                                                    "xi_count must be odd");
                                          }),
                                          "xi_count"));
        t.emplace_back("z", number(&ExperimentSpec::z, nonneg, "z"));
        t.emplace_back("k", number(&ExperimentSpec::k, nonneg, "k"));
        t.emplace_back("samples", number(&ExperimentSpec::samples, nonneg, "samples"));
        t.emplace_back("face_samples", number(&ExperimentSpec::face_samples, nonneg,
                                              "face_samples"));
        t.emplace_back("seed", number<std::uint64_t>(&ExperimentSpec::seed, {}, "seed"));
        t.emplace_back("output_dir",
                       Field{[](ExperimentSpec& s, std::string_view v, int line) {
                                 if (v.empty())
                                     throw ConfigError(Errc::BadValue, line, "output_dir is empty");
                                 s.output_dir = std::string(v);
                             },
                             [](const ExperimentSpec& s) { return s.output_dir; }});
        return t;
    }();
    return table;
}

} // namespace

std::string_view to_string(Pipeline p) {
    for (auto [q, name] : kPipelines)
        if (q == p) return name;
    return "?";
}

ExperimentSpec parse_config(std::string_view text) {
    ExperimentSpec spec;
    std::map<std::string, int> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(Errc::ParseError, line_no, "expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(Errc::ParseError, line_no, "missing key");
        if (seen.count(key))
            throw ConfigError(Errc::ParseError, line_no,
                              "duplicate key '" + key + "' (first on line " +
                                  std::to_string(seen[key]) + ")");
        seen[key] = line_no;
        const auto& table = fields();
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const auto& f) { return f.first == key; });
        if (it == table.end())
            throw ConfigError(Errc::UnknownKey, line_no, "unknown key '" + key + "'");
        it->second.parse(spec, value, line_no);
        if (end == text.size()) break;
    }
    return spec;
}

std::string serialize(const ExperimentSpec& spec) {
    std::string out;
    for (const auto& [key, field] : fields()) out += key + " = " + field.print(spec) + "\n";
    return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

nlohmann::json strip_wall_time(const nlohmann::json& j) {
    if (j.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "wall_time") out[it.key()] = strip_wall_time(it.value());
        return out;
    }
    if (j.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : j) out.push_back(strip_wall_time(v));
        return out;
    }
    return j;
}

DiscreteSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::BadSystemFile, std::string("malformed JSON: ") + e.what());
    }
    return system_from_json(j);
}

void emit_plotdata(const SweepResult& sweep, const std::string& path, int z, int k) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
    out << "# lambda value_at_probe sup_norm cauchy_gap\n";
    for (std::size_t j = 0; j < sweep.ladder.size(); ++j) {
        const auto& r = sweep.ladder[j];
        double gap = j == 0 ? std::nan("") : sweep.cauchy_gaps[j - 1];
        out << fmt17(r.lambda) << ' ' << fmt17(r.v(k, z)) << ' '
            << fmt17(r.v.values.cwiseAbs().maxCoeff()) << ' '
            << (std::isnan(gap) ? std::string("nan") : fmt17(gap)) << '\n';
    }
    if (!out) throw Error(Errc::Io, "write to '" + path + "' failed");
}

namespace {

bool is_zoo_id(const std::string& id) {
    for (const auto& e : zoo::catalog())
        if (e.id == id) return true;
    return false;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(Errc::Io, "write to '" + path.string() + "' failed");
}

class Runner {
public:
    explicit Runner(const ExperimentSpec& spec) : spec_(spec), dir_(spec.output_dir) {}

    nlohmann::json run() {
        build_instance();
        const Pipeline p = spec_.pipeline;
        const bool full = p == Pipeline::Full;
        if (p == Pipeline::Structure || full) structure();
        if (p == Pipeline::Solve || full) solve();
        if (p == Pipeline::Duality || full) duality();
        if (p == Pipeline::Ergodic || full) ergodic();
        if (p == Pipeline::Sweep || p == Pipeline::Mather || p == Pipeline::Selection || full)
            sweep();
        if (p == Pipeline::Mather || full) mather();
        if (p == Pipeline::Selection || full) selection();
        bool pass = true;
        for (auto& [name, ok] : audits_.items()) pass = pass && ok.get<bool>();
        result_["audits"] = audits_;
        result_["pass"] = pass;
        return result_;
    }

private:
    void audit(const std::string& name, bool ok) { audits_[name] = ok; }

    void build_instance() {
        if (is_zoo_id(spec_.instance)) {
            model_ = zoo::make(spec_.instance, spec_.n);
            auto opts = instances::default_options(spec_.instance);
            opts.n = spec_.n;
            if (spec_.N > 0) opts.N = spec_.N;
            if (spec_.xi_radius > 0.0) opts.xi_radius = spec_.xi_radius;
            if (spec_.xi_count > 0) opts.xi_count = spec_.xi_count;
            sys_ = instances::from_zoo(spec_.instance, opts);
        } else {
            sys_ = load_system(spec_.instance);
        }
        if (spec_.z >= sys_.states() || spec_.k >= sys_.m)
            throw Error(Errc::BadValue, "probe (z, k) is outside the instance");
        result_["instance"] = {{"label", sys_.label},   {"n", sys_.grid.n},
                               {"N", sys_.grid.N},      {"m", sys_.m},
                               {"unknowns", sys_.unknowns()},
                               {"measure_variables", measure_size(sys_)}};
        result_["pipeline"] = std::string(to_string(spec_.pipeline));
        MonotoneCertificate cert = certify_monotone(sys_, 0.0);
        audit("monotone_certificate", cert.holds);
    }

    void structure() {
        nlohmann::json out;
        if (!model_) {
            out["note"] = "structure checks need a zoo model; only the certificate was checked";
            result_["structure"] = out;
            return;
        }
        auto mono = check_monotone(*model_, spec_.samples, spec_.seed);
        auto convex = check_convex(*model_, spec_.samples, spec_.seed);
        std::vector<double> ones(model_->m, 1.0);
        auto shift = check_shift_invariance(*model_, ones, spec_.samples, spec_.seed);
        out["monotone"] = mono;
        out["convex"] = convex;
        out["shift_invariance_ones"] = shift;
        try {
            auto profile = coercivity_profile(*model_, 4.0, {1, 2, 4, 8, 16, 32},
                                              std::max(16, spec_.samples / 10), spec_.seed);
            out["erg_condition_R4"] = check_erg_condition(profile, spec_.n);
        } catch (const Error& e) {
            out["erg_condition_R4"] = nullptr;
            out["erg_condition_error"] = e.what();
        }
        audit("structure_monotone", mono.passed);
        audit("structure_convex", convex.passed);
        result_["structure"] = out;
    }

    void solve() {
        SolveResult pi = policy_iterate(sys_, spec_.lambda, spec_.tol);
        nlohmann::json out;
        out["lambda"] = spec_.lambda;
        out["policy_iteration"] = pi.diagnostics;
        out["u"] = pi.u;
        out["policy"] = pi.policy;
        // Cross-check with Gauss-Seidel and the comparison principle.
        try {
            SolveResult vi = value_iterate(sys_, spec_.lambda, pi.u, spec_.tol);
            double gap = (vi.u.values - pi.u.values).cwiseAbs().maxCoeff();
            out["value_iteration"] = vi.diagnostics;
            out["vi_pi_gap"] = gap;
            audit("solve_vi_agrees", gap <= 10.0 * spec_.tol + 1e-12);
        } catch (const NoConvergence& e) {
            out["value_iteration_error"] = e.what();
            audit("solve_vi_agrees", false);
        }
        audit("solve_residual", pi.diagnostics.final_residual <= spec_.tol);
        solved_ = pi.u;
        write_text(dir_ / "value.csv", value_csv(pi.u));
        result_["solve"] = out;
    }

    std::string value_csv(const ValueField& u) const {
        std::string s = "mode,x,value\n";
        for (int i = 0; i < sys_.m; ++i)
            for (int x = 0; x < sys_.states(); ++x)
                s += std::to_string(i) + "," + std::to_string(x) + "," + fmt17(u(i, x)) + "\n";
        return s;
    }

    void duality() {
        ValueField u = solved_ && spec_.tol <= 1e-11
                           ? *solved_
                           : policy_iterate(sys_, spec_.lambda, std::min(spec_.tol, 1e-11)).u;
        std::vector<DualityReport> reports(sys_.unknowns());
        parallel_for(reports.size(), [&](std::size_t idx) {
            int k = static_cast<int>(idx) / sys_.states();
            int z = static_cast<int>(idx) % sys_.states();
            reports[idx] = duality_audit(sys_, spec_.lambda, z, k, &u);
        });
        std::string csv = "z,k,solver_value,measure_value,subsolution_value,spread\n";
        bool ok = true;
        double worst = 0.0;
        for (const auto& r : reports) {
            ok = ok && r.passed;
            worst = std::max(worst, r.spread);
            csv += std::to_string(r.z) + "," + std::to_string(r.k) + "," + fmt17(r.solver_value) +
                   "," + fmt17(r.measure_value) + "," + fmt17(r.subsolution_value) + "," +
                   fmt17(r.spread) + "\n";
        }
        write_text(dir_ / "duality.csv", csv);
        result_["duality"] = {{"lambda", spec_.lambda}, {"max_spread", worst}, {"reports", reports}};
        audit("duality", ok);
    }

    void ergodic() {
        ErgodicResult r = ergodic_solve(sys_, spec_.ergodic_lambda, spec_.ergodic_tol, spec_.damping);
        result_["ergodic"] = r;
        audit("ergodic_converged", r.converged);
        ergodic_ = r;
    }

    bool normalizing() const {
        return spec_.normalize == Normalize::Yes || spec_.normalize == Normalize::Auto;
    }

    void sweep() {
        limit_sys_ = sys_;
        if (normalizing()) {
            if (!ergodic_ || !ergodic_->converged) {
                ErgodicResult r = ergodic_solve(sys_, spec_.ergodic_lambda, spec_.ergodic_tol,
                                                spec_.damping);
                ergodic_ = r;
            }
            limit_sys_ = shift_costs(sys_, ergodic_->c);
            result_["normalization"] = {{"c", ergodic_->c}, {"residual", ergodic_->residual}};
            audit("normalization", ergodic_->converged);
        }
        sweep_ = discount_sweep(limit_sys_, spec_.lambda_start, spec_.ratio, spec_.rungs, spec_.tol);
        write_text(dir_ / "sweep.csv", sweep_csv(*sweep_));
        emit_plotdata(*sweep_, (dir_ / "sweep.dat").string(), spec_.z, spec_.k);
        result_["sweep"] = *sweep_;
        audit("sweep_bounded", !sweep_->divergent);
    }

    void mather() {
        MatherLP lp = mather_lp(limit_sys_);
        nlohmann::json out;
        out["min_value"] = lp.min_value;
        out["lp_measure"] = lp.nu;
        audit("mather_min_value", lp.min_value >= -1e-8 && lp.min_value <= 0.0);
        if (!sweep_->divergent) {
            SweepMather sm = mather_from_sweep(limit_sys_, *sweep_, spec_.z, spec_.k);
            double bound = 5.0 * sm.lambda * stencil_norm(limit_sys_);
            out["sweep_limit"] = sm;
            out["closedness_bound"] = bound;
            audit("mather_sweep_closedness", sm.closedness_residual <= bound);
            audit("mather_sweep_cost", std::abs(sm.cost) <= 1e-4);
        }
        result_["mather"] = out;
    }

    void selection() {
        MatherSet mset = mather_face_samples(limit_sys_, spec_.face_samples, spec_.seed);
        nlohmann::json out;
        out["mather_set"] = mset;
        if (sweep_->divergent) {
            audit("selection", false);
            result_["selection"] = out;
            return;
        }
        ValueField w = selection_field(limit_sys_, mset);
        ConvergenceReport rep = convergence_report(limit_sys_, *sweep_, w, mset);
        out["field"] = w;
        out["report"] = rep;
        result_["selection"] = out;
        audit("selection", rep.pass);
    }

    const ExperimentSpec& spec_;
    fs::path dir_;
    std::optional<HamiltonianModel> model_;
    DiscreteSystem sys_;
    DiscreteSystem limit_sys_;
    std::optional<ValueField> solved_;
    std::optional<ErgodicResult> ergodic_;
    std::optional<SweepResult> sweep_;
    nlohmann::json result_ = nlohmann::json::object();
    nlohmann::json audits_ = nlohmann::json::object();
};

nlohmann::json error_record(const Error& e) {
    return {{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
}

} // namespace

ExitReport run_experiment(const ExperimentSpec& spec) {
    auto start = std::chrono::steady_clock::now();
    ExitReport report;
    const fs::path dir(spec.output_dir);
    try {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec || !fs::is_directory(dir))
            throw Error(Errc::Io, "cannot create output directory '" + spec.output_dir + "'");
        const fs::path probe = dir / ".write_probe";
        {
            std::ofstream test(probe);
            if (!test) throw Error(Errc::Io, "output directory '" + spec.output_dir +
                                                 "' is not writable");
        }
        fs::remove(probe, ec);
    } catch (const Error& e) {
        report.exit_code = 2;
        report.error = e.what();
        report.result = error_record(e);
        return report;
    }

    try {
        Runner runner(spec);
        report.result = runner.run();
        report.exit_code = report.result["pass"].get<bool>() ? 0 : 1;
    } catch (const Error& e) {
        report.result = error_record(e);
        report.error = e.what();
        bool usage = e.code() == Errc::Io || e.code() == Errc::BadValue ||
                     e.code() == Errc::BadSystemFile || e.code() == Errc::ParseError ||
                     e.code() == Errc::UnknownKey;
        report.exit_code = usage ? 2 : 1;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
        const std::string text = report.result.dump(2) + "\n";
        write_text(dir / "result.json", text);
        nlohmann::json manifest = {
            {"version", std::string(kVersion)},
            {"spec", serialize(spec)},
            {"seed", spec.seed},
            {"threads", worker_count()},
            {"wall_time", wall},
            {"exit_code", report.exit_code},
            {"result_hash_fnv1a", fnv1a(strip_wall_time(report.result).dump())},
        };
        write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const Error& e) {
        report.exit_code = 2;
        report.error = e.what();
    }
    return report;
}

} // namespace discountlab::cli
