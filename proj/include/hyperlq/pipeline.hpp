#pragma once

// Orchestration used by the command line tool: config, the solve pipeline,
// verification checks, convergence sweeps and oracle comparison.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperlq/cost.hpp"
#include "hyperlq/error.hpp"
#include "hyperlq/grid.hpp"
#include "hyperlq/oracle.hpp"
#include "hyperlq/problem.hpp"
#include "hyperlq/riccati.hpp"
#include "hyperlq/simulate.hpp"
#include "hyperlq/synthesis.hpp"

namespace hyperlq {

inline constexpr const char* version = "0.1.0";

using json = nlohmann::json;

struct Methods {
    RiccatiMethod riccati = RiccatiMethod::upwind_euler;
    PsiMethod psi = PsiMethod::characteristics;
    TransportMethod transport = TransportMethod::upwind;
    Quadrature quadrature = Quadrature::left;

    SynthesisOptions synthesis() const { return {riccati, quadrature, psi, default_g_max}; }
};

/// "upwind": upwind gain and state with the left-endpoint e rule.
/// "accurate": characteristic tracing everywhere with the trapezoid e rule.
inline Methods profile_methods(const std::string& name) {
    if (name == "upwind") return {};
    if (name == "accurate")
        return {RiccatiMethod::characteristics_rk4, PsiMethod::characteristics, TransportMethod::characteristics,
                Quadrature::trapezoid};
    throw ValidationError("unknown profile '" + name + "' (known: upwind, accurate)");
}

inline RiccatiMethod parse_riccati_method(const std::string& s) {
    if (s == "upwind_euler") return RiccatiMethod::upwind_euler;
    if (s == "characteristics_rk4") return RiccatiMethod::characteristics_rk4;
    throw ValidationError("unknown riccati method '" + s + "'");
}
inline PsiMethod parse_psi_method(const std::string& s) {
    if (s == "characteristics") return PsiMethod::characteristics;
    if (s == "upwind_euler") return PsiMethod::upwind_euler;
    throw ValidationError("unknown psi method '" + s + "'");
}
inline TransportMethod parse_transport_method(const std::string& s) {
    if (s == "upwind") return TransportMethod::upwind;
    if (s == "characteristics") return TransportMethod::characteristics;
    throw ValidationError("unknown transport method '" + s + "'");
}
inline Quadrature parse_quadrature(const std::string& s) {
    if (s == "left") return Quadrature::left;
    if (s == "trapezoid") return Quadrature::trapezoid;
    throw ValidationError("unknown e quadrature '" + s + "'");
}

struct GridChoice {
    std::optional<std::size_t> nz, nt;
    std::optional<double> h, tau;

    UniformGrid make(double l, double T) const {
        if ((nz || nt) && (h || tau)) throw ValidationError("give the grid either as nz/nt or as h/tau, not both");
        if (nz || nt) {
            if (!nz || !nt) throw ValidationError("both nz and nt are required");
            return UniformGrid(*nz, *nt, l, T);
        }
        return UniformGrid::from_steps(l, T, h.value_or(0.001), tau.value_or(0.001));
    }
};

struct VerifyOptions {
    bool residuals = true;
    bool oracle = false;
    std::size_t oracle_nz = 11;
    std::size_t oracle_nt = 121;
    double terminal_tol = 0.05;  // times the target scale
    double closed_form_tol = 1e-3;
    double costate_tol = 0.01;
    double stationarity_tol = 1e-12;
    double gamma0_tol = 1e-6;
    double cost_gap_tol = 0.01;
    double oracle_cost_tol = 0.05;
    double oracle_rms_tol = 0.10;
    double oracle_kkt_tol = 1e-8;
};

struct RunConfig {
    std::string problem_name;
    ProblemSpec problem;
    GridChoice grid;
    std::optional<std::string> profile;
    std::optional<RiccatiMethod> riccati;
    std::optional<PsiMethod> psi;
    std::optional<TransportMethod> transport;
    std::optional<Quadrature> quadrature;
    std::string out_dir = "out";
    std::size_t stride = 10;
    std::set<std::string> fields = {"g", "e", "psi", "gamma", "x", "u", "lambda", "terminal"};
    VerifyOptions verify;
    std::vector<std::pair<double, double>> ladder;
    bool has_problem = false;

    /// Methods after applying the profile (or the command default) and overrides.
    Methods methods(const std::string& default_profile) const {
        Methods m = profile_methods(profile.value_or(default_profile));
        if (riccati) m.riccati = *riccati;
        if (psi) m.psi = *psi;
        if (transport) m.transport = *transport;
        if (quadrature) m.quadrature = *quadrature;
        return m;
    }
};

inline void set_example(RunConfig& cfg, const std::string& name) {
    if (cfg.has_problem) throw ValidationError("give exactly one problem source (example or config problem)");
    cfg.problem = builtin_example(name);
    cfg.problem_name = name;
    cfg.has_problem = true;
}

/// Reads a JSON config. Keys: example | problem, grid, methods, output, verify, ladder.
inline void apply_config_json(RunConfig& cfg, const json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    static const std::set<std::string> known = {"example", "problem", "grid", "methods", "output", "verify", "ladder"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
    if (j.contains("example") && j.contains("problem"))
        throw ValidationError("give exactly one problem source (example or problem)");
    try {
        if (j.contains("example")) set_example(cfg, j["example"].get<std::string>());
        if (j.contains("problem")) {
            if (cfg.has_problem) throw ValidationError("give exactly one problem source");
            cfg.problem = problem_from_json(j["problem"]);
            cfg.problem_name = "config";
            cfg.has_problem = true;
        }
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            if (g.contains("nz")) cfg.grid.nz = g["nz"].get<std::size_t>();
            if (g.contains("nt")) cfg.grid.nt = g["nt"].get<std::size_t>();
            if (g.contains("h")) cfg.grid.h = g["h"].get<double>();
            if (g.contains("tau")) cfg.grid.tau = g["tau"].get<double>();
        }
        if (j.contains("methods")) {
            const auto& m = j["methods"];
            if (m.contains("profile")) cfg.profile = m["profile"].get<std::string>();
            if (m.contains("riccati")) cfg.riccati = parse_riccati_method(m["riccati"].get<std::string>());
            if (m.contains("psi")) cfg.psi = parse_psi_method(m["psi"].get<std::string>());
            if (m.contains("transport")) cfg.transport = parse_transport_method(m["transport"].get<std::string>());
            if (m.contains("e_quadrature")) cfg.quadrature = parse_quadrature(m["e_quadrature"].get<std::string>());
        }
        if (j.contains("output")) {
            const auto& o = j["output"];
            if (o.contains("dir")) cfg.out_dir = o["dir"].get<std::string>();
            if (o.contains("stride")) cfg.stride = o["stride"].get<std::size_t>();
            if (o.contains("fields")) cfg.fields = o["fields"].get<std::set<std::string>>();
        }
        if (j.contains("verify")) {
            const auto& v = j["verify"];
            auto& o = cfg.verify;
            if (v.contains("residuals")) o.residuals = v["residuals"].get<bool>();
            if (v.contains("oracle")) o.oracle = v["oracle"].get<bool>();
            if (v.contains("oracle_grid")) {
                o.oracle_nz = v["oracle_grid"].value("nz", o.oracle_nz);
                o.oracle_nt = v["oracle_grid"].value("nt", o.oracle_nt);
            }
            o.terminal_tol = v.value("terminal_tol", o.terminal_tol);
            o.closed_form_tol = v.value("closed_form_tol", o.closed_form_tol);
            o.costate_tol = v.value("costate_tol", o.costate_tol);
            o.cost_gap_tol = v.value("cost_gap_tol", o.cost_gap_tol);
        }
        if (j.contains("ladder"))
            for (const auto& r : j["ladder"]) cfg.ladder.emplace_back(r.at("h").get<double>(), r.at("tau").get<double>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad config value: ") + e.what());
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------

class StageTimer {
public:
    void start() { t0_ = std::chrono::steady_clock::now(); }
    void stop(const std::string& stage) {
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        timings_[stage] = timings_.value(stage, 0.0) + dt;
    }
    const json& timings() const { return timings_; }

private:
    std::chrono::steady_clock::time_point t0_;
    json timings_ = json::object();
};

struct PipelineRun {
    ResolvedProblem problem;
    FeedbackLaw law;
    SolveResult result;
    CostReport cost;
    Methods methods;
    json timings;
};

inline PipelineRun run_pipeline(const ProblemSpec& spec, const UniformGrid& grid, const Methods& m,
                                bool with_residuals = true) {
    StageTimer tm;
    tm.start();
    ResolvedProblem pr = resolve(spec, grid);
    tm.stop("resolve");
    tm.start();
    FeedbackLaw law = synthesize(pr, m.synthesis());
    tm.stop("synthesis");
    tm.start();
    SolveResult res = closed_loop(pr, law, m.transport);
    tm.stop("simulate");
    tm.start();
    double Jq = cost_quadrature(res.x, res.u, pr);
    double Jc = spec.target_mode == TargetMode::zero_case ? optimal_cost_zero_case(law, pr) : optimal_cost_closed(law, pr);
    CostReport cost = cost_report(Jq, Jc);
    tm.stop("cost");
    if (with_residuals) {
        tm.start();
        res.residuals = residuals(res, law, pr);
        tm.stop("residuals");
    }
    return PipelineRun{std::move(pr), std::move(law), std::move(res), cost, m, tm.timings()};
}

/// Scale of the terminal target: max |eta|, or the data scale when eta is 0.
inline double target_scale(const PipelineRun& run) {
    double s = 0.0;
    for (double v : run.law.eta) s = std::max(s, std::abs(v));
    if (s > 0.0) return s;
    for (double v : run.problem.varphi_samples) s = std::max(s, std::abs(v));
    for (double v : run.problem.phi_samples) s = std::max(s, std::abs(v));
    return s > 0.0 ? s : 1.0;
}

inline json methods_json(const Methods& m) {
    return {{"riccati", to_string(m.riccati)},
            {"psi", to_string(m.psi)},
            {"transport", to_string(m.transport)},
            {"e_quadrature", to_string(m.quadrature)}};
}

inline json grid_json(const UniformGrid& g, double c) {
    return {{"nz", g.nz()}, {"nt", g.nt()}, {"h", g.h()}, {"tau", g.tau()}, {"l", g.l()}, {"T", g.T()}, {"cfl", g.cfl(c)}};
}

inline json residuals_json(const ResidualReport& r) {
    return {{"state_pde", r.state_pde},
            {"costate_pde", r.costate_pde},
            {"terminal_costate", r.terminal_costate},
            {"stationarity", r.stationarity},
            {"transform", r.transform}};
}

inline json summary_json(const PipelineRun& run, const std::string& command, const std::string& problem_name) {
    const auto& law = run.law;
    double gmax = 0.0;
    for (double v : law.gamma) gmax = std::max(gmax, std::abs(v));
    json j;
    j["version"] = version;
    j["command"] = command;
    j["problem"] = problem_to_json(run.problem.spec);
    j["problem_name"] = problem_name;
    j["grid"] = grid_json(run.problem.grid, run.problem.spec.c);
    j["methods"] = methods_json(run.methods);
    j["eta0"] = law.eta0;
    j["bbar"] = run.problem.bbar;
    j["gamma"] = {{"first", law.gamma.front()}, {"last", law.gamma.back()}, {"max_abs", gmax}};
    j["terminal_error_inf"] = run.result.terminal_error_inf;
    j["terminal_error_rel"] = run.result.terminal_error_inf / target_scale(run);
    j["J_quadrature"] = run.cost.J_quadrature;
    j["J_closed_form"] = run.cost.J_closed_form;
    j["relative_gap"] = run.cost.relative_gap;
    j["residuals"] = residuals_json(run.result.residuals);
    j["riccati"] = {{"max_g", law.riccati.max_g}, {"stiffness", law.riccati.stiffness}};
    j["timings"] = run.timings;
    return j;
}

// ---------------------------------------------------------------------------
// Output helpers. Files are written to a temporary name and renamed.

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw NumericalError("cannot write " + tmp.string());
        out << text;
        if (!out) throw NumericalError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

inline void write_field(const std::filesystem::path& path, const Field& f, std::size_t stride) {
    std::ostringstream os;
    write_field_csv(os, f, stride);
    write_text_atomic(path, os.str());
}

inline void write_outputs(const PipelineRun& run, const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::path dir(cfg.out_dir);
    auto want = [&](const char* name) { return cfg.fields.count(name) > 0; };
    const auto& law = run.law;
    const auto& g = run.problem.grid;
    if (want("g")) write_field(dir / "g.csv", law.riccati.g, cfg.stride);
    if (want("e")) write_field(dir / "e.csv", law.riccati.e, cfg.stride);
    if (want("psi")) write_field(dir / "psi.csv", law.psi, cfg.stride);
    if (want("x")) write_field(dir / "x.csv", run.result.x, cfg.stride);
    if (want("u")) write_field(dir / "u.csv", run.result.u, cfg.stride);
    if (want("lambda")) write_field(dir / "lambda.csv", run.result.lambda, cfg.stride);
    char buf[128];
    if (want("gamma")) {
        std::string s = "z,gamma\n";
        for (std::size_t i = 0; i < g.nz(); ++i) {
            std::snprintf(buf, sizeof buf, "%.10g,%.17g\n", g.z(i), law.gamma[i]);
            s += buf;
        }
        write_text_atomic(dir / "gamma.csv", s);
    }
    if (want("terminal")) {
        std::string s = "z,x_T,eta,error\n";
        const std::size_t kT = g.nt() - 1;
        for (std::size_t i = 0; i < g.nz(); ++i) {
            double xT = run.result.x.at(i, kT);
            std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g,%.17g\n", g.z(i), xT, law.eta[i], xT - law.eta[i]);
            s += buf;
        }
        write_text_atomic(dir / "terminal.csv", s);
    }
}

// ---------------------------------------------------------------------------

inline json cmd_solve(const RunConfig& cfg) {
    UniformGrid grid = cfg.grid.make(cfg.problem.l, cfg.problem.T);
    PipelineRun run = run_pipeline(cfg.problem, grid, cfg.methods("upwind"));
    json summary = summary_json(run, "solve", cfg.problem_name);
    if (cfg.problem.target_mode == TargetMode::zero_case) {
        double t_end = 1.2 * cfg.problem.T;
        Field ext = extended_stabilization(run.problem, run.result.x, t_end, run.methods.transport);
        double after = 0.0;
        for (std::size_t k = grid.nt(); k < ext.nt(); ++k)
            for (double v : ext.level(k)) after = std::max(after, std::abs(v));
        summary["extension"] = {{"t_end", ext.grid().T()}, {"max_abs_after_T", after}};
    }
    write_outputs(run, cfg);
    write_json(std::filesystem::path(cfg.out_dir) / "summary.json", summary);
    return summary;
}

struct Check {
    std::string name;
    double value;
    double tolerance;
    bool passed;
};

inline json checks_json(const std::vector<Check>& checks) {
    json arr = json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}});
    return arr;
}

struct OracleRun {
    DiscreteLQ dlq;
    OracleResult result;
    OracleComparison comparison;
    PipelineRun coarse;
    double seconds = 0.0;
};

/// Oracle on a coarse grid; the analytic cost comes from synthesis re-run on
/// that grid, the analytic control from `fine` restricted to it.
inline OracleRun run_oracle(const ProblemSpec& spec, const PipelineRun& fine, std::size_t nz, std::size_t nt,
                            const Methods& m) {
    UniformGrid coarse_grid(nz, nt, spec.l, spec.T);
    PipelineRun coarse = run_pipeline(spec, coarse_grid, m, false);
    auto t0 = std::chrono::steady_clock::now();
    DiscreteLQ dlq = discretize(coarse.problem, coarse.law.eta);
    OracleResult res = solve_kkt(dlq);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    OracleComparison cmp = compare(dlq, res, fine.result.u, coarse.cost.J_closed_form, coarse.law.gamma);
    return OracleRun{std::move(dlq), std::move(res), cmp, std::move(coarse), secs};
}

inline json oracle_json(const OracleRun& o) {
    return {{"grid", grid_json(*o.dlq.grid, o.coarse.problem.spec.c)},
            {"unknowns", o.dlq.unknowns()},
            {"cost_oracle", o.comparison.cost_oracle},
            {"cost_closed_form_coarse", o.comparison.cost_analytic},
            {"cost_gap", o.comparison.cost_gap},
            {"control_rms_gap", o.comparison.control_rms_gap},
            {"multiplier_scale", o.comparison.multiplier_scale},
            {"multiplier_correlation", o.comparison.multiplier_correlation},
            {"kkt_residual", o.result.kkt_residual},
            {"certificate", o.result.certificate},
            {"terminal_violation", o.result.terminal_violation},
            {"timings", {{"oracle", o.seconds}}}};
}

struct VerifyOutcome {
    json report;
    bool passed;
};

inline VerifyOutcome cmd_verify(const RunConfig& cfg) {
    const VerifyOptions& v = cfg.verify;
    UniformGrid grid = cfg.grid.make(cfg.problem.l, cfg.problem.T);
    Methods m = cfg.methods("accurate");
    PipelineRun run = run_pipeline(cfg.problem, grid, m, v.residuals);
    const auto& pr = run.problem;
    const auto& law = run.law;
    std::vector<Check> checks;
    double scale = target_scale(run);

    double term = run.result.terminal_error_inf;
    checks.push_back({"terminal_error", term, v.terminal_tol * scale, term <= v.terminal_tol * scale});

    if (pr.spec.target_mode == TargetMode::constrained) {
        auto cf = closed_form_terminal(law, pr);
        double err = 0.0;
        for (std::size_t i = 0; i < cf.size(); ++i) err = std::max(err, std::abs(cf[i] - law.eta[i]));
        checks.push_back({"closed_form_terminal", err, v.closed_form_tol * scale, err <= v.closed_form_tol * scale});
        double gmax = 0.0;
        for (double gv : law.gamma) gmax = std::max(gmax, std::abs(gv));
        double g0 = std::abs(law.gamma.front());
        checks.push_back({"gamma0", g0, v.gamma0_tol * gmax, g0 <= v.gamma0_tol * gmax});
    }

    Field lam = costate_solve(pr, run.result.x, law.gamma, m.transport);
    double lmax = lam.max_abs(), lerr = 0.0;
    for (std::size_t n = 0; n < lam.values().size(); ++n)
        lerr = std::max(lerr, std::abs(lam.values()[n] - run.result.lambda.values()[n]));
    double lrel = lerr / std::max(lmax, cost_epsilon);
    checks.push_back({"costate_relation", lrel, v.costate_tol, lrel <= v.costate_tol});

    double sscale = std::max(1.0, std::abs(pr.spec.b) * run.result.lambda.max_abs());
    double stat = run.result.residuals.stationarity;
    if (!v.residuals) stat = residuals(run.result, law, pr).stationarity;
    checks.push_back({"stationarity", stat, v.stationarity_tol * sscale, stat <= v.stationarity_tol * sscale});

    checks.push_back({"cost_gap", run.cost.relative_gap, v.cost_gap_tol, run.cost.relative_gap <= v.cost_gap_tol});

    json report;
    if (v.oracle) {
        OracleRun o = run_oracle(cfg.problem, run, v.oracle_nz, v.oracle_nt, m);
        checks.push_back({"oracle_cost_gap", o.comparison.cost_gap, v.oracle_cost_tol,
                          o.comparison.cost_gap <= v.oracle_cost_tol});
        checks.push_back({"oracle_control_rms_gap", o.comparison.control_rms_gap, v.oracle_rms_tol,
                          o.comparison.control_rms_gap <= v.oracle_rms_tol});
        checks.push_back({"oracle_kkt_residual", o.result.kkt_residual, v.oracle_kkt_tol,
                          o.result.kkt_residual <= v.oracle_kkt_tol});
        report["oracle"] = oracle_json(o);
    }
    bool ok = std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    report["version"] = version;
    report["problem_name"] = cfg.problem_name;
    report["grid"] = grid_json(grid, pr.spec.c);
    report["methods"] = methods_json(m);
    report["checks"] = checks_json(checks);
    report["passed"] = ok;
    json failing = json::array();
    for (const auto& c : checks)
        if (!c.passed) failing.push_back(c.name);
    report["failing"] = failing;
    report["residuals"] = residuals_json(run.result.residuals);
    report["timings"] = run.timings;
    write_json(std::filesystem::path(cfg.out_dir) / "verify.json", report);
    return {report, ok};
}

struct ConvergenceRow {
    double h;
    double tau;
    double terminal_error_inf;
    double cost_gap;
    double state_residual;
    std::string observed_order;
};

inline std::vector<ConvergenceRow> run_convergence(const ProblemSpec& spec,
                                                   const std::vector<std::pair<double, double>>& ladder,
                                                   const Methods& m) {
    if (ladder.size() < 3) throw ValidationError("convergence ladder needs at least 3 rungs");
    const double nu0 = spec.c * ladder[0].second / ladder[0].first;
    for (const auto& [h, tau] : ladder)
        if (std::abs(spec.c * tau / h - nu0) > 1e-9 * std::max(1.0, nu0))
            throw ValidationError("convergence ladder must keep c*tau/h fixed");
    std::vector<ConvergenceRow> rows;
    double prev_err = 0.0, prev_h = 0.0, scale = 1.0;
    for (std::size_t n = 0; n < ladder.size(); ++n) {
        auto [h, tau] = ladder[n];
        PipelineRun run = run_pipeline(spec, UniformGrid::from_steps(spec.l, spec.T, h, tau), m, true);
        scale = target_scale(run);
        double err = run.result.terminal_error_inf;
        std::string order;
        if (n > 0) {
            double floor = 1e-12 * scale;
            if (err <= floor && prev_err <= floor)
                order = "exact";
            else if (err > 0.0 && prev_err > 0.0) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.4f", std::log(prev_err / err) / std::log(prev_h / h));
                order = buf;
            }
        }
        rows.push_back({h, tau, err, run.cost.relative_gap, run.result.residuals.state_pde, order});
        prev_err = err;
        prev_h = h;
    }
    return rows;
}

inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
    std::string s = "h,tau,terminal_error_inf,cost_gap,state_residual,observed_order\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%s\n", r.h, r.tau, r.terminal_error_inf,
                      r.cost_gap, r.state_residual, r.observed_order.c_str());
        s += buf;
    }
    return s;
}

inline std::vector<ConvergenceRow> cmd_converge(const RunConfig& cfg) {
    auto ladder = cfg.ladder;
    if (ladder.empty()) ladder = {{0.004, 0.004}, {0.002, 0.002}, {0.001, 0.001}};
    auto rows = run_convergence(cfg.problem, ladder, cfg.methods("accurate"));
    write_text_atomic(std::filesystem::path(cfg.out_dir) / "convergence.csv", convergence_csv(rows));
    return rows;
}

inline json cmd_oracle_compare(const RunConfig& cfg) {
    UniformGrid grid = cfg.grid.make(cfg.problem.l, cfg.problem.T);
    Methods m = cfg.methods("upwind");
    PipelineRun fine = run_pipeline(cfg.problem, grid, m, false);
    OracleRun o = run_oracle(cfg.problem, fine, cfg.verify.oracle_nz, cfg.verify.oracle_nt, m);
    json j = oracle_json(o);
    j["version"] = version;
    j["problem_name"] = cfg.problem_name;
    j["methods"] = methods_json(m);
    j["reference_grid"] = grid_json(grid, cfg.problem.c);
    namespace fs = std::filesystem;
    write_field(fs::path(cfg.out_dir) / "u_oracle.csv", oracle_control_field(o.dlq, o.result), 1);
    write_json(fs::path(cfg.out_dir) / "oracle_summary.json", j);
    return j;
}

inline json error_json(const std::exception& e) {
    json j;
    if (const auto* he = dynamic_cast<const Error*>(&e)) {
        j["error"] = he->kind();
        j["exit_code"] = static_cast<int>(he->exit_code());
    } else {
        j["error"] = "internal";
        j["exit_code"] = static_cast<int>(ExitCode::numerical);
    }
    j["message"] = e.what();
    j["version"] = version;
    return j;
}

}  // namespace hyperlq
