// hyperlq: optimal feedback synthesis for a scalar transport equation with a
// prescribed final state.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hyperlq/pipeline.hpp"

namespace {

using namespace hyperlq;

std::vector<std::pair<double, double>> parse_ladder(const std::string& text) {
    // "h:tau,h:tau,..." or "h,h,h" (tau = h)
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto colon = item.find(':');
        try {
            double h = std::stod(item.substr(0, colon));
            double tau = colon == std::string::npos ? h : std::stod(item.substr(colon + 1));
            out.emplace_back(h, tau);
        } catch (const std::exception&) {
            throw ValidationError("bad ladder entry '" + item + "' (expected h or h:tau)");
        }
    }
    return out;
}

struct Options {
    std::string example, config, out = "out", profile, riccati, psi, transport, quadrature, ladder;
    double h = 0, tau = 0, terminal_tol = 0;
    std::size_t nz = 0, nt = 0, stride = 10, oracle_nz = 0, oracle_nt = 0;
    bool oracle = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->set_help_flag("--help", "print this help and exit");
    cmd->add_option("--example", o.example, "built-in problem: ex1, ex2, zero_demo");
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--h", o.h, "space step");
    cmd->add_option("--tau", o.tau, "time step");
    cmd->add_option("--nz", o.nz, "spatial nodes");
    cmd->add_option("--nt", o.nt, "time levels");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--stride", o.stride, "CSV decimation stride");
    cmd->add_option("--profile", o.profile, "method profile: upwind, accurate");
    cmd->add_option("--riccati-method", o.riccati, "upwind_euler | characteristics_rk4");
    cmd->add_option("--psi-method", o.psi, "characteristics | upwind_euler");
    cmd->add_option("--transport-method", o.transport, "upwind | characteristics");
    cmd->add_option("--e-quadrature", o.quadrature, "left | trapezoid");
}

RunConfig build_config(const Options& o, CLI::App* cmd) {
    RunConfig cfg;
    if (!o.config.empty()) apply_config_json(cfg, load_json_file(o.config));
    if (!o.example.empty()) set_example(cfg, o.example);
    if (!cfg.has_problem) throw ValidationError("no problem given (use --example or --config)");
    if (cmd->count("--h")) cfg.grid.h = o.h;
    if (cmd->count("--tau")) cfg.grid.tau = o.tau;
    if (cmd->count("--nz")) cfg.grid.nz = o.nz;
    if (cmd->count("--nt")) cfg.grid.nt = o.nt;
    if (cmd->count("--out")) cfg.out_dir = o.out;
    if (cmd->count("--stride")) cfg.stride = o.stride;
    if (!o.profile.empty()) cfg.profile = o.profile;
    if (!o.riccati.empty()) cfg.riccati = parse_riccati_method(o.riccati);
    if (!o.psi.empty()) cfg.psi = parse_psi_method(o.psi);
    if (!o.transport.empty()) cfg.transport = parse_transport_method(o.transport);
    if (!o.quadrature.empty()) cfg.quadrature = parse_quadrature(o.quadrature);
    if (cmd->get_option_no_throw("--terminal-tol") && cmd->count("--terminal-tol")) cfg.verify.terminal_tol = o.terminal_tol;
    if (o.oracle) cfg.verify.oracle = true;
    if (o.oracle_nz) cfg.verify.oracle_nz = o.oracle_nz;
    if (o.oracle_nt) cfg.verify.oracle_nt = o.oracle_nt;
    if (!o.ladder.empty()) cfg.ladder = parse_ladder(o.ladder);
    if (cfg.profile) profile_methods(*cfg.profile);
    return cfg;
}

int report_error(const std::exception& e, const std::string& out_dir) {
    json j = error_json(e);
    std::cerr << "hyperlq: " << j["error"].get<std::string>() << ": " << e.what() << "\n";
    try {
        write_json(std::filesystem::path(out_dir) / "error.json", j);
    } catch (const std::exception&) {
    }
    return j["exit_code"].get<int>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperlq - feedback synthesis for final-state constrained transport control"};
    app.set_help_flag("--help", "print this help and exit");
    app.set_version_flag("--version", std::string(hyperlq::version));
    app.require_subcommand(1);
    Options o;

    auto* solve = app.add_subcommand("solve", "run the synthesis and closed loop");
    add_common(solve, o);
    auto* verify = app.add_subcommand("verify", "check the optimality system and identities");
    add_common(verify, o);
    verify->add_option("--terminal-tol", o.terminal_tol, "terminal tolerance as a fraction of max|eta|");
    verify->add_flag("--oracle", o.oracle, "also run the KKT oracle");
    verify->add_option("--oracle-nz", o.oracle_nz, "oracle spatial nodes");
    verify->add_option("--oracle-nt", o.oracle_nt, "oracle time levels");
    auto* converge = app.add_subcommand("converge", "grid refinement study");
    add_common(converge, o);
    converge->add_option("--ladder", o.ladder, "rungs as h:tau,h:tau,... (at least 3)");
    auto* oracle = app.add_subcommand("oracle-compare", "compare against the discrete KKT optimum");
    add_common(oracle, o);
    oracle->add_option("--oracle-nz", o.oracle_nz, "oracle spatial nodes");
    oracle->add_option("--oracle-nt", o.oracle_nt, "oracle time levels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }

    std::string out_dir = o.out;
    try {
        CLI::App* cmd = app.get_subcommands().front();
        RunConfig cfg = build_config(o, cmd);
        out_dir = cfg.out_dir;
        if (cmd == solve) {
            json s = cmd_solve(cfg);
            std::printf("eta0 = %.6f  terminal_error_inf = %.6g  J_quadrature = %.6g  J_closed_form = %.6g  gap = %.3g\n",
                        s["eta0"].get<double>(), s["terminal_error_inf"].get<double>(),
                        s["J_quadrature"].get<double>(), s["J_closed_form"].get<double>(),
                        s["relative_gap"].get<double>());
        } else if (cmd == verify) {
            auto res = cmd_verify(cfg);
            for (const auto& c : res.report["checks"])
                std::printf("%-24s %-4s value=%.6g tol=%.6g\n", c["name"].get<std::string>().c_str(),
                            c["passed"].get<bool>() ? "ok" : "FAIL", c["value"].get<double>(),
                            c["tolerance"].get<double>());
            if (!res.passed) {
                std::cerr << "hyperlq: verification failed:";
                for (const auto& f : res.report["failing"]) std::cerr << " " << f.get<std::string>();
                std::cerr << "\n";
                return static_cast<int>(ExitCode::verification);
            }
        } else if (cmd == converge) {
            auto rows = cmd_converge(cfg);
            std::fputs(convergence_csv(rows).c_str(), stdout);
        } else {
            json j = cmd_oracle_compare(cfg);
            std::printf("oracle cost = %.6g  closed form = %.6g  gap = %.4g  control rms gap = %.4g  kkt = %.3g\n",
                        j["cost_oracle"].get<double>(), j["cost_closed_form_coarse"].get<double>(),
                        j["cost_gap"].get<double>(), j["control_rms_gap"].get<double>(),
                        j["kkt_residual"].get<double>());
        }
    } catch (const std::exception& e) {
        return report_error(e, out_dir);
    }
    return 0;
}
