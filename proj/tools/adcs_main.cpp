// adcs: solve, evaluate and compare covariance-steering policies from a JSON config.
//
// Exit codes: 0 success, 2 at least one formulation declared infeasible, 1 error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adcs/config.hpp"
#include "adcs/harness.hpp"

namespace fs = std::filesystem;
using namespace adcs;

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> design_samples;
    std::optional<int> eval_samples;
    std::vector<std::string> formulations;
    std::vector<double> sigma_f_theta;
    std::vector<std::string> priors;
    std::optional<double> gamma;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory (default: config output_dir)");
    cmd->add_option("--seed", o.seed, "design seed; the evaluation seed becomes seed + 1");
    cmd->add_option("--design-samples", o.design_samples, "design scenarios M")->check(CLI::Range(2, 1 << 20));
    cmd->add_option("--eval-samples", o.eval_samples, "evaluation trials")->check(CLI::Range(2, 1 << 24));
    cmd->add_option("--sigma-f-theta", o.sigma_f_theta, "terminal covariance setting(s), replaces the grid values")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--prior", o.priors, "prior name(s) from the config, replaces the grid priors");
    cmd->add_option("--gamma", o.gamma, "forgetting factor in (0, 1]");
}

ExperimentConfig apply(const Overrides& o) {
    ExperimentConfig cfg = load_config(o.config);
    if (o.seed) {
        cfg.design_seed = *o.seed;
        cfg.eval_seed = *o.seed + 1;
    }
    if (o.design_samples) cfg.design_samples = *o.design_samples;
    if (o.eval_samples) cfg.eval_samples = *o.eval_samples;
    if (!o.formulations.empty()) {
        cfg.formulations.clear();
        for (const auto& f : o.formulations) cfg.formulations.push_back(formulation_from_string(f));
    }
    if (!o.sigma_f_theta.empty()) cfg.grid_sigma_f_theta = o.sigma_f_theta;
    if (!o.priors.empty()) cfg.grid_priors = o.priors;
    if (o.gamma) cfg.gamma = *o.gamma;
    if (!o.out.empty()) cfg.output_dir = o.out;
    cfg.validate();
    return cfg;
}

void print_table(const ComparisonReport& report) {
    std::cout << std::left << std::setw(32) << "cell" << std::setw(10) << "form" << std::setw(17) << "status"
              << std::setw(12) << "cost" << std::setw(10) << "norm" << std::setw(10) << "feasible"
              << "ok\n";
    for (const auto& cell : report.cells) {
        for (const auto& r : cell.formulations) {
            std::cout << std::setw(32) << cell.name() << std::setw(10) << to_string(r.formulation) << std::setw(17)
                      << r.status << std::setw(12);
            if (r.evaluation) {
                std::cout << r.evaluation->cost_mean;
            } else {
                std::cout << "inf";
            }
            std::cout << std::setw(10);
            if (r.cost_norm) {
                std::cout << *r.cost_norm;
            } else {
                std::cout << "-";
            }
            std::cout << std::setw(10) << (r.design_feasible ? "yes" : "no") << (r.satisfied ? "yes" : "no") << '\n';
            if (!r.error.empty()) std::cout << "    error: " << r.error << '\n';
        }
    }
}

int run_compare(const Overrides& o) {
    const ExperimentConfig cfg = apply(o);
    const fs::path out = cfg.output_dir;
    const ComparisonReport report = run_comparison(cfg, out);
    emit_outputs(report, cfg, out);
    print_table(report);
    std::cout << "wrote " << (out / "summary.json").string() << '\n';
    return report.any_infeasible() ? 2 : 0;
}

int run_solve(const Overrides& o) {
    ExperimentConfig cfg = apply(o);
    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    const Formulation f = cfg.formulations.front();
    CellReport cell;
    {
        ExperimentConfig one = cfg;
        one.formulations = {f};
        one.trajectory_trials = 0;
        cell = run_cell(one, cfg.grid_priors.front(), cfg.grid_sigma_f_theta.front(), out);
    }
    const FormulationReport& r = cell.formulations.front();
    std::cout << cell.name() << ' ' << to_string(f) << ": " << r.status;
    if (r.solution) {
        const auto& res = r.solution->result;
        std::cout << " objective=" << res.objective << " max_violation=" << res.max_violation
                  << " kkt=" << res.kkt_residual << " outer=" << res.outer_iterations;
        const fs::path p = out / cell.name() / ("policy_" + to_string(f) + ".json");
        write_policy_json(p, *r.solution);
        std::cout << "\nwrote " << p.string();
    }
    std::cout << '\n';
    if (r.status == "error") {
        std::cerr << "error: " << r.error << '\n';
        return 1;
    }
    return r.status == "infeasible" ? 2 : 0;
}

int run_evaluate(const Overrides& o, const std::string& policy_path) {
    ExperimentConfig cfg = apply(o);
    const std::string prior = cfg.grid_priors.front();
    const double theta = cfg.grid_sigma_f_theta.front();
    const SteeringSpec spec = cfg.spec(prior, theta);
    const SteeringSolution sol = read_policy_json(policy_path);
    const PolicyEvaluation ev =
        evaluate_policy(sol.policy, spec, cfg.eval_samples, cfg.eval_seed, cfg.eps_eval_for(spec.Sigma_F));

    CellReport cell;
    cell.prior = prior;
    cell.sigma_f_theta = theta;
    cell.spec = spec;
    FormulationReport rep;
    rep.formulation = sol.formulation;
    rep.status = "evaluated";
    rep.evaluation = ev;
    cell.formulations.push_back(rep);

    const fs::path out = fs::path(cfg.output_dir) / cell.name();
    fs::create_directories(out);
    const std::string stats = evaluation_json(ev, spec, cfg.design_samples);
    {
        std::ofstream os(out / "evaluation.json");
        os << stats;
        if (!os) throw std::runtime_error("cannot write " + (out / "evaluation.json").string());
    }
    {
        std::ofstream os(out / "trials.csv");
        os << std::setprecision(17);
        write_trials_csv(os, cell);
        if (!os) throw std::runtime_error("cannot write " + (out / "trials.csv").string());
    }
    std::cout << stats;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive dual covariance steering: solve, evaluate and compare policies"};
    app.require_subcommand(1);

    Overrides compare_o, solve_o, eval_o;
    std::string formulation = "dual";
    std::string policy_path;

    auto* compare = app.add_subcommand("compare", "solve and evaluate every formulation on the config grid");
    add_common(compare, compare_o);
    compare->add_option("--formulation", compare_o.formulations, "formulation(s): ce, robust, dual, fullinfo");

    auto* solve = app.add_subcommand("solve", "solve one formulation and write its policy file");
    add_common(solve, solve_o);
    solve->add_option("--formulation", formulation, "ce, robust, dual or fullinfo")
        ->check(CLI::IsMember({"ce", "robust", "dual", "fullinfo"}));

    auto* evaluate = app.add_subcommand("evaluate", "evaluate a policy file on fresh trials");
    add_common(evaluate, eval_o);
    evaluate->add_option("--policy", policy_path, "policy JSON written by solve or compare")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0; every usage error maps to the generic error code.
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (compare->parsed()) return run_compare(compare_o);
        if (solve->parsed()) {
            solve_o.formulations = {formulation};
            return run_solve(solve_o);
        }
        return run_evaluate(eval_o, policy_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
