#include "adcs/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adcs {

using detail::require;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json to_json(const Matrix& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(row);
    }
    return a;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    return os;
}

void close_out(std::ofstream& os, const fs::path& path) {
    os.close();
    if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

PolicyEvaluation evaluate_policy(const DualAffinePolicy& pol, const SteeringSpec& spec, int M, std::uint64_t seed,
                                 double eps_eval, bool keep_trajectories) {
    require(M >= 2, "evaluate_policy: need at least two trials");
    require(pol.horizon() == spec.sys.horizon && pol.np() == spec.sys.np,
            "evaluate_policy: policy shape differs from system");
    require(eps_eval > 0.0, "evaluate_policy: eps_eval must be positive");
    const ScenarioSet scen = draw_scenarios(spec.sys, spec.prior, spec.init, spec.noise, M, seed);
    TrajectoryBatch traj = rollout_dual(spec.sys, pol, scen, spec.gamma);
    const int N = traj.horizon();
    const int nx = spec.sys.nx;

    PolicyEvaluation ev;
    ev.costs = scenario_costs(traj, spec.cost);
    ev.terminal_mean = Vector::Zero(nx);
    double sum = 0.0;
    for (int i = 0; i < M; ++i) {
        sum += ev.costs[i];
        ev.x_final.push_back(traj.x[i][N]);
        ev.p_true.push_back(scen.p[i]);
        ev.p_hat_final.push_back(traj.p_hat[i][N]);
        ev.terminal_mean += traj.x[i][N];
    }
    ev.cost_mean = sum / M;
    double ss = 0.0;
    for (double c : ev.costs) ss += (c - ev.cost_mean) * (c - ev.cost_mean);
    ev.cost_stderr = std::sqrt(ss / (M - 1) / M);

    ev.terminal_mean /= M;
    ev.terminal_cov = Matrix::Zero(nx, nx);
    for (const auto& x : ev.x_final) {
        const Vector d = x - ev.terminal_mean;
        ev.terminal_cov.noalias() += d * d.transpose();
    }
    ev.terminal_cov /= M;
    ev.mean_error = ev.terminal_mean - spec.mu_F;
    ev.mean_stderr = (ev.terminal_cov.diagonal() / M).cwiseSqrt();
    ev.cov_excess = detail::max_eigenvalue(ev.terminal_cov - spec.Sigma_F);
    ev.eps_eval = eps_eval;
    ev.cov_ok = ev.cov_excess <= eps_eval;

    const Vector band = 3.0 * spec.Sigma_F.diagonal().cwiseSqrt();
    for (const auto& x : ev.x_final) {
        ev.trial_satisfied.push_back(((x - spec.mu_F).cwiseAbs().array() <= band.array()).all());
    }
    if (keep_trajectories) ev.trajectories = std::move(traj);
    return ev;
}

PolicyEvaluation evaluate_policy(const StaticAffinePolicy& pol, const SteeringSpec& spec, int M,
                                 std::uint64_t seed, double eps_eval, bool keep_trajectories) {
    return evaluate_policy(embed_static_as_dual(pol, spec.sys.np), spec, M, seed, eps_eval, keep_trajectories);
}

Vector mean_tolerance(const PolicyEvaluation& ev, const Vector& delta_mu, int design_samples) {
    require(design_samples >= 1, "mean_tolerance: design_samples must be >= 1");
    const auto M = static_cast<double>(ev.x_final.size());
    const Vector var = ev.terminal_cov.diagonal();
    const Vector se = (var / design_samples + var / M).cwiseSqrt();
    return delta_mu + 3.0 * se;
}

bool mean_ok(const PolicyEvaluation& ev, const Vector& delta_mu, int design_samples) {
    return (ev.mean_error.cwiseAbs().array() <= mean_tolerance(ev, delta_mu, design_samples).array()).all();
}

const FormulationReport* CellReport::find(Formulation f) const {
    for (const auto& r : formulations) {
        if (r.formulation == f) return &r;
    }
    return nullptr;
}

bool ComparisonReport::any_infeasible() const {
    for (const auto& c : cells) {
        for (const auto& f : c.formulations) {
            if (f.status == "infeasible") return true;
        }
    }
    return false;
}

CellReport run_cell(const ExperimentConfig& cfg, const std::string& prior, double sigma_f_theta,
                    const fs::path& log_dir) {
    CellReport cell;
    cell.prior = prior;
    cell.sigma_f_theta = sigma_f_theta;
    cell.spec = cfg.spec(prior, sigma_f_theta);
    cell.spec.validate();
    cell.eps_eval = cfg.eps_eval_for(cell.spec.Sigma_F);
    cell.eval_samples = cfg.eval_samples;

    const fs::path cell_dir = log_dir.empty() ? fs::path() : log_dir / cell.name();
    if (!cell_dir.empty()) fs::create_directories(cell_dir);

    // Warm-start chain: certainty equivalence -> static robust -> adaptive dual.
    std::optional<SteeringSolution> ce, robust;
    for (Formulation f : cfg.formulations) {
        FormulationReport rep;
        rep.formulation = f;
        std::ofstream log_file;
        std::ostream* log = nullptr;
        if (!cell_dir.empty()) {
            log_file = open_out(cell_dir / ("solver_" + to_string(f) + ".log"));
            log = &log_file;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
            SteeringSolution sol;
            switch (f) {
                case Formulation::certainty_equivalence:
                    sol = solve_certainty_equivalence(cell.spec, log);
                    ce = sol;
                    break;
                case Formulation::static_robust:
                    if (!ce) ce = solve_certainty_equivalence(cell.spec);
                    sol = solve_static_robust(cell.spec, &*ce, log);
                    robust = sol;
                    break;
                case Formulation::adaptive_dual:
                    if (!robust) {
                        if (!ce) ce = solve_certainty_equivalence(cell.spec);
                        robust = solve_static_robust(cell.spec, &*ce);
                    }
                    sol = solve_adaptive_dual(cell.spec, &*robust, log);
                    break;
                case Formulation::full_information: {
                    const Vector p_star = cfg.p_star.size() > 0 ? cfg.p_star : cell.spec.prior.mean();
                    sol = solve_full_information(cell.spec, p_star, log);
                    break;
                }
            }
            rep.status = to_string(sol.result.status);
            rep.design_feasible = sol.result.status != SolverStatus::infeasible &&
                                  sol.raw_max_violation <= cell.spec.solver.constraint_tolerance;
            rep.solution = std::move(sol);
        } catch (const std::exception& e) {
            rep.status = "error";
            rep.error = e.what();
        }
        rep.solve_seconds = seconds_since(t0);
        if (log_file.is_open()) log_file.close();

        if (rep.solution && rep.status != "infeasible") {
            const auto t1 = std::chrono::steady_clock::now();
            try {
                rep.evaluation = evaluate_policy(rep.solution->policy, cell.spec, cfg.eval_samples, cfg.eval_seed,
                                                 cell.eps_eval, cfg.trajectory_trials > 0);
                rep.satisfied = rep.evaluation->cov_ok &&
                                mean_ok(*rep.evaluation, cell.spec.effective_delta_mu(), cell.spec.design_samples);
            } catch (const std::exception& e) {
                rep.status = "error";
                rep.design_feasible = false;
                rep.error = std::string("evaluation failed: ") + e.what();
                rep.evaluation.reset();
            }
            rep.eval_seconds = seconds_since(t1);
        }
        cell.formulations.push_back(std::move(rep));
    }

    const FormulationReport* dual = cell.find(Formulation::adaptive_dual);
    const bool has_reference = dual != nullptr && dual->evaluation.has_value() && dual->evaluation->cost_mean > 0.0;
    for (auto& rep : cell.formulations) {
        if (has_reference && rep.evaluation) rep.cost_norm = rep.evaluation->cost_mean / dual->evaluation->cost_mean;
    }
    return cell;
}

ComparisonReport run_comparison(const ExperimentConfig& cfg, const fs::path& log_dir) {
    cfg.validate();
    ComparisonReport report;
    for (const auto& prior : cfg.grid_priors) {
        for (double theta : cfg.grid_sigma_f_theta) report.cells.push_back(run_cell(cfg, prior, theta, log_dir));
    }
    return report;
}

namespace {

json cell_summary(const CellReport& cell) {
    json out = json::object();
    for (const auto& rep : cell.formulations) {
        json f;
        f["status"] = rep.status;
        if (!rep.error.empty()) f["error"] = rep.error;
        f["cost_mean"] = rep.evaluation ? json(rep.evaluation->cost_mean) : json(nullptr);
        f["cost_norm"] = rep.cost_norm ? json(*rep.cost_norm) : json(nullptr);
        if (rep.evaluation) {
            const auto& ev = *rep.evaluation;
            f["cost_stderr"] = ev.cost_stderr;
            f["term_mean_err"] = to_json(ev.mean_error);
            f["term_mean_tol"] = to_json(mean_tolerance(ev, cell.spec.effective_delta_mu(), cell.spec.design_samples));
            f["term_cov"] = to_json(ev.terminal_cov);
            f["cov_excess"] = ev.cov_excess;
        } else {
            f["term_mean_err"] = nullptr;
            f["term_cov"] = nullptr;
        }
        f["design_feasible"] = rep.design_feasible;
        f["satisfied"] = rep.satisfied;
        if (rep.solution) {
            const auto& r = rep.solution->result;
            f["design_objective"] = r.objective;
            f["design_max_violation"] = r.max_violation;
            f["kkt_residual"] = r.kkt_residual;
        }
        out[to_string(rep.formulation)] = f;
    }
    return out;
}

json cell_header(const CellReport& cell) {
    json h;
    h["prior"] = cell.prior;
    h["sigma_f_theta"] = cell.sigma_f_theta;
    h["Sigma_F"] = to_json(cell.spec.Sigma_F);
    h["delta_mu"] = to_json(cell.spec.effective_delta_mu());
    h["delta_sigma"] = to_json(cell.spec.effective_delta_sigma());
    h["eps_eval"] = cell.eps_eval;
    h["design_samples"] = cell.spec.design_samples;
    h["design_seed"] = cell.spec.design_seed;
    h["eval_samples"] = cell.eval_samples;
    return h;
}

}  // namespace

std::string cell_summary_json(const CellReport& cell) { return cell_summary(cell).dump(2) + "\n"; }

std::string summary_json(const ComparisonReport& report) {
    json out = json::object();
    for (const auto& cell : report.cells) {
        json c;
        c["setting"] = cell_header(cell);
        c["formulations"] = cell_summary(cell);
        out[cell.name()] = c;
    }
    return out.dump(2) + "\n";
}

void write_trials_csv(std::ostream& os, const CellReport& cell) {
    const int nx = cell.spec.sys.nx;
    const int np = cell.spec.sys.np;
    os << "formulation,trial,cost";
    for (int a = 0; a < nx; ++a) os << ",x_N" << a;
    for (int j = 0; j < np; ++j) os << ",p_true" << j;
    for (int j = 0; j < np; ++j) os << ",p_hat_N" << j;
    os << ",satisfied\n";
    for (const auto& rep : cell.formulations) {
        if (!rep.evaluation) continue;
        const auto& ev = *rep.evaluation;
        for (std::size_t i = 0; i < ev.costs.size(); ++i) {
            os << to_string(rep.formulation) << ',' << i << ',' << ev.costs[i];
            for (int a = 0; a < nx; ++a) os << ',' << ev.x_final[i][a];
            for (int j = 0; j < np; ++j) os << ',' << ev.p_true[i][j];
            for (int j = 0; j < np; ++j) os << ',' << ev.p_hat_final[i][j];
            os << ',' << (ev.trial_satisfied[i] ? 1 : 0) << '\n';
        }
    }
}

void write_policy_json(const fs::path& path, const SteeringSolution& sol) {
    json j;
    j["formulation"] = to_string(sol.formulation);
    j["N"] = sol.policy.horizon();
    j["nx"] = sol.V.rows();
    j["nu"] = sol.policy.v.front().front().size();
    j["np"] = sol.policy.np();
    j["layout"] = "k-major; per (k, j = 0..np): v[k][j] then L[k][j] row-major; then V row-major";
    j["status"] = to_string(sol.result.status);
    j["z"] = to_json(sol.decision());
    std::ofstream os = open_out(path);
    os << j.dump(2) << '\n';
    close_out(os, path);
}

SteeringSolution read_policy_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open policy file '" + path.string() + "'");
    try {
        const json j = json::parse(in);
        const DecisionLayout layout{j.at("N").get<int>(), j.at("nx").get<int>(), j.at("nu").get<int>(),
                                    j.at("np").get<int>()};
        const auto& jz = j.at("z");
        if (static_cast<int>(jz.size()) != layout.size()) {
            throw ContractViolation("policy vector length " + std::to_string(jz.size()) + " differs from header (" +
                                    std::to_string(layout.size()) + ")");
        }
        Vector z(layout.size());
        for (int t = 0; t < layout.size(); ++t) z[t] = jz[static_cast<std::size_t>(t)].get<double>();
        SteeringSolution sol;
        sol.formulation = formulation_from_string(j.at("formulation").get<std::string>());
        auto [pol, V] = unpack(layout, z);
        sol.policy = std::move(pol);
        sol.V = std::move(V);
        sol.result.z = z;
        return sol;
    } catch (const json::exception& e) {
        throw ContractViolation(path.string() + ": malformed policy file: " + e.what());
    } catch (const ContractViolation& e) {
        throw ContractViolation(path.string() + ": " + e.what());
    }
}

std::string evaluation_json(const PolicyEvaluation& ev, const SteeringSpec& spec, int design_samples) {
    json j;
    j["cost_mean"] = ev.cost_mean;
    j["cost_stderr"] = ev.cost_stderr;
    j["term_mean_err"] = to_json(ev.mean_error);
    j["term_mean_tol"] = to_json(mean_tolerance(ev, spec.effective_delta_mu(), design_samples));
    j["term_cov"] = to_json(ev.terminal_cov);
    j["cov_excess"] = ev.cov_excess;
    j["eps_eval"] = ev.eps_eval;
    j["cov_ok"] = ev.cov_ok;
    j["mean_ok"] = mean_ok(ev, spec.effective_delta_mu(), design_samples);
    j["trials"] = static_cast<int>(ev.costs.size());
    return j.dump(2) + "\n";
}

void emit_outputs(const ComparisonReport& report, const ExperimentConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    {
        const fs::path p = dir / "summary.json";
        std::ofstream os = open_out(p);
        os << summary_json(report);
        close_out(os, p);
    }
    json timing = json::object();
    {
        const fs::path p = dir / "table.csv";
        std::ofstream os = open_out(p);
        os << "prior,sigma_f_theta,formulation,status,cost_mean,cost_norm,design_feasible,satisfied\n";
        for (const auto& cell : report.cells) {
            for (const auto& rep : cell.formulations) {
                os << cell.prior << ',' << cell.sigma_f_theta << ',' << to_string(rep.formulation) << ','
                   << rep.status << ',';
                if (rep.evaluation) os << rep.evaluation->cost_mean;
                os << ',';
                if (rep.cost_norm) os << *rep.cost_norm;
                os << ',' << (rep.design_feasible ? 1 : 0) << ',' << (rep.satisfied ? 1 : 0) << '\n';
            }
        }
        close_out(os, p);
    }
    for (const auto& cell : report.cells) {
        const fs::path cdir = dir / cell.name();
        fs::create_directories(cdir);
        {
            const fs::path p = cdir / "summary.json";
            std::ofstream os = open_out(p);
            os << cell_summary_json(cell);
            close_out(os, p);
        }
        {
            const fs::path p = cdir / "trials.csv";
            std::ofstream os = open_out(p);
            write_trials_csv(os, cell);
            close_out(os, p);
        }
        json& t = timing[cell.name()];
        for (const auto& rep : cell.formulations) {
            const std::string f = to_string(rep.formulation);
            json& tf = t[f];
            tf["solve_seconds"] = rep.solve_seconds;
            tf["eval_seconds"] = rep.eval_seconds;
            if (rep.solution) {
                const auto& r = rep.solution->result;
                tf["outer_iterations"] = r.outer_iterations;
                tf["inner_iterations"] = r.inner_iterations;
                tf["evaluations"] = r.evaluations;
                write_policy_json(cdir / ("policy_" + f + ".json"), *rep.solution);
            }
            if (rep.evaluation && cfg.trajectory_trials > 0 && rep.evaluation->trajectories.size() > 0) {
                std::vector<int> subset;
                const int n = std::min(cfg.trajectory_trials, rep.evaluation->trajectories.size());
                for (int i = 0; i < n; ++i) subset.push_back(i);
                const fs::path p = cdir / ("trajectories_" + f + ".csv");
                std::ofstream os = open_out(p);
                write_trajectory_csv(os, rep.evaluation->trajectories, subset);
                close_out(os, p);
            }
        }
    }
    const fs::path p = dir / "timing.json";
    std::ofstream os = open_out(p);
    os << timing.dump(2) << '\n';
    close_out(os, p);
}

}  // namespace adcs
