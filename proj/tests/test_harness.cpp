#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adcs/harness.hpp"
#include "small_config.hpp"

using namespace adcs;
using adcs::test::small_config_json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("adcs_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

// One shared comparison run for the file-level tests.
struct Run {
    ExperimentConfig cfg;
    ComparisonReport report;
    fs::path dir;
};

const Run& shared_run() {
    static const Run run = [] {
        Run r;
        r.dir = scratch("harness");
        r.cfg = parse_config(small_config_json(r.dir.string()));
        r.report = run_comparison(r.cfg, r.dir);
        emit_outputs(r.report, r.cfg, r.dir);
        return r;
    }();
    return run;
}

}  // namespace

TEST(Harness, DualIsItsOwnReference) {
    const auto& run = shared_run();
    ASSERT_EQ(run.report.cells.size(), 1u);
    const auto* dual = run.report.cells[0].find(Formulation::adaptive_dual);
    ASSERT_NE(dual, nullptr);
    ASSERT_TRUE(dual->cost_norm.has_value());
    EXPECT_EQ(*dual->cost_norm, 1.0);
    for (const auto& rep : run.report.cells[0].formulations) {
        if (!rep.evaluation) continue;
        EXPECT_DOUBLE_EQ(*rep.cost_norm, rep.evaluation->cost_mean / dual->evaluation->cost_mean);
    }
}

TEST(Harness, TrialsCsvReproducesStatistics) {
    const auto& run = shared_run();
    const auto& cell = run.report.cells[0];
    const int nx = cell.spec.sys.nx, np = cell.spec.sys.np;
    std::ifstream in(run.dir / cell.name() / "trials.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(static_cast<int>(split(line).size()), 4 + nx + 2 * np);
    std::map<std::string, std::vector<std::vector<double>>> rows;
    while (std::getline(in, line)) {
        const auto cells = split(line);
        ASSERT_EQ(static_cast<int>(cells.size()), 4 + nx + 2 * np);
        std::vector<double> vals;
        for (std::size_t c = 2; c < cells.size(); ++c) vals.push_back(std::stod(cells[c]));
        rows[cells[0]].push_back(vals);
    }
    for (const auto& rep : cell.formulations) {
        if (!rep.evaluation) continue;
        const auto& ev = *rep.evaluation;
        const auto& r = rows.at(to_string(rep.formulation));
        ASSERT_EQ(r.size(), ev.costs.size());
        const double M = static_cast<double>(r.size());
        double cost = 0.0;
        Vector mean = Vector::Zero(nx);
        for (const auto& v : r) {
            cost += v[0];
            for (int a = 0; a < nx; ++a) mean(a) += v[1 + a];
        }
        cost /= M;
        mean /= M;
        Matrix cov = Matrix::Zero(nx, nx);
        for (const auto& v : r) {
            Vector d(nx);
            for (int a = 0; a < nx; ++a) d(a) = v[1 + a] - mean(a);
            cov += d * d.transpose();
        }
        cov /= M;
        EXPECT_LE(std::abs(cost - ev.cost_mean), 1e-12 * std::max(1.0, std::abs(cost)));
        EXPECT_LE((mean - ev.terminal_mean).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((cov - ev.terminal_cov).cwiseAbs().maxCoeff(), 1e-12);
        for (std::size_t i = 0; i < r.size(); ++i) {
            EXPECT_EQ(r[i][1 + nx], ev.p_true[i](0));
            EXPECT_EQ(r[i].back() == 1.0, static_cast<bool>(ev.trial_satisfied[i]));
        }
    }
}

TEST(Harness, SummaryJsonRoundTripIsByteIdentical) {
    const auto& run = shared_run();
    for (const fs::path p : {run.dir / "summary.json", run.dir / run.report.cells[0].name() / "summary.json"}) {
        const std::string text = slurp(p);
        EXPECT_EQ(nlohmann::json::parse(text).dump(2) + "\n", text) << p;
    }
    const auto j = nlohmann::json::parse(slurp(run.dir / "summary.json"));
    const auto& cell = j.at(run.report.cells[0].name());
    for (const char* f : {"ce", "robust", "dual"}) {
        const auto& e = cell.at("formulations").at(f);
        for (const char* key : {"status", "cost_mean", "cost_norm", "term_mean_err", "term_cov", "design_feasible", "satisfied"}) {
            EXPECT_TRUE(e.contains(key)) << f << ' ' << key;
        }
    }
    EXPECT_TRUE(fs::exists(run.dir / "timing.json"));
    EXPECT_TRUE(fs::exists(run.dir / "table.csv"));
    EXPECT_TRUE(fs::exists(run.dir / run.report.cells[0].name() / "trajectories_dual.csv"));
}

TEST(Harness, SummaryIsReproducible) {
    const auto& run = shared_run();
    const ComparisonReport again = run_comparison(run.cfg);
    EXPECT_EQ(summary_json(again), summary_json(run.report));
}

TEST(Harness, PolicyFileRoundTrip) {
    const auto& run = shared_run();
    const auto& cell = run.report.cells[0];
    const auto* dual = cell.find(Formulation::adaptive_dual);
    ASSERT_TRUE(dual->solution.has_value());
    const SteeringSolution back = read_policy_json(run.dir / cell.name() / "policy_dual.json");
    EXPECT_EQ(back.formulation, Formulation::adaptive_dual);
    EXPECT_EQ(back.decision(), dual->solution->decision());
    const auto ev = evaluate_policy(back.policy, cell.spec, cell.eval_samples, run.cfg.eval_seed, cell.eps_eval);
    EXPECT_EQ(ev.cost_mean, dual->evaluation->cost_mean);

    const fs::path bad = scratch("badpolicy") / "p.json";
    std::ofstream(bad) << R"({"formulation": "dual", "N": 2, "nx": 1, "nu": 1, "np": 1, "z": [1, 2]})";
    EXPECT_THROW(read_policy_json(bad), ContractViolation);
}

TEST(Harness, EmptyFormulationListGivesEmptyMaps) {
    const fs::path dir = scratch("empty");
    auto cfg = parse_config(small_config_json(dir.string()));
    cfg.formulations.clear();
    const auto report = run_comparison(cfg, dir);
    emit_outputs(report, cfg, dir);
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    ASSERT_EQ(j.size(), 1u);
    EXPECT_TRUE(j.begin()->at("formulations").empty());
    EXPECT_FALSE(report.any_infeasible());
}

TEST(Evaluation, DegenerateRandomnessGivesIdenticalTrials) {
    auto cfg = parse_config(small_config_json("unused"));
    SteeringSpec spec = cfg.spec("uniform", 0.003);
    spec.prior = ParameterPrior::point_mass(Vector::Constant(1, 1.0));
    spec.init = InitialStateDistribution(spec.init.mean, Matrix::Zero(3, 3));
    for (auto& D : spec.sys.D) D.setZero();
    auto pol = StaticAffinePolicy::zeros(spec.sys.horizon, 3, 1);
    for (int k = 0; k < spec.sys.horizon; ++k) pol.L[k] << -0.5, -1.0, -0.3;
    const auto ev = evaluate_policy(pol, spec, 50, 9, 1e-3);
    for (double c : ev.costs) EXPECT_EQ(c, ev.costs.front());
    EXPECT_LE(ev.cost_stderr, 1e-14 * std::abs(ev.costs.front()));
}

TEST(Evaluation, DoublingTrialsIsConsistent) {
    const auto& run = shared_run();
    const auto& cell = run.report.cells[0];
    const auto* dual = cell.find(Formulation::adaptive_dual);
    const auto a = evaluate_policy(dual->solution->policy, cell.spec, 1000, 41, cell.eps_eval);
    const auto b = evaluate_policy(dual->solution->policy, cell.spec, 2000, 41, cell.eps_eval);
    EXPECT_LT(std::abs(a.cost_mean - b.cost_mean), 3.0 * a.cost_stderr);
}

TEST(Evaluation, MeanToleranceCombinesBothSamples) {
    PolicyEvaluation ev;
    ev.x_final.resize(400);
    ev.terminal_cov = Matrix::Identity(2, 2) * 0.04;
    ev.mean_error = Vector::Constant(2, 0.01);
    const Vector tol = mean_tolerance(ev, Vector::Constant(2, 0.001), 100);
    EXPECT_NEAR(tol(0), 0.001 + 3.0 * std::sqrt(0.04 / 100 + 0.04 / 400), 1e-15);
    EXPECT_TRUE(mean_ok(ev, Vector::Constant(2, 0.001), 100));
    ev.mean_error(1) = -0.1;
    EXPECT_FALSE(mean_ok(ev, Vector::Constant(2, 0.001), 100));
}

TEST(Evaluation, CovarianceCheckUsesMaxEigenvalue) {
    auto cfg = parse_config(small_config_json("unused"));
    const SteeringSpec spec = cfg.spec("uniform", 0.003);
    const auto ev = evaluate_policy(StaticAffinePolicy::zeros(spec.sys.horizon, 3, 1), spec, 300, 3, 1e-4);
    EXPECT_NEAR(ev.cov_excess, detail::max_eigenvalue(ev.terminal_cov - spec.Sigma_F), 1e-15);
    EXPECT_EQ(ev.cov_ok, ev.cov_excess <= 1e-4);
    EXPECT_THROW(evaluate_policy(DualAffinePolicy::zeros(3, 3, 1, 1), spec, 10, 1, 1e-4), ContractViolation);
}
