#include "adcs/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adcs {

using detail::require;
using json = nlohmann::json;

Matrix TerminalCovariance::build(double theta) const {
    Vector d = base;
    for (int i : theta_indices) {
        require(i >= 0 && i < d.size(), "sigma_f: theta index out of range");
        d[i] = theta;
    }
    return d.asDiagonal();
}

void ExperimentConfig::validate() const {
    sys.validate();
    require(!grid_priors.empty(), "config: grid.priors is empty");
    for (const auto& name : grid_priors) {
        require(priors.count(name) == 1, "config: grid prior '" + name + "' is not defined in priors");
    }
    for (const auto& [name, prior] : priors) {
        require(prior.dim() == sys.np, "config: prior '" + name + "' dimension differs from system np");
    }
    require(!grid_sigma_f_theta.empty(), "config: grid.sigma_f_theta is empty");
    for (double t : grid_sigma_f_theta) require(t > 0.0, "config: sigma_f_theta values must be positive");
    require(design_seed != eval_seed, "config: design and evaluation seeds must differ");
    require(design_samples >= 2, "config: design.samples must be >= 2");
    require(eval_samples >= 2, "config: evaluation.samples must be >= 2");
    require(trajectory_trials >= 0, "config: trajectory_trials must be >= 0");
    require(!eps_eval || *eps_eval > 0.0, "config: evaluation.eps_eval must be positive");
    require(!delta_sigma_relative || *delta_sigma_relative > 0.0, "config: terminal.delta_sigma.relative must be positive");
    require(p_star.size() == 0 || p_star.size() == sys.np, "config: p_star dimension differs from system np");
    detail::require_size(sigma_f.base, sys.nx, "terminal.sigma_base");
    std::set<Formulation> seen;
    for (Formulation f : formulations) require(seen.insert(f).second, "config: formulation listed twice");
    // Every cell must produce a valid steering spec.
    for (const auto& name : grid_priors) {
        for (double t : grid_sigma_f_theta) spec(name, t).validate();
    }
}

SteeringSpec ExperimentConfig::spec(const std::string& prior_name, double sigma_f_theta) const {
    const auto it = priors.find(prior_name);
    require(it != priors.end(), "config: unknown prior '" + prior_name + "'");
    SteeringSpec s;
    s.sys = sys;
    s.prior = it->second;
    s.init = init;
    s.noise = noise;
    s.cost = cost;
    s.mu_F = mu_F;
    s.Sigma_F = sigma_f.build(sigma_f_theta);
    s.delta_mu = delta_mu;
    s.delta_sigma = delta_sigma;
    if (delta_sigma_relative) {
        const Vector d = s.Sigma_F.diagonal().cwiseMax(0.0).cwiseSqrt();
        const Matrix scale = *delta_sigma_relative * d * d.transpose();
        s.delta_sigma = scale.reshaped();
    }
    s.gamma = gamma;
    s.design_samples = design_samples;
    s.design_seed = design_seed;
    s.solver = solver;
    return s;
}

double ExperimentConfig::eps_eval_for(const Matrix& Sigma_F) const {
    return eps_eval ? *eps_eval : 0.05 * Sigma_F.cwiseAbs().maxCoeff();
}

std::string cell_name(const std::string& prior_name, double sigma_f_theta) {
    std::ostringstream os;
    os << prior_name << "_theta_" << sigma_f_theta;
    return os.str();
}

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ContractViolation("config " + where + ": " + what);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad(where, "expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) bad(where, "unknown key '" + item.key() + "'");
    }
}

const json& need(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) bad(where, std::string("missing key '") + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) bad(where, "expected a number");
    return j.get<double>();
}

Vector vec(const json& j, const std::string& where) {
    if (!j.is_array()) bad(where, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
    return v;
}

Matrix mat(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where, "expected a non-empty array of rows");
    const auto rows = j.size();
    const auto cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) bad(where, "rows must be arrays of equal length");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], where);
        }
    }
    return m;
}

std::uint64_t seed(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        bad(where, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) bad(where, "expected an integer");
    return j.get<int>();
}

VehicleParams parse_vehicle(const json& j) {
    const std::string w = "system.vehicle";
    check_keys(j, w, {"speed", "l_front", "l_rear", "curvature", "dt", "noise", "horizon"});
    VehicleParams vp;
    if (j.contains("speed")) vp.speed = number(j["speed"], w + ".speed");
    if (j.contains("l_front")) vp.l_front = number(j["l_front"], w + ".l_front");
    if (j.contains("l_rear")) vp.l_rear = number(j["l_rear"], w + ".l_rear");
    if (j.contains("curvature")) vp.curvature = number(j["curvature"], w + ".curvature");
    if (j.contains("dt")) vp.dt = number(j["dt"], w + ".dt");
    if (j.contains("noise")) {
        const Vector n = vec(j["noise"], w + ".noise");
        if (n.size() != 3) bad(w + ".noise", "expected [theta_delta, theta_psi, theta_y]");
        vp.noise_delta = n[0];
        vp.noise_psi = n[1];
        vp.noise_y = n[2];
    }
    if (j.contains("horizon")) vp.horizon = integer(j["horizon"], w + ".horizon");
    return vp;
}

// Time-invariant blocks: A, B, r are lists over j = 0..np.
ParametricAffineSystem parse_time_invariant(const json& j) {
    const std::string w = "system.time_invariant";
    check_keys(j, w, {"horizon", "A", "B", "r", "D"});
    const int N = integer(need(j, w, "horizon"), w + ".horizon");
    const json& ja = need(j, w, "A");
    const json& jb = need(j, w, "B");
    const json& jr = need(j, w, "r");
    if (!ja.is_array() || ja.empty() || jb.size() != ja.size() || jr.size() != ja.size()) {
        bad(w, "A, B and r must be lists with one entry per block j = 0..np");
    }
    const Matrix D = mat(need(j, w, "D"), w + ".D");
    const auto blocks = ja.size();
    std::vector<Matrix> A, B;
    std::vector<Vector> r;
    for (std::size_t b = 0; b < blocks; ++b) {
        A.push_back(mat(ja[b], w + ".A"));
        B.push_back(mat(jb[b], w + ".B"));
        r.push_back(vec(jr[b], w + ".r"));
    }
    require(N >= 1, "config system.time_invariant.horizon must be >= 1");
    const int nx = static_cast<int>(A[0].rows());
    const int nu = static_cast<int>(B[0].cols());
    ParametricAffineSystem sys =
        ParametricAffineSystem::zeros(N, nx, nu, static_cast<int>(blocks) - 1, static_cast<int>(D.cols()));
    for (int k = 0; k < N; ++k) {
        sys.A[k] = A;
        sys.B[k] = B;
        sys.r[k] = r;
        sys.D[k] = D;
    }
    sys.validate();
    return sys;
}

ParameterPrior parse_prior(const json& j, const std::string& w) {
    const std::string family = need(j, w, "family").get<std::string>();
    switch (prior_family_from_string(family)) {
        case PriorFamily::gaussian:
            check_keys(j, w, {"family", "mean", "cov"});
            return ParameterPrior::gaussian(vec(need(j, w, "mean"), w + ".mean"), mat(need(j, w, "cov"), w + ".cov"));
        case PriorFamily::uniform:
            check_keys(j, w, {"family", "lower", "upper"});
            return ParameterPrior::uniform(vec(need(j, w, "lower"), w + ".lower"),
                                           vec(need(j, w, "upper"), w + ".upper"));
        case PriorFamily::beta:
            check_keys(j, w, {"family", "alpha", "beta", "lower", "upper"});
            return ParameterPrior::beta(vec(need(j, w, "alpha"), w + ".alpha"), vec(need(j, w, "beta"), w + ".beta"),
                                        vec(need(j, w, "lower"), w + ".lower"),
                                        vec(need(j, w, "upper"), w + ".upper"));
        case PriorFamily::gaussian_mixture: {
            check_keys(j, w, {"family", "weights", "means", "covs"});
            const json& jw = need(j, w, "weights");
            const json& jm = need(j, w, "means");
            const json& jc = need(j, w, "covs");
            if (!jw.is_array() || jm.size() != jw.size() || jc.size() != jw.size()) {
                bad(w, "weights, means and covs must have one entry per component");
            }
            std::vector<double> weights;
            std::vector<Vector> means;
            std::vector<Matrix> covs;
            for (std::size_t c = 0; c < jw.size(); ++c) {
                weights.push_back(number(jw[c], w + ".weights"));
                means.push_back(vec(jm[c], w + ".means"));
                covs.push_back(mat(jc[c], w + ".covs"));
            }
            return ParameterPrior::gaussian_mixture(weights, means, covs);
        }
    }
    bad(w, "unknown family");
}

SolverOptions parse_solver(const json& j) {
    const std::string w = "solver";
    check_keys(j, w,
               {"max_outer_iterations", "max_inner_iterations", "initial_penalty", "penalty_growth", "max_penalty",
                "constraint_tolerance", "gradient_tolerance", "max_multiplier", "lbfgs_memory", "stagnation_window",
                "stagnation_decrease"});
    SolverOptions o;
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = number(j[key], w + "." + key);
    };
    auto intg = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = integer(j[key], w + "." + key);
    };
    intg("max_outer_iterations", o.max_outer_iterations);
    intg("max_inner_iterations", o.max_inner_iterations);
    num("initial_penalty", o.initial_penalty);
    num("penalty_growth", o.penalty_growth);
    num("max_penalty", o.max_penalty);
    num("constraint_tolerance", o.constraint_tolerance);
    num("gradient_tolerance", o.gradient_tolerance);
    num("max_multiplier", o.max_multiplier);
    intg("lbfgs_memory", o.lbfgs_memory);
    intg("stagnation_window", o.stagnation_window);
    num("stagnation_decrease", o.stagnation_decrease);
    o.validate();
    return o;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ContractViolation(std::string("config: malformed JSON: ") + e.what());
    }
    try {
        check_keys(j, "root",
                   {"system", "priors", "grid", "initial_state", "noise", "cost", "terminal", "gamma", "formulations",
                    "design", "evaluation", "p_star", "solver", "trajectory_trials", "output_dir"});
        ExperimentConfig cfg;

        const json& js = need(j, "root", "system");
        check_keys(js, "system", {"vehicle", "time_invariant"});
        if (js.contains("vehicle") == js.contains("time_invariant")) {
            bad("system", "give exactly one of 'vehicle' or 'time_invariant'");
        }
        if (js.contains("vehicle")) {
            cfg.vehicle = parse_vehicle(js["vehicle"]);
            cfg.sys = build_vehicle_system(*cfg.vehicle);
        } else {
            cfg.sys = parse_time_invariant(js["time_invariant"]);
        }

        const json& jp = need(j, "root", "priors");
        if (!jp.is_object() || jp.empty()) bad("priors", "expected a non-empty object of named priors");
        for (const auto& item : jp.items()) cfg.priors.emplace(item.key(), parse_prior(item.value(), "priors." + item.key()));

        const json& jg = need(j, "root", "grid");
        check_keys(jg, "grid", {"priors", "sigma_f_theta"});
        for (const auto& name : need(jg, "grid", "priors")) cfg.grid_priors.push_back(name.get<std::string>());
        const Vector thetas = vec(need(jg, "grid", "sigma_f_theta"), "grid.sigma_f_theta");
        cfg.grid_sigma_f_theta.assign(thetas.data(), thetas.data() + thetas.size());

        const json& ji = need(j, "root", "initial_state");
        check_keys(ji, "initial_state", {"mean", "cov"});
        cfg.init = InitialStateDistribution(vec(need(ji, "initial_state", "mean"), "initial_state.mean"),
                                            mat(need(ji, "initial_state", "cov"), "initial_state.cov"));

        cfg.noise.dim = cfg.sys.nw;
        if (j.contains("noise")) {
            const std::string nf = j["noise"].get<std::string>();
            if (nf == "gaussian") {
                cfg.noise.family = NoiseFamily::gaussian;
            } else if (nf == "uniform_scaled") {
                cfg.noise.family = NoiseFamily::uniform_scaled;
            } else {
                bad("noise", "expected 'gaussian' or 'uniform_scaled'");
            }
        }

        const json& jc = need(j, "root", "cost");
        check_keys(jc, "cost", {"Q", "R"});
        cfg.cost = CostWeights::constant(cfg.sys.horizon, mat(need(jc, "cost", "Q"), "cost.Q"),
                                         mat(need(jc, "cost", "R"), "cost.R"));

        const json& jt = need(j, "root", "terminal");
        check_keys(jt, "terminal", {"mean", "sigma_base", "theta_indices", "delta_mu", "delta_sigma"});
        cfg.mu_F = vec(need(jt, "terminal", "mean"), "terminal.mean");
        cfg.sigma_f.base = vec(need(jt, "terminal", "sigma_base"), "terminal.sigma_base");
        if (jt.contains("theta_indices")) {
            for (const auto& i : jt["theta_indices"]) cfg.sigma_f.theta_indices.push_back(integer(i, "terminal.theta_indices"));
        }
        if (jt.contains("delta_mu") && !jt["delta_mu"].is_null()) cfg.delta_mu = vec(jt["delta_mu"], "terminal.delta_mu");
        if (jt.contains("delta_sigma") && !jt["delta_sigma"].is_null()) {
            const json& d = jt["delta_sigma"];
            if (d.is_object()) {
                check_keys(d, "terminal.delta_sigma", {"relative"});
                cfg.delta_sigma_relative = number(need(d, "terminal.delta_sigma", "relative"), "terminal.delta_sigma.relative");
            } else {
                cfg.delta_sigma = d.is_number() ? Vector::Constant(cfg.sys.nx * cfg.sys.nx, d.get<double>())
                                                : vec(d, "terminal.delta_sigma");
            }
        }

        if (j.contains("gamma")) cfg.gamma = number(j["gamma"], "gamma");

        if (j.contains("formulations")) {
            for (const auto& f : j["formulations"]) cfg.formulations.push_back(formulation_from_string(f.get<std::string>()));
        } else {
            cfg.formulations = {Formulation::certainty_equivalence, Formulation::static_robust,
                                Formulation::adaptive_dual};
        }

        if (j.contains("design")) {
            const json& jd = j["design"];
            check_keys(jd, "design", {"samples", "seed"});
            if (jd.contains("samples")) cfg.design_samples = integer(jd["samples"], "design.samples");
            if (jd.contains("seed")) cfg.design_seed = seed(jd["seed"], "design.seed");
        }
        if (j.contains("evaluation")) {
            const json& je = j["evaluation"];
            check_keys(je, "evaluation", {"samples", "seed", "eps_eval"});
            if (je.contains("samples")) cfg.eval_samples = integer(je["samples"], "evaluation.samples");
            if (je.contains("seed")) cfg.eval_seed = seed(je["seed"], "evaluation.seed");
            if (je.contains("eps_eval") && !je["eps_eval"].is_null()) {
                cfg.eps_eval = number(je["eps_eval"], "evaluation.eps_eval");
            }
        }
        if (j.contains("p_star") && !j["p_star"].is_null()) cfg.p_star = vec(j["p_star"], "p_star");
        if (j.contains("solver")) cfg.solver = parse_solver(j["solver"]);
        if (j.contains("trajectory_trials")) cfg.trajectory_trials = integer(j["trajectory_trials"], "trajectory_trials");
        if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();

        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ContractViolation(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ContractViolation& e) {
        throw ContractViolation(path + ": " + e.what());
    }
}

}  // namespace adcs
