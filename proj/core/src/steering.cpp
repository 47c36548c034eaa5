#include "adcs/steering.hpp"

namespace adcs {

using detail::require;

void SteeringSpec::validate() const {
    sys.validate();
    require(prior.dim() == sys.np, "SteeringSpec: prior dimension differs from system np");
    require(init.mean.size() == sys.nx, "SteeringSpec: initial-state dimension differs from system nx");
    require(noise.dim == sys.nw, "SteeringSpec: noise dimension differs from system nw");
    cost.validate(sys.horizon, sys.nx, sys.nu);
    detail::require_size(mu_F, sys.nx, "mu_F");
    detail::require_dims(Sigma_F, sys.nx, sys.nx, "Sigma_F");
    require(detail::is_symmetric(Sigma_F) && detail::min_eigenvalue(Sigma_F) > 0.0,
            "SteeringSpec: Sigma_F must be symmetric positive definite");
    require(gamma > 0.0 && gamma <= 1.0, "SteeringSpec: forgetting factor must lie in (0, 1]");
    require(design_samples >= 2, "SteeringSpec: at least two design samples are needed for covariance terms");
    solver.validate();
}

Vector SteeringSpec::effective_delta_mu() const {
    return delta_mu.size() > 0 ? delta_mu : default_delta_mu(Sigma_F);
}

Vector SteeringSpec::effective_delta_sigma() const {
    return delta_sigma.size() > 0 ? delta_sigma : default_delta_sigma(Sigma_F);
}

ScenarioSet design_scenarios(const SteeringSpec& spec) {
    return draw_scenarios(spec.sys, spec.prior, spec.init, spec.noise, spec.design_samples, spec.design_seed);
}

SaaProblem make_problem(const SteeringSpec& spec, Formulation f, const Vector& p_star) {
    spec.validate();
    SaaProblem prob;
    prob.sys = spec.sys;
    prob.cost = spec.cost;
    prob.mu_F = spec.mu_F;
    prob.Sigma_F = spec.Sigma_F;
    prob.delta_mu = spec.effective_delta_mu();
    prob.delta_sigma = spec.effective_delta_sigma();
    prob.gamma = spec.gamma;
    prob.scenarios = design_scenarios(spec);
    prob.formulation = f;
    prob.p_star = p_star;
    prob.normalize_cost = spec.normalize_cost;
    prob.validate();
    return specialize(prob);
}

Vector SteeringSolution::decision() const {
    const DecisionLayout layout{policy.horizon(), static_cast<int>(V.rows()),
                                static_cast<int>(policy.v.front().front().size()), policy.np()};
    return pack(layout, policy, V);
}

SteeringSolution solve_problem(const SaaProblem& prob, const Vector& z0, const SolverOptions& opts,
                               const Vector& multipliers0, std::ostream* log) {
    prob.validate();
    NlpCallback cb = [&](const Vector& z) {
        NlpEval e = evaluate(prob, z, true);
        NlpValues v;
        v.f = e.objective;
        v.grad = std::move(e.gradient);
        v.c = std::move(e.constraints);
        v.jac = std::move(e.jacobian);
        return v;
    };

    SteeringSolution sol;
    sol.formulation = prob.formulation;
    sol.result = solve(cb, apply_mask(prob, z0), opts, multipliers0, log);
    sol.result.z = apply_mask(prob, sol.result.z);
    auto [pol, V] = unpack(prob.layout(), sol.result.z);
    sol.policy = std::move(pol);
    sol.V = std::move(V);
    sol.raw_max_violation = max_violation(evaluate(prob, sol.result.z, false).constraints);
    return sol;
}

Vector cold_start(const SaaProblem& prob) {
    const DecisionLayout layout = prob.layout();
    const DualAffinePolicy zero = DualAffinePolicy::zeros(layout.horizon, layout.nx, layout.nu, layout.np);
    Eigen::LLT<Matrix> llt(prob.Sigma_F);
    return pack(layout, zero, llt.matrixL().toDenseMatrix());
}

SteeringSolution solve_certainty_equivalence(const SteeringSpec& spec, std::ostream* log) {
    const SaaProblem prob = make_problem(spec, Formulation::certainty_equivalence);
    return solve_problem(prob, cold_start(prob), spec.solver, Vector(), log);
}

SteeringSolution solve_static_robust(const SteeringSpec& spec, const SteeringSolution* warm, std::ostream* log) {
    SteeringSolution ce;
    if (warm == nullptr) {
        ce = solve_certainty_equivalence(spec);
        warm = &ce;
    }
    const SaaProblem prob = make_problem(spec, Formulation::static_robust);
    return solve_problem(prob, warm->decision(), spec.solver, warm->result.multipliers, log);
}

SteeringSolution solve_adaptive_dual(const SteeringSpec& spec, const SteeringSolution* warm, std::ostream* log) {
    SteeringSolution robust;
    if (warm == nullptr) {
        robust = solve_static_robust(spec);
        warm = &robust;
    }
    const SaaProblem prob = make_problem(spec, Formulation::adaptive_dual);
    const DecisionLayout layout = prob.layout();
    const Vector z0 = pack(layout, embed_static_as_dual(warm->static_policy(), layout.np), warm->V);
    return solve_problem(prob, z0, spec.solver, warm->result.multipliers, log);
}

SteeringSolution solve_full_information(const SteeringSpec& spec, const Vector& p_star, std::ostream* log) {
    const SaaProblem prob = make_problem(spec, Formulation::full_information, p_star);
    return solve_problem(prob, cold_start(prob), spec.solver, Vector(), log);
}

}  // namespace adcs
