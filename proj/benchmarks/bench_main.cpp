#include <benchmark/benchmark.h>

#include "adcs/estimation.hpp"
#include "adcs/saa_nlp.hpp"
#include "adcs/steering.hpp"
#include "adcs/vehicle.hpp"

namespace {

using namespace adcs;

SteeringSpec vehicle_spec(int M) {
    SteeringSpec s;
    VehicleParams vp;
    s.sys = build_vehicle_system(vp);
    Vector lo(1), hi(1);
    lo << 0.7;
    hi << 1.3;
    s.prior = ParameterPrior::uniform(lo, hi);
    Vector mu(3);
    mu << 0.0, 0.1, 0.5;
    s.init = InitialStateDistribution(mu, Vector(Vector::Map(std::array{1e-4, 1e-3, 1e-2}.data(), 3)).asDiagonal());
    s.noise.dim = 3;
    s.cost = CostWeights::constant(vp.horizon, Vector(Vector::Map(std::array{0.0, 1.0, 1.0}.data(), 3)).asDiagonal(),
                                   Matrix::Identity(1, 1));
    s.mu_F = Vector::Zero(3);
    s.Sigma_F = Vector(Vector::Map(std::array{1e-2, 1e-3, 1e-3}.data(), 3)).asDiagonal();
    s.design_samples = M;
    return s;
}

void BM_RlsUpdate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    EstimatorState est = EstimatorState::from_prior(Vector::Zero(n), Matrix::Identity(n, n), 0.95);
    const Matrix G = Matrix::Random(n, n);
    const Vector res = Vector::Random(n);
    for (auto _ : state) {
        EstimatorState next = rls_update(est, G, res);
        benchmark::DoNotOptimize(next.p_hat.data());
    }
}
BENCHMARK(BM_RlsUpdate)->Arg(1)->Arg(4);

void BM_RolloutDual(benchmark::State& state) {
    const SteeringSpec spec = vehicle_spec(static_cast<int>(state.range(0)));
    const ScenarioSet scen = design_scenarios(spec);
    const DualAffinePolicy pol = DualAffinePolicy::zeros(spec.sys.horizon, 3, 1, 1);
    for (auto _ : state) {
        TrajectoryBatch traj = rollout_dual(spec.sys, pol, scen);
        benchmark::DoNotOptimize(traj.min_pivot);
    }
}
BENCHMARK(BM_RolloutDual)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_Evaluate(benchmark::State& state) {
    const SteeringSpec spec = vehicle_spec(static_cast<int>(state.range(0)));
    const SaaProblem prob = make_problem(spec, Formulation::adaptive_dual);
    const Vector z = 0.01 * Vector::Ones(prob.layout().size());
    const bool derivs = state.range(1) != 0;
    for (auto _ : state) {
        NlpEval e = evaluate(prob, z, derivs);
        benchmark::DoNotOptimize(e.objective);
    }
}
BENCHMARK(BM_Evaluate)->Args({64, 0})->Args({64, 1})->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
