#include "adcs/solver.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace adcs {

using detail::require;

void SolverOptions::validate() const {
    require(max_outer_iterations > 0 && max_inner_iterations > 0, "SolverOptions: iteration caps must be positive");
    require(initial_penalty > 0.0 && max_penalty >= initial_penalty, "SolverOptions: invalid penalty range");
    require(penalty_growth > 1.0, "SolverOptions: penalty growth must exceed 1");
    require(constraint_tolerance > 0.0 && gradient_tolerance > 0.0, "SolverOptions: tolerances must be positive");
    require(max_multiplier > 0.0 && lbfgs_memory > 0, "SolverOptions: invalid multiplier bound or memory");
    require(stagnation_window > 0 && stagnation_decrease > 0.0, "SolverOptions: invalid stagnation test");
}

std::string to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::optimal: return "optimal";
        case SolverStatus::infeasible: return "infeasible";
        case SolverStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

double max_violation(const Vector& c) { return c.size() == 0 ? 0.0 : std::max(0.0, c.maxCoeff()); }

namespace {

struct Pair {
    Vector s;
    Vector y;
    double rho;
};

Vector two_loop(const std::deque<Pair>& mem, const Vector& g) {
    Vector q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t t = mem.size(); t-- > 0;) {
        alpha[t] = mem[t].rho * mem[t].s.dot(q);
        q -= alpha[t] * mem[t].y;
    }
    const Pair& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
    for (std::size_t t = 0; t < mem.size(); ++t) {
        const double beta = mem[t].rho * mem[t].y.dot(q);
        q += (alpha[t] - beta) * mem[t].s;
    }
    return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const std::function<double(const Vector&, Vector&)>& fg, const Vector& x0,
                           double gradient_tolerance, int max_iterations, int memory) {
    constexpr double armijo = 1e-4;
    constexpr int max_halvings = 50;

    LbfgsResult res;
    res.x = x0;
    Vector g(x0.size());
    double f = fg(res.x, g);
    ++res.evaluations;
    if (!std::isfinite(f) || !g.allFinite()) throw NumericalError("minimize_lbfgs: non-finite value at start point");

    std::deque<Pair> mem;
    int flat_steps = 0;
    while (true) {
        res.grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
        if (res.grad_norm <= gradient_tolerance) {
            res.converged = true;
            break;
        }
        if (res.iterations >= max_iterations) break;

        bool stepped = false;
        for (int attempt = 0; attempt < 2 && !stepped; ++attempt) {
            Vector d = mem.empty() ? Vector(-g) : two_loop(mem, g);
            double slope = g.dot(d);
            if (!(slope < 0.0)) {
                mem.clear();
                d = -g;
                slope = g.dot(d);
            }
            double t = mem.empty() ? std::min(1.0, 1.0 / d.norm()) : 1.0;
            Vector x_new, g_new(g.size());
            double f_new = 0.0;
            for (int h = 0; h < max_halvings; ++h) {
                x_new = res.x + t * d;
                bool ok = true;
                try {
                    f_new = fg(x_new, g_new);
                } catch (const NumericalError&) {
                    ok = false;
                }
                ++res.evaluations;
                if (ok && std::isfinite(f_new) && g_new.allFinite() && f_new <= f + armijo * t * slope) {
                    stepped = true;
                    break;
                }
                t *= 0.5;
            }
            if (!stepped) {
                if (mem.empty()) break;
                mem.clear();  // restart from steepest descent
                continue;
            }
            const Vector s = x_new - res.x;
            const Vector y = g_new - g;
            const double sy = s.dot(y);
            if (sy > 1e-10 * s.norm() * y.norm()) {
                mem.push_back({s, y, 1.0 / sy});
                if (static_cast<int>(mem.size()) > memory) mem.pop_front();
            }
            flat_steps = (std::abs(f - f_new) <= 1e-15 * std::max(1.0, std::abs(f))) ? flat_steps + 1 : 0;
            res.x = std::move(x_new);
            g = g_new;
            f = f_new;
        }
        if (!stepped) break;
        ++res.iterations;
        if (flat_steps >= 5) break;
    }
    res.value = f;
    res.grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    return res;
}

namespace {

/// Augmented-Lagrangian value and gradient for c(z) <= 0.
double augmented_lagrangian(const NlpValues& v, const Vector& lambda, double rho, Vector& grad) {
    const Vector shifted = (lambda + rho * v.c).cwiseMax(0.0);
    grad = v.grad;
    if (v.c.size() > 0) grad.noalias() += v.jac.transpose() * shifted;
    return v.f + (shifted.squaredNorm() - lambda.squaredNorm()) / (2.0 * rho);
}

}  // namespace

SolverResult solve(const NlpCallback& nlp, const Vector& z0, const SolverOptions& opts, const Vector& multipliers0,
                   std::ostream* log) {
    opts.validate();
    const auto start = std::chrono::steady_clock::now();
    SolverResult res;

    NlpValues at0;
    try {
        at0 = nlp(z0);
    } catch (const std::exception& e) {
        throw NumericalError(std::string("solve: evaluation failed at the initial point: ") + e.what());
    }
    res.evaluations = 1;
    if (!std::isfinite(at0.f)) throw NumericalError("solve: non-finite objective at the initial point");
    const auto m = at0.c.size();
    Vector lambda = multipliers0.size() == m ? Vector(multipliers0.cwiseMax(0.0)) : Vector(Vector::Zero(m));
    double rho = opts.initial_penalty;

    res.z = z0;
    res.objective = at0.f;
    res.max_violation = max_violation(at0.c);
    res.multipliers = lambda;
    {
        Vector glag = at0.grad;
        if (m > 0) glag.noalias() += at0.jac.transpose() * lambda;
        res.kkt_residual = glag.size() ? glag.cwiseAbs().maxCoeff() : 0.0;
    }
    res.status = SolverStatus::iteration_limit;
    if (res.max_violation <= opts.constraint_tolerance && res.kkt_residual <= opts.gradient_tolerance) {
        res.status = SolverStatus::optimal;
    }

    if (log != nullptr) {
        *log << "# outer penalty objective max_violation kkt accepted inner_iterations evaluations\n";
        *log << std::setprecision(10);
    }

    Vector z_start = z0;
    double prev_trial_violation = res.max_violation;
    std::deque<double> capped;  // trial violations observed at the penalty cap

    for (int outer = 1; outer <= opts.max_outer_iterations && res.status != SolverStatus::optimal; ++outer) {
        res.outer_iterations = outer;
        const double omega = std::max(opts.gradient_tolerance, std::pow(0.1, outer + 1));
        const Vector lambda_k = lambda;
        const double rho_k = rho;
        auto fg = [&](const Vector& z, Vector& grad) {
            const NlpValues v = nlp(z);
            if (!std::isfinite(v.f)) throw NumericalError("solve: non-finite objective");
            return augmented_lagrangian(v, lambda_k, rho_k, grad);
        };
        LbfgsResult inner;
        try {
            inner = minimize_lbfgs(fg, z_start, omega, opts.max_inner_iterations, opts.lbfgs_memory);
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << e.what() << " [outer iteration " << outer << "]";
            throw NumericalError(os.str());
        }
        res.inner_iterations += inner.iterations;
        res.evaluations += inner.evaluations;

        const NlpValues trial = nlp(inner.x);
        ++res.evaluations;
        const double violation = max_violation(trial.c);
        const Vector lambda_new = (lambda + rho * trial.c).cwiseMax(0.0).cwiseMin(opts.max_multiplier);
        Vector glag = trial.grad;
        if (m > 0) glag.noalias() += trial.jac.transpose() * lambda_new;
        const double kkt = glag.size() ? glag.cwiseAbs().maxCoeff() : 0.0;

        // Violation below the tolerance counts as zero, so an incumbent at exact
        // feasibility does not lock out nearby near-feasible points.
        const bool accepted =
            std::max(violation, opts.constraint_tolerance) <= std::max(res.max_violation, opts.constraint_tolerance) + 1e-12;
        if (accepted) {
            res.z = inner.x;
            res.objective = trial.f;
            res.max_violation = violation;
            res.kkt_residual = kkt;
            res.multipliers = lambda_new;
        }
        if (log != nullptr) {
            *log << outer << ' ' << rho << ' ' << trial.f << ' ' << violation << ' ' << kkt << ' ' << accepted << ' '
                 << inner.iterations << ' ' << inner.evaluations << '\n';
        }
        if (accepted && res.max_violation <= opts.constraint_tolerance && res.kkt_residual <= opts.gradient_tolerance) {
            res.status = SolverStatus::optimal;
            break;
        }

        if (rho >= opts.max_penalty) {
            capped.push_back(violation);
            if (static_cast<int>(capped.size()) > opts.stagnation_window) capped.pop_front();
            if (static_cast<int>(capped.size()) == opts.stagnation_window && violation > opts.constraint_tolerance &&
                res.max_violation > opts.constraint_tolerance) {
                const double first = capped.front();
                if (first - violation < opts.stagnation_decrease * first) {
                    res.status = SolverStatus::infeasible;
                    break;
                }
            }
        }
        if (violation > opts.constraint_tolerance && (!accepted || violation > 0.25 * prev_trial_violation)) {
            rho = std::min(rho * opts.penalty_growth, opts.max_penalty);
        }
        prev_trial_violation = violation;
        lambda = lambda_new;
        z_start = inner.x;
    }
    res.penalty = rho;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace adcs
