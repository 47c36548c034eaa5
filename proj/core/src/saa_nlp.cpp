#include "adcs/saa_nlp.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "adcs/parallel.hpp"

namespace adcs {

using detail::require;

Vector pack(const DecisionLayout& layout, const DualAffinePolicy& pol, const Matrix& V) {
    require(pol.horizon() == layout.horizon && pol.np() == layout.np, "pack: policy shape differs from layout");
    detail::require_dims(V, layout.nx, layout.nx, "pack: slack V");
    Vector z(layout.size());
    for (int k = 0; k < layout.horizon; ++k) {
        for (int j = 0; j <= layout.np; ++j) {
            detail::require_size(pol.v[k][j], layout.nu, "pack: v");
            detail::require_dims(pol.L[k][j], layout.nu, layout.nx, "pack: L");
            for (int a = 0; a < layout.nu; ++a) z[layout.v_index(k, j, a)] = pol.v[k][j][a];
            for (int r = 0; r < layout.nu; ++r) {
                for (int c = 0; c < layout.nx; ++c) z[layout.L_index(k, j, r, c)] = pol.L[k][j](r, c);
            }
        }
    }
    for (int r = 0; r < layout.nx; ++r) {
        for (int c = 0; c < layout.nx; ++c) z[layout.V_index(r, c)] = V(r, c);
    }
    return z;
}

std::pair<DualAffinePolicy, Matrix> unpack(const DecisionLayout& layout, const Vector& z) {
    if (z.size() != layout.size()) {
        throw ContractViolation("unpack: decision vector length " + std::to_string(z.size()) + ", expected " +
                                std::to_string(layout.size()));
    }
    DualAffinePolicy pol = DualAffinePolicy::zeros(layout.horizon, layout.nx, layout.nu, layout.np);
    for (int k = 0; k < layout.horizon; ++k) {
        for (int j = 0; j <= layout.np; ++j) {
            for (int a = 0; a < layout.nu; ++a) pol.v[k][j][a] = z[layout.v_index(k, j, a)];
            for (int r = 0; r < layout.nu; ++r) {
                for (int c = 0; c < layout.nx; ++c) pol.L[k][j](r, c) = z[layout.L_index(k, j, r, c)];
            }
        }
    }
    Matrix V(layout.nx, layout.nx);
    for (int r = 0; r < layout.nx; ++r) {
        for (int c = 0; c < layout.nx; ++c) V(r, c) = z[layout.V_index(r, c)];
    }
    return {std::move(pol), std::move(V)};
}

std::string to_string(Formulation f) {
    switch (f) {
        case Formulation::certainty_equivalence: return "ce";
        case Formulation::static_robust: return "robust";
        case Formulation::adaptive_dual: return "dual";
        case Formulation::full_information: return "fullinfo";
    }
    return "unknown";
}

Formulation formulation_from_string(const std::string& s) {
    if (s == "ce" || s == "certainty_equivalence") return Formulation::certainty_equivalence;
    if (s == "robust" || s == "static_robust") return Formulation::static_robust;
    if (s == "dual" || s == "adaptive_dual") return Formulation::adaptive_dual;
    if (s == "fullinfo" || s == "full_information") return Formulation::full_information;
    throw ContractViolation("unknown formulation '" + s + "'");
}

Vector default_delta_mu(const Matrix& Sigma_F) { return 0.02 * Sigma_F.diagonal().cwiseMax(0.0).cwiseSqrt(); }

Vector default_delta_sigma(const Matrix& Sigma_F) {
    return Vector::Constant(Sigma_F.size(), 0.05 * Sigma_F.cwiseAbs().maxCoeff());
}

void SaaProblem::validate() const {
    sys.validate();
    cost.validate(sys.horizon, sys.nx, sys.nu);
    detail::require_size(mu_F, sys.nx, "mu_F");
    detail::require_dims(Sigma_F, sys.nx, sys.nx, "Sigma_F");
    require(detail::is_symmetric(Sigma_F) && detail::min_eigenvalue(Sigma_F) > 0.0,
            "Sigma_F must be symmetric positive definite");
    detail::require_size(delta_mu, sys.nx, "delta_mu");
    detail::require_size(delta_sigma, sys.nx * sys.nx, "delta_sigma");
    require((delta_mu.array() > 0.0).all() && (delta_sigma.array() > 0.0).all(), "tolerances must be positive");
    require(gamma > 0.0 && gamma <= 1.0, "forgetting factor must lie in (0, 1]");
    require(scenarios.size() >= 1, "scenario set is empty");
    require(scenarios.prior_mean.size() == sys.np, "scenario prior dimension differs from system np");
    if (formulation == Formulation::full_information) detail::require_size(p_star, sys.np, "p_star");
}

SaaProblem specialize(const SaaProblem& prob) {
    SaaProblem out = prob;
    switch (prob.formulation) {
        case Formulation::certainty_equivalence:
            out.scenarios = prob.scenarios.with_parameter(prob.scenarios.prior_mean);
            break;
        case Formulation::full_information:
            detail::require_size(prob.p_star, prob.sys.np, "p_star");
            out.scenarios = prob.scenarios.with_parameter(prob.p_star);
            break;
        case Formulation::static_robust:
        case Formulation::adaptive_dual:
            break;
    }
    return out;
}

std::vector<bool> free_mask(const SaaProblem& prob) {
    const DecisionLayout layout = prob.layout();
    std::vector<bool> mask(static_cast<std::size_t>(layout.size()), true);
    if (prob.formulation == Formulation::adaptive_dual) return mask;
    for (int k = 0; k < layout.horizon; ++k) {
        for (int j = 1; j <= layout.np; ++j) {
            const int begin = layout.v_index(k, j, 0);
            for (int t = 0; t < layout.block_size(); ++t) mask[static_cast<std::size_t>(begin + t)] = false;
        }
    }
    return mask;
}

Vector apply_mask(const SaaProblem& prob, const Vector& z) {
    const auto mask = free_mask(prob);
    require(z.size() == static_cast<Eigen::Index>(mask.size()), "apply_mask: decision vector length mismatch");
    Vector out = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (!mask[static_cast<std::size_t>(i)]) out[i] = 0.0;
    }
    return out;
}

TrajectoryBatch rollout_decision(const SaaProblem& prob, const Vector& z) {
    const auto [pol, V] = unpack(prob.layout(), apply_mask(prob, z));
    return rollout_dual(prob.sys, pol, prob.scenarios, prob.gamma);
}

namespace {

/**
 * Closed-loop rollout and reverse sweep for one evaluation. Templated on the
 * maximum matrix dimension so small problems run without heap traffic; the
 * Eigen::Dynamic instantiation handles everything else.
 */
template <int MaxDim>
struct Kernel {
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, MaxDim, MaxDim>;
    using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, MaxDim, 1>;

    struct ScenarioResult {
        double cost = 0.0;
        Vector x_final;
        double min_pivot = std::numeric_limits<double>::infinity();
        Matrix sens;  // row 0: d cost / dz, rows 1..nx: d x_N / dz
    };

    const SaaProblem& prob;
    const DecisionLayout layout;
    const int N, nx, nu, np;
    const double g;
    std::vector<std::vector<Mat>> A, B, L;
    std::vector<std::vector<Vec>> r, v;
    std::vector<Mat> D, Q, R;

    Kernel(const SaaProblem& p, const Vector& z)
        : prob(p), layout(p.layout()), N(p.sys.horizon), nx(p.sys.nx), nu(p.sys.nu), np(p.sys.np), g(p.gamma) {
        const auto& sys = prob.sys;
        A.resize(N);
        B.resize(N);
        r.resize(N);
        L.resize(N);
        v.resize(N);
        for (int k = 0; k < N; ++k) {
            for (int j = 0; j <= np; ++j) {
                A[k].emplace_back(sys.A[k][j]);
                B[k].emplace_back(sys.B[k][j]);
                r[k].emplace_back(sys.r[k][j]);
                Vec vk(nu);
                Mat Lk(nu, nx);
                for (int a = 0; a < nu; ++a) vk[a] = z[layout.v_index(k, j, a)];
                for (int row = 0; row < nu; ++row) {
                    for (int c = 0; c < nx; ++c) Lk(row, c) = z[layout.L_index(k, j, row, c)];
                }
                v[k].push_back(std::move(vk));
                L[k].push_back(std::move(Lk));
            }
            D.emplace_back(sys.D[k]);
            Q.emplace_back(prob.cost.Q[k]);
            R.emplace_back(prob.cost.R[k]);
        }
    }

    [[noreturn]] static void fail(const std::string& what, int i, int k) {
        std::ostringstream os;
        os << what << " [scenario " << i << ", step " << k << "]";
        throw NumericalError(os.str());
    }

    ScenarioResult run(int i, bool with_derivatives) const {
        const ScenarioSet& scen = prob.scenarios;
        if (scen.x0[i].size() != nx || scen.p[i].size() != np || static_cast<int>(scen.w[i].size()) != N) {
            throw ContractViolation("evaluate: scenario " + std::to_string(i) + " is not shaped like the system");
        }
        for (const auto& w : scen.w[i]) {
            if (w.size() != prob.sys.nw) throw ContractViolation("evaluate: noise dimension differs from system nw");
        }
        const Vec p_true = scen.p[i];
        std::vector<Vec> x(N + 1), u(N), ph(N + 1), innov(N), act(N * (np + 1));
        std::vector<Mat> P(N + 1), G(N), W(N), Y(N);
        x[0] = scen.x0[i];
        ph[0] = scen.prior_mean;
        P[0] = 0.5 * (scen.prior_cov + scen.prior_cov.transpose());

        ScenarioResult res;
        for (int k = 0; k < N; ++k) {
            u[k] = Vec::Zero(nu);
            for (int j = 0; j <= np; ++j) {
                Vec a = v[k][j];
                a.noalias() += L[k][j] * x[k];
                u[k] += (j == 0 ? 1.0 : ph[k][j - 1]) * a;
                act[k * (np + 1) + j] = std::move(a);
            }
            Vec known = r[k][0];
            known.noalias() += A[k][0] * x[k];
            known.noalias() += B[k][0] * u[k];
            G[k].resize(nx, np);
            for (int j = 1; j <= np; ++j) {
                Vec col = r[k][j];
                col.noalias() += A[k][j] * x[k];
                col.noalias() += B[k][j] * u[k];
                G[k].col(j - 1) = col;
            }
            Vec wk = scen.w[i][k];
            x[k + 1] = known;
            x[k + 1].noalias() += G[k] * p_true;
            x[k + 1].noalias() += D[k] * wk;
            if (!x[k + 1].allFinite()) {
                std::ostringstream os;
                os << "rollout: non-finite state in scenario " << i << " at step " << k;
                throw NumericalError(os.str());
            }
            res.cost += x[k].dot(Q[k] * x[k]) + u[k].dot(R[k] * u[k]);

            if (np == 0) {
                ph[k + 1] = ph[k];
                P[k + 1] = P[k];
                continue;
            }
            W[k].noalias() = G[k] * P[k];
            Mat S(nx, nx);
            S.noalias() = W[k] * G[k].transpose();
            S.diagonal().array() += g;
            Eigen::LDLT<Mat> ldlt(S);
            const double pivot = ldlt.vectorD().cwiseAbs().minCoeff();
            res.min_pivot = std::min(res.min_pivot, pivot);
            if (ldlt.info() != Eigen::Success || !(pivot > 1e-14 * std::max(1.0, S.cwiseAbs().maxCoeff()))) {
                std::ostringstream os;
                os << "rls_update: gamma I + G P G^T is numerically singular (gamma=" << g << ", min pivot=" << pivot
                   << ")";
                fail(os.str(), i, k);
            }
            Y[k] = ldlt.solve(W[k]);
            Mat P1 = P[k];
            P1.noalias() -= W[k].transpose() * Y[k];
            P1 /= g;
            P[k + 1] = 0.5 * (P1 + P1.transpose());
            const double tol = -1e-10 * std::max(1.0, P[k + 1].cwiseAbs().maxCoeff());
            const double lmin = np == 1 ? P[k + 1](0, 0) : detail::min_eigenvalue(Matrix(P[k + 1]));
            if (lmin < tol) {
                std::ostringstream os;
                os << "rls_update: covariance lost positive semidefiniteness (min eigenvalue " << lmin << ")";
                fail(os.str(), i, k);
            }
            innov[k] = x[k + 1] - known;
            innov[k].noalias() -= G[k] * ph[k];
            const Vec gvec = G[k].transpose() * innov[k];
            ph[k + 1] = ph[k];
            ph[k + 1].noalias() += P[k + 1] * gvec;
        }
        res.x_final = x[N];
        if (!std::isfinite(res.cost)) throw NumericalError("evaluate: non-finite objective");
        if (!with_derivatives) return res;

        // Reverse sweep. Seed 0 is the stage cost, seeds 1..nx pick the
        // components of x_N; every seed shares the cached forward quantities.
        const int seeds = 1 + nx;
        res.sens = Matrix::Zero(seeds, layout.size());
        const double cost_weight = prob.normalize_cost ? 1.0 / prob.scenarios.size() : 1.0;
        std::vector<Vec> xb(seeds), pb(seeds, Vec::Zero(np));
        std::vector<Mat> Pb(seeds, Mat::Zero(np, np));
        xb[0] = Vec::Zero(nx);
        for (int s = 1; s < seeds; ++s) xb[s] = Vec::Unit(nx, s - 1);

        for (int k = N - 1; k >= 0; --k) {
            Vec gvec, ptilde;
            if (np > 0) {
                gvec = G[k].transpose() * innov[k];
                ptilde = p_true - ph[k];
            }
            for (int s = 0; s < seeds; ++s) {
                Vec xb_prev = A[k][0].transpose() * xb[s];
                Vec ub = B[k][0].transpose() * xb[s];
                Vec phb = pb[s];
                Mat Pb_prev(np, np);
                if (np > 0) {
                    // x+ = known + G p_true + D w
                    Mat Gb = xb[s] * p_true.transpose();
                    // p_hat+ = p_hat + P+ G' innov, innov = G (p_true - p_hat) + D w
                    Mat P1b = Pb[s];
                    P1b.noalias() += pb[s] * gvec.transpose();
                    const Vec gvb = P[k + 1].transpose() * pb[s];
                    Gb.noalias() += innov[k] * gvb.transpose();
                    const Vec ib = G[k] * gvb;
                    Gb.noalias() += ib * ptilde.transpose();
                    phb.noalias() -= G[k].transpose() * ib;
                    // P+ = sym((P - W' S^{-1} W) / gamma), W = G P, S = W G' + gamma I
                    const Mat Gs = 0.5 * (P1b + P1b.transpose());
                    Pb_prev = Gs / g;
                    const Mat YG = Y[k] * Gs;
                    Mat Wb = -(2.0 / g) * YG;
                    Mat Sb(nx, nx);
                    Sb.noalias() = (1.0 / g) * YG * Y[k].transpose();
                    Wb.noalias() += Sb * G[k];
                    Gb.noalias() += Sb.transpose() * W[k];
                    Gb.noalias() += Wb * P[k].transpose();
                    Pb_prev.noalias() += G[k].transpose() * Wb;
                    for (int j = 1; j <= np; ++j) {
                        xb_prev.noalias() += A[k][j].transpose() * Gb.col(j - 1);
                        ub.noalias() += B[k][j].transpose() * Gb.col(j - 1);
                    }
                }
                if (s == 0) {
                    xb_prev.noalias() += (2.0 * cost_weight) * (Q[k] * x[k]);
                    ub.noalias() += (2.0 * cost_weight) * (R[k] * u[k]);
                }
                // u = sum_j phi_j (v_j + L_j x), phi_0 = 1, phi_j = p_hat^j
                for (int j = 0; j <= np; ++j) {
                    const double phi = j == 0 ? 1.0 : ph[k][j - 1];
                    for (int a = 0; a < nu; ++a) res.sens(s, layout.v_index(k, j, a)) += phi * ub[a];
                    for (int row = 0; row < nu; ++row) {
                        const double w = phi * ub[row];
                        for (int c = 0; c < nx; ++c) res.sens(s, layout.L_index(k, j, row, c)) += w * x[k][c];
                    }
                    xb_prev.noalias() += phi * (L[k][j].transpose() * ub);
                    if (j >= 1) phb[j - 1] += ub.dot(act[k * (np + 1) + j]);
                }
                xb[s] = std::move(xb_prev);
                pb[s] = std::move(phb);
                Pb[s] = std::move(Pb_prev);
            }
        }
        return res;
    }
};

template <int MaxDim>
std::vector<typename Kernel<MaxDim>::ScenarioResult> run_all(const SaaProblem& prob, const Vector& z,
                                                             bool with_derivatives) {
    const Kernel<MaxDim> kernel(prob, z);
    std::vector<typename Kernel<MaxDim>::ScenarioResult> out(prob.scenarios.size());
    parallel_for(out.size(), [&](std::size_t i) { out[i] = kernel.run(static_cast<int>(i), with_derivatives); });
    return out;
}

struct Combined {
    double cost = 0.0;
    std::vector<Vector> x_final;
    std::vector<Matrix> sens;
    double min_pivot = std::numeric_limits<double>::infinity();
};

template <int MaxDim>
Combined combine(const SaaProblem& prob, const Vector& z, bool with_derivatives) {
    auto runs = run_all<MaxDim>(prob, z, with_derivatives);
    Combined c;
    for (auto& r : runs) {
        c.cost += r.cost;
        c.min_pivot = std::min(c.min_pivot, r.min_pivot);
        c.x_final.push_back(std::move(r.x_final));
        c.sens.push_back(std::move(r.sens));
    }
    return c;
}

}  // namespace

NlpEval evaluate(const SaaProblem& prob, const Vector& z_in, bool with_derivatives) {
    const DecisionLayout layout = prob.layout();
    const auto mask = free_mask(prob);
    if (z_in.size() != layout.size()) {
        throw ContractViolation("evaluate: decision vector length " + std::to_string(z_in.size()) + ", expected " +
                                std::to_string(layout.size()));
    }
    if (!z_in.allFinite()) throw NumericalError("evaluate: non-finite decision vector");
    require(prob.scenarios.prior_mean.size() == prob.sys.np, "evaluate: scenario prior dimension differs from np");
    Vector z = z_in;
    for (Eigen::Index t = 0; t < z.size(); ++t) {
        if (!mask[static_cast<std::size_t>(t)]) z[t] = 0.0;
    }
    const int nx = prob.sys.nx;
    const int n2 = nx * nx;
    const int nz = layout.size();
    const int M = prob.scenarios.size();
    Matrix V(nx, nx);
    for (int a = 0; a < nx; ++a) {
        for (int b = 0; b < nx; ++b) V(a, b) = z[layout.V_index(a, b)];
    }

    constexpr int small = 8;
    const bool fits = std::max({nx, prob.sys.nu, prob.sys.np, prob.sys.nw}) <= small;
    const Combined run = fits ? combine<small>(prob, z, with_derivatives)
                              : combine<Eigen::Dynamic>(prob, z, with_derivatives);

    NlpEval out;
    out.min_pivot = run.min_pivot;
    out.objective = prob.normalize_cost ? run.cost / M : run.cost;
    if (!std::isfinite(out.objective)) throw NumericalError("evaluate: non-finite objective");

    Vector mean = Vector::Zero(nx);
    Matrix second = Matrix::Zero(nx, nx);
    for (int i = 0; i < M; ++i) {
        const Vector d = run.x_final[i] - prob.mu_F;
        mean += run.x_final[i];
        second.noalias() += d * d.transpose();
    }
    const Vector mean_error = mean / M - prob.mu_F;
    const Matrix cov_err = second / M + V * V.transpose() - prob.Sigma_F;
    const Eigen::Map<const Vector> cov_error(cov_err.data(), n2);

    const int nc = prob.num_constraints();
    out.constraints.resize(nc);
    out.constraints.segment(0, nx) = mean_error - prob.delta_mu;
    out.constraints.segment(nx, nx) = -mean_error - prob.delta_mu;
    out.constraints.segment(2 * nx, n2) = cov_error - prob.delta_sigma;
    out.constraints.segment(2 * nx + n2, n2) = -cov_error - prob.delta_sigma;

    if (!with_derivatives) return out;

    out.gradient = Vector::Zero(nz);
    Matrix mean_jac = Matrix::Zero(nx, nz);
    Matrix cov_jac = Matrix::Zero(n2, nz);
    for (int i = 0; i < M; ++i) {
        const Matrix& S = run.sens[i];
        out.gradient += S.row(0).transpose();
        const Vector d = run.x_final[i] - prob.mu_F;
        mean_jac += S.bottomRows(nx);
        // d/dz of d d' at entry (a, b), column-major index a + b * nx
        for (int b = 0; b < nx; ++b) {
            for (int a = 0; a < nx; ++a) cov_jac.row(a + b * nx) += S.row(1 + a) * d[b] + d[a] * S.row(1 + b);
        }
    }
    mean_jac /= M;
    cov_jac /= M;
    // V V' entries: d(VV')_{ab} / dV_{cd} = [a == c] V_{bd} + [b == c] V_{ad}
    for (int b = 0; b < nx; ++b) {
        for (int a = 0; a < nx; ++a) {
            for (int d = 0; d < nx; ++d) {
                cov_jac(a + b * nx, layout.V_index(a, d)) += V(b, d);
                cov_jac(a + b * nx, layout.V_index(b, d)) += V(a, d);
            }
        }
    }

    out.jacobian.resize(nc, nz);
    out.jacobian.middleRows(0, nx) = mean_jac;
    out.jacobian.middleRows(nx, nx) = -mean_jac;
    out.jacobian.middleRows(2 * nx, n2) = cov_jac;
    out.jacobian.middleRows(2 * nx + n2, n2) = -cov_jac;

    for (int t = 0; t < nz; ++t) {
        if (!mask[static_cast<std::size_t>(t)]) {
            out.gradient[t] = 0.0;
            out.jacobian.col(t).setZero();
        }
    }
    return out;
}

ObjectiveEval eval_objective(const SaaProblem& prob, const Vector& z) {
    NlpEval e = evaluate(prob, z, true);
    return {e.objective, std::move(e.gradient)};
}

ConstraintEval eval_constraints(const SaaProblem& prob, const Vector& z) {
    NlpEval e = evaluate(prob, z, true);
    return {std::move(e.constraints), std::move(e.jacobian)};
}

}  // namespace adcs
