#include <gtest/gtest.h>

#include <sstream>

#include "adcs/solver.hpp"
#include "test_util.hpp"

using namespace adcs;

namespace {

NlpValues shifted_bowl(const Vector& z) {
    NlpValues v;
    v.f = z.squaredNorm();
    v.grad = 2 * z;
    return v;
}

// min z^2 s.t. |z - 1| <= 0.1, written as z - 1.1 <= 0 and 0.9 - z <= 0.
NlpValues interval(const Vector& z) {
    NlpValues v;
    v.f = z[0] * z[0];
    v.grad = Vector::Constant(1, 2 * z[0]);
    v.c = Vector(2);
    v.c << z[0] - 1.1, 0.9 - z[0];
    v.jac = Matrix(2, 1);
    v.jac << 1.0, -1.0;
    return v;
}

double rosen(double a, double b) { return (1 - a) * (1 - a) + 100 * (b - a * a) * (b - a * a); }

NlpValues rosen_disc(const Vector& z) {
    NlpValues v;
    const double a = z[0], b = z[1];
    v.f = rosen(a, b);
    v.grad = Vector(2);
    v.grad << -2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a);
    v.c = Vector::Constant(1, a * a + b * b - 2.0);
    v.jac = Matrix(1, 2);
    v.jac << 2 * a, 2 * b;
    return v;
}

// z <= -1 and z >= 1 cannot both hold.
NlpValues contradictory(const Vector& z) {
    NlpValues v;
    v.f = z[0] * z[0];
    v.grad = Vector::Constant(1, 2 * z[0]);
    v.c = Vector(2);
    v.c << z[0] + 1.0, 1.0 - z[0];
    v.jac = Matrix(2, 1);
    v.jac << 1.0, -1.0;
    return v;
}

std::vector<std::vector<double>> log_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST(Lbfgs, ConvexQuadratic) {
    std::mt19937_64 g(1);
    const Matrix H = adcs::test::random_spd(g, 6);
    const Vector b = adcs::test::random_vector(g, 6);
    auto fg = [&](const Vector& x, Vector& grad) {
        grad = H * x - b;
        return 0.5 * x.dot(H * x) - b.dot(x);
    };
    const auto r = minimize_lbfgs(fg, Vector::Zero(6), 1e-9, 200, 10);
    EXPECT_TRUE(r.converged);
    EXPECT_LE((r.x - H.ldlt().solve(b)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solver, UnconstrainedBowl) {
    std::mt19937_64 g(2);
    const auto r = solve(shifted_bowl, adcs::test::random_vector(g, 5, 3.0));
    EXPECT_EQ(r.status, SolverStatus::optimal);
    EXPECT_LE(r.z.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solver, ActiveLowerBound) {
    SolverOptions o;
    o.gradient_tolerance = 1e-9;
    o.constraint_tolerance = 1e-9;
    const auto r = solve(interval, Vector::Constant(1, 3.0), o);
    EXPECT_EQ(r.status, SolverStatus::optimal);
    EXPECT_NEAR(r.z[0], 0.9, 1e-6);
    // Stationarity 2 z = lambda_2 at the active bound.
    EXPECT_NEAR(r.multipliers[1], 1.8, 1e-4);
    EXPECT_NEAR(r.multipliers[0], 0.0, 1e-8);
}

TEST(Solver, RosenbrockInsideDisc) {
    // Grid oracle at 1e-3 resolution over the feasible disc.
    double best = std::numeric_limits<double>::infinity();
    double ba = 0, bb = 0;
    const double lim = std::sqrt(2.0);
    for (int i = 0; i <= 2828; ++i) {
        const double a = -lim + 1e-3 * i;
        for (int j = 0; j <= 2828; ++j) {
            const double b = -lim + 1e-3 * j;
            if (a * a + b * b > 2.0) continue;
            const double f = rosen(a, b);
            if (f < best) {
                best = f;
                ba = a;
                bb = b;
            }
        }
    }
    ASSERT_NEAR(ba, 1.0, 2e-3);
    ASSERT_NEAR(bb, 1.0, 2e-3);

    SolverOptions o;
    o.gradient_tolerance = 1e-9;
    o.max_inner_iterations = 2000;
    const auto r = solve(rosen_disc, Vector((Vector(2) << -1.2, 1.0).finished()), o);
    EXPECT_EQ(r.status, SolverStatus::optimal);
    EXPECT_NEAR(r.z[0], 1.0, 1e-4);
    EXPECT_NEAR(r.z[1], 1.0, 1e-4);
    EXPECT_LE(r.objective, best + 1e-12);
}

TEST(Solver, DeclaresInfeasible) {
    const auto r = solve(contradictory, Vector::Constant(1, 0.3));
    EXPECT_EQ(r.status, SolverStatus::infeasible);
    EXPECT_GT(r.max_violation, 0.5);
}

TEST(Solver, DeterministicIterates) {
    std::ostringstream l1, l2;
    const auto a = solve(rosen_disc, Vector((Vector(2) << 0.3, -0.9).finished()), {}, Vector(), &l1);
    const auto b = solve(rosen_disc, Vector((Vector(2) << 0.3, -0.9).finished()), {}, Vector(), &l2);
    EXPECT_EQ(a.z, b.z);
    EXPECT_EQ(l1.str(), l2.str());
    EXPECT_FALSE(l1.str().empty());
}

TEST(Solver, AcceptedViolationNeverIncreases) {
    SolverOptions o;
    for (auto* fn : {&interval, &rosen_disc, &contradictory}) {
        std::ostringstream log;
        const Vector z0 = Vector::Constant(fn == &rosen_disc ? 2 : 1, 1.7);
        solve(*fn, z0, o, Vector(), &log);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& row : log_rows(log.str())) {
            ASSERT_GE(row.size(), 6u);
            if (row[5] != 1.0) continue;
            const double v = std::max(row[3], o.constraint_tolerance);
            EXPECT_LE(v, prev + 1e-12);
            prev = v;
        }
    }
}

TEST(Solver, OptimalStatusSurvivesIndependentRecheck) {
    SolverOptions o;
    for (auto* fn : {&interval, &rosen_disc}) {
        const Vector z0 = Vector::Constant(fn == &rosen_disc ? 2 : 1, -0.4);
        const auto r = solve(*fn, z0, o);
        ASSERT_EQ(r.status, SolverStatus::optimal);
        const NlpValues v = (*fn)(r.z);
        EXPECT_LE(max_violation(v.c), o.constraint_tolerance);
        Vector glag = v.grad + v.jac.transpose() * r.multipliers;
        EXPECT_LE(glag.cwiseAbs().maxCoeff(), o.gradient_tolerance);
    }
}

TEST(Solver, NonFiniteObjectiveAborts) {
    auto bad = [](const Vector& z) {
        NlpValues v = shifted_bowl(z);
        v.f = std::numeric_limits<double>::quiet_NaN();
        return v;
    };
    EXPECT_THROW(solve(bad, Vector::Ones(2)), NumericalError);
}

TEST(Solver, RejectsBadOptions) {
    SolverOptions o;
    o.penalty_growth = 1.0;
    EXPECT_THROW(solve(shifted_bowl, Vector::Ones(2), o), ContractViolation);
    o = SolverOptions{};
    o.gradient_tolerance = 0.0;
    EXPECT_THROW(solve(shifted_bowl, Vector::Ones(2), o), ContractViolation);
}
