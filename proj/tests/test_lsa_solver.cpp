#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "plsa/error.hpp"
#include "plsa/lsa_solver.hpp"

using namespace plsa;

namespace {

LsaProblem make_problem(Eigen::VectorXd tt, Eigen::MatrixXd g, Eigen::VectorXd kappa, double q) {
    const auto p = tt.size();
    return LsaProblem{std::move(tt), std::move(g), WeightVector{std::move(kappa)}, q, Box::uniform(p, -10.0, 10.0)};
}

Eigen::MatrixXd random_pd(Eigen::Index p, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd a(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) a(i, j) = n(rng);
    Eigen::MatrixXd g = a * a.transpose() / static_cast<double>(p) + 0.2 * Eigen::MatrixXd::Identity(p, p);
    return 0.5 * (g + g.transpose());
}

// Dense evaluation written independently of eval_objective.
double dense_objective(const LsaProblem& prob, const Eigen::VectorXd& theta) {
    double quad = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        for (Eigen::Index j = 0; j < theta.size(); ++j)
            quad += (theta[i] - prob.theta_tilde[i]) * prob.g_hat(i, j) * (theta[j] - prob.theta_tilde[j]);
    double pen = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) pen += prob.weights.kappa[j] * std::pow(std::abs(theta[j]), prob.q);
    return quad + pen;
}

}  // namespace

TEST_CASE("eval_objective examples") {
    auto prob = make_problem(Eigen::Vector2d(1.0, -2.0), Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(), 0.5);
    CHECK(eval_objective(prob, prob.theta_tilde) == 0.0);

    auto one = make_problem(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0),
                            Eigen::VectorXd::Constant(1, 3.0), 0.5);
    CHECK(eval_objective(one, Eigen::VectorXd::Constant(1, 4.0)) == doctest::Approx(24.0));

    CHECK_THROWS_AS(eval_objective(prob, Eigen::Vector3d::Zero()), InvalidInput);
}

TEST_CASE("eval_objective agrees with a dense evaluation") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0), uk(0.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd tt(5), kappa(5), theta(5);
        for (int j = 0; j < 5; ++j) {
            tt[j] = u(rng);
            kappa[j] = uk(rng);
            theta[j] = u(rng);
        }
        auto prob = make_problem(tt, random_pd(5, rng), kappa, 0.3);
        const double a = eval_objective(prob, theta), b = dense_objective(prob, theta);
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
    }
}

TEST_CASE("LsaProblem validation") {
    auto prob = make_problem(Eigen::Vector2d(1.0, 0.0), Eigen::Matrix2d::Identity(), Eigen::Vector2d::Ones(), 0.5);
    CHECK_NOTHROW(prob.validate());
    auto bad = prob;
    bad.g_hat(0, 1) = 0.3;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);  // asymmetric
    bad = prob;
    bad.g_hat << 1, 2, 2, 1;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);  // indefinite
    bad = prob;
    bad.weights.kappa[0] = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = prob;
    bad.box.lower[1] = 20.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("solve_separable examples") {
    auto prob = make_problem(Eigen::Vector2d(2.0, 0.01), Eigen::Matrix2d::Identity(), Eigen::Vector2d(2.0, 2.0), 1.0);
    const LsaSolution sol = solve_separable(prob);
    CHECK(sol.theta_hat[0] == doctest::Approx(1.0));
    CHECK(sol.theta_hat[1] == 0.0);
    CHECK(sol.active == std::vector<bool>{true, false});
    CHECK(sol.converged);

    auto free = make_problem(Eigen::Vector2d(12.0, -0.5), Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(), 0.3);
    const LsaSolution clipped = solve_separable(free);
    CHECK(clipped.theta_hat[0] == 10.0);
    CHECK(clipped.theta_hat[1] == -0.5);

    auto not_identity = prob;
    not_identity.g_hat(0, 0) = 2.0;
    CHECK_THROWS_AS(solve_separable(not_identity), InvalidInput);
}

TEST_CASE("solve_separable coordinates match the scalar grid oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0), uk(0.0, 3.0);
    Eigen::Vector3d tt, kappa;
    for (int j = 0; j < 3; ++j) {
        tt[j] = u(rng);
        kappa[j] = uk(rng);
    }
    auto prob = make_problem(tt, Eigen::Matrix3d::Identity(), kappa, 0.3);
    const LsaSolution sol = solve_separable(prob);
    for (int j = 0; j < 3; ++j) {
        auto f = [&](double t) { return oracle::scalar_objective(1.0, tt[j], kappa[j], 0.3, t); };
        const double span = 2.0 * std::abs(tt[j]) + 1.0;
        const auto [t, v] = oracle::grid_min_1d(f, -span, span, 1000001);
        CHECK(std::abs(sol.theta_hat[j] - t) < 1e-8);
    }
    CHECK(sol.objective == doctest::Approx(eval_objective(prob, sol.theta_hat)));
}

TEST_CASE("solve_cd reduces to the separable solve for G = I") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0), uk(0.0, 3.0);
    for (double q : {0.3, 0.7, 1.0}) {
        Eigen::VectorXd tt(6), kappa(6);
        for (int j = 0; j < 6; ++j) {
            tt[j] = u(rng);
            kappa[j] = uk(rng);
        }
        auto prob = make_problem(tt, Eigen::MatrixXd::Identity(6, 6), kappa, q);
        const LsaSolution a = solve_cd(prob), b = solve_separable(prob);
        CHECK(a.converged);
        CHECK((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK(a.active == b.active);
    }
}

TEST_CASE("solve_cd matches the dense-grid minimizer on a 2-d example") {
    Eigen::Matrix2d g;
    g << 2.0, 0.5, 0.5, 1.0;
    auto prob = make_problem(Eigen::Vector2d(1.0, 0.05), g, Eigen::Vector2d(0.01, 0.5), 0.5);
    const LsaSolution sol = solve_cd(prob);
    // Grid minimizer refined at 40 digits along the axis theta_2 = 0.
    CHECK(std::abs(sol.theta_hat[0] - 1.0112569767624836) < 1e-3);
    CHECK(sol.theta_hat[1] == 0.0);
    CHECK(std::abs(sol.objective - 0.012246717583268785) < 1e-6);

    auto f = [&](double x, double y) { return dense_objective(prob, Eigen::Vector2d(x, y)); };
    const auto [arg, v] = oracle::grid_min_2d(f, -2.0, 2.0, 1e-3);
    CHECK((sol.theta_hat - arg).norm() < 1e-3);
    CHECK(sol.objective <= v + 1e-6);
}

TEST_CASE("solve_cd with no penalty returns the center") {
    std::mt19937_64 rng(9);
    Eigen::VectorXd tt(4);
    tt << 0.3, -1.2, 2.0, 0.0;
    auto prob = make_problem(tt, random_pd(4, rng), Eigen::VectorXd::Zero(4), 0.3);
    const LsaSolution sol = solve_cd(prob);
    CHECK((sol.theta_hat - tt).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("property: solve_cd descends, converges to a coordinatewise minimum and zeros exactly") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-2.0, 2.0), uk(0.0, 1.5);
    const double qs[] = {0.3, 0.5, 0.7, 1.0};
    for (int rep = 0; rep < 40; ++rep) {
        const Eigen::Index p = 2 + rep % 6;
        Eigen::VectorXd tt(p), kappa(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            tt[j] = u(rng);
            kappa[j] = uk(rng);
        }
        auto prob = make_problem(tt, random_pd(p, rng), kappa, qs[rep % 4]);

        const LsaSolution sol = solve_cd(prob);
        REQUIRE(sol.converged);

        CHECK(std::abs(sol.objective - eval_objective(prob, sol.theta_hat)) <=
              1e-10 * std::max(1.0, std::abs(sol.objective)));
        for (Eigen::Index j = 0; j < p; ++j) {
            CHECK(sol.active[j] == (sol.theta_hat[j] != 0.0));
            // No single-coordinate move improves by more than 1e-10.
            auto f = [&](double t) {
                Eigen::VectorXd x = sol.theta_hat;
                x[j] = t;
                return dense_objective(prob, x);
            };
            const auto [t, v] = oracle::grid_min_1d(f, -6.0, 6.0, 20001);
            CHECK(sol.objective <= v + 1e-10);
        }
    }
}

TEST_CASE("solve_cd sweeps are monotone within a start") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0), uk(0.0, 1.0);
    Eigen::VectorXd tt(8), kappa(8);
    for (int j = 0; j < 8; ++j) {
        tt[j] = u(rng);
        kappa[j] = uk(rng);
    }
    auto prob = make_problem(tt, random_pd(8, rng), kappa, 0.5);
    std::vector<double> trace;
    CdOptions opts;
    opts.on_sweep = [&](double obj) { trace.push_back(obj); };
    solve_cd(prob, opts);
    std::size_t restarts = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i] > trace[i - 1] + 1e-12) ++restarts;
    }
    CHECK(restarts <= 3 + 8 - 1);  // one per start, each monotone
}

TEST_CASE("debias_transform examples") {
    const std::vector<bool> active{true, false, true, false};
    const Eigen::MatrixXd d = debias_transform(Eigen::MatrixXd::Identity(4, 4), active);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(2, 4);
    expect.leftCols(2).setIdentity();
    CHECK(d.isApprox(expect));

    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(4, 4);
    block(0, 0) = 2.0;
    block(2, 2) = 3.0;
    block(0, 2) = block(2, 0) = 0.5;
    block(1, 1) = 1.0;
    block(3, 3) = 4.0;
    const Eigen::MatrixXd db = debias_transform(block, active);
    CHECK(db.rightCols(2).norm() == 0.0);

    CHECK_THROWS_AS(debias_transform(Eigen::MatrixXd::Identity(3, 3), {false, false, false}), InvalidInput);
    Eigen::MatrixXd singular = Eigen::MatrixXd::Identity(3, 3);
    singular(0, 0) = 0.0;
    CHECK_THROWS_AS(debias_transform(singular, {true, false, true}), NumericalError);
}

TEST_CASE("debias_transform solves the active block system") {
    std::mt19937_64 rng(19);
    const Eigen::MatrixXd g = random_pd(4, rng);
    const std::vector<bool> active{false, true, true, false};
    const Eigen::MatrixXd d = debias_transform(g, active);
    const int on[] = {1, 2}, off[] = {0, 3};
    Eigen::Matrix2d g11;
    Eigen::Matrix2d g10;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            g11(a, b) = g(on[a], on[b]);
            g10(a, b) = g(on[a], off[b]);
        }
    CHECK((d.leftCols(2) - Eigen::Matrix2d::Identity()).norm() == 0.0);
    CHECK((g11 * d.rightCols(2) - g10).norm() < 1e-10);
}

TEST_CASE("consistency bound holds at the exact minimizer") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd star(6);
    star << 1.0, -0.5, 0.0, 0.0, 2.0, 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const double rate = 0.05;
        Eigen::VectorXd tt = star;
        for (int j = 0; j < 6; ++j) tt[j] += rate * n(rng);
        const TuningConfig cfg{1.0, 1.2, 0.3, rate, 1e-10};
        LsaProblem prob{tt, Eigen::MatrixXd::Identity(6, 6), compute_weights(tt, cfg), 0.3, Box::uniform(6, -10, 10)};
        const LsaSolution sol = solve_separable(prob);
        CHECK(scaled_error(sol.theta_hat, star, rate) <= consistency_bound(prob, star, rate) * (1 + 1e-12));
    }
}
