#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "plsa/penalty.hpp"

namespace plsa {

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static Box uniform(Eigen::Index p, double lo, double hi);
    Eigen::VectorXd clip(const Eigen::VectorXd& x) const;
    double clip(Eigen::Index j, double v) const;
    Eigen::Index size() const { return lower.size(); }
};

/// Penalized least-squares approximation instance:
///   Q(theta) = (theta - theta_tilde)' G (theta - theta_tilde) + sum_j kappa_j |theta_j|^q
/// minimized over the box.
struct LsaProblem {
    Eigen::VectorXd theta_tilde;
    Eigen::MatrixXd g_hat;
    WeightVector weights;
    double q = 1.0;
    Box box;

    Eigen::Index dim() const { return theta_tilde.size(); }

    // Checks dimensions, symmetry, box ordering and positive definiteness.
    void validate() const;
};

struct LsaSolution {
    Eigen::VectorXd theta_hat;
    std::vector<bool> active;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct CdOptions {
    double tol = 1e-10;
    int max_sweeps = 500;
    // Called with the objective after every full sweep; used by tests to
    // observe monotone descent.
    std::function<void(double)> on_sweep;
};

double eval_objective(const LsaProblem& prob, const Eigen::VectorXd& theta);

// Exact minimizer when G is the identity: one prox per coordinate.
LsaSolution solve_separable(const LsaProblem& prob);

// Cyclic coordinate descent with exact scalar updates, started from the
// clipped initial estimate, the diag(G) separable solution, zero, and for
// each j the best point whose only nonzero entry is j. The lowest-objective
// result wins.
LsaSolution solve_cd(const LsaProblem& prob, const CdOptions& opts = {});

// [I | G11^{-1} G10] with rows indexed by the active coordinates and columns
// ordered (active block, inactive block), each block in ascending index order.
Eigen::MatrixXd debias_transform(const Eigen::MatrixXd& g, const std::vector<bool>& active);

/// Right-hand side of the deterministic bound
///   |(theta_hat - theta*)/rate| <= ||G^-1|| (2||G|| |(theta_tilde - theta*)/rate|
///                                             + p0 K* a_T / rate)
/// which any global minimizer of Q satisfies. K* = max over the true active
/// set of |theta*_j|^(q-1) and a_T the largest weight over that set.
double consistency_bound(const LsaProblem& prob, const Eigen::VectorXd& theta_star, double rate);

// Left-hand side of the same bound.
double scaled_error(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star, double rate);

}  // namespace plsa
