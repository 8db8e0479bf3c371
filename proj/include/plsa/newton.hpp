#pragma once

#include <vector>

#include <Eigen/Dense>

#include "plsa/loss.hpp"
#include "plsa/lsa_solver.hpp"

namespace plsa {

struct NewtonOptions {
    double grad_tol = 1e-8;
    int max_iter = 100;
};

struct NewtonResult {
    Eigen::VectorXd theta;
    double value = 0.0;
    double grad_norm = 0.0;  // restricted, divided by Loss::gradient_scale()
    int iterations = 0;
    bool converged = false;
};

// Damped Newton over the coordinates flagged in `free`; the remaining
// coordinates stay at their starting values. A Levenberg shift lambda*I is
// doubled until the shifted Hessian factors and the step lowers the loss.
// Never throws on non-convergence; check `converged`.
NewtonResult minimize_newton(const Loss& loss, const Eigen::VectorXd& start,
                             const std::vector<bool>& free, const Box& box,
                             const NewtonOptions& opts = {});

}  // namespace plsa
