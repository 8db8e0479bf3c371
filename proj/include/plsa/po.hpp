#pragma once

#include <vector>

#include <Eigen/Dense>

#include "plsa/loss.hpp"
#include "plsa/lsa_solver.hpp"
#include "plsa/newton.hpp"
#include "plsa/penalty.hpp"

namespace plsa {

struct PoResult {
    LsaSolution selection;                 // identity-weighted penalized fit
    std::vector<Eigen::Index> zero_set;    // coordinates fixed at 0 in the refit
    Eigen::VectorXd theta_check;
    bool refit_converged = false;
    double refit_gradient_norm = 0.0;
    int refit_iterations = 0;
};

/// Two-stage estimator: select a sparsity pattern with the identity-weighted
/// penalized LSA around theta_tilde, then minimize `loss` over the selected
/// coordinates with the others held at exactly zero.
PoResult po_estimate(const Eigen::VectorXd& theta_tilde, const TuningConfig& cfg,
                     const Loss& loss, const Box& box, const NewtonOptions& opts = {});

}  // namespace plsa
