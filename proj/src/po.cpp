#include "plsa/po.hpp"

#include "plsa/error.hpp"

namespace plsa {

PoResult po_estimate(const Eigen::VectorXd& theta_tilde, const TuningConfig& cfg,
                     const Loss& loss, const Box& box, const NewtonOptions& opts) {
    const Eigen::Index p = theta_tilde.size();
    if (loss.dim() != p) throw InvalidInput("po_estimate: loss dimension does not match theta_tilde");

    LsaProblem prob{theta_tilde, Eigen::MatrixXd::Identity(p, p), compute_weights(theta_tilde, cfg), cfg.q, box};

    PoResult out;
    out.selection = solve_separable(prob);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!out.selection.active[j]) out.zero_set.push_back(j);
    }

    if (static_cast<Eigen::Index>(out.zero_set.size()) == p) {
        out.theta_check = Eigen::VectorXd::Zero(p);
        out.refit_converged = true;
        return out;
    }

    const NewtonResult fit = minimize_newton(loss, out.selection.theta_hat, out.selection.active, box, opts);
    out.theta_check = fit.theta;
    for (Eigen::Index j : out.zero_set) out.theta_check[j] = 0.0;
    out.refit_converged = fit.converged;
    out.refit_gradient_norm = fit.grad_norm;
    out.refit_iterations = fit.iterations;
    return out;
}

}  // namespace plsa
