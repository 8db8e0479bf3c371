#include "plsa/lsa_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "plsa/error.hpp"

namespace plsa {

Box Box::uniform(Eigen::Index p, double lo, double hi) {
    if (!(lo < hi)) throw InvalidInput("box: lower must be below upper");
    return Box{Eigen::VectorXd::Constant(p, lo), Eigen::VectorXd::Constant(p, hi)};
}

Eigen::VectorXd Box::clip(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
}

double Box::clip(Eigen::Index j, double v) const { return std::clamp(v, lower[j], upper[j]); }

void LsaProblem::validate() const {
    const Eigen::Index p = dim();
    if (p == 0) throw InvalidInput("LsaProblem: empty parameter");
    if (g_hat.rows() != p || g_hat.cols() != p) throw InvalidInput("LsaProblem: G has wrong shape");
    if (weights.size() != p) throw InvalidInput("LsaProblem: weight vector has wrong length");
    if (box.lower.size() != p || box.upper.size() != p) throw InvalidInput("LsaProblem: box has wrong length");
    if (!(q > 0.0 && q <= 1.0)) throw InvalidInput("LsaProblem: q must lie in (0,1]");
    if (!theta_tilde.allFinite() || !g_hat.allFinite()) throw InvalidInput("LsaProblem: non-finite input");
    if ((weights.kappa.array() < 0.0).any() || !weights.kappa.allFinite()) {
        throw InvalidInput("LsaProblem: weights must be finite and nonnegative");
    }
    if ((box.lower.array() >= box.upper.array()).any()) throw InvalidInput("LsaProblem: empty box");

    const double scale = std::max(1.0, g_hat.cwiseAbs().maxCoeff());
    if ((g_hat - g_hat.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidInput("LsaProblem: G is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g_hat);
    if (llt.info() != Eigen::Success) throw InvalidInput("LsaProblem: G is not positive definite");
}

double eval_objective(const LsaProblem& prob, const Eigen::VectorXd& theta) {
    if (theta.size() != prob.dim()) throw InvalidInput("eval_objective: dimension mismatch");
    if (prob.g_hat.rows() != prob.dim() || prob.weights.size() != prob.dim()) {
        throw InvalidInput("eval_objective: problem dimensions inconsistent");
    }
    const Eigen::VectorXd d = theta - prob.theta_tilde;
    double pen = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        if (prob.weights.kappa[j] != 0.0) pen += prob.weights.kappa[j] * std::pow(std::abs(theta[j]), prob.q);
    }
    return d.dot(prob.g_hat * d) + pen;
}

namespace {

std::vector<bool> nonzero_mask(const Eigen::VectorXd& x) {
    std::vector<bool> out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) out[j] = x[j] != 0.0;
    return out;
}

LsaSolution finish(const LsaProblem& prob, Eigen::VectorXd theta, int iters, bool converged) {
    LsaSolution sol;
    sol.objective = eval_objective(prob, theta);
    sol.active = nonzero_mask(theta);
    sol.theta_hat = std::move(theta);
    sol.iterations = iters;
    sol.converged = converged;
    return sol;
}

LsaSolution descend_from(const LsaProblem& prob, Eigen::VectorXd x, const CdOptions& opts) {
    const Eigen::Index p = prob.dim();
    const auto& g = prob.g_hat;
    Eigen::VectorXd resid = x - prob.theta_tilde;

    bool converged = false;
    int sweep = 0;
    while (sweep < opts.max_sweeps) {
        ++sweep;
        Eigen::VectorXd g_resid = g * resid;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double gjj = g(j, j);
            const double z = prob.theta_tilde[j] - (g_resid[j] - gjj * resid[j]) / gjj;
            const double kappa = prob.weights.kappa[j];
            double t = prob.box.clip(j, prox_lq(gjj, z, kappa, prob.q));
            // Clipping can leave a point worse than the current one.
            if (prox_objective(gjj, z, kappa, prob.q, t) > prox_objective(gjj, z, kappa, prob.q, x[j])) {
                t = x[j];
            }
            const double delta = t - x[j];
            if (delta != 0.0) {
                x[j] = t;
                resid[j] += delta;
                g_resid += g.col(j) * delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (opts.on_sweep) opts.on_sweep(eval_objective(prob, x));
        if (max_change < opts.tol) {
            converged = true;
            break;
        }
    }
    return finish(prob, std::move(x), sweep, converged);
}

}  // namespace

LsaSolution solve_separable(const LsaProblem& prob) {
    prob.validate();
    const Eigen::Index p = prob.dim();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    if ((prob.g_hat - eye).cwiseAbs().maxCoeff() > 1e-12) {
        throw InvalidInput("solve_separable: G must be the identity");
    }
    Eigen::VectorXd theta(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        theta[j] = prob.box.clip(j, prox_lq(1.0, prob.theta_tilde[j], prob.weights.kappa[j], prob.q));
    }
    return finish(prob, std::move(theta), 1, true);
}

LsaSolution solve_cd(const LsaProblem& prob, const CdOptions& opts) {
    prob.validate();
    const Eigen::Index p = prob.dim();

    Eigen::VectorXd diag_start(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        diag_start[j] = prob.box.clip(
            j, prox_lq(prob.g_hat(j, j), prob.theta_tilde[j], prob.weights.kappa[j], prob.q));
    }
    std::vector<Eigen::VectorXd> starts = {
        prob.box.clip(prob.theta_tilde),
        diag_start,
        prob.box.clip(Eigen::VectorXd::Zero(p)),
    };
    // best point with a single nonzero coordinate, one per coordinate
    const Eigen::VectorXd g_tt = prob.g_hat * prob.theta_tilde;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double gjj = prob.g_hat(j, j);
        Eigen::VectorXd s = prob.box.clip(Eigen::VectorXd::Zero(p));
        s[j] = prob.box.clip(j, prox_lq(gjj, g_tt[j] / gjj, prob.weights.kappa[j], prob.q));
        starts.push_back(std::move(s));
    }

    LsaSolution best;
    best.objective = std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        LsaSolution sol = descend_from(prob, s, opts);
        if (sol.objective < best.objective) best = std::move(sol);
    }
    return best;
}

Eigen::MatrixXd debias_transform(const Eigen::MatrixXd& g, const std::vector<bool>& active) {
    const Eigen::Index p = g.rows();
    if (g.cols() != p || static_cast<Eigen::Index>(active.size()) != p) {
        throw InvalidInput("debias_transform: dimension mismatch");
    }
    std::vector<Eigen::Index> on, off;
    for (Eigen::Index j = 0; j < p; ++j) (active[j] ? on : off).push_back(j);
    if (on.empty()) throw InvalidInput("debias_transform: empty active set");

    const auto p0 = static_cast<Eigen::Index>(on.size());
    const auto p1 = static_cast<Eigen::Index>(off.size());
    Eigen::MatrixXd g11(p0, p0), g10(p0, p1);
    for (Eigen::Index a = 0; a < p0; ++a) {
        for (Eigen::Index b = 0; b < p0; ++b) g11(a, b) = g(on[a], on[b]);
        for (Eigen::Index b = 0; b < p1; ++b) g10(a, b) = g(on[a], off[b]);
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(g11);
    if (!lu.isInvertible()) throw NumericalError("debias_transform: active block of G is singular");

    Eigen::MatrixXd out(p0, p);
    out.leftCols(p0).setIdentity();
    if (p1 > 0) out.rightCols(p1) = lu.solve(g10);
    return out;
}

double scaled_error(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star, double rate) {
    return (theta_hat - theta_star).norm() / rate;
}

double consistency_bound(const LsaProblem& prob, const Eigen::VectorXd& theta_star, double rate) {
    if (theta_star.size() != prob.dim()) throw InvalidInput("consistency_bound: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prob.g_hat, Eigen::EigenvaluesOnly);
    const double lam_min = es.eigenvalues().minCoeff();
    const double lam_max = es.eigenvalues().maxCoeff();
    if (!(lam_min > 0.0)) throw NumericalError("consistency_bound: G is not positive definite");

    int p0 = 0;
    double k_star = 0.0;
    double a_t = 0.0;
    for (Eigen::Index j = 0; j < theta_star.size(); ++j) {
        if (theta_star[j] == 0.0) continue;
        ++p0;
        k_star = std::max(k_star, std::pow(std::abs(theta_star[j]), prob.q - 1.0));
        a_t = std::max(a_t, prob.weights.kappa[j]);
    }
    const double init_err = scaled_error(prob.theta_tilde, theta_star, rate);
    return (2.0 * lam_max * init_err + p0 * k_star * a_t / rate) / lam_min;
}

}  // namespace plsa
