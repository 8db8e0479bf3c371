#include "plsa/newton.hpp"

#include <cmath>

#include "plsa/error.hpp"

namespace plsa {

namespace {

constexpr int kMaxShifts = 80;

}  // namespace

NewtonResult minimize_newton(const Loss& loss, const Eigen::VectorXd& start,
                             const std::vector<bool>& free, const Box& box,
                             const NewtonOptions& opts) {
    const Eigen::Index p = loss.dim();
    if (start.size() != p || static_cast<Eigen::Index>(free.size()) != p || box.size() != p) {
        throw InvalidInput("minimize_newton: dimension mismatch");
    }
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (free[j]) idx.push_back(j);
    }
    const auto m = static_cast<Eigen::Index>(idx.size());
    const double scale = loss.gradient_scale();

    auto restricted_grad = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd g = loss.gradient(x);
        Eigen::VectorXd out(m);
        for (Eigen::Index a = 0; a < m; ++a) out[a] = g[idx[a]];
        return out;
    };

    NewtonResult res;
    res.theta = box.clip(start);
    res.value = loss.value(res.theta);
    if (m == 0) {
        res.converged = true;
        return res;
    }
    if (!std::isfinite(res.value)) return res;

    Eigen::VectorXd g = restricted_grad(res.theta);
    res.grad_norm = g.norm() / scale;

    for (int it = 0; it < opts.max_iter; ++it) {
        if (res.grad_norm < opts.grad_tol) {
            res.converged = true;
            return res;
        }
        const Eigen::MatrixXd h_full = loss.hessian(res.theta);
        Eigen::MatrixXd h(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b) h(a, b) = h_full(idx[a], idx[b]);

        const double diag_scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
        double lambda = 0.0;
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxShifts && !accepted; ++attempt) {
            Eigen::LLT<Eigen::MatrixXd> llt(h + lambda * Eigen::MatrixXd::Identity(m, m));
            if (llt.info() == Eigen::Success) {
                const Eigen::VectorXd step = -llt.solve(g);
                Eigen::VectorXd cand = res.theta;
                for (Eigen::Index a = 0; a < m; ++a) cand[idx[a]] = box.clip(idx[a], cand[idx[a]] + step[a]);
                const double f = loss.value(cand);
                const double slack = 1e-13 * std::max(1.0, std::abs(res.value));
                const bool tiny = step.lpNorm<Eigen::Infinity>() < 1e-9;
                if (std::isfinite(f) && (f < res.value || (tiny && f <= res.value + slack))) {
                    res.theta = std::move(cand);
                    res.value = f;
                    accepted = true;
                }
            }
            lambda = (lambda == 0.0) ? 1e-8 * diag_scale : 2.0 * lambda;
        }
        res.iterations = it + 1;
        if (!accepted) break;
        g = restricted_grad(res.theta);
        res.grad_norm = g.norm() / scale;
    }
    res.converged = res.grad_norm < opts.grad_tol;
    return res;
}

}  // namespace plsa
