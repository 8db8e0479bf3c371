#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "plsa/loss.hpp"
#include "plsa/lsa_solver.hpp"
#include "plsa/newton.hpp"

namespace plsa::diffusion {

/// Y_t = int_0^t sigma(X_s, theta) dW_s on [0, horizon] with
/// sigma(x, theta) = min(exp(theta'x), sigma_cap) and X an OU process
/// dX = -ou_speed X dt + ou_vol dw, X_0 = 0, w independent of W.
/// Observed at t_i = i * horizon / n_steps.
struct DiffusionModel {
    int p = 10;
    long n_steps = 0;
    double horizon = 1.0;
    double ou_speed = 0.2;
    double ou_vol = 0.5;
    double sigma_cap = 1e5;
    Eigen::VectorXd theta_true;

    double step() const { return horizon / static_cast<double>(n_steps); }
    void validate() const;

    // Ten covariates, theta* = (1, 1, -1, -1, 0.5, 0, 0, 0, 0, 0).
    static DiffusionModel reference(long n_steps);
};

struct DiffusionSample {
    Eigen::MatrixXd x;  // (n+1) x p
    Eigen::VectorXd y;  // n+1, y[0] = 0
};

DiffusionSample simulate(const DiffusionModel& model, std::uint64_t base_seed, std::uint64_t index = 0);

/// Negated Gaussian quasi-log-likelihood -H_n for the scalar-volatility model:
///   H_n = -1/2 sum_i { log S_{i-1} + (dY_i)^2 / (h S_{i-1}) },  S = sigma^2.
/// On cells where the cap binds, S = sigma_cap^2 does not depend on theta.
class DiffusionQuasiLikelihood final : public Loss {
public:
    DiffusionQuasiLikelihood(const DiffusionModel& model, const DiffusionSample& sample);

    Eigen::Index dim() const override { return x_.cols(); }
    double value(const Eigen::VectorXd& theta) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const override;
    double gradient_scale() const override { return static_cast<double>(x_.rows()); }

    double loglik(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd loglik_gradient(const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd loglik_hessian(const Eigen::VectorXd& theta) const;

    // Number of increments whose volatility hits the cap at theta.
    long capped_cells(const Eigen::VectorXd& theta) const;

    void set_overflow_guard(bool on) { guard_ = on; }
    long guard_hits() const { return guard_hits_; }

private:
    Eigen::MatrixXd x_;        // covariates at left endpoints, n x p
    Eigen::ArrayXd scaled_sq_; // (dY_i)^2 / h
    double log_cap_;
    bool guard_ = true;
    mutable long guard_hits_ = 0;
};

double quasi_loglik_h(const DiffusionModel& model, const DiffusionSample& sample, const Eigen::VectorXd& theta);
Eigen::VectorXd quasi_loglik_h_gradient(const DiffusionModel& model, const DiffusionSample& sample,
                                        const Eigen::VectorXd& theta);
Eigen::MatrixXd quasi_loglik_h_hessian(const DiffusionModel& model, const DiffusionSample& sample,
                                       const Eigen::VectorXd& theta);

// Maximizer of H_n; throws NumericalError when Newton fails.
Eigen::VectorXd qmle_h(const DiffusionModel& model, const DiffusionSample& sample, const Box& box,
                       const NewtonOptions& opts = {});

// -n^-1 d^2 H_n(theta_tilde) (dropped unless positive definite) + n^-1 I.
Eigen::MatrixXd g_hat_n(const DiffusionModel& model, const DiffusionSample& sample, const Eigen::VectorXd& theta_tilde);

// (2/T) sum_i x_{i-1} x_{i-1}' h: the path Fisher information of the scalar model.
Eigen::MatrixXd path_information(const DiffusionModel& model, const DiffusionSample& sample);

// sample.csv with columns t,y,x1..xp.
void write_sample(const std::filesystem::path& dir, const DiffusionModel& model, const DiffusionSample& sample);
DiffusionSample read_sample(const std::filesystem::path& dir, const DiffusionModel& model);

}  // namespace plsa::diffusion
