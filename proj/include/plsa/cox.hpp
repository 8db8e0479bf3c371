#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "plsa/loss.hpp"
#include "plsa/lsa_solver.hpp"
#include "plsa/newton.hpp"

namespace plsa::cox {

/// Multivariate point process with intensities
///   lambda^a(t, theta) = exp(sum_j theta^a_j X^j_t),   a = 1..n_marks,
/// driven by independent OU covariates dX^j = -speed_j X^j dt + vol dW^j,
/// X_0 = 0. Parameters are stacked mark-major: theta[a*J + j] = theta^a_j.
struct CoxModel {
    int n_marks = 1;
    int n_covariates = 0;
    Eigen::VectorXd ou_speeds;
    double ou_vol = 0.4;
    double horizon = 0.0;
    double grid_step = 0.01;
    Eigen::MatrixXd theta_true;  // n_marks x n_covariates

    Eigen::Index dim() const { return static_cast<Eigen::Index>(n_marks) * n_covariates; }
    Eigen::Index n_cells() const;
    Eigen::VectorXd theta_true_vector() const;
    Eigen::VectorXd stationary_variances() const;
    void validate() const;

    // The 20-covariate, single-mark design with 8 nonzero coefficients.
    static CoxModel reference(double horizon);
};

struct CoxSample {
    // Covariates at grid points t_k = k*grid_step, k = 0..n_cells. Cell k is
    // (t_k, t_{k+1}] and carries the value of row k.
    Eigen::MatrixXd covariates;
    std::vector<std::vector<double>> event_times;  // per mark, strictly increasing

    std::size_t n_events() const;
};

// Cell index k with t in (t_k, t_{k+1}].
Eigen::Index event_cell(double t, double grid_step, Eigen::Index n_cells);

Eigen::MatrixXd simulate_covariates(const CoxModel& model, std::uint64_t seed);
std::vector<std::vector<double>> simulate_events(const CoxModel& model, const Eigen::MatrixXd& path,
                                                 std::uint64_t seed);
// Both streams derived from (base_seed, index).
CoxSample simulate(const CoxModel& model, std::uint64_t base_seed, std::uint64_t index);

/// Negated quasi-log-likelihood -l_T with the intensity frozen at the left end
/// of each grid cell.
class CoxQuasiLikelihood final : public Loss {
public:
    CoxQuasiLikelihood(const CoxModel& model, const CoxSample& sample);

    Eigen::Index dim() const override { return dim_; }
    double value(const Eigen::VectorXd& theta) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const override;
    double gradient_scale() const override { return horizon_; }

    double loglik(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd loglik_gradient(const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd loglik_hessian(const Eigen::VectorXd& theta) const;

    // value() clamps linear predictors at 50 inside exp when enabled; the
    // number of clamped evaluations is counted.
    void set_overflow_guard(bool on) { guard_ = on; }
    long guard_hits() const { return guard_hits_; }

    std::size_t n_events() const { return n_events_; }

private:
    Eigen::MatrixXd cells_;          // n_cells x J
    Eigen::MatrixXd event_sums_;     // J x n_marks
    double step_;
    double horizon_;
    int marks_;
    Eigen::Index dim_;
    std::size_t n_events_ = 0;
    bool guard_ = true;
    mutable long guard_hits_ = 0;
};

double quasi_loglik(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta);
Eigen::VectorXd quasi_loglik_gradient(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta);
Eigen::MatrixXd quasi_loglik_hessian(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta);

// Maximizer of l_T by damped Newton. Throws NumericalError when the sample
// has no events or Newton does not reach the gradient tolerance.
Eigen::VectorXd qmle(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& start,
                     const Box& box, const NewtonOptions& opts = {});

// -T^-1 d^2 l_T(theta_tilde) (dropped unless positive definite) + T^-1 I.
Eigen::MatrixXd g_hat_hessian(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta_tilde);

// Block diagonal over marks of T^-1 int X^2 exp(theta_tilde^a' X) dt + T^-1 I.
Eigen::MatrixXd g_hat_moment(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta_tilde);

// E[X X' exp(theta'X)] for independent X_j ~ N(0, v_j):
//   (S theta theta' S + S) exp(theta' S theta / 2),  S = diag(v).
Eigen::MatrixXd gamma_analytic(const Eigen::VectorXd& theta, const Eigen::VectorXd& stationary_vars);

// (l_T(theta) - l_T(theta_star)) / T.
double y_diagnostic(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& theta_star);

// covariates.csv (t,x1..xJ) and events.csv (mark,time; marks 1-based).
void write_sample(const std::filesystem::path& dir, const CoxModel& model, const CoxSample& sample);
CoxSample read_sample(const std::filesystem::path& dir, const CoxModel& model);

}  // namespace plsa::cox
