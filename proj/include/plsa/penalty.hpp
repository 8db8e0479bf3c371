#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace plsa {

/// Tuning triplet (gamma, r, q) together with the convergence rate r_T.
///
/// The adaptive weights are kappa_j = alpha * |theta_tilde_j|^(-gamma) with
/// alpha = rate^r. Typical rates are T^(-1/2) for an ergodic model observed on
/// [0, T] and n^(-1/2) for n high-frequency observations.
struct TuningConfig {
    double gamma = 1.0;
    double r = 1.2;
    double q = 0.3;
    double rate = 0.1;
    double min_weight_floor = 1e-10;

    double alpha() const;

    // Throws InvalidInput unless q in (0,1], gamma > -(1-q), rate in (0,1),
    // r finite and floor >= 0.
    void validate() const;

    // True when r lies in the window (1, 2 - q + gamma) that makes the
    // selection condition rate^-(2-q+gamma) * alpha -> infinity hold.
    bool in_selection_window() const;
};

struct WeightVector {
    Eigen::VectorXd kappa;

    Eigen::Index size() const { return kappa.size(); }

    // Largest weight over the truly active coordinates (a_T).
    double max_active(std::span<const bool> truly_active) const;
    // Smallest weight over the truly zero coordinates (b_T).
    double min_inactive(std::span<const bool> truly_active) const;
};

WeightVector compute_weights(const Eigen::VectorXd& theta_tilde, const TuningConfig& cfg);

/// Global minimizer of g*(t - z)^2 + kappa*|t|^q over the real line.
///
/// For q = 1 this is soft thresholding. For q < 1 the minimizer is either 0 or
/// the larger root of the stationarity equation on the side of z, found by a
/// safeguarded Newton iteration bracketed by the inflection point of the
/// objective and |z|. Ties go to 0.
double prox_lq(double g, double z, double kappa, double q);

// The scalar objective minimized by prox_lq.
double prox_objective(double g, double z, double kappa, double q, double t);

}  // namespace plsa
