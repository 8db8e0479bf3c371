#include "plsa/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plsa/error.hpp"

namespace plsa {

namespace {

constexpr double kRootTol = 1e-13;
constexpr int kRootMaxIter = 200;

void check_q(double q) {
    if (!(q > 0.0 && q <= 1.0)) {
        std::ostringstream os;
        os << "q must lie in (0,1], got " << q;
        throw InvalidInput(os.str());
    }
}

// Positive root of 2(t - a) + c*q*t^(q-1) = 0 on (lo, hi), where the left-hand
// side is negative at lo, positive at hi, increasing and convex in between.
double stationary_root(double a, double c, double q, double lo, double hi) {
    auto slope = [&](double t) { return 2.0 * (t - a) + c * q * std::pow(t, q - 1.0); };
    auto curvature = [&](double t) { return 2.0 - c * q * (1.0 - q) * std::pow(t, q - 2.0); };

    double t = hi;
    for (int it = 0; it < kRootMaxIter; ++it) {
        const double d = slope(t);
        if (d == 0.0) return t;
        if (d > 0.0) hi = t; else lo = t;

        const double dd = curvature(t);
        double next = (dd > 0.0) ? t - d / dd : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);

        if (std::abs(next - t) < kRootTol || hi - lo < kRootTol) return next;
        t = next;
    }
    throw NumericalError("prox_lq: stationarity root did not converge");
}

}  // namespace

double TuningConfig::alpha() const { return std::pow(rate, r); }

void TuningConfig::validate() const {
    check_q(q);
    if (!std::isfinite(gamma) || !(gamma > -(1.0 - q))) {
        throw InvalidInput("gamma must satisfy gamma > -(1-q)");
    }
    if (!std::isfinite(r)) throw InvalidInput("r must be finite");
    if (!(rate > 0.0 && rate < 1.0)) throw InvalidInput("rate must lie in (0,1)");
    if (!(min_weight_floor >= 0.0) || !std::isfinite(min_weight_floor)) {
        throw InvalidInput("min_weight_floor must be finite and >= 0");
    }
}

bool TuningConfig::in_selection_window() const { return r > 1.0 && r < 2.0 - q + gamma; }

double WeightVector::max_active(std::span<const bool> truly_active) const {
    if (static_cast<Eigen::Index>(truly_active.size()) != kappa.size()) {
        throw InvalidInput("active mask length does not match weights");
    }
    double out = 0.0;
    for (Eigen::Index j = 0; j < kappa.size(); ++j) {
        if (truly_active[j]) out = std::max(out, kappa[j]);
    }
    return out;
}

double WeightVector::min_inactive(std::span<const bool> truly_active) const {
    if (static_cast<Eigen::Index>(truly_active.size()) != kappa.size()) {
        throw InvalidInput("active mask length does not match weights");
    }
    double out = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < kappa.size(); ++j) {
        if (!truly_active[j]) out = std::min(out, kappa[j]);
    }
    return out;
}

WeightVector compute_weights(const Eigen::VectorXd& theta_tilde, const TuningConfig& cfg) {
    cfg.validate();
    if (!theta_tilde.allFinite()) throw InvalidInput("compute_weights: non-finite initial estimate");

    const double alpha = cfg.alpha();
    WeightVector w;
    w.kappa.resize(theta_tilde.size());
    for (Eigen::Index j = 0; j < theta_tilde.size(); ++j) {
        const double mag = std::max(std::abs(theta_tilde[j]), cfg.min_weight_floor);
        w.kappa[j] = (cfg.gamma == 0.0) ? alpha : alpha * std::pow(mag, -cfg.gamma);
    }
    return w;
}

double prox_objective(double g, double z, double kappa, double q, double t) {
    const double d = t - z;
    return g * d * d + kappa * std::pow(std::abs(t), q);
}

double prox_lq(double g, double z, double kappa, double q) {
    check_q(q);
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidInput("prox_lq: g must be positive and finite");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw InvalidInput("prox_lq: kappa must be nonnegative and finite");
    }
    if (!std::isfinite(z)) throw InvalidInput("prox_lq: z must be finite");

    if (kappa == 0.0 || z == 0.0) return z;

    // Dividing the objective by g leaves (t - z)^2 + c|t|^q.
    const double c = kappa / g;
    const double a = std::abs(z);
    const double sign = z > 0.0 ? 1.0 : -1.0;

    if (q == 1.0) {
        const double m = a - 0.5 * c;
        return m > 0.0 ? sign * m : 0.0;
    }

    const double t_inflect = std::pow(0.5 * c * q * (1.0 - q), 1.0 / (2.0 - q));
    if (t_inflect >= a) return 0.0;
    if (2.0 * (t_inflect - a) + c * q * std::pow(t_inflect, q - 1.0) >= 0.0) return 0.0;

    const double root = stationary_root(a, c, q, t_inflect, a);
    const double f_root = (root - a) * (root - a) + c * std::pow(root, q);
    return f_root < a * a ? sign * root : 0.0;
}

}  // namespace plsa
