#pragma once

#include <Eigen/Dense>

namespace plsa {

/// Smooth loss on the parameter box, minimized by the refit stage and by the
/// initial quasi-likelihood estimators (as the negated quasi-log-likelihood).
class Loss {
public:
    virtual ~Loss() = default;

    virtual Eigen::Index dim() const = 0;
    virtual double value(const Eigen::VectorXd& theta) const = 0;
    virtual Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const = 0;
    virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const = 0;

    // Gradient norms are divided by this before comparing with a tolerance,
    // so the stopping rule does not depend on the sample size. Typically the
    // horizon T or the number of increments n.
    virtual double gradient_scale() const { return 1.0; }
};

}  // namespace plsa
