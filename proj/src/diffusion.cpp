#include "plsa/diffusion.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "plsa/csv.hpp"
#include "plsa/error.hpp"
#include "plsa/seed.hpp"

namespace plsa::diffusion {

namespace {

// Bound on -2 theta'x inside exp when the overflow guard is on.
constexpr double kGuardExponent = 100.0;

}  // namespace

void DiffusionModel::validate() const {
    if (p < 1) throw InvalidInput("DiffusionModel: p must be positive");
    if (n_steps < 2) throw InvalidInput("DiffusionModel: n_steps must be at least 2");
    if (!(horizon > 0.0)) throw InvalidInput("DiffusionModel: horizon must be positive");
    if (!(sigma_cap > 0.0)) throw InvalidInput("DiffusionModel: sigma_cap must be positive");
    if (!(ou_speed > 0.0) || !(ou_vol > 0.0)) throw InvalidInput("DiffusionModel: OU parameters must be positive");
    if (theta_true.size() != p || !theta_true.allFinite()) throw InvalidInput("DiffusionModel: theta_true must have length p");
}

DiffusionModel DiffusionModel::reference(long n_steps) {
    DiffusionModel m;
    m.p = 10;
    m.n_steps = n_steps;
    m.theta_true.resize(10);
    m.theta_true << 1, 1, -1, -1, 0.5, 0, 0, 0, 0, 0;
    return m;
}

DiffusionSample simulate(const DiffusionModel& model, std::uint64_t base_seed, std::uint64_t index) {
    model.validate();
    const long n = model.n_steps;
    const double h = model.step();
    const double decay = std::exp(-model.ou_speed * h);
    const double sd = model.ou_vol * std::sqrt(-std::expm1(-2.0 * model.ou_speed * h) / (2.0 * model.ou_speed));

    Rng cov_rng(derive_seed(base_seed, index, StreamTag::covariates));
    Rng resp_rng(derive_seed(base_seed, index, StreamTag::response));
    std::normal_distribution<double> normal(0.0, 1.0);

    DiffusionSample s;
    s.x.resize(n + 1, model.p);
    s.y.resize(n + 1);
    s.x.row(0).setZero();
    s.y[0] = 0.0;
    const double sqrt_h = std::sqrt(h);
    for (long i = 0; i < n; ++i) {
        for (int j = 0; j < model.p; ++j) s.x(i + 1, j) = decay * s.x(i, j) + sd * normal(cov_rng);
        const double sigma = std::min(std::exp(s.x.row(i).dot(model.theta_true)), model.sigma_cap);
        s.y[i + 1] = s.y[i] + sigma * sqrt_h * normal(resp_rng);
    }
    return s;
}

DiffusionQuasiLikelihood::DiffusionQuasiLikelihood(const DiffusionModel& model, const DiffusionSample& sample) {
    model.validate();
    const long n = model.n_steps;
    if (sample.x.rows() != n + 1 || sample.x.cols() != model.p || sample.y.size() != n + 1) {
        throw InvalidInput("DiffusionQuasiLikelihood: sample does not match the model grid");
    }
    x_ = sample.x.topRows(n);
    const Eigen::ArrayXd dy = (sample.y.tail(n) - sample.y.head(n)).array();
    scaled_sq_ = dy.square() / model.step();
    log_cap_ = std::log(model.sigma_cap);
}

double DiffusionQuasiLikelihood::loglik(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim()) throw InvalidInput("quasi_loglik_h: dimension mismatch");
    const Eigen::ArrayXd eta = (x_ * theta).array();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (eta[i] >= log_cap_) {
            sum += 2.0 * log_cap_ + scaled_sq_[i] * std::exp(-2.0 * log_cap_);
        } else {
            sum += 2.0 * eta[i] + scaled_sq_[i] * std::exp(-2.0 * eta[i]);
        }
    }
    return -0.5 * sum;
}

Eigen::VectorXd DiffusionQuasiLikelihood::loglik_gradient(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim()) throw InvalidInput("quasi_loglik_h: dimension mismatch");
    const Eigen::ArrayXd eta = (x_ * theta).array();
    Eigen::VectorXd coef(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        coef[i] = eta[i] >= log_cap_ ? 0.0 : scaled_sq_[i] * std::exp(-2.0 * eta[i]) - 1.0;
    }
    return x_.transpose() * coef;
}

Eigen::MatrixXd DiffusionQuasiLikelihood::loglik_hessian(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim()) throw InvalidInput("quasi_loglik_h: dimension mismatch");
    const Eigen::ArrayXd eta = (x_ * theta).array();
    Eigen::ArrayXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        w[i] = eta[i] >= log_cap_ ? 0.0 : 2.0 * scaled_sq_[i] * std::exp(-2.0 * eta[i]);
    }
    const Eigen::MatrixXd weighted = x_.array().colwise() * w;
    return -(x_.transpose() * weighted);
}

long DiffusionQuasiLikelihood::capped_cells(const Eigen::VectorXd& theta) const {
    return static_cast<long>(((x_ * theta).array() >= log_cap_).count());
}

double DiffusionQuasiLikelihood::value(const Eigen::VectorXd& theta) const {
    if (!guard_) return -loglik(theta);
    if (theta.size() != dim()) throw InvalidInput("quasi_loglik_h: dimension mismatch");
    const Eigen::ArrayXd eta = (x_ * theta).array();
    double sum = 0.0;
    bool hit = false;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (eta[i] >= log_cap_) {
            sum += 2.0 * log_cap_ + scaled_sq_[i] * std::exp(-2.0 * log_cap_);
        } else {
            double e = -2.0 * eta[i];
            if (e > kGuardExponent) {
                e = kGuardExponent;
                hit = true;
            }
            sum += 2.0 * eta[i] + scaled_sq_[i] * std::exp(e);
        }
    }
    if (hit) ++guard_hits_;
    return 0.5 * sum;
}

Eigen::VectorXd DiffusionQuasiLikelihood::gradient(const Eigen::VectorXd& theta) const {
    return -loglik_gradient(theta);
}

Eigen::MatrixXd DiffusionQuasiLikelihood::hessian(const Eigen::VectorXd& theta) const {
    return -loglik_hessian(theta);
}

double quasi_loglik_h(const DiffusionModel& model, const DiffusionSample& sample, const Eigen::VectorXd& theta) {
    return DiffusionQuasiLikelihood(model, sample).loglik(theta);
}

Eigen::VectorXd quasi_loglik_h_gradient(const DiffusionModel& model, const DiffusionSample& sample,
                                        const Eigen::VectorXd& theta) {
    return DiffusionQuasiLikelihood(model, sample).loglik_gradient(theta);
}

Eigen::MatrixXd quasi_loglik_h_hessian(const DiffusionModel& model, const DiffusionSample& sample,
                                       const Eigen::VectorXd& theta) {
    return DiffusionQuasiLikelihood(model, sample).loglik_hessian(theta);
}

Eigen::VectorXd qmle_h(const DiffusionModel& model, const DiffusionSample& sample, const Box& box,
                       const NewtonOptions& opts) {
    DiffusionQuasiLikelihood lik(model, sample);
    const std::vector<bool> all(model.p, true);
    const NewtonResult res = minimize_newton(lik, Eigen::VectorXd::Zero(model.p), all, box, opts);
    if (!res.converged) {
        std::ostringstream os;
        os << "diffusion qmle: Newton did not converge (iterations " << res.iterations
           << ", scaled gradient norm " << res.grad_norm << ", guard hits " << lik.guard_hits() << ")";
        throw NumericalError(os.str());
    }
    return res.theta;
}

Eigen::MatrixXd g_hat_n(const DiffusionModel& model, const DiffusionSample& sample, const Eigen::VectorXd& theta_tilde) {
    const Eigen::MatrixXd neg_h = -quasi_loglik_h_hessian(model, sample, theta_tilde);
    const double n = static_cast<double>(model.n_steps);
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(model.p, model.p) / n;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    if (llt.info() == Eigen::Success) g += neg_h / n;
    return g;
}

Eigen::MatrixXd path_information(const DiffusionModel& model, const DiffusionSample& sample) {
    model.validate();
    const auto x = sample.x.topRows(model.n_steps);
    return (2.0 * model.step() / model.horizon) * (x.transpose() * x);
}

void write_sample(const std::filesystem::path& dir, const DiffusionModel& model, const DiffusionSample& sample) {
    model.validate();
    std::filesystem::create_directories(dir);
    csv::Table t;
    t.header = {"t", "y"};
    for (int j = 0; j < model.p; ++j) t.header.push_back("x" + std::to_string(j + 1));
    for (Eigen::Index i = 0; i < sample.y.size(); ++i) {
        std::vector<std::string> row{csv::format_double(static_cast<double>(i) * model.step()),
                                     csv::format_double(sample.y[i])};
        for (int j = 0; j < model.p; ++j) row.push_back(csv::format_double(sample.x(i, j)));
        t.rows.push_back(std::move(row));
    }
    csv::write(dir / "sample.csv", t);
}

DiffusionSample read_sample(const std::filesystem::path& dir, const DiffusionModel& model) {
    model.validate();
    const csv::Table t = csv::read(dir / "sample.csv");
    if (static_cast<int>(t.header.size()) != model.p + 2) throw DataError("sample.csv: expected t,y plus p covariate columns");
    if (static_cast<long>(t.rows.size()) != model.n_steps + 1) {
        throw DataError("sample.csv: expected " + std::to_string(model.n_steps + 1) + " rows");
    }
    const auto y_col = t.column("y");
    DiffusionSample s;
    s.x.resize(model.n_steps + 1, model.p);
    s.y.resize(model.n_steps + 1);
    for (long i = 0; i <= model.n_steps; ++i) {
        const auto& row = t.rows[i];
        const double ti = csv::parse_double(row[0]);
        if (std::abs(ti - static_cast<double>(i) * model.step()) > 1e-9 * std::max(1.0, model.horizon)) {
            throw DataError("sample.csv: row " + std::to_string(i + 1) + " is off the observation grid");
        }
        s.y[i] = csv::parse_double(row[y_col]);
        for (int j = 0; j < model.p; ++j) s.x(i, j) = csv::parse_double(row[2 + j]);
    }
    if (s.y[0] != 0.0) throw DataError("sample.csv: y must start at 0");
    return s;
}

}  // namespace plsa::diffusion
