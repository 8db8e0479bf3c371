#include "plsa/cox.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "plsa/csv.hpp"
#include "plsa/error.hpp"
#include "plsa/seed.hpp"

namespace plsa::cox {

namespace {

constexpr double kGuardEta = 50.0;
constexpr double kMaxCellMean = 1e6;

}  // namespace

Eigen::Index CoxModel::n_cells() const {
    if (!(grid_step > 0.0) || !(horizon > 0.0)) throw InvalidInput("CoxModel: horizon and grid_step must be positive");
    const double ratio = horizon / grid_step;
    const double cells = std::round(ratio);
    if (cells < 1.0 || std::abs(ratio - cells) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidInput("CoxModel: grid_step must divide horizon");
    }
    return static_cast<Eigen::Index>(cells);
}

Eigen::VectorXd CoxModel::theta_true_vector() const {
    Eigen::VectorXd out(dim());
    for (int a = 0; a < n_marks; ++a)
        for (int j = 0; j < n_covariates; ++j) out[a * n_covariates + j] = theta_true(a, j);
    return out;
}

Eigen::VectorXd CoxModel::stationary_variances() const {
    return (ou_vol * ou_vol) / (2.0 * ou_speeds.array());
}

void CoxModel::validate() const {
    if (n_marks < 1 || n_covariates < 1) throw InvalidInput("CoxModel: need at least one mark and covariate");
    if (ou_speeds.size() != n_covariates) throw InvalidInput("CoxModel: ou_speeds length must equal n_covariates");
    if ((ou_speeds.array() <= 0.0).any()) throw InvalidInput("CoxModel: ou_speeds must be positive");
    if (!(ou_vol > 0.0)) throw InvalidInput("CoxModel: ou_vol must be positive");
    if (theta_true.rows() != n_marks || theta_true.cols() != n_covariates) {
        throw InvalidInput("CoxModel: theta_true must be n_marks x n_covariates");
    }
    if (!theta_true.allFinite()) throw InvalidInput("CoxModel: theta_true must be finite");
    n_cells();
}

CoxModel CoxModel::reference(double horizon) {
    CoxModel m;
    m.n_marks = 1;
    m.n_covariates = 20;
    m.ou_speeds.resize(20);
    const double speeds[] = {0.15, 0.2, 0.25, 0.3, 0.35};
    for (int i = 0; i < 20; ++i) m.ou_speeds[i] = speeds[i % 5];
    m.ou_vol = 0.4;
    m.horizon = horizon;
    m.grid_step = 0.01;
    m.theta_true = Eigen::MatrixXd::Zero(1, 20);
    const double active[] = {2, -1, 1, -0.5, -1.5, 1.5, 0.5, 0.75};
    for (int j = 0; j < 8; ++j) m.theta_true(0, j) = active[j];
    return m;
}

std::size_t CoxSample::n_events() const {
    std::size_t n = 0;
    for (const auto& e : event_times) n += e.size();
    return n;
}

Eigen::Index event_cell(double t, double grid_step, Eigen::Index n_cells) {
    const auto k = static_cast<Eigen::Index>(std::ceil(t / grid_step)) - 1;
    return std::clamp<Eigen::Index>(k, 0, n_cells - 1);
}

Eigen::MatrixXd simulate_covariates(const CoxModel& model, std::uint64_t seed) {
    model.validate();
    const Eigen::Index n = model.n_cells();
    const int J = model.n_covariates;
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd decay(J), sd(J);
    for (int j = 0; j < J; ++j) {
        const double a = model.ou_speeds[j];
        decay[j] = std::exp(-a * model.grid_step);
        sd[j] = model.ou_vol * std::sqrt(-std::expm1(-2.0 * a * model.grid_step) / (2.0 * a));
    }

    Eigen::MatrixXd path(n + 1, J);
    path.row(0).setZero();
    for (Eigen::Index k = 0; k < n; ++k) {
        for (int j = 0; j < J; ++j) path(k + 1, j) = decay[j] * path(k, j) + sd[j] * normal(rng);
    }
    return path;
}

std::vector<std::vector<double>> simulate_events(const CoxModel& model, const Eigen::MatrixXd& path,
                                                 std::uint64_t seed) {
    model.validate();
    const Eigen::Index n = model.n_cells();
    if (path.rows() != n + 1 || path.cols() != model.n_covariates) {
        throw InvalidInput("simulate_events: path does not match the model grid");
    }
    const double dt = model.grid_step;
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<std::vector<double>> events(model.n_marks);
    std::vector<double> cell_times;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        for (int a = 0; a < model.n_marks; ++a) {
            const double eta = path.row(k).dot(model.theta_true.row(a));
            const double mean = std::exp(eta) * dt;
            if (!(mean <= kMaxCellMean)) {
                std::ostringstream os;
                os << "simulate_events: cell intensity overflow (lambda*dt = " << mean << " at t = " << t0 << ")";
                throw NumericalError(os.str());
            }
            if (mean == 0.0) continue;
            const int count = std::poisson_distribution<int>(mean)(rng);
            if (count == 0) continue;
            while (true) {
                cell_times.clear();
                for (int i = 0; i < count; ++i) {
                    double t = t0 + dt * (1.0 - unif(rng));
                    while (event_cell(t, dt, n) != k || t <= t0) t = t0 + dt * (1.0 - unif(rng));
                    cell_times.push_back(t);
                }
                std::sort(cell_times.begin(), cell_times.end());
                if (std::adjacent_find(cell_times.begin(), cell_times.end()) == cell_times.end()) break;
            }
            events[a].insert(events[a].end(), cell_times.begin(), cell_times.end());
        }
    }
    return events;
}

CoxSample simulate(const CoxModel& model, std::uint64_t base_seed, std::uint64_t index) {
    CoxSample s;
    s.covariates = simulate_covariates(model, derive_seed(base_seed, index, StreamTag::covariates));
    s.event_times = simulate_events(model, s.covariates, derive_seed(base_seed, index, StreamTag::events));
    return s;
}

CoxQuasiLikelihood::CoxQuasiLikelihood(const CoxModel& model, const CoxSample& sample) {
    model.validate();
    const Eigen::Index n = model.n_cells();
    const int J = model.n_covariates;
    if (sample.covariates.rows() != n + 1 || sample.covariates.cols() != J) {
        throw InvalidInput("CoxQuasiLikelihood: covariate path does not match the model grid");
    }
    if (static_cast<int>(sample.event_times.size()) != model.n_marks) {
        throw InvalidInput("CoxQuasiLikelihood: event lists do not match n_marks");
    }
    cells_ = sample.covariates.topRows(n);
    step_ = model.grid_step;
    horizon_ = model.horizon;
    marks_ = model.n_marks;
    dim_ = model.dim();
    event_sums_ = Eigen::MatrixXd::Zero(J, marks_);
    for (int a = 0; a < marks_; ++a) {
        for (double t : sample.event_times[a]) {
            event_sums_.col(a) += cells_.row(event_cell(t, step_, n)).transpose();
        }
        n_events_ += sample.event_times[a].size();
    }
}

double CoxQuasiLikelihood::loglik(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim_) throw InvalidInput("quasi_loglik: dimension mismatch");
    const Eigen::Index J = cells_.cols();
    double out = 0.0;
    for (int a = 0; a < marks_; ++a) {
        const auto th = theta.segment(a * J, J);
        const Eigen::VectorXd eta = cells_ * th;
        out += th.dot(event_sums_.col(a)) - step_ * eta.array().exp().sum();
    }
    return out;
}

Eigen::VectorXd CoxQuasiLikelihood::loglik_gradient(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim_) throw InvalidInput("quasi_loglik_gradient: dimension mismatch");
    const Eigen::Index J = cells_.cols();
    Eigen::VectorXd g(dim_);
    for (int a = 0; a < marks_; ++a) {
        const Eigen::VectorXd w = (cells_ * theta.segment(a * J, J)).array().exp() * step_;
        g.segment(a * J, J) = event_sums_.col(a) - cells_.transpose() * w;
    }
    return g;
}

Eigen::MatrixXd CoxQuasiLikelihood::loglik_hessian(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim_) throw InvalidInput("quasi_loglik_hessian: dimension mismatch");
    const Eigen::Index J = cells_.cols();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    for (int a = 0; a < marks_; ++a) {
        const Eigen::ArrayXd w = (cells_ * theta.segment(a * J, J)).array().exp() * step_;
        const Eigen::MatrixXd weighted = cells_.array().colwise() * w;
        h.block(a * J, a * J, J, J) = -(cells_.transpose() * weighted);
    }
    return h;
}

double CoxQuasiLikelihood::value(const Eigen::VectorXd& theta) const {
    if (!guard_) return -loglik(theta);
    if (theta.size() != dim_) throw InvalidInput("quasi_loglik: dimension mismatch");
    const Eigen::Index J = cells_.cols();
    double out = 0.0;
    for (int a = 0; a < marks_; ++a) {
        const auto th = theta.segment(a * J, J);
        Eigen::ArrayXd eta = (cells_ * th).array();
        if ((eta > kGuardEta).any()) {
            ++guard_hits_;
            eta = eta.min(kGuardEta);
        }
        out += th.dot(event_sums_.col(a)) - step_ * eta.exp().sum();
    }
    return -out;
}

Eigen::VectorXd CoxQuasiLikelihood::gradient(const Eigen::VectorXd& theta) const { return -loglik_gradient(theta); }

Eigen::MatrixXd CoxQuasiLikelihood::hessian(const Eigen::VectorXd& theta) const { return -loglik_hessian(theta); }

double quasi_loglik(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta) {
    return CoxQuasiLikelihood(model, sample).loglik(theta);
}

Eigen::VectorXd quasi_loglik_gradient(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta) {
    return CoxQuasiLikelihood(model, sample).loglik_gradient(theta);
}

Eigen::MatrixXd quasi_loglik_hessian(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta) {
    return CoxQuasiLikelihood(model, sample).loglik_hessian(theta);
}

Eigen::VectorXd qmle(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& start, const Box& box,
                     const NewtonOptions& opts) {
    CoxQuasiLikelihood lik(model, sample);
    if (lik.n_events() == 0) {
        throw NumericalError("cox qmle: sample has no events; the quasi-likelihood has no finite maximizer");
    }
    const std::vector<bool> all(model.dim(), true);
    const NewtonResult res = minimize_newton(lik, start, all, box, opts);
    if (!res.converged) {
        std::ostringstream os;
        os << "cox qmle: Newton did not converge (iterations " << res.iterations << ", scaled gradient norm "
           << res.grad_norm << ", guard hits " << lik.guard_hits() << ")";
        throw NumericalError(os.str());
    }
    return res.theta;
}

Eigen::MatrixXd g_hat_hessian(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta_tilde) {
    const Eigen::MatrixXd neg_h = -quasi_loglik_hessian(model, sample, theta_tilde);
    const Eigen::Index p = model.dim();
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(p, p) / model.horizon;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    if (llt.info() == Eigen::Success) g += neg_h / model.horizon;
    return g;
}

Eigen::MatrixXd g_hat_moment(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta_tilde) {
    model.validate();
    const Eigen::Index n = model.n_cells();
    const int J = model.n_covariates;
    if (theta_tilde.size() != model.dim()) throw InvalidInput("g_hat_moment: dimension mismatch");
    if (sample.covariates.rows() != n + 1 || sample.covariates.cols() != J) {
        throw InvalidInput("g_hat_moment: covariate path does not match the model grid");
    }
    const Eigen::Index p = model.dim();
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(p, p) / model.horizon;
    for (int a = 0; a < model.n_marks; ++a) {
        Eigen::MatrixXd block = Eigen::MatrixXd::Zero(J, J);
        const auto th = theta_tilde.segment(a * J, J);
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto x = sample.covariates.row(k).transpose();
            block.selfadjointView<Eigen::Lower>().rankUpdate(x, std::exp(x.dot(th)) * model.grid_step);
        }
        block.triangularView<Eigen::StrictlyUpper>() = block.transpose();
        g.block(a * J, a * J, J, J) += block / model.horizon;
    }
    return g;
}

Eigen::MatrixXd gamma_analytic(const Eigen::VectorXd& theta, const Eigen::VectorXd& stationary_vars) {
    if (theta.size() != stationary_vars.size()) throw InvalidInput("gamma_analytic: dimension mismatch");
    const Eigen::VectorXd s_theta = stationary_vars.cwiseProduct(theta);
    const double quad = theta.dot(s_theta);
    Eigen::MatrixXd out = s_theta * s_theta.transpose();
    out.diagonal() += stationary_vars;
    return out * std::exp(0.5 * quad);
}

double y_diagnostic(const CoxModel& model, const CoxSample& sample, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& theta_star) {
    CoxQuasiLikelihood lik(model, sample);
    return (lik.loglik(theta) - lik.loglik(theta_star)) / model.horizon;
}

void write_sample(const std::filesystem::path& dir, const CoxModel& model, const CoxSample& sample) {
    model.validate();
    std::filesystem::create_directories(dir);
    csv::Table cov;
    cov.header.push_back("t");
    for (int j = 0; j < model.n_covariates; ++j) cov.header.push_back("x" + std::to_string(j + 1));
    for (Eigen::Index k = 0; k < sample.covariates.rows(); ++k) {
        std::vector<std::string> row{csv::format_double(static_cast<double>(k) * model.grid_step)};
        for (Eigen::Index j = 0; j < sample.covariates.cols(); ++j) {
            row.push_back(csv::format_double(sample.covariates(k, j)));
        }
        cov.rows.push_back(std::move(row));
    }
    csv::write(dir / "covariates.csv", cov);

    csv::Table ev;
    ev.header = {"mark", "time"};
    for (std::size_t a = 0; a < sample.event_times.size(); ++a) {
        for (double t : sample.event_times[a]) ev.rows.push_back({std::to_string(a + 1), csv::format_double(t)});
    }
    csv::write(dir / "events.csv", ev);
}

CoxSample read_sample(const std::filesystem::path& dir, const CoxModel& model) {
    model.validate();
    const Eigen::Index n = model.n_cells();
    const int J = model.n_covariates;

    const csv::Table cov = csv::read(dir / "covariates.csv");
    if (static_cast<int>(cov.header.size()) != J + 1) throw DataError("covariates.csv: expected t plus one column per covariate");
    if (static_cast<Eigen::Index>(cov.rows.size()) != n + 1) {
        throw DataError("covariates.csv: expected " + std::to_string(n + 1) + " grid rows");
    }
    CoxSample s;
    s.covariates.resize(n + 1, J);
    for (Eigen::Index k = 0; k <= n; ++k) {
        const double t = csv::parse_double(cov.rows[k][0]);
        if (std::abs(t - static_cast<double>(k) * model.grid_step) > 1e-9 * std::max(1.0, model.horizon)) {
            throw DataError("covariates.csv: row " + std::to_string(k + 1) + " is off the model grid");
        }
        for (int j = 0; j < J; ++j) s.covariates(k, j) = csv::parse_double(cov.rows[k][j + 1]);
    }

    const csv::Table ev = csv::read(dir / "events.csv");
    const auto mark_col = ev.column("mark");
    const auto time_col = ev.column("time");
    s.event_times.assign(model.n_marks, {});
    for (const auto& row : ev.rows) {
        const double m = csv::parse_double(row[mark_col]);
        if (m != std::floor(m) || m < 1 || m > model.n_marks) throw DataError("events.csv: invalid mark " + row[mark_col]);
        const double t = csv::parse_double(row[time_col]);
        if (!(t > 0.0 && t <= model.horizon)) throw DataError("events.csv: time outside (0, T]");
        auto& list = s.event_times[static_cast<std::size_t>(m) - 1];
        if (!list.empty() && !(t > list.back())) throw DataError("events.csv: times must increase within a mark");
        list.push_back(t);
    }
    return s;
}

}  // namespace plsa::cox
