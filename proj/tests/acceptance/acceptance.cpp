// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "oracles.hpp"
#include "plsa/cox.hpp"
#include "plsa/diffusion.hpp"
#include "plsa/lsa_solver.hpp"
#include "plsa/montecarlo.hpp"
#include "plsa/penalty.hpp"
#include "plsa/seed.hpp"

using namespace plsa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const fs::path kTmp = PLSA_TEST_TMP;

// Monte Carlo runs shared between criteria.
struct Runs {
    mc::McRun table1, table2, table3, table4;
    bool have1 = false, have2 = false, have3 = false, have4 = false;
};
Runs runs;

mc::McRun run_preset(const std::string& table, std::uint64_t seed) {
    mc::McConfig cfg = mc::McConfig::preset(table);
    cfg.reps = 200;
    cfg.base_seed = seed;
    cfg.threads = 1;
    return mc::run_mc(cfg);
}

Outcome criterion1() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> ug(0.1, 10.0), uz(-5.0, 5.0), uk(0.0, 10.0);
    const double qs[] = {0.3, 0.5, 0.7, 1.0};
    double worst = -1e300;
    for (int i = 0; i < 1000; ++i) {
        const double g = ug(rng), z = uz(rng), k = uk(rng), q = qs[i % 4];
        const double t = prox_lq(g, z, k, q);
        auto f = [&](double x) { return oracle::scalar_objective(g, z, k, q, x); };
        const double lo = std::min(0.0, z) - 1.0, hi = std::max(0.0, z) + 1.0;
        const auto [arg, fmin] = oracle::grid_min_1d(f, lo, hi, 1000000);
        worst = std::max(worst, f(t) - fmin);
    }
    return {worst <= 1e-8, "max f(prox) - grid min = " + fmt("%.3g", worst)};
}

Outcome criterion2() {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> ut(-3.0, 3.0), uk(0.0, 3.0), un(-1.0, 1.0);
    const double qs[] = {0.3, 0.5, 0.7, 1.0};
    double worst_grid = -1e300, worst_sep = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Eigen::Index p = 1 + i % 2;
        const double q = qs[(i / 2) % 4];
        Eigen::VectorXd tt(p), kappa(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            tt[j] = ut(rng);
            kappa[j] = uk(rng);
        }
        Eigen::MatrixXd a(p, p);
        for (Eigen::Index r = 0; r < p; ++r)
            for (Eigen::Index c = 0; c < p; ++c) a(r, c) = un(rng);
        Eigen::MatrixXd g = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(p, p);
        g = 0.5 * (g + g.transpose());
        const Box box = Box::uniform(p, -10.0, 10.0);
        const LsaProblem prob{tt, g, WeightVector{kappa}, q, box};
        const LsaSolution sol = solve_cd(prob);

        auto dense = [&](const Eigen::VectorXd& th) {
            double v = (th - tt).dot(g * (th - tt));
            for (Eigen::Index j = 0; j < p; ++j) v += kappa[j] * std::pow(std::abs(th[j]), q);
            return v;
        };
        double fmin;
        if (p == 1) {
            auto f = [&](double x) { return dense(Eigen::VectorXd::Constant(1, x)); };
            fmin = oracle::grid_min_1d(f, -8.0, 8.0, 1000001).second;
        } else {
            auto f = [&](double x, double y) { return dense(Eigen::Vector2d(x, y)); };
            fmin = oracle::grid_min_2d(f, -8.0, 8.0, 0.01).second;
        }
        worst_grid = std::max(worst_grid, dense(sol.theta_hat) - fmin);

        const LsaProblem id{tt, Eigen::MatrixXd::Identity(p, p), WeightVector{kappa}, q, box};
        worst_sep = std::max(worst_sep,
                             (solve_cd(id).theta_hat - solve_separable(id).theta_hat).lpNorm<Eigen::Infinity>());
    }
    return {worst_grid <= 1e-6 && worst_sep <= 1e-10,
            "max Q - grid min = " + fmt("%.3g", worst_grid) + ", max |cd - separable| = " + fmt("%.3g", worst_sep)};
}

Outcome criterion3() {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> n(0.0, 0.3);
    double worst = 0.0;

    const cox::CoxModel cm = cox::CoxModel::reference(50.0);
    const cox::CoxSample cs = cox::simulate(cm, 3, 0);
    const cox::CoxQuasiLikelihood cl(cm, cs);
    const diffusion::DiffusionModel dm = diffusion::DiffusionModel::reference(2000);
    const diffusion::DiffusionSample ds = diffusion::simulate(dm, 3, 0);
    const diffusion::DiffusionQuasiLikelihood dl(dm, ds);

    auto check = [&](const Loss& loss, const Eigen::VectorXd& center, auto value, auto grad, auto hess) {
        for (int i = 0; i < 20; ++i) {
            Eigen::VectorXd th = center;
            for (Eigen::Index j = 0; j < th.size(); ++j) th[j] += n(rng);
            worst = std::max(worst, oracle::rel_err(grad(th), oracle::fd_gradient(value, th, 1e-5)));
            worst = std::max(worst, oracle::rel_err(hess(th), oracle::fd_jacobian(grad, th, 1e-5)));
        }
        (void)loss;
    };
    check(
        cl, cm.theta_true_vector(), [&](const Eigen::VectorXd& t) { return cl.loglik(t); },
        [&](const Eigen::VectorXd& t) { return cl.loglik_gradient(t); },
        [&](const Eigen::VectorXd& t) { return cl.loglik_hessian(t); });
    check(
        dl, dm.theta_true, [&](const Eigen::VectorXd& t) { return dl.loglik(t); },
        [&](const Eigen::VectorXd& t) { return dl.loglik_gradient(t); },
        [&](const Eigen::VectorXd& t) { return dl.loglik_hessian(t); });
    return {worst <= 1e-6, "max relative error = " + fmt("%.3g", worst)};
}

Outcome criterion4() {
    const cox::CoxModel m = cox::CoxModel::reference(2000.0);
    const Eigen::Index p = m.dim();
    const Box box = Box::uniform(p, -10.0, 10.0);
    Eigen::MatrixXd acc_moment = Eigen::MatrixXd::Zero(p, p), acc_hess = Eigen::MatrixXd::Zero(p, p);
    for (int r = 0; r < 20; ++r) {
        const cox::CoxSample s = cox::simulate(m, 404, static_cast<std::uint64_t>(r));
        const Eigen::VectorXd tt = cox::qmle(m, s, Eigen::VectorXd::Zero(p), box);
        acc_moment += cox::g_hat_moment(m, s, tt);
        acc_hess += cox::g_hat_hessian(m, s, tt);
    }
    acc_moment /= 20.0;
    acc_hess /= 20.0;
    const Eigen::MatrixXd gamma = cox::gamma_analytic(m.theta_true_vector(), m.stationary_variances());
    const double em = (acc_moment - gamma).norm() / gamma.norm();
    const double eh = (acc_hess - gamma).norm() / gamma.norm();
    return {std::min(em, eh) <= 0.05,
            "relative Frobenius error: moment " + fmt("%.4f", em) + ", hessian " + fmt("%.4f", eh)};
}

const mc::TuningSummary& tuning(const mc::SizeSummary& s, const std::string& name) {
    for (const auto& t : s.tunings)
        if (t.tuning.name == name) return t;
    throw std::runtime_error("missing tuning " + name);
}

Outcome criterion5() {
    runs.table1 = run_preset("table1", 7);
    runs.have1 = true;
    const double target[] = {32.1, 70.4, 96.8, 99.9};
    bool ok = true;
    std::string d = "p-LSA/unified-LASSO/bridge %:";
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& s = runs.table1.summary.sizes[i];
        const double a = tuning(s, "p-LSA").selection_pct, b = tuning(s, "unified-LASSO").selection_pct,
                     c = tuning(s, "bridge").selection_pct;
        ok = ok && std::abs(a - target[i]) <= 7.0 && a > b && a > c;
        d += " T=" + fmt("%g", s.size) + " " + fmt("%.1f", a) + "/" + fmt("%.1f", b) + "/" + fmt("%.1f", c) +
             " (target " + fmt("%.1f", target[i]) + ");";
    }
    return {ok, d};
}

Outcome criterion6() {
    runs.table2 = run_preset("table2", 7);
    runs.have2 = true;
    const auto& s = runs.table2.summary.sizes[0];
    const auto& pl = tuning(s, "p-LSA");
    const double m = s.initial[0].mean, sd = s.initial[0].sd;
    const bool ok = std::abs(m - 1.9938) <= 0.02 && std::abs(sd - 0.0722) <= 0.015 && pl.po[0].sd <= pl.plsa[0].sd;
    return {ok, "initial theta1 mean " + fmt("%.4f", m) + " sd " + fmt("%.4f", sd) + "; P-O sd " +
                    fmt("%.4f", pl.po[0].sd) + " vs p-LSA sd " + fmt("%.4f", pl.plsa[0].sd)};
}

Outcome criterion7() {
    runs.table3 = run_preset("table3", 7);
    runs.have3 = true;
    const double target[] = {64.8, 86.3, 97.8, 99.9};
    bool ok = true;
    std::string d = "p-LSA/bridge %:";
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& s = runs.table3.summary.sizes[i];
        const double a = tuning(s, "p-LSA").selection_pct, c = tuning(s, "bridge").selection_pct;
        ok = ok && std::abs(a - target[i]) <= 7.0 && c < 6.0;
        d += " n=" + fmt("%g", s.size) + " " + fmt("%.1f", a) + "/" + fmt("%.1f", c) + " (target " +
             fmt("%.1f", target[i]) + ");";
    }
    return {ok, d};
}

Outcome criterion8() {
    runs.table4 = run_preset("table4", 7);
    runs.have4 = true;
    const auto& s = runs.table4.summary.sizes[0];
    const auto& pl = tuning(s, "p-LSA");
    const double m = pl.po[4].mean, sd = pl.po[4].sd;
    double zmin = 100.0;
    for (int j = 5; j < 10; ++j) zmin = std::min(zmin, pl.zero_pct[j]);
    const bool ok = std::abs(m - 0.4936) <= 0.02 && std::abs(sd - 0.0916) <= 0.02 && zmin >= 99.0;
    return {ok, "P-O theta5 mean " + fmt("%.4f", m) + " sd " + fmt("%.4f", sd) + "; min zero % on true zeros " +
                    fmt("%.1f", zmin)};
}

Outcome criterion9() {
    long checked = 0, violations = 0;
    for (const mc::McRun* r : {&runs.table1, &runs.table2, &runs.table3, &runs.table4}) {
        for (const auto& rec : r->records) {
            if (!rec.ok) continue;
            for (const auto& t : rec.tunings) {
                ++checked;
                if (!t.bound_ok) ++violations;
            }
        }
    }
    if (!(runs.have1 && runs.have2 && runs.have3 && runs.have4)) return {false, "Monte Carlo runs missing"};
    return {checked > 0 && violations == 0,
            std::to_string(violations) + " violations in " + std::to_string(checked) + " estimates"};
}

Outcome criterion10() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp);
    std::string texts[2];
    const char* threads[] = {"1", "4"};
    for (int i = 0; i < 2; ++i) {
        const std::string out = (kTmp / ("t" + std::string(threads[i]))).string();
        const char* argv[] = {"plsa", "reproduce", "table1", "--reps", "200", "--seed", "7", "--threads", threads[i],
                              "--out", out.c_str()};
        std::ostringstream sink_out, sink_err;
        const int code = cli::run_cli(11, argv, sink_out, sink_err);
        if (code != 0) return {false, "reproduce exited " + std::to_string(code) + ": " + sink_err.str()};
        texts[i] = slurp(fs::path(out) / "summary.csv");
    }
    return {!texts[0].empty() && texts[0] == texts[1],
            "summary.csv " + std::string(texts[0] == texts[1] ? "identical" : "differs") + " for --threads 1 and 4 (" +
                std::to_string(texts[0].size()) + " bytes)"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"prox oracle", criterion1},
        {"solver oracle", criterion2},
        {"gradient checks", criterion3},
        {"Gamma oracle (cox, T=2000)", criterion4},
        {"Table 1 selection", criterion5},
        {"Table 2 estimates", criterion6},
        {"Table 3 selection", criterion7},
        {"Table 4 estimates", criterion8},
        {"consistency bound", criterion9},
        {"thread-count determinism", criterion10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " " << criteria[i].first << ": "
                  << o.detail << " [" << fmt("%.1f", secs) << " s]" << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
