#include "cli_app.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plsa/config.hpp"
#include "plsa/cox.hpp"
#include "plsa/csv.hpp"
#include "plsa/diffusion.hpp"
#include "plsa/error.hpp"
#include "plsa/lsa_solver.hpp"
#include "plsa/montecarlo.hpp"
#include "plsa/po.hpp"

namespace plsa::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string model;
    std::string config;
    std::string data;
    std::string out;
    std::string method = "plsa";
    std::string gmat = "identity";
    std::string table;
    double gamma = 1.0, r = 1.2, q = 0.3;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::optional<int> threads;
};

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int report(std::ostream& err, const char* kind, int code, const std::string& msg) {
    err << "error: kind=" << kind << " code=" << code << " msg=" << one_line(msg) << '\n';
    return code;
}

mc::McConfig load_config(const std::string& path, const std::string& model) {
    KeyValueConfig kv = path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
    if (!model.empty()) {
        if (kv.has("model") && kv.get_string("model") != model) {
            throw InvalidInput("config model '" + kv.get_string("model") + "' does not match '" + model + "'");
        }
        kv.set("model", model);
    }
    return mc::McConfig::from_config(kv);
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw InvalidInput("--out is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

int cmd_simulate(const Options& o, std::ostream& out) {
    mc::McConfig cfg = load_config(o.config, o.model);
    const std::uint64_t seed = o.seed.value_or(cfg.base_seed);
    ensure_dir(o.out);
    if (cfg.kind == mc::ModelKind::cox) {
        cfg.cox.validate();
        const cox::CoxSample s = cox::simulate(cfg.cox, seed, 0);
        cox::write_sample(o.out, cfg.cox, s);
        out << "wrote " << s.n_events() << " events over T=" << cfg.cox.horizon << " to " << o.out << '\n';
    } else {
        cfg.diffusion.validate();
        const diffusion::DiffusionSample s = diffusion::simulate(cfg.diffusion, seed, 0);
        diffusion::write_sample(o.out, cfg.diffusion, s);
        out << "wrote " << cfg.diffusion.n_steps << " increments to " << o.out << '\n';
    }
    return kOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
    if (o.config.empty()) throw InvalidInput("--config is required");
    if (o.data.empty()) throw InvalidInput("--data is required");
    if (o.method != "plsa" && o.method != "po" && o.method != "qmle") {
        throw InvalidInput("--method must be plsa, po or qmle");
    }
    const mc::GChoice gchoice = mc::parse_g_choice(o.gmat);
    const mc::McConfig cfg = load_config(o.config, "");
    const Eigen::Index p = cfg.dim();
    const Box box = Box::uniform(p, -cfg.box_half_width, cfg.box_half_width);

    std::unique_ptr<Loss> loss;
    Eigen::VectorXd initial;
    Eigen::MatrixXd g_hat = Eigen::MatrixXd::Identity(p, p);
    double rate = 0.0;
    if (cfg.kind == mc::ModelKind::cox) {
        cfg.cox.validate();
        const cox::CoxSample s = cox::read_sample(o.data, cfg.cox);
        initial = cox::qmle(cfg.cox, s, Eigen::VectorXd::Zero(p), box);
        if (gchoice == mc::GChoice::hessian) g_hat = cox::g_hat_hessian(cfg.cox, s, initial);
        if (gchoice == mc::GChoice::moment) g_hat = cox::g_hat_moment(cfg.cox, s, initial);
        loss = std::make_unique<cox::CoxQuasiLikelihood>(cfg.cox, s);
        rate = cfg.rate_for(cfg.cox.horizon);
    } else {
        if (gchoice == mc::GChoice::moment) throw InvalidInput("--gmat moment is only defined for the cox model");
        cfg.diffusion.validate();
        const diffusion::DiffusionSample s = diffusion::read_sample(o.data, cfg.diffusion);
        initial = diffusion::qmle_h(cfg.diffusion, s, box);
        if (gchoice == mc::GChoice::hessian) g_hat = diffusion::g_hat_n(cfg.diffusion, s, initial);
        loss = std::make_unique<diffusion::DiffusionQuasiLikelihood>(cfg.diffusion, s);
        rate = cfg.rate_for(static_cast<double>(cfg.diffusion.n_steps));
    }

    Eigen::VectorXd est = initial;
    if (o.method != "qmle") {
        const TuningConfig tc{o.gamma, o.r, o.q, rate, cfg.weight_floor};
        tc.validate();
        if (o.method == "plsa") {
            LsaProblem prob{initial, g_hat, compute_weights(initial, tc), o.q, box};
            est = gchoice == mc::GChoice::identity ? solve_separable(prob).theta_hat : solve_cd(prob).theta_hat;
        } else {
            const PoResult po = po_estimate(initial, tc, *loss, box);
            if (!po.refit_converged) throw NumericalError("P-O refit did not converge");
            est = po.theta_check;
        }
    }

    csv::Table t;
    t.header = {"coord", "estimate", "active"};
    for (Eigen::Index j = 0; j < p; ++j) {
        t.rows.push_back({std::to_string(j + 1), csv::format_double(est[j]), est[j] != 0.0 ? "1" : "0"});
    }
    if (o.out.empty()) throw InvalidInput("--out is required");
    const fs::path parent = fs::path(o.out).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    csv::write(o.out, t);
    out << "wrote " << o.method << " estimate (" << (est.array() != 0.0).count() << " of " << p
        << " active) to " << o.out << '\n';
    return kOk;
}

int run_and_write(mc::McConfig cfg, const Options& o, std::ostream& out, std::ostream& err) {
    if (o.reps) cfg.reps = *o.reps;
    if (o.seed) cfg.base_seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    cfg.validate();
    for (const auto& w : cfg.warnings()) err << "warning: " << w << '\n';
    const mc::McRun run = mc::run_mc(cfg);
    if (!o.out.empty()) {
        ensure_dir(o.out);
        mc::write_outputs(o.out, cfg, run);
    }
    out << mc::render_markdown(run.summary);
    return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Penalized LSA estimation for point-process and diffusion models", "plsa"};
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "Simulate one dataset and write it as CSV");
    sim->add_option("model", o.model, "cox or diffusion")->required()->check(CLI::IsMember({"cox", "diffusion"}));
    sim->add_option("--config", o.config, "key=value config file (default: reference design)");
    sim->add_option("--seed", o.seed, "base seed");
    sim->add_option("--out", o.out, "output directory")->required();

    auto* fit = app.add_subcommand("fit", "Estimate from a simulated dataset");
    fit->add_option("--config", o.config, "config file describing the model")->required();
    fit->add_option("--data", o.data, "directory written by simulate")->required();
    fit->add_option("--method", o.method, "plsa, po or qmle")->check(CLI::IsMember({"plsa", "po", "qmle"}));
    fit->add_option("--gamma", o.gamma, "weight exponent");
    fit->add_option("--r", o.r, "rate exponent of alpha");
    fit->add_option("--q", o.q, "penalty exponent in (0,1]");
    fit->add_option("--gmat", o.gmat, "identity, hessian or moment")
        ->check(CLI::IsMember({"identity", "hessian", "moment"}));
    fit->add_option("--out", o.out, "output CSV file")->required();

    auto* mcc = app.add_subcommand("mc", "Run a Monte Carlo experiment from a config file");
    mcc->add_option("--config", o.config, "config file")->required();
    mcc->add_option("--reps", o.reps, "replications per size");
    mcc->add_option("--seed", o.seed, "base seed");
    mcc->add_option("--threads", o.threads, "worker threads");
    mcc->add_option("--out", o.out, "output directory");

    auto* rep = app.add_subcommand("reproduce", "Run one of the reference experiments");
    rep->add_option("table", o.table, "table1, table2, table3 or table4")
        ->required()
        ->check(CLI::IsMember({"table1", "table2", "table3", "table4"}));
    rep->add_option("--reps", o.reps, "replications per size (default 200)");
    rep->add_option("--seed", o.seed, "base seed (default 1)");
    rep->add_option("--threads", o.threads, "worker threads");
    rep->add_option("--out", o.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        return report(err, "usage", kUsage, e.what());
    }

    try {
        if (*sim) return cmd_simulate(o, out);
        if (*fit) return cmd_fit(o, out);
        if (*mcc) return run_and_write(load_config(o.config, ""), o, out, err);
        if (*rep) return run_and_write(mc::McConfig::preset(o.table), o, out, err);
        return report(err, "usage", kUsage, "no subcommand");
    } catch (const InvalidInput& e) {
        return report(err, "usage", kUsage, e.what());
    } catch (const DataError& e) {
        return report(err, "data", kData, e.what());
    } catch (const NumericalError& e) {
        return report(err, "numerical", kNumerical, e.what());
    } catch (const std::exception& e) {
        return report(err, "numerical", kNumerical, e.what());
    }
}

}  // namespace plsa::cli
