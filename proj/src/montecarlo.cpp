#include "plsa/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "plsa/error.hpp"
#include "plsa/lsa_solver.hpp"
#include "plsa/po.hpp"
#include "plsa/seed.hpp"

namespace plsa::mc {

namespace {

constexpr double kMaxFailureFraction = 0.05;

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string size_label(ModelKind kind) { return kind == ModelKind::cox ? "T" : "n"; }

std::string tuning_triplet(const NamedTuning& t) {
    std::ostringstream os;
    os << "(" << t.gamma << ", " << t.r << ", " << t.q << ")";
    return os.str();
}

Eigen::VectorXd vector_from(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<CoordStats> column_stats(const std::vector<const Eigen::VectorXd*>& rows, Eigen::Index p) {
    std::vector<CoordStats> out(p);
    const auto n = static_cast<double>(rows.size());
    if (rows.empty()) return out;
    for (Eigen::Index j = 0; j < p; ++j) {
        double sum = 0.0;
        for (const auto* r : rows) sum += (*r)[j];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto* r : rows) ss += ((*r)[j] - mean) * ((*r)[j] - mean);
        out[j].mean = mean;
        out[j].sd = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    return out;
}

}  // namespace

std::string to_string(ModelKind k) { return k == ModelKind::cox ? "cox" : "diffusion"; }

std::string to_string(GChoice g) {
    switch (g) {
        case GChoice::identity: return "identity";
        case GChoice::hessian: return "hessian";
        case GChoice::moment: return "moment";
    }
    return "identity";
}

GChoice parse_g_choice(const std::string& s) {
    if (s == "identity") return GChoice::identity;
    if (s == "hessian") return GChoice::hessian;
    if (s == "moment") return GChoice::moment;
    throw InvalidInput("unknown G choice '" + s + "' (expected identity|hessian|moment)");
}

void McConfig::validate() const {
    if (reps < 1) throw InvalidInput("mc: reps must be at least 1");
    if (threads < 1) throw InvalidInput("mc: threads must be at least 1");
    if (tunings.empty()) throw InvalidInput("mc: at least one tuning is required");
    for (std::size_t i = 0; i < tunings.size(); ++i) {
        for (std::size_t k = i + 1; k < tunings.size(); ++k) {
            if (tunings[i].name == tunings[k].name) throw InvalidInput("mc: duplicate tuning name " + tunings[i].name);
        }
    }
    if (!(box_half_width > 0.0)) throw InvalidInput("mc: box half width must be positive");
    if (kind == ModelKind::diffusion && g_choice == GChoice::moment) {
        throw InvalidInput("mc: the moment G construction is only defined for the cox model");
    }
    for (double s : sizes) {
        if (kind == ModelKind::cox) {
            auto m = cox;
            m.horizon = s;
            m.validate();
            if (!(s > 1.0)) throw InvalidInput("mc: cox horizons must exceed 1 so that the rate lies in (0,1)");
        } else {
            if (s != std::floor(s) || s < 2) throw InvalidInput("mc: diffusion sizes must be integers >= 2");
            auto m = diffusion;
            m.n_steps = static_cast<long>(s);
            m.validate();
        }
        for (const auto& t : tunings) {
            TuningConfig{t.gamma, t.r, t.q, rate_for(s), weight_floor}.validate();
        }
    }
}

std::vector<std::string> McConfig::warnings() const {
    std::vector<std::string> out;
    for (const auto& t : tunings) {
        TuningConfig tc{t.gamma, t.r, t.q, 0.5, weight_floor};
        if (!tc.in_selection_window()) {
            std::ostringstream os;
            os << "tuning " << t.name << ": r = " << t.r << " is outside (1, 2 - q + gamma) = (1, "
               << 2.0 - t.q + t.gamma << ")";
            out.push_back(os.str());
        }
    }
    return out;
}

double McConfig::rate_for(double size) const { return 1.0 / std::sqrt(size); }

Eigen::VectorXd McConfig::theta_true() const {
    return kind == ModelKind::cox ? cox.theta_true_vector() : diffusion.theta_true;
}

Eigen::Index McConfig::dim() const { return kind == ModelKind::cox ? cox.dim() : diffusion.p; }

McConfig McConfig::from_config(const KeyValueConfig& kv) {
    McConfig cfg;
    const std::string model = kv.get_string("model");
    if (model == "cox") {
        cfg.kind = ModelKind::cox;
    } else if (model == "diffusion") {
        cfg.kind = ModelKind::diffusion;
    } else {
        throw InvalidInput("config: model must be cox or diffusion");
    }

    auto& c = cfg.cox;
    c.n_marks = static_cast<int>(kv.get_int("cox.marks", c.n_marks));
    if (kv.has("cox.speeds")) {
        c.ou_speeds = vector_from(kv.get_doubles("cox.speeds"));
        c.n_covariates = static_cast<int>(c.ou_speeds.size());
    }
    c.ou_vol = kv.get_double("cox.vol", c.ou_vol);
    c.grid_step = kv.get_double("cox.grid_step", c.grid_step);
    c.horizon = kv.get_double("cox.horizon", c.horizon);
    if (kv.has("cox.theta_true")) {
        const auto v = kv.get_doubles("cox.theta_true");
        if (static_cast<long>(v.size()) != static_cast<long>(c.n_marks) * c.n_covariates) {
            throw InvalidInput("config: cox.theta_true must have marks * covariates entries");
        }
        c.theta_true.resize(c.n_marks, c.n_covariates);
        for (int a = 0; a < c.n_marks; ++a)
            for (int j = 0; j < c.n_covariates; ++j) c.theta_true(a, j) = v[a * c.n_covariates + j];
    } else if (c.theta_true.rows() != c.n_marks || c.theta_true.cols() != c.n_covariates) {
        throw InvalidInput("config: cox.theta_true is required when the covariate layout changes");
    }

    auto& d = cfg.diffusion;
    d.p = static_cast<int>(kv.get_int("diffusion.p", d.p));
    d.n_steps = static_cast<long>(kv.get_int("diffusion.n", d.n_steps));
    d.horizon = kv.get_double("diffusion.horizon", d.horizon);
    d.ou_speed = kv.get_double("diffusion.speed", d.ou_speed);
    d.ou_vol = kv.get_double("diffusion.vol", d.ou_vol);
    d.sigma_cap = kv.get_double("diffusion.cap", d.sigma_cap);
    if (kv.has("diffusion.theta_true")) {
        d.theta_true = vector_from(kv.get_doubles("diffusion.theta_true"));
    }
    if (d.theta_true.size() != d.p) throw InvalidInput("config: diffusion.theta_true must have p entries");

    cfg.reps = static_cast<int>(kv.get_int("mc.reps", cfg.reps));
    cfg.base_seed = static_cast<std::uint64_t>(kv.get_int("mc.seed", 1));
    if (kv.has("mc.sizes")) cfg.sizes = kv.get_doubles("mc.sizes");
    if (kv.has("mc.g")) cfg.g_choice = parse_g_choice(kv.get_string("mc.g"));
    cfg.threads = static_cast<int>(kv.get_int("mc.threads", cfg.threads));
    cfg.box_half_width = kv.get_double("mc.box", cfg.box_half_width);
    cfg.weight_floor = kv.get_double("mc.weight_floor", cfg.weight_floor);

    if (kv.has("tuning.names")) {
        for (const auto& name : csv::split(kv.get_string("tuning.names"), ',')) {
            std::string n = name;
            n.erase(0, n.find_first_not_of(' '));
            n.erase(n.find_last_not_of(' ') + 1);
            const auto v = kv.get_doubles("tuning." + n);
            if (v.size() != 3) throw InvalidInput("config: tuning." + n + " must be gamma,r,q");
            cfg.tunings.push_back({n, v[0], v[1], v[2]});
        }
    } else {
        cfg.tunings = preset(cfg.kind == ModelKind::cox ? "table1" : "table3").tunings;
    }
    if (cfg.sizes.empty()) {
        cfg.sizes = {cfg.kind == ModelKind::cox ? c.horizon : static_cast<double>(d.n_steps)};
    }
    return cfg;
}

McConfig McConfig::preset(const std::string& table) {
    McConfig cfg;
    if (table == "table1" || table == "table2") {
        cfg.kind = ModelKind::cox;
        cfg.sizes = table == "table1" ? std::vector<double>{50, 100, 200, 400} : std::vector<double>{200};
        cfg.tunings = {{"p-LSA", 1.0, 1.2, 0.3}, {"unified-LASSO", 1.0, 1.2, 1.0}, {"bridge", 0.0, 1.0, 0.3}};
    } else if (table == "table3" || table == "table4") {
        cfg.kind = ModelKind::diffusion;
        cfg.sizes = table == "table3" ? std::vector<double>{2500, 5000, 10000, 20000} : std::vector<double>{10000};
        cfg.tunings = {{"p-LSA", 3.2, 1.2, 0.3}, {"unified-LASSO", 3.2, 1.2, 1.0}, {"bridge", 0.0, 1.0, 0.3}};
    } else {
        throw InvalidInput("unknown table '" + table + "' (expected table1..table4)");
    }
    return cfg;
}

EstimateRecord run_replication(const McConfig& cfg, std::size_t size_index, int rep) {
    EstimateRecord rec;
    rec.size_index = size_index;
    rec.rep = rep;
    const double size = cfg.sizes.at(size_index);
    const std::uint64_t index = replication_index(size_index, static_cast<std::uint64_t>(rep));
    const Eigen::Index p = cfg.dim();
    const Box box = Box::uniform(p, -cfg.box_half_width, cfg.box_half_width);
    const Eigen::VectorXd theta_star = cfg.theta_true();
    const double rate = cfg.rate_for(size);

    try {
        std::unique_ptr<Loss> loss;
        Eigen::MatrixXd g_hat = Eigen::MatrixXd::Identity(p, p);
        if (cfg.kind == ModelKind::cox) {
            auto model = cfg.cox;
            model.horizon = size;
            const cox::CoxSample sample = cox::simulate(model, cfg.base_seed, index);
            rec.initial = cox::qmle(model, sample, Eigen::VectorXd::Zero(p), box);
            if (cfg.g_choice == GChoice::hessian) g_hat = cox::g_hat_hessian(model, sample, rec.initial);
            if (cfg.g_choice == GChoice::moment) g_hat = cox::g_hat_moment(model, sample, rec.initial);
            loss = std::make_unique<cox::CoxQuasiLikelihood>(model, sample);
        } else {
            auto model = cfg.diffusion;
            model.n_steps = static_cast<long>(size);
            const diffusion::DiffusionSample sample = diffusion::simulate(model, cfg.base_seed, index);
            rec.initial = diffusion::qmle_h(model, sample, box);
            if (cfg.g_choice == GChoice::hessian) g_hat = diffusion::g_hat_n(model, sample, rec.initial);
            loss = std::make_unique<diffusion::DiffusionQuasiLikelihood>(model, sample);
        }

        for (const auto& t : cfg.tunings) {
            const TuningConfig tc{t.gamma, t.r, t.q, rate, cfg.weight_floor};
            LsaProblem prob{rec.initial, g_hat, compute_weights(rec.initial, tc), t.q, box};
            const LsaSolution sol = cfg.g_choice == GChoice::identity ? solve_separable(prob) : solve_cd(prob);

            TuningRecord tr;
            tr.plsa = sol.theta_hat;
            tr.active = sol.active;
            tr.cd_converged = sol.converged;
            tr.bound_lhs = scaled_error(sol.theta_hat, theta_star, rate);
            tr.bound_rhs = consistency_bound(prob, theta_star, rate);
            tr.bound_ok = tr.bound_lhs <= tr.bound_rhs * (1.0 + 1e-9) + 1e-12;

            const PoResult po = po_estimate(rec.initial, tc, *loss, box);
            tr.po = po.theta_check;
            tr.po_converged = po.refit_converged;
            rec.tunings.push_back(std::move(tr));
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.tunings.clear();
    }
    return rec;
}

McSummary summarize(const McConfig& cfg, const std::vector<EstimateRecord>& records) {
    McSummary s;
    s.kind = cfg.kind;
    s.theta_true = cfg.theta_true();
    const Eigen::Index p = s.theta_true.size();

    for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
        SizeSummary ss;
        ss.size = cfg.sizes[si];
        std::vector<const EstimateRecord*> ok;
        for (const auto& r : records) {
            if (r.size_index != si) continue;
            if (r.ok) ok.push_back(&r); else ++ss.reps_failed;
        }
        ss.reps_ok = static_cast<int>(ok.size());
        ss.sd_degenerate = ss.reps_ok == 1;

        std::vector<const Eigen::VectorXd*> rows;
        for (const auto* r : ok) rows.push_back(&r->initial);
        ss.initial = column_stats(rows, p);

        for (std::size_t ti = 0; ti < cfg.tunings.size(); ++ti) {
            TuningSummary ts;
            ts.tuning = cfg.tunings[ti];
            ts.zero_pct.assign(p, 0.0);
            ts.correct_pct.assign(p, 0.0);
            std::vector<const Eigen::VectorXd*> plsa_rows, po_rows;
            int exact = 0;
            for (const auto* r : ok) {
                const auto& tr = r->tunings[ti];
                plsa_rows.push_back(&tr.plsa);
                po_rows.push_back(&tr.po);
                bool match = true;
                for (Eigen::Index j = 0; j < p; ++j) {
                    const bool truly_active = s.theta_true[j] != 0.0;
                    if (!tr.active[j]) ts.zero_pct[j] += 1.0;
                    if (tr.active[j] == truly_active) ts.correct_pct[j] += 1.0; else match = false;
                }
                if (match) ++exact;
                if (!tr.po_converged) ++ts.po_nonconverged;
                if (!tr.bound_ok) ++ts.bound_violations;
            }
            const double denom = ok.empty() ? 1.0 : static_cast<double>(ok.size());
            for (Eigen::Index j = 0; j < p; ++j) {
                ts.zero_pct[j] *= 100.0 / denom;
                ts.correct_pct[j] *= 100.0 / denom;
            }
            ts.selection_pct = 100.0 * exact / denom;
            ts.plsa = column_stats(plsa_rows, p);
            ts.po = column_stats(po_rows, p);
            ss.tunings.push_back(std::move(ts));
        }
        s.sizes.push_back(std::move(ss));
    }
    return s;
}

McRun run_mc(const McConfig& cfg) {
    cfg.validate();
    const std::size_t per_size = static_cast<std::size_t>(cfg.reps);
    const std::size_t total = per_size * cfg.sizes.size();

    McRun run;
    run.records.resize(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            run.records[i] = run_replication(cfg, i / per_size, static_cast<int>(i % per_size));
        }
    };
    const int n_threads = std::min<int>(cfg.threads, static_cast<int>(std::max<std::size_t>(total, 1)));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    run.summary = summarize(cfg, run.records);
    for (const auto& ss : run.summary.sizes) {
        if (ss.reps_failed > kMaxFailureFraction * cfg.reps) {
            std::ostringstream os;
            os << "mc: " << ss.reps_failed << " of " << cfg.reps << " replications failed at "
               << size_label(cfg.kind) << "=" << ss.size;
            for (const auto& r : run.records) {
                if (!r.ok) {
                    os << "; first failure: " << r.error;
                    break;
                }
            }
            throw NumericalError(os.str());
        }
    }
    return run;
}

std::string render_markdown(const McSummary& summary) {
    std::ostringstream os;
    const std::string label = size_label(summary.kind);

    os << "## Variable selection: % of replications recovering the true active set\n\n";
    os << "| | (gamma, r, q) |";
    for (const auto& ss : summary.sizes) os << " " << label << "=" << csv::format_double(ss.size) << " |";
    os << "\n|---|---|";
    for (std::size_t i = 0; i < summary.sizes.size(); ++i) os << "---|";
    os << "\n";
    if (!summary.sizes.empty()) {
        for (std::size_t ti = 0; ti < summary.sizes.front().tunings.size(); ++ti) {
            const auto& t = summary.sizes.front().tunings[ti].tuning;
            os << "| %(" << t.name << ") | " << tuning_triplet(t) << " |";
            for (const auto& ss : summary.sizes) os << " " << fixed(ss.tunings[ti].selection_pct, 1) << " |";
            os << "\n";
        }
    }

    const Eigen::Index p = summary.theta_true.size();
    for (const auto& ss : summary.sizes) {
        if (ss.tunings.empty()) continue;
        const auto& ts = ss.tunings.front();
        os << "\n## Estimates at " << label << "=" << csv::format_double(ss.size) << " (" << ts.tuning.name << " "
           << tuning_triplet(ts.tuning) << ", " << ss.reps_ok << " replications";
        if (ss.reps_failed > 0) os << ", " << ss.reps_failed << " failed";
        if (ss.sd_degenerate) os << ", SD undefined for one replication and shown as 0";
        os << ")\n";
        for (Eigen::Index lo = 0; lo < p; lo += 10) {
            const Eigen::Index hi = std::min<Eigen::Index>(p, lo + 10);
            os << "\n| |";
            for (Eigen::Index j = lo; j < hi; ++j) os << " theta" << j + 1 << " |";
            os << "\n|---|";
            for (Eigen::Index j = lo; j < hi; ++j) os << "---|";
            os << "\n| true |";
            for (Eigen::Index j = lo; j < hi; ++j) os << " " << csv::format_double(summary.theta_true[j]) << " |";
            os << "\n";
            auto emit = [&](const std::string& name, const std::vector<CoordStats>& st) {
                os << "| " << name << " |";
                for (Eigen::Index j = lo; j < hi; ++j) os << " " << fixed(st[j].mean, 4) << " |";
                os << "\n| |";
                for (Eigen::Index j = lo; j < hi; ++j) os << " (" << fixed(st[j].sd, 4) << ") |";
                os << "\n";
            };
            emit("initial", ss.initial);
            emit(ts.tuning.name, ts.plsa);
            emit("P-O", ts.po);
            os << "| %(" << ts.tuning.name << ") |";
            for (Eigen::Index j = lo; j < hi; ++j) os << " " << fixed(ts.correct_pct[j], 1) << " |";
            os << "\n";
        }
    }
    return os.str();
}

csv::Table summary_table(const McSummary& summary) {
    csv::Table t;
    t.header = {"size", "tuning", "gamma", "r", "q", "estimator", "coord", "true", "mean", "sd",
                "zero_pct", "correct_pct", "selection_pct", "reps_ok", "reps_failed"};
    const auto f = csv::format_double;
    for (const auto& ss : summary.sizes) {
        const Eigen::Index p = summary.theta_true.size();
        for (Eigen::Index j = 0; j < p; ++j) {
            t.rows.push_back({f(ss.size), "-", "", "", "", "initial", std::to_string(j + 1), f(summary.theta_true[j]),
                              f(ss.initial[j].mean), f(ss.initial[j].sd), "", "", "", std::to_string(ss.reps_ok),
                              std::to_string(ss.reps_failed)});
        }
        for (const auto& ts : ss.tunings) {
            for (const char* est : {"plsa", "po"}) {
                const auto& st = std::string(est) == "plsa" ? ts.plsa : ts.po;
                for (Eigen::Index j = 0; j < p; ++j) {
                    t.rows.push_back({f(ss.size), ts.tuning.name, f(ts.tuning.gamma), f(ts.tuning.r), f(ts.tuning.q),
                                      est, std::to_string(j + 1), f(summary.theta_true[j]), f(st[j].mean),
                                      f(st[j].sd), f(ts.zero_pct[j]), f(ts.correct_pct[j]), f(ts.selection_pct),
                                      std::to_string(ss.reps_ok), std::to_string(ss.reps_failed)});
                }
            }
        }
    }
    return t;
}

csv::Table records_table(const McConfig& cfg, const std::vector<EstimateRecord>& records) {
    csv::Table t;
    t.header = {"size", "rep", "status", "tuning", "coord", "true", "initial", "plsa", "po", "plsa_active", "bound_ok"};
    const auto f = csv::format_double;
    const Eigen::VectorXd theta_star = cfg.theta_true();
    for (const auto& r : records) {
        const std::string size = f(cfg.sizes.at(r.size_index));
        if (!r.ok) {
            t.rows.push_back({size, std::to_string(r.rep), "failed", "", "", "", "", "", "", "", ""});
            continue;
        }
        for (std::size_t ti = 0; ti < r.tunings.size(); ++ti) {
            const auto& tr = r.tunings[ti];
            for (Eigen::Index j = 0; j < theta_star.size(); ++j) {
                t.rows.push_back({size, std::to_string(r.rep), "ok", cfg.tunings[ti].name, std::to_string(j + 1),
                                  f(theta_star[j]), f(r.initial[j]), f(tr.plsa[j]), f(tr.po[j]),
                                  tr.active[j] ? "1" : "0", tr.bound_ok ? "1" : "0"});
            }
        }
    }
    return t;
}

void write_outputs(const std::filesystem::path& dir, const McConfig& cfg, const McRun& run) {
    std::filesystem::create_directories(dir);
    csv::write(dir / "summary.csv", summary_table(run.summary));
    csv::write(dir / "records.csv", records_table(cfg, run.records));
    std::ofstream md(dir / "tables.md", std::ios::binary);
    if (!md) throw DataError("cannot write " + (dir / "tables.md").string());
    md << render_markdown(run.summary);
}

}  // namespace plsa::mc
