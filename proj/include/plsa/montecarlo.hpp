#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plsa/config.hpp"
#include "plsa/cox.hpp"
#include "plsa/csv.hpp"
#include "plsa/diffusion.hpp"
#include "plsa/penalty.hpp"

namespace plsa::mc {

enum class ModelKind { cox, diffusion };
enum class GChoice { identity, hessian, moment };

std::string to_string(ModelKind k);
std::string to_string(GChoice g);
GChoice parse_g_choice(const std::string& s);

struct NamedTuning {
    std::string name;
    double gamma = 1.0;
    double r = 1.2;
    double q = 0.3;
};

struct McConfig {
    ModelKind kind = ModelKind::cox;
    cox::CoxModel cox = cox::CoxModel::reference(200.0);
    diffusion::DiffusionModel diffusion = diffusion::DiffusionModel::reference(10000);
    std::vector<NamedTuning> tunings;
    int reps = 200;
    std::uint64_t base_seed = 1;
    std::vector<double> sizes;  // horizons T (cox) or step counts n (diffusion)
    GChoice g_choice = GChoice::identity;
    int threads = 1;
    double box_half_width = 10.0;
    double weight_floor = 1e-10;

    void validate() const;
    // Non-fatal remarks, e.g. r outside the selection window (1, 2 - q + gamma).
    std::vector<std::string> warnings() const;
    // Rate r_T used in alpha = rate^r: T^-1/2 or n^-1/2.
    double rate_for(double size) const;
    Eigen::VectorXd theta_true() const;
    Eigen::Index dim() const;

    /// Keys (all optional except `model`):
    ///   model = cox | diffusion
    ///   cox.marks, cox.speeds (list), cox.vol, cox.grid_step, cox.horizon, cox.theta_true (list, mark-major)
    ///   diffusion.p, diffusion.n, diffusion.horizon, diffusion.speed, diffusion.vol, diffusion.cap,
    ///   diffusion.theta_true (list)
    ///   mc.reps, mc.seed, mc.sizes (list), mc.g = identity|hessian|moment, mc.threads, mc.box, mc.weight_floor
    ///   tuning.names (list of names), tuning.<name> = gamma,r,q
    /// Unset model keys fall back to the reference designs; without tuning.names
    /// the three reference tunings are used, and without mc.sizes the single
    /// size cox.horizon or diffusion.n.
    static McConfig from_config(const KeyValueConfig& kv);

    // Settings of the four reference experiments: "table1" .. "table4".
    static McConfig preset(const std::string& table);
};

struct TuningRecord {
    Eigen::VectorXd plsa;
    std::vector<bool> active;
    bool cd_converged = true;
    Eigen::VectorXd po;
    bool po_converged = true;
    double bound_lhs = 0.0;
    double bound_rhs = 0.0;
    bool bound_ok = true;
};

struct EstimateRecord {
    std::size_t size_index = 0;
    int rep = 0;
    bool ok = false;
    std::string error;
    Eigen::VectorXd initial;
    std::vector<TuningRecord> tunings;
};

struct CoordStats {
    double mean = 0.0;
    double sd = 0.0;
};

struct TuningSummary {
    NamedTuning tuning;
    double selection_pct = 0.0;
    std::vector<CoordStats> plsa;
    std::vector<CoordStats> po;
    std::vector<double> zero_pct;     // % of reps with the p-LSA coordinate exactly 0
    std::vector<double> correct_pct;  // % of reps classifying the coordinate correctly
    int po_nonconverged = 0;
    int bound_violations = 0;
};

struct SizeSummary {
    double size = 0.0;
    int reps_ok = 0;
    int reps_failed = 0;
    bool sd_degenerate = false;  // a single successful rep; SDs reported as 0
    std::vector<CoordStats> initial;
    std::vector<TuningSummary> tunings;
};

struct McSummary {
    ModelKind kind = ModelKind::cox;
    Eigen::VectorXd theta_true;
    std::vector<SizeSummary> sizes;
};

struct McRun {
    McSummary summary;
    std::vector<EstimateRecord> records;  // ordered by (size index, rep)
};

// One replication: simulate, estimate, penalize under every tuning, refit.
EstimateRecord run_replication(const McConfig& cfg, std::size_t size_index, int rep);

McSummary summarize(const McConfig& cfg, const std::vector<EstimateRecord>& records);

// Runs every replication (in parallel when cfg.threads > 1) and aggregates in
// replication order. Throws NumericalError when more than 5% of the
// replications at some size fail.
McRun run_mc(const McConfig& cfg);

std::string render_markdown(const McSummary& summary);
csv::Table summary_table(const McSummary& summary);
csv::Table records_table(const McConfig& cfg, const std::vector<EstimateRecord>& records);

// summary.csv, tables.md and records.csv.
void write_outputs(const std::filesystem::path& dir, const McConfig& cfg, const McRun& run);

}  // namespace plsa::mc
