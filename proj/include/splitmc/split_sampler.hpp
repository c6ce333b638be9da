#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include "splitmc/model.hpp"
#include "splitmc/weightfn.hpp"

namespace splitmc {

struct SplitConfig {
    double rho = std::exp(-1.0);         // conditional slice ratio Z_t/Z_{t-1}
    std::size_t n_level = 10000;         // top-level visits before a new level
    double nu_init = 10000.0;            // initial visit mass scale
    double lambda = 0.1;                 // boosting factor (0 disables)
    std::optional<double> beta;          // extra top-level weight, selects (d2)
    std::size_t t_max = 100;             // hard cap on level count
    std::uint64_t n = 1000000;           // estimation iterations
    std::optional<double> gamma;         // rare-event target threshold
    double tail_rtol = 1e-4;             // evidence-mode stopping tolerance
    std::size_t thinning = 1;            // kernel applications per iteration
    std::size_t build_budget_factor = 1000; // per-level iteration cap, x n_level
    bool record_trace = false;
    bool record_batch = false;

    void validate() const;
};

// Joint-chain state: the x-draw, its log-likelihood and the current level.
struct SplitChainState {
    std::vector<double> x;
    double log_l = 0.0;
    std::size_t level = 0;
};

struct BuildResult {
    LevelGrid grid;
    SplitChainState state;
    std::uint64_t kernel_applications = 0;
};

// Thrown when a level cannot accumulate enough top visits within budget.
struct LevelBuildError : std::runtime_error {
    LevelBuildError(const std::string& what, LevelGrid partial)
        : std::runtime_error(what), partial_grid(std::move(partial)) {}
    LevelGrid partial_grid;
};

struct TraceRow {
    std::uint64_t iteration;
    std::uint32_t level;
    double log_omega;
};

// A record of draws from the split chain: the likelihood value and the level
// threshold each draw was paired with, plus the weight they were drawn under.
struct BatchRecord {
    double l;
    double m;
};
struct SampleBatch {
    std::vector<BatchRecord> records;
    CumulativeWeight weight;
};

struct SplitResult {
    LevelGrid grid;
    double z_hat = 0.0;                // integrated evidence, or Z_T in rare-event mode
    std::vector<double> z_of_m;        // step curve Z(m_t)
    std::vector<std::uint64_t> visits; // per-level visit counts
    std::vector<TraceRow> trace;
    SampleBatch batch;
    std::uint64_t kernel_applications = 0;
};

// Auxiliary-variable move: m ~ omega restricted to [0, L]. Continuous mode
// returns a threshold value, discrete mode a grid level index.
double sample_level(double l_value, const CumulativeWeight& w, Rng& rng);
std::size_t sample_level_index(double l_value, const CumulativeWeight& w, Rng& rng);

// Phase one: grow the threshold grid from m_0 = 0, adding the (1-rho) tail
// quantile of top-level likelihoods as each new threshold, with Z_T = rho^T
// and Omega_T boosted per (lambda, beta). Stops at gamma (rare-event mode),
// at t_max, or when the tail beyond m_T is negligible (evidence mode).
BuildResult build_levels(const TargetModel& model, const SplitConfig& cfg, Rng& rng);

// Phase two: the self-balancing estimation chain over a fixed grid.
SplitResult run_estimation(const TargetModel& model, const LevelGrid& grid,
                           const SplitConfig& cfg, Rng& rng,
                           const SplitChainState* start = nullptr);

// Both phases with a shared kernel budget: cfg.n counts total kernel
// applications; the estimation phase gets whatever the build leaves over.
SplitResult split_sample(const TargetModel& model, const SplitConfig& cfg, Rng& rng);

// Rao-Blackwellised level marginal pi_t over the grid's discrete atoms.
std::vector<double> rao_blackwell_marginal(const SampleBatch& batch, const LevelGrid& grid);

// Z(m) and Z = integral Z(m) dm from recorded draws.
double estimate_z_of_m(const SampleBatch& batch, double m);
double estimate_z(const SampleBatch& batch);

// Piecewise-exponential closed form for Z = integral of the interpolated
// level curve; constant segments use the limit Z_t * (m_t - m_{t-1}).
double integrate_level_estimates(const LevelGrid& grid);

// Weight adaptation strategies (optional; the self-balancing nu-rule inside
// run_estimation is the default).
CumulativeWeight rebalance_weights(const std::vector<double>& mu,
                                   const CumulativeWeight& w,
                                   const std::vector<double>& target,
                                   double omega_max);
std::pair<CumulativeWeight, bool> flat_histogram_update(const std::vector<double>& mu,
                                                        const CumulativeWeight& w,
                                                        const std::vector<double>& target,
                                                        double step, double tolerance);

// Joint chain with weights held fixed (diagnostics and calibration runs).
SampleBatch run_fixed_chain(const TargetModel& model, const CumulativeWeight& w,
                            std::uint64_t n, Rng& rng,
                            std::vector<std::uint64_t>* visits = nullptr);

} // namespace splitmc
