#pragma once

#include <cstdint>
#include <vector>

#include "splitmc/model.hpp"
#include "splitmc/shortest_path.hpp"

namespace splitmc {

struct CmcResult {
    double estimate = 0.0;
    double std_error = 0.0; // exact binomial standard error
    std::uint64_t n = 0;
};

struct CppResult {
    double estimate = 0.0;
    std::vector<double> levels; // m_1 .. m_T (m_T = gamma)
    std::uint64_t samples_used = 0;
};

struct CeParams {
    double rho = 0.1;
    std::uint64_t n0 = 1000;   // pilot draws per stage
    std::uint64_t n = 1000000; // total budget; final stage gets n - T*n0
};

struct CeResult {
    double estimate = 0.0;
    std::vector<double> v_final; // fitted exponential scales
    std::size_t stages = 0;
    double ess = 0.0;
    bool low_ess_warning = false;
};

struct NsResult {
    double estimate = 0.0;
    std::vector<double> log_ladder; // discarded log-likelihood thresholds
    std::uint64_t replacements = 0;
    double remaining_mass = 1.0; // X = (1 - 1/N)^replacements
    bool stall_warning = false;
};

struct DnsResult {
    double estimate = 0.0;
    std::size_t levels = 0;
    bool stall_warning = false;
};

// Crude Monte Carlo indicator average of P(L(x) > gamma) under the prior.
CmcResult cmc_estimate(const TargetModel& model, double gamma, std::uint64_t n, Rng& rng);

// Conditional probability product: (1-rho)-quantile level schedule from n0
// constrained-chain samples per stage, telescoped as rho^{T-1} times the
// final-stage exceedance fraction.
CppResult cpp_estimate(const TargetModel& model, double gamma, double rho,
                       std::uint64_t n0, Rng& rng);

// Cross-entropy for the exponential-weights network: quantile/moment-match
// stages until the working threshold reaches gamma, then importance sampling
// under the fitted scales.
CeResult ce_estimate(const ShortestPathModel& model, double gamma,
                     const CeParams& params, Rng& rng);

// Likelihood ratio pi(x|u)/pi(x|v) for independent exponential coordinates.
double ce_log_weight(const std::array<double, 5>& x, const std::array<double, 5>& u,
                     const std::array<double, 5>& v);

// Nested sampling with deterministic (1 - 1/N) shrinkage. Uses the known
// L_max termination rule when the model provides one, the ladder-top rule
// otherwise. Replacement draws run mcmc_steps constrained-kernel steps from
// a uniformly chosen surviving particle.
NsResult nested_sampling(const TargetModel& model, std::size_t n_particles,
                         std::size_t mcmc_steps, double eps, Rng& rng);

struct DnsConfig {
    double kappa = 0.1;           // level-weight decay exp(kappa * (j - t))
    double rho = std::exp(-1.0);  // compression per level
    std::uint64_t chain_length = 1000000;
    std::size_t max_levels = 100;
    std::uint64_t new_level_interval = 1000; // draws above top per new level
};

// Diffuse nested sampling over the weighted mixture of level-constrained
// distributions, per Brewer, Partay and Csanyi (2011): exponential level
// weights, +/-1 index random walk, levels at (1-rho)-quantiles of draws
// above the current top, and visit-ratio refinement of the level masses.
DnsResult diffuse_nested_sampling(const TargetModel& model, const DnsConfig& cfg, Rng& rng);

} // namespace splitmc
