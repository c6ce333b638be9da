#pragma once

#include <optional>
#include <vector>

#include "splitmc/rng.hpp"

namespace splitmc {

// A prior draw together with its cached log-likelihood. The cache is always
// produced by the same evaluation path as Model::log_likelihood.
struct Sample {
    std::vector<double> x;
    double log_l;
};

// Contract for a target problem: prior sampling, a nonnegative likelihood
// L(x) (handled in log space throughout), and an MCMC kernel leaving
// pi(x | L(x) > m) invariant. Thresholds are passed as log m, with
// log m = -inf meaning the unconstrained prior (m = 0).
//
// Models are immutable after construction and safe to share across threads;
// all randomness comes through the caller-owned Rng.
class TargetModel {
public:
    virtual ~TargetModel() = default;

    virtual std::size_t dimension() const = 0;

    // sup_x log L(x) when known, otherwise nullopt (unbounded/unknown).
    virtual std::optional<double> log_likelihood_max() const = 0;

    virtual Sample sample_prior(Rng& rng) const = 0;

    virtual double log_likelihood(const std::vector<double>& x) const = 0;

    // One kernel application. Requires log_l > log_m on entry; guarantees
    // log L(x') > log_m on exit and updates log_l in place.
    virtual void constrained_step(std::vector<double>& x, double& log_l,
                                  double log_m, Rng& rng) const = 0;
};

} // namespace splitmc
