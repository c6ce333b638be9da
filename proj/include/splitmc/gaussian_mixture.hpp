#pragma once

#include "splitmc/model.hpp"

namespace splitmc {

// 20-dimensional Gaussian spike-and-slab likelihood on a uniform box prior:
//   L(x) = 100 * prod_i N(x_i; c_i, u^2) + prod_i N(x_i; 0, v^2)
// with spike width u = 0.01, slab width v = 0.1 and the prior uniform on
// [-0.5, 0.5]^C. The spike center c is the origin (centered variant) or
// (0.031, ..., 0.031) (de-centered, bimodal variant).
class GaussianMixtureModel final : public TargetModel {
public:
    GaussianMixtureModel(std::size_t dim = 20, double spike_center = 0.0,
                         double spike_width = 0.01, double slab_width = 0.1,
                         double spike_mass = 100.0, double box_half_width = 0.5);

    static GaussianMixtureModel centered() { return GaussianMixtureModel(); }
    static GaussianMixtureModel decentered() { return GaussianMixtureModel(20, 0.031); }

    double spike_center() const { return center_; }
    double box_half_width() const { return half_width_; }

    std::size_t dimension() const override { return dim_; }
    std::optional<double> log_likelihood_max() const override;
    Sample sample_prior(Rng& rng) const override;
    double log_likelihood(const std::vector<double>& x) const override;
    void constrained_step(std::vector<double>& x, double& log_l, double log_m,
                          Rng& rng) const override;

    bool inside_box(const std::vector<double>& x) const;

private:
    std::size_t dim_;
    double center_;
    double u_, v_;
    double spike_mass_;
    double half_width_;
    // precomputed log normalising constants of the two product terms
    double log_spike_norm_, log_slab_norm_;
};

// L(x) in linear scale, evaluated through the log-space path and
// exponentiated on return. Prefer model.log_likelihood in samplers.
double mixture_likelihood(const std::vector<double>& x, const GaussianMixtureModel& model);

// One random-walk Metropolis step for pi(x | L(x) > m) under the uniform box
// prior: a single coordinate j is perturbed by N(0, sigma^2) with step size
// sigma drawn from the log-uniform density f(sigma) ~ 1/sigma on [10^-4.5, 1].
// The proposal is accepted iff it stays inside the box and log L > log_m.
// Requires the entry state to satisfy both constraints (std::logic_error).
void rw_mh_constrained_step(std::vector<double>& x, double& log_l, double log_m,
                            const GaussianMixtureModel& model, Rng& rng);

} // namespace splitmc
