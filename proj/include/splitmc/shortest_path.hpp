#pragma once

#include <array>

#include "splitmc/model.hpp"

namespace splitmc {

// Length of the shortest a->d path on the 4-vertex network with edge weights
// x = (x1..x5): min(x1+x4, x1+x3+x5, x2+x3+x4, x2+x5).
// Throws std::domain_error on non-finite or nonpositive input.
double shortest_path_length(const std::array<double, 5>& x);

// One systematic Gibbs sweep (coordinates 1..5) over the truncated
// exponential full conditionals of pi(x | S(x) > m). Requires S(x) > m on
// entry (std::logic_error otherwise); S(x) > m holds on exit.
void gibbs_conditional_sweep(std::array<double, 5>& x, double m,
                             const std::array<double, 5>& scales, Rng& rng);

// Rare-event network of Rubinstein and Kroese (2004): five independent
// exponential edge weights, likelihood S(x) = shortest a->d path length.
class ShortestPathModel final : public TargetModel {
public:
    static constexpr std::array<double, 5> default_scales{0.25, 0.4, 0.1, 0.3, 0.2};

    explicit ShortestPathModel(std::array<double, 5> scales = default_scales);

    const std::array<double, 5>& scales() const { return scales_; }

    std::size_t dimension() const override { return 5; }
    std::optional<double> log_likelihood_max() const override { return std::nullopt; }
    Sample sample_prior(Rng& rng) const override;
    double log_likelihood(const std::vector<double>& x) const override;
    void constrained_step(std::vector<double>& x, double& log_l, double log_m,
                          Rng& rng) const override;

private:
    std::array<double, 5> scales_;
};

} // namespace splitmc
