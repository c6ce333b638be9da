#include "splitmc/shortest_path.hpp"

#include "splitmc/logspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splitmc {

double shortest_path_length(const std::array<double, 5>& x) {
    for (double v : x) {
        if (!std::isfinite(v) || v <= 0.0)
            throw std::domain_error("shortest_path_length: edge weights must be positive and finite");
    }
    double p1 = x[0] + x[3];
    double p2 = x[0] + x[2] + x[4];
    double p3 = x[1] + x[2] + x[3];
    double p4 = x[1] + x[4];
    return std::min(std::min(p1, p2), std::min(p3, p4));
}

void gibbs_conditional_sweep(std::array<double, 5>& x, double m,
                             const std::array<double, 5>& scales, Rng& rng) {
    if (!(shortest_path_length(x) > m))
        throw std::logic_error("gibbs_conditional_sweep: entry state violates S(x) > m");

    // Shift for coordinate j is the smallest value keeping every path through
    // edge j above m; paths avoiding edge j already exceed m by the entry
    // invariant. Memorylessness makes the conditional shift + Exp(u_j).
    x[0] = std::max({0.0, m - x[3], m - x[2] - x[4]}) + rng.exponential(scales[0]);
    x[1] = std::max({0.0, m - x[2] - x[3], m - x[4]}) + rng.exponential(scales[1]);
    x[2] = std::max({0.0, m - x[0] - x[4], m - x[1] - x[3]}) + rng.exponential(scales[2]);
    x[3] = std::max({0.0, m - x[0], m - x[1] - x[2]}) + rng.exponential(scales[3]);
    x[4] = std::max({0.0, m - x[0] - x[2], m - x[1]}) + rng.exponential(scales[4]);
}

ShortestPathModel::ShortestPathModel(std::array<double, 5> scales) : scales_(scales) {
    for (double u : scales_)
        if (!(u > 0.0))
            throw std::invalid_argument("ShortestPathModel: scales must be strictly positive");
}

Sample ShortestPathModel::sample_prior(Rng& rng) const {
    std::vector<double> x(5);
    for (std::size_t j = 0; j < 5; ++j) x[j] = rng.exponential(scales_[j]);
    return {x, log_likelihood(x)};
}

double ShortestPathModel::log_likelihood(const std::vector<double>& x) const {
    std::array<double, 5> a{x[0], x[1], x[2], x[3], x[4]};
    return std::log(shortest_path_length(a));
}

void ShortestPathModel::constrained_step(std::vector<double>& x, double& log_l,
                                         double log_m, Rng& rng) const {
    std::array<double, 5> a{x[0], x[1], x[2], x[3], x[4]};
    double m = log_m == neg_inf ? 0.0 : std::exp(log_m);
    gibbs_conditional_sweep(a, m, scales_, rng);
    std::copy(a.begin(), a.end(), x.begin());
    log_l = std::log(shortest_path_length(a));
}

} // namespace splitmc
