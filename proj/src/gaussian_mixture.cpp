#include "splitmc/gaussian_mixture.hpp"

#include "splitmc/logspace.hpp"

#include <cmath>
#include <stdexcept>

namespace splitmc {

namespace {
constexpr double half_log_two_pi = 0.91893853320467274178; // log(2*pi)/2
constexpr double log_sigma_min = -4.5 * M_LN10;            // step sizes on [10^-4.5, 1]
} // namespace

GaussianMixtureModel::GaussianMixtureModel(std::size_t dim, double spike_center,
                                           double spike_width, double slab_width,
                                           double spike_mass, double box_half_width)
    : dim_(dim), center_(spike_center), u_(spike_width), v_(slab_width),
      spike_mass_(spike_mass), half_width_(box_half_width) {
    if (dim_ == 0) throw std::invalid_argument("GaussianMixtureModel: dimension must be positive");
    if (!(0.0 < u_ && u_ < v_))
        throw std::invalid_argument("GaussianMixtureModel: requires 0 < spike width < slab width");
    if (!(std::abs(center_) < half_width_))
        throw std::invalid_argument("GaussianMixtureModel: spike center outside the prior box");
    double d = static_cast<double>(dim_);
    log_spike_norm_ = std::log(spike_mass_) - d * (half_log_two_pi + std::log(u_));
    log_slab_norm_ = -d * (half_log_two_pi + std::log(v_));
}

std::optional<double> GaussianMixtureModel::log_likelihood_max() const {
    // Attained (to within a negligible slab gradient) at the spike center.
    std::vector<double> c(dim_, center_);
    return log_likelihood(c);
}

Sample GaussianMixtureModel::sample_prior(Rng& rng) const {
    std::vector<double> x(dim_);
    for (auto& xi : x) xi = rng.uniform(-half_width_, half_width_);
    return {x, log_likelihood(x)};
}

double GaussianMixtureModel::log_likelihood(const std::vector<double>& x) const {
    double q_spike = 0.0, q_slab = 0.0;
    for (double xi : x) {
        double ds = xi - center_;
        q_spike += ds * ds;
        q_slab += xi * xi;
    }
    double log_spike = log_spike_norm_ - 0.5 * q_spike / (u_ * u_);
    double log_slab = log_slab_norm_ - 0.5 * q_slab / (v_ * v_);
    return log_sum_exp(log_spike, log_slab);
}

bool GaussianMixtureModel::inside_box(const std::vector<double>& x) const {
    for (double xi : x)
        if (std::abs(xi) > half_width_) return false;
    return true;
}

void GaussianMixtureModel::constrained_step(std::vector<double>& x, double& log_l,
                                            double log_m, Rng& rng) const {
    rw_mh_constrained_step(x, log_l, log_m, *this, rng);
}

double mixture_likelihood(const std::vector<double>& x, const GaussianMixtureModel& model) {
    for (double xi : x)
        if (!std::isfinite(xi)) throw std::domain_error("mixture_likelihood: non-finite input");
    return std::exp(model.log_likelihood(x));
}

void rw_mh_constrained_step(std::vector<double>& x, double& log_l, double log_m,
                            const GaussianMixtureModel& model, Rng& rng) {
    if (!(log_l > log_m) || !model.inside_box(x))
        throw std::logic_error("rw_mh_constrained_step: entry state violates constraints");

    std::size_t j = static_cast<std::size_t>(rng.uniform_int(model.dimension()));
    // inverse CDF of f(sigma) ~ 1/sigma on [10^-4.5, 1]
    double sigma = std::exp(log_sigma_min * (1.0 - rng.uniform()));
    double old_xj = x[j];
    x[j] = old_xj + sigma * rng.normal();

    // Uniform prior: the Metropolis ratio reduces to the constraint indicator.
    if (std::abs(x[j]) > model.box_half_width()) {
        x[j] = old_xj;
        return;
    }
    double proposed = model.log_likelihood(x);
    if (proposed > log_m) {
        log_l = proposed;
    } else {
        x[j] = old_xj;
    }
}

} // namespace splitmc
