#include "splitmc/split_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace splitmc {

namespace {

// Log-space accumulator increments below this relative cutoff cannot change
// a double; skipping them realises the O(n log T) update cost.
constexpr double negligible_log_gap = 40.0;

double log_expm1(double a) {
    return a < 30.0 ? std::log(std::expm1(a)) : a + std::log1p(-std::exp(-a));
}

// log of (e^{lambda*T} - 1)/(e^lambda - 1), with the lambda -> 0 limit T.
double log_boost_sum(double lambda, std::size_t t) {
    if (lambda <= 0.0) return std::log(static_cast<double>(t));
    return log_expm1(lambda * static_cast<double>(t)) - log_expm1(lambda);
}

// Largest t with log_m[t] < log_l. log_m[0] = -inf, so t >= 0 always.
std::size_t level_below_log(const std::vector<double>& log_m, double log_l) {
    auto it = std::lower_bound(log_m.begin(), log_m.end(), log_l);
    std::size_t idx = static_cast<std::size_t>(it - log_m.begin());
    return idx == 0 ? 0 : idx - 1;
}

// Draw a level index with probability proportional to the atoms
// omega_t = Omega_t - Omega_{t-1} over t <= t_star.
std::size_t pick_level(const std::vector<double>& log_omega, std::size_t t_star, Rng& rng) {
    double log_u = log_omega[t_star] + std::log(rng.uniform_pos());
    auto it = std::lower_bound(log_omega.begin(), log_omega.begin() + t_star + 1, log_u);
    return static_cast<std::size_t>(it - log_omega.begin());
}

std::size_t quantile_rank(double rho, std::size_t n) {
    auto k = static_cast<std::size_t>(std::ceil((1.0 - rho) * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

double kth_smallest(std::vector<double>& v, std::size_t k) {
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[k - 1];
}

LevelGrid make_grid(std::vector<double> m, std::vector<double> log_z,
                    std::vector<double> log_omega) {
    LevelGrid g;
    g.m = std::move(m);
    g.log_z = std::move(log_z);
    g.log_omega = std::move(log_omega);
    return g;
}

} // namespace

void SplitConfig::validate() const {
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("SplitConfig: rho must be in (0,1)");
    if (n_level == 0 || thinning == 0 || build_budget_factor == 0)
        throw std::invalid_argument("SplitConfig: counts must be positive");
    if (!(nu_init > 0.0))
        throw std::invalid_argument("SplitConfig: nu_init must be positive");
    if (lambda < 0.0)
        throw std::invalid_argument("SplitConfig: lambda must be nonnegative");
    if (beta && !(*beta > 0.0))
        throw std::invalid_argument("SplitConfig: beta must be positive when set");
    if (gamma && !(*gamma > 0.0))
        throw std::invalid_argument("SplitConfig: gamma must be positive when set");
    if (!(tail_rtol > 0.0))
        throw std::invalid_argument("SplitConfig: tail_rtol must be positive");
}

double sample_level(double l_value, const CumulativeWeight& w, Rng& rng) {
    if (!(l_value > 0.0))
        throw std::invalid_argument("sample_level: likelihood value must be positive");
    double log_u = w.log_evaluate(l_value) + std::log(rng.uniform_pos());
    return w.log_invert(log_u);
}

std::size_t sample_level_index(double l_value, const CumulativeWeight& w, Rng& rng) {
    std::size_t t_star = w.level_below(l_value);
    return pick_level(w.log_knot_values(), t_star, rng);
}

BuildResult build_levels(const TargetModel& model, const SplitConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<double> m{0.0}, log_m{neg_inf}, log_z{0.0}, log_omega{0.0};
    double log_rho = std::log(cfg.rho);
    double log_gamma = cfg.gamma ? std::log(*cfg.gamma) : 0.0;

    Sample s = model.sample_prior(rng);
    SplitChainState state{std::move(s.x), s.log_l, 0};
    std::uint64_t kernels = 0;
    // tail bound for the evidence stop: the model's known maximum when it
    // has one, otherwise the running maximum of visited likelihoods
    std::optional<double> known_max = model.log_likelihood_max();
    double max_log_l = state.log_l;

    std::vector<double> top_ls;
    top_ls.reserve(cfg.n_level);

    while (m.size() - 1 < cfg.t_max) {
        std::size_t top = m.size() - 1;
        top_ls.clear();
        std::uint64_t budget =
            static_cast<std::uint64_t>(cfg.build_budget_factor) * cfg.n_level;
        std::uint64_t iters = 0;
        while (top_ls.size() < cfg.n_level) {
            if (++iters > budget)
                throw LevelBuildError("build_levels: top level starved of visits",
                                      make_grid(m, log_z, log_omega));
            model.constrained_step(state.x, state.log_l, log_m[state.level], rng);
            ++kernels;
            max_log_l = std::max(max_log_l, state.log_l);
            std::size_t t_star = level_below_log(log_m, state.log_l);
            state.level = pick_level(log_omega, t_star, rng);
            if (state.level == top) top_ls.push_back(state.log_l);
        }

        double q_log = kth_smallest(top_ls, quantile_rank(cfg.rho, top_ls.size()));
        if (!(q_log > log_m[top]))
            throw LevelBuildError("build_levels: degenerate likelihood quantile",
                                  make_grid(m, log_z, log_omega));

        std::size_t t = top + 1;
        bool reached_gamma = cfg.gamma && q_log >= log_gamma;
        double new_m = reached_gamma ? *cfg.gamma : std::exp(q_log);
        if (!(new_m > m.back()))
            throw LevelBuildError("build_levels: threshold failed to increase",
                                  make_grid(m, log_z, log_omega));

        m.push_back(new_m);
        log_m.push_back(reached_gamma ? log_gamma : q_log);
        if (reached_gamma && q_log > log_gamma) {
            // the cap makes the last slice larger than a rho-fraction; use
            // the observed exceedance instead of rho for its initial mass
            std::size_t hits = 0;
            for (double l : top_ls)
                if (l > log_gamma) ++hits;
            log_z.push_back(static_cast<double>(t - 1) * log_rho +
                            std::log(static_cast<double>(hits) /
                                     static_cast<double>(top_ls.size())));
        } else {
            log_z.push_back(static_cast<double>(t) * log_rho);
        }
        if (cfg.beta) {
            // step (d2): rewrite the old top to its (d1) value, overweight
            // the new top by beta * (e^{lambda T} - 1)/(e^lambda - 1)
            log_omega[t - 1] = cfg.lambda * static_cast<double>(t - 1) - log_z[t - 1];
            if (t >= 2) log_omega[t - 1] = std::max(log_omega[t - 1], log_omega[t - 2]);
            log_omega.push_back(std::log(*cfg.beta) + log_boost_sum(cfg.lambda, t) - log_z[t]);
        } else {
            // step (d)/(d1): Omega_T = e^{lambda T} / Z_T
            log_omega.push_back(cfg.lambda * static_cast<double>(t) - log_z[t]);
        }
        log_omega.back() = std::max(log_omega.back(), log_omega[t - 1]);

        if (reached_gamma) break;
        if (!cfg.gamma && m.size() >= 3) {
            double bound = known_max ? *known_max : max_log_l;
            double tail = std::exp(log_z.back()) * (std::exp(bound) - m.back());
            double integral = integrate_level_estimates(make_grid(m, log_z, log_omega));
            if (tail < cfg.tail_rtol * integral) break;
        }
    }

    if (cfg.gamma && m.back() != *cfg.gamma)
        throw LevelBuildError("build_levels: level budget exhausted before gamma",
                              make_grid(m, log_z, log_omega));

    return {make_grid(std::move(m), std::move(log_z), std::move(log_omega)),
            std::move(state), kernels};
}

SplitResult run_estimation(const TargetModel& model, const LevelGrid& grid,
                           const SplitConfig& cfg, Rng& rng,
                           const SplitChainState* start) {
    cfg.validate();
    grid.validate();
    std::size_t levels = grid.knot_count();

    std::vector<double> log_m(levels);
    for (std::size_t t = 0; t < levels; ++t)
        log_m[t] = grid.m[t] > 0.0 ? std::log(grid.m[t]) : neg_inf;

    // nu_t = nu_init * Z_t; weights are ratios of nu, so the boosting applied
    // during construction does not carry over.
    std::vector<double> log_nu(levels);
    double log_nu_init = std::log(cfg.nu_init);
    for (std::size_t t = 0; t < levels; ++t) log_nu[t] = log_nu_init + grid.log_z[t];

    SplitChainState state;
    if (start) {
        state = *start;
        if (state.level >= levels || !(state.log_l > log_m[state.level]))
            throw std::invalid_argument("run_estimation: start state violates L > m");
    } else {
        Sample s = model.sample_prior(rng);
        state = {std::move(s.x), s.log_l, 0};
    }

    SplitResult out;
    out.visits.assign(levels, 0);
    if (cfg.record_trace) out.trace.reserve(std::min<std::uint64_t>(cfg.n, 1 << 20));
    if (cfg.record_batch) out.batch.records.reserve(cfg.n);

    KahanSum sum_l; // prior-mean fallback for the degenerate single-level grid

    for (std::uint64_t i = 1; i <= cfg.n; ++i) {
        for (std::size_t k = 0; k < cfg.thinning; ++k)
            model.constrained_step(state.x, state.log_l, log_m[state.level], rng);

        std::size_t t_star = level_below_log(log_m, state.log_l);

        // m-move: level t with probability prop. to nu_0/nu_t - nu_0/nu_{t-1}
        // over t <= t_star, via inverse-CDF on the log Omega = log nu_0 - log nu_t scale.
        double target = log_nu[t_star] - std::log(rng.uniform_pos());
        auto it = std::lower_bound(log_nu.begin(), log_nu.begin() + t_star + 1, target,
                                   [](double a, double b) { return a > b; });
        state.level = static_cast<std::size_t>(it - log_nu.begin());
        out.visits[state.level]++;

        // nu_t += 1/Omega(L_i) for every m_t < L_i, using the pre-update weight
        double inc = log_nu[t_star] - log_nu[0];
        for (std::size_t t = t_star + 1; t-- > 0;) {
            if (inc < log_nu[t] - negligible_log_gap) break;
            log_nu[t] = log_sum_exp(log_nu[t], inc);
        }

        if (levels == 1) sum_l.add(std::exp(state.log_l));
        if (cfg.record_trace)
            out.trace.push_back({i, static_cast<std::uint32_t>(state.level),
                                 log_nu[0] - log_nu[state.level]});
        if (cfg.record_batch)
            out.batch.records.push_back({std::exp(state.log_l), grid.m[state.level]});
    }

    LevelGrid final_grid;
    final_grid.m = grid.m;
    final_grid.log_z.resize(levels);
    final_grid.log_omega.resize(levels);
    final_grid.nu.resize(levels);
    for (std::size_t t = 0; t < levels; ++t) {
        final_grid.log_z[t] = log_nu[t] - log_nu[0];
        final_grid.log_omega[t] = -final_grid.log_z[t];
        final_grid.nu[t] = std::exp(log_nu[t]);
    }

    out.z_of_m.resize(levels);
    for (std::size_t t = 0; t < levels; ++t) out.z_of_m[t] = std::exp(final_grid.log_z[t]);

    if (cfg.gamma) {
        out.z_hat = out.z_of_m.back();
    } else if (levels > 1) {
        out.z_hat = integrate_level_estimates(final_grid);
    } else {
        out.z_hat = cfg.n > 0 ? sum_l.value() / static_cast<double>(cfg.n) : 0.0;
    }

    out.batch.weight = CumulativeWeight::from_grid(final_grid, WeightMode::Discrete);
    out.grid = std::move(final_grid);
    out.kernel_applications = cfg.n * cfg.thinning;
    return out;
}

SplitResult split_sample(const TargetModel& model, const SplitConfig& cfg, Rng& rng) {
    BuildResult built = build_levels(model, cfg, rng);
    SplitConfig est = cfg;
    est.n = cfg.n > built.kernel_applications
                ? (cfg.n - built.kernel_applications) / cfg.thinning
                : 0;
    SplitResult res = run_estimation(model, built.grid, est, rng, &built.state);
    res.kernel_applications += built.kernel_applications;
    return res;
}

std::vector<double> rao_blackwell_marginal(const SampleBatch& batch, const LevelGrid& grid) {
    if (batch.records.empty())
        throw std::invalid_argument("rao_blackwell_marginal: empty batch");
    grid.validate();
    std::size_t levels = grid.knot_count();

    // Bucket samples by their top attained level t*(L_i); the conditional
    // denominator Omega(L_i) is shared within a bucket.
    std::vector<std::uint64_t> count(levels, 0);
    for (const auto& rec : batch.records) {
        auto it = std::lower_bound(grid.m.begin(), grid.m.end(), rec.l);
        std::size_t idx = static_cast<std::size_t>(it - grid.m.begin());
        count[idx == 0 ? 0 : idx - 1]++;
    }

    double log_n = std::log(static_cast<double>(batch.records.size()));
    std::vector<double> pi(levels, 0.0);
    double acc = neg_inf; // log sum over s >= t of count_s / Omega_s
    for (std::size_t t = levels; t-- > 0;) {
        if (count[t] > 0)
            acc = log_sum_exp(acc, std::log(static_cast<double>(count[t])) - grid.log_omega[t]);
        double log_atom = t == 0 ? grid.log_omega[0]
                                 : log_diff_exp(grid.log_omega[t], grid.log_omega[t - 1]);
        pi[t] = std::exp(log_atom + acc - log_n);
    }
    return pi;
}

double estimate_z_of_m(const SampleBatch& batch, double m) {
    if (batch.records.empty())
        throw std::invalid_argument("estimate_z_of_m: empty batch");
    double shift = std::numeric_limits<double>::infinity();
    std::vector<double> log_w(batch.records.size());
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
        log_w[i] = batch.weight.log_evaluate(batch.records[i].l);
        shift = std::min(shift, log_w[i]);
    }
    KahanSum num, den;
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
        double w = std::exp(shift - log_w[i]);
        den.add(w);
        if (batch.records[i].l > m) num.add(w);
    }
    return num.value() / den.value();
}

double estimate_z(const SampleBatch& batch) {
    if (batch.records.empty())
        throw std::invalid_argument("estimate_z: empty batch");

    bool safe_linear = true;
    for (const auto& rec : batch.records) {
        double lw = batch.weight.log_evaluate(rec.l);
        if (!(lw > -300.0 && lw < 300.0)) {
            safe_linear = false;
            break;
        }
    }

    if (safe_linear) {
        // L_i / Omega(L_i) keeps the omega == 1 case an exact harmonic mean.
        KahanSum num, den;
        for (const auto& rec : batch.records) {
            double omega = batch.weight.evaluate(rec.l);
            num.add(rec.l / omega);
            den.add(1.0 / omega);
        }
        return num.value() / den.value();
    }

    double log_num = neg_inf, log_den = neg_inf;
    for (const auto& rec : batch.records) {
        double lw = batch.weight.log_evaluate(rec.l);
        log_den = log_sum_exp(log_den, -lw);
        log_num = log_sum_exp(log_num, std::log(rec.l) - lw);
    }
    return std::exp(log_num - log_den);
}

double integrate_level_estimates(const LevelGrid& grid) {
    grid.validate();
    if (grid.knot_count() < 2)
        throw std::invalid_argument("integrate_level_estimates: needs at least one segment");
    KahanSum total;
    for (std::size_t t = 1; t < grid.knot_count(); ++t) {
        double dm = grid.m[t] - grid.m[t - 1];
        double dlog = grid.log_z[t] - grid.log_z[t - 1];
        if (std::abs(dlog) < 1e-12) {
            total.add(std::exp(grid.log_z[t]) * dm); // removable singularity
        } else {
            double dz = std::exp(grid.log_z[t]) - std::exp(grid.log_z[t - 1]);
            total.add(dz * dm / dlog);
        }
    }
    return total.value();
}

CumulativeWeight rebalance_weights(const std::vector<double>& mu,
                                   const CumulativeWeight& w,
                                   const std::vector<double>& target,
                                   double omega_max) {
    if (!w.has_knots() || mu.size() != w.knot_count() || target.size() != mu.size())
        throw std::invalid_argument("rebalance_weights: size mismatch");
    double mu_total = std::accumulate(mu.begin(), mu.end(), 0.0);
    double phi_total = std::accumulate(target.begin(), target.end(), 0.0);
    if (!(mu_total > 0.0))
        throw std::invalid_argument("rebalance_weights: all-zero visit measure");

    std::size_t n = mu.size();
    std::vector<double> log_ratio(n, 0.0);
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        if (mu[t] > 0.0) {
            log_ratio[t] = std::log(target[t] / phi_total) - std::log(mu[t] / mu_total);
            min_ratio = std::min(min_ratio, log_ratio[t]);
        }
    }
    // anchor the least-boosted visited level, cap the applied log-increase
    std::vector<double> log_atoms(n);
    double max_atom = neg_inf;
    for (std::size_t t = 0; t < n; ++t) {
        double r = mu[t] > 0.0 ? std::min(log_ratio[t] - min_ratio, omega_max) : 0.0;
        log_atoms[t] = w.log_atom(t) + r;
        max_atom = std::max(max_atom, log_atoms[t]);
    }
    std::vector<double> log_omega(n);
    double acc = neg_inf;
    for (std::size_t t = 0; t < n; ++t) {
        acc = log_sum_exp(acc, log_atoms[t] - max_atom);
        log_omega[t] = acc;
    }
    return CumulativeWeight::from_knots(w.knots(), std::move(log_omega), w.mode());
}

std::pair<CumulativeWeight, bool> flat_histogram_update(const std::vector<double>& mu,
                                                        const CumulativeWeight& w,
                                                        const std::vector<double>& target,
                                                        double step, double tolerance) {
    if (!w.has_knots() || mu.size() != w.knot_count() || target.size() != mu.size())
        throw std::invalid_argument("flat_histogram_update: size mismatch");
    double mu_total = std::accumulate(mu.begin(), mu.end(), 0.0);
    double phi_total = std::accumulate(target.begin(), target.end(), 0.0);

    std::size_t n = mu.size();
    std::vector<double> resid(n);
    double max_dev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double mu_hat = mu_total > 0.0 ? mu[t] / mu_total : 0.0;
        resid[t] = mu_hat - target[t] / phi_total;
        max_dev = std::max(max_dev, std::abs(resid[t]));
    }
    if (max_dev >= tolerance) return {w, false};

    // NOTE: applied with a minus sign: over-visited levels must lose weight
    // for the stochastic approximation to contract (Wang-Landau convention).
    std::vector<double> log_atoms(n);
    double max_atom = neg_inf;
    for (std::size_t t = 0; t < n; ++t) {
        log_atoms[t] = w.log_atom(t) - step * resid[t];
        max_atom = std::max(max_atom, log_atoms[t]);
    }
    std::vector<double> log_omega(n);
    double acc = neg_inf;
    for (std::size_t t = 0; t < n; ++t) {
        acc = log_sum_exp(acc, log_atoms[t] - max_atom);
        log_omega[t] = acc;
    }
    return {CumulativeWeight::from_knots(w.knots(), std::move(log_omega), w.mode()), true};
}

SampleBatch run_fixed_chain(const TargetModel& model, const CumulativeWeight& w,
                            std::uint64_t n, Rng& rng,
                            std::vector<std::uint64_t>* visits) {
    SampleBatch batch;
    batch.weight = w;
    batch.records.reserve(n);
    if (visits && w.has_knots()) visits->assign(w.knot_count(), 0);

    Sample s = model.sample_prior(rng);
    std::vector<double> x = std::move(s.x);
    double log_l = s.log_l;
    double log_m = neg_inf;

    for (std::uint64_t i = 0; i < n; ++i) {
        model.constrained_step(x, log_l, log_m, rng);
        double l = std::exp(log_l);
        double m;
        if (w.has_knots() && w.mode() == WeightMode::Discrete) {
            std::size_t level = sample_level_index(l, w, rng);
            m = w.knots()[level];
            if (visits) (*visits)[level]++;
        } else {
            m = sample_level(l, w, rng);
        }
        log_m = m > 0.0 ? std::log(m) : neg_inf;
        batch.records.push_back({l, m});
    }
    return batch;
}

} // namespace splitmc
