#include "splitmc/baselines.hpp"

#include "splitmc/logspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splitmc {

namespace {

std::size_t quantile_rank(double rho, std::size_t n) {
    auto k = static_cast<std::size_t>(std::ceil((1.0 - rho) * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

} // namespace

CmcResult cmc_estimate(const TargetModel& model, double gamma, std::uint64_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("cmc_estimate: n must be positive");
    double log_gamma = gamma > 0.0 ? std::log(gamma) : neg_inf;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        Sample s = model.sample_prior(rng);
        if (s.log_l > log_gamma) ++hits;
    }
    double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

CppResult cpp_estimate(const TargetModel& model, double gamma, double rho,
                       std::uint64_t n0, Rng& rng) {
    if (n0 < 2) throw std::invalid_argument("cpp_estimate: n0 must be at least 2");
    if (!(gamma > 0.0)) throw std::invalid_argument("cpp_estimate: gamma must be positive");
    double log_gamma = std::log(gamma);

    CppResult out;
    double log_m = neg_inf;
    std::vector<double> x;
    double log_l = 0.0;
    std::vector<Sample> stage(n0);

    for (std::size_t t = 0;; ++t) {
        if (t > 10000) throw std::runtime_error("cpp_estimate: gamma unreachable");
        if (t == 0) {
            for (auto& s : stage) s = model.sample_prior(rng);
        } else {
            for (auto& s : stage) {
                model.constrained_step(x, log_l, log_m, rng);
                s.x = x;
                s.log_l = log_l;
            }
        }
        out.samples_used += n0;

        std::vector<double> ls(n0);
        for (std::size_t i = 0; i < n0; ++i) ls[i] = stage[i].log_l;
        std::size_t k = quantile_rank(rho, n0);
        std::nth_element(ls.begin(), ls.begin() + (k - 1), ls.end());
        double q_log = ls[k - 1];
        if (!(q_log > log_m))
            throw std::runtime_error("cpp_estimate: degenerate stage quantile");

        if (q_log >= log_gamma) {
            std::uint64_t hits = 0;
            for (const auto& s : stage)
                if (s.log_l > log_gamma) ++hits;
            out.levels.push_back(gamma);
            out.estimate = std::pow(rho, static_cast<double>(t)) *
                           static_cast<double>(hits) / static_cast<double>(n0);
            return out;
        }

        out.levels.push_back(std::exp(q_log));
        // Stage samples above the new threshold are exact draws from the next
        // tilted distribution; seed the chain from one of them.
        std::vector<std::size_t> above;
        for (std::size_t i = 0; i < n0; ++i)
            if (stage[i].log_l > q_log) above.push_back(i);
        if (above.empty())
            throw std::runtime_error("cpp_estimate: no sample above the stage quantile");
        const Sample& seed = stage[above[rng.uniform_int(above.size())]];
        x = seed.x;
        log_l = seed.log_l;
        log_m = q_log;
    }
}

double ce_log_weight(const std::array<double, 5>& x, const std::array<double, 5>& u,
                     const std::array<double, 5>& v) {
    double lw = 0.0;
    for (std::size_t j = 0; j < 5; ++j)
        lw += std::log(v[j] / u[j]) - x[j] * (1.0 / u[j] - 1.0 / v[j]);
    return lw;
}

CeResult ce_estimate(const ShortestPathModel& model, double gamma,
                     const CeParams& params, Rng& rng) {
    if (params.n0 < 2) throw std::invalid_argument("ce_estimate: n0 must be at least 2");
    if (!(params.rho > 0.0 && params.rho < 1.0))
        throw std::invalid_argument("ce_estimate: rho must be in (0,1)");
    const std::array<double, 5>& u = model.scales();

    CeResult out;
    std::array<double, 5> v = u;
    std::vector<std::array<double, 5>> xs(params.n0);
    std::vector<double> s_vals(params.n0), log_w(params.n0);

    for (;;) {
        if (out.stages > 1000) throw std::runtime_error("ce_estimate: failed to reach gamma");
        for (std::size_t i = 0; i < params.n0; ++i) {
            for (std::size_t j = 0; j < 5; ++j) xs[i][j] = rng.exponential(v[j]);
            s_vals[i] = shortest_path_length(xs[i]);
            log_w[i] = ce_log_weight(xs[i], u, v);
        }
        std::vector<double> sorted = s_vals;
        std::size_t k = quantile_rank(params.rho, params.n0);
        std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
        double gamma_t = std::min(sorted[k - 1], gamma);

        double max_lw = neg_inf;
        for (std::size_t i = 0; i < params.n0; ++i)
            if (s_vals[i] > gamma_t) max_lw = std::max(max_lw, log_w[i]);
        if (max_lw == neg_inf)
            throw std::runtime_error("ce_estimate: no pilot sample above the working threshold");

        std::array<double, 5> num{};
        double den = 0.0;
        for (std::size_t i = 0; i < params.n0; ++i) {
            if (s_vals[i] <= gamma_t) continue;
            double w = std::exp(log_w[i] - max_lw);
            den += w;
            for (std::size_t j = 0; j < 5; ++j) num[j] += w * xs[i][j];
        }
        for (std::size_t j = 0; j < 5; ++j) v[j] = num[j] / den;
        ++out.stages;
        if (gamma_t == gamma) break;
    }

    if (params.n <= out.stages * params.n0)
        throw std::invalid_argument("ce_estimate: budget leaves no final-stage samples");
    std::uint64_t n1 = params.n - out.stages * params.n0;

    KahanSum sum, sum_sq;
    std::array<double, 5> x;
    for (std::uint64_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < 5; ++j) x[j] = rng.exponential(v[j]);
        if (shortest_path_length(x) > gamma) {
            double w = std::exp(ce_log_weight(x, u, v));
            sum.add(w);
            sum_sq.add(w * w);
        }
    }
    out.estimate = sum.value() / static_cast<double>(n1);
    out.ess = sum_sq.value() > 0.0 ? sum.value() * sum.value() / sum_sq.value() : 0.0;
    out.low_ess_warning = out.ess < 10.0;
    out.v_final.assign(v.begin(), v.end());
    return out;
}

NsResult nested_sampling(const TargetModel& model, std::size_t n_particles,
                         std::size_t mcmc_steps, double eps, Rng& rng) {
    if (n_particles < 2)
        throw std::invalid_argument("nested_sampling: needs at least two particles");

    std::vector<Sample> particles(n_particles);
    for (auto& p : particles) p = model.sample_prior(rng);

    auto log_lmax = model.log_likelihood_max();
    double n_inv = 1.0 / static_cast<double>(n_particles);
    double shrink = 1.0 - n_inv;

    NsResult out;
    double z = 0.0, x_mass = 1.0;
    std::uint64_t stalls = 0;

    for (;;) {
        std::size_t worst = 0;
        double top = neg_inf;
        for (std::size_t i = 0; i < n_particles; ++i) {
            if (particles[i].log_l < particles[worst].log_l) worst = i;
            top = std::max(top, particles[i].log_l);
        }
        double bound = log_lmax ? *log_lmax : top;
        if (!(std::exp(bound) * x_mass > eps * z)) break;
        // no particle can strictly exceed the worst likelihood: the prior
        // mass above it is zero, so the remainder term is exact
        if (!(particles[worst].log_l < bound)) break;

        double threshold = particles[worst].log_l;
        z += std::exp(threshold) * x_mass * n_inv;
        x_mass *= shrink;
        ++out.replacements;
        out.log_ladder.push_back(threshold);

        std::size_t donor;
        do {
            donor = static_cast<std::size_t>(rng.uniform_int(n_particles));
        } while (donor == worst);
        particles[worst] = particles[donor];
        std::vector<double> before = particles[worst].x;
        for (std::size_t k = 0; k < mcmc_steps; ++k)
            model.constrained_step(particles[worst].x, particles[worst].log_l, threshold, rng);
        if (particles[worst].x == before) ++stalls;
    }

    KahanSum rest;
    for (const auto& p : particles) rest.add(std::exp(p.log_l));
    z += x_mass * n_inv * rest.value();

    out.estimate = z;
    out.remaining_mass = x_mass;
    out.stall_warning = stalls * 100 > out.replacements; // > 1% frozen replacements
    return out;
}

DnsResult diffuse_nested_sampling(const TargetModel& model, const DnsConfig& cfg, Rng& rng) {
    if (!(cfg.kappa > 0.0))
        throw std::invalid_argument("diffuse_nested_sampling: kappa must be positive");

    std::vector<double> thresholds{neg_inf};
    std::vector<double> above_top;

    Sample s = model.sample_prior(rng);
    std::vector<double> x = std::move(s.x);
    double log_l = s.log_l;
    std::size_t j = 0;

    struct Rec {
        std::uint32_t level;
        double log_l;
    };
    std::vector<Rec> history;
    history.reserve(cfg.chain_length);

    for (std::uint64_t i = 0; i < cfg.chain_length; ++i) {
        // index random walk over p(j | x) ~ w_j I(L > L*_j) / X_j with
        // X_j = e^{-j}; w_j ~ exp(kappa j) while levels are still being
        // created, uniform afterwards so the chain backtracks freely
        std::size_t top = thresholds.size() - 1;
        double kappa = top < cfg.max_levels ? cfg.kappa : 0.0;
        long jp = static_cast<long>(j) + (rng.uniform() < 0.5 ? 1 : -1);
        if (jp >= 0 && jp <= static_cast<long>(top)) {
            auto next = static_cast<std::size_t>(jp);
            if (log_l > thresholds[next]) {
                double log_ratio =
                    (kappa + 1.0) * (static_cast<double>(jp) - static_cast<double>(j));
                if (log_ratio >= 0.0 || std::log(rng.uniform_pos()) < log_ratio) j = next;
            }
        }

        model.constrained_step(x, log_l, thresholds[j], rng);
        history.push_back({static_cast<std::uint32_t>(j), log_l});

        if (log_l > thresholds.back()) {
            above_top.push_back(log_l);
            if (above_top.size() >= cfg.new_level_interval &&
                thresholds.size() - 1 < cfg.max_levels) {
                std::size_t k = quantile_rank(cfg.rho, above_top.size());
                std::nth_element(above_top.begin(), above_top.begin() + (k - 1), above_top.end());
                double q = above_top[k - 1];
                if (q > thresholds.back()) {
                    thresholds.push_back(q);
                    above_top.clear();
                }
            }
        }
    }

    // Per-level mass refinement from visit statistics: X_{j+1}/X_j is the
    // fraction of level-j draws exceeding the next threshold.
    std::size_t top = thresholds.size() - 1;
    std::vector<std::uint64_t> n_visits(top + 1, 0), n_exceed(top + 1, 0);
    std::vector<KahanSum> inner(top + 1);
    for (const auto& rec : history) {
        std::size_t lvl = rec.level;
        n_visits[lvl]++;
        if (lvl < top && rec.log_l > thresholds[lvl + 1])
            n_exceed[lvl]++;
        else
            inner[lvl].add(std::exp(rec.log_l));
    }

    DnsResult out;
    out.levels = top + 1;
    double z = 0.0, x_mass = 1.0;
    for (std::size_t lvl = 0; lvl <= top; ++lvl) {
        if (n_visits[lvl] == 0) {
            out.stall_warning = true;
            x_mass *= cfg.rho;
            continue;
        }
        double n_lvl = static_cast<double>(n_visits[lvl]);
        z += x_mass * inner[lvl].value() / n_lvl;
        x_mass *= static_cast<double>(n_exceed[lvl]) / n_lvl;
    }
    out.estimate = z;
    return out;
}

} // namespace splitmc
