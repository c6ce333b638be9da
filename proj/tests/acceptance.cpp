// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned next to each check.

#include "splitmc/baselines.hpp"
#include "splitmc/gaussian_mixture.hpp"
#include "splitmc/harness.hpp"
#include "splitmc/shortest_path.hpp"
#include "splitmc/split_sampler.hpp"
#include "stats.hpp"
#include "toy_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

using namespace splitmc;
using namespace splitmc::test;

namespace {

int failures = 0;

void criterion(int index, const std::string& name, bool ok) {
    std::printf("%s: criterion %d (%s)\n", ok ? "PASS" : "FAIL", index, name.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(const std::string& label, double value) {
    std::printf("  %-48s %.6g\n", label.c_str(), value);
    std::fflush(stdout);
}

ExperimentConfig rare_config(EstimatorKind est, double gamma, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::RareEvent;
    cfg.model = ModelKind::ShortestPath;
    cfg.estimator = est;
    cfg.gamma = gamma;
    cfg.n = 1000000;
    cfg.replicates = 100;
    cfg.seed = seed;
    return cfg;
}

// --- criterion 1: truth recovery at gamma = 2, N = 1e6, R = 100 -----------

bool criterion_1() {
    bool ok = true;

    double cmc = run_replicates(rare_config(EstimatorKind::Cmc, 2.0, 101)).rel_rmse();
    info("CMC gamma=2 rel RMSE (need 0.20..0.36)", cmc);
    ok &= cmc >= 0.20 && cmc <= 0.36;

    double cpp = run_replicates(rare_config(EstimatorKind::Cpp, 2.0, 102)).rel_rmse();
    info("CPP gamma=2 rel RMSE (need <= 0.03)", cpp);
    ok &= cpp <= 0.03;

    double ce = run_replicates(rare_config(EstimatorKind::Ce, 2.0, 103)).rel_rmse();
    info("CE gamma=2 rel RMSE (need <= 0.025)", ce);
    ok &= ce <= 0.025;

    double ss = run_replicates(rare_config(EstimatorKind::Ss, 2.0, 104)).rel_rmse();
    info("SS gamma=2 rel RMSE (need <= 0.03)", ss);
    ok &= ss <= 0.03;

    return ok;
}

// --- criterion 2: deep rare event, SS at gamma = 4 ------------------------

bool criterion_2() {
    ReplicateReport rep = run_replicates(rare_config(EstimatorKind::Ss, 4.0, 105));
    double rmse = rep.rel_rmse();
    double mean_ratio = rep.mean_estimate() / 3.10e-11;
    info("SS gamma=4 rel RMSE (need <= 0.08)", rmse);
    info("SS gamma=4 mean/truth (need 0.75..1.25)", mean_ratio);
    return rmse <= 0.08 && mean_ratio >= 0.75 && mean_ratio <= 1.25;
}

// --- criterion 3: centered-mixture evidence ---------------------------------

ExperimentConfig evidence_config(ModelKind model, EstimatorKind est, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Evidence;
    cfg.model = model;
    cfg.estimator = est;
    cfg.replicates = 50;
    cfg.seed = seed;
    return cfg;
}

bool criterion_3() {
    ExperimentConfig ss = evidence_config(ModelKind::MixtureCentered, EstimatorKind::Ss, 301);
    ss.n = 10000000; // total kernel budget per replicate
    ss.nu_init = 5000.0;
    ss.t_max = 100;
    double ss_rms = run_replicates(ss).log_rms();
    info("SS centered log RMS (need <= 0.4)", ss_rms);

    ExperimentConfig ns = evidence_config(ModelKind::MixtureCentered, EstimatorKind::Ns, 302);
    ns.ns_particles = 1000;
    ns.ns_steps = 100;
    double ns_rms = run_replicates(ns).log_rms();
    info("NS centered log RMS (need <= 0.5)", ns_rms);

    return ss_rms <= 0.4 && ns_rms <= 0.5;
}

// --- criterion 4: de-centered mixture estimator ordering --------------------

bool criterion_4() {
    int ordered = 0;
    double ss_sq_sum = 0.0;
    std::size_t ss_n = 0;

    for (int batch = 0; batch < 5; ++batch) {
        std::uint64_t base = 400 + 10 * static_cast<std::uint64_t>(batch);

        ExperimentConfig ss =
            evidence_config(ModelKind::MixtureDecentered, EstimatorKind::Ss, base + 1);
        ss.n = 12000000;
        ss.n_level = 30000;
        ss.nu_init = 5000.0;
        ReplicateReport ss_rep = run_replicates(ss);
        double ss_rms = ss_rep.log_rms();

        ExperimentConfig dns =
            evidence_config(ModelKind::MixtureDecentered, EstimatorKind::Dns, base + 2);
        dns.n = 10000000;
        dns.dns.new_level_interval = 8000;
        double dns_rms = run_replicates(dns).log_rms();

        ExperimentConfig ns =
            evidence_config(ModelKind::MixtureDecentered, EstimatorKind::Ns, base + 3);
        ns.ns_particles = 1000;
        ns.ns_steps = 100;
        double ns_rms = run_replicates(ns).log_rms();

        std::printf("  batch %d: SS %.3f | DNS %.3f | NS %.3f\n", batch, ss_rms, dns_rms,
                    ns_rms);
        std::fflush(stdout);
        if (ss_rms < dns_rms && dns_rms < ns_rms) ++ordered;
        ss_sq_sum += ss_rms * ss_rms * static_cast<double>(ss_rep.valid_count());
        ss_n += ss_rep.valid_count();
    }

    double ss_pooled = std::sqrt(ss_sq_sum / static_cast<double>(ss_n));
    info("SS < DNS < NS batches (need >= 4 of 5)", ordered);
    info("SS de-centered pooled log RMS (need <= 1.0)", ss_pooled);
    return ordered >= 4 && ss_pooled <= 1.0;
}

// --- criterion 5: exact identities -----------------------------------------

bool criterion_5() {
    bool ok = true;

    // Fubini: estimate_z equals the integral of the step curve, 100 batches
    Rng rng(501);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        SampleBatch batch;
        batch.weight = rep % 2 == 0
                           ? CumulativeWeight::exponential(rng.uniform(0.2, 2.0), 50.0)
                           : CumulativeWeight::identity();
        std::size_t n = 1 + rng.uniform_int(200);
        for (std::size_t i = 0; i < n; ++i)
            batch.records.push_back({std::exp(rng.uniform(-2.0, 2.0)), 0.0});

        std::vector<double> jumps;
        for (const auto& r : batch.records) jumps.push_back(r.l);
        std::sort(jumps.begin(), jumps.end());
        jumps.erase(std::unique(jumps.begin(), jumps.end()), jumps.end());
        KahanSum integral;
        double prev = 0.0;
        for (double j : jumps) {
            integral.add(estimate_z_of_m(batch, 0.5 * (prev + j)) * (j - prev));
            prev = j;
        }
        double z = estimate_z(batch);
        worst = std::max(worst, std::abs(z / integral.value() - 1.0));
    }
    info("Fubini worst relative gap (need <= 1e-10)", worst);
    ok &= worst <= 1e-10;

    // harmonic-mean reduction with identity weights, bit-exact
    std::vector<double> ls;
    for (int i = 0; i < 256; ++i) ls.push_back(rng.uniform_pos() * 3.0);
    SampleBatch hm;
    hm.weight = CumulativeWeight::identity();
    for (double l : ls) hm.records.push_back({l, 0.0});
    KahanSum recip;
    for (double l : ls) recip.add(1.0 / l);
    bool harmonic = estimate_z(hm) == 256.0 / recip.value();
    info("harmonic-mean reduction bit-exact (need 1)", harmonic ? 1.0 : 0.0);
    ok &= harmonic;

    // Theorem 1 equivalence on the 8-state toy, both weight choices
    {
        const std::vector<double> l{0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5};
        const std::vector<double> m{0.0, 1.0, 3.0, 5.0};
        std::vector<double> z(m.size());
        for (std::size_t t = 0; t < m.size(); ++t) {
            int c = 0;
            for (double v : l)
                if (v > m[t]) ++c;
            z[t] = static_cast<double>(c) / 8.0;
        }
        auto normalize = [](std::vector<double>& p) {
            double s = 0.0;
            for (double v : p) s += v;
            for (double& v : p) v /= s;
        };
        double gap = 0.0;

        std::vector<double> log_omega(m.size());
        double acc = 0.0;
        for (std::size_t t = 0; t < m.size(); ++t) {
            acc += 1.0 / z[t];
            log_omega[t] = std::log(acc);
        }
        CumulativeWeight w_pe =
            CumulativeWeight::from_knots(m, log_omega, WeightMode::Discrete);
        std::vector<double> pi_ss(8), pi_pe(8, 0.0);
        for (std::size_t x = 0; x < 8; ++x) {
            pi_ss[x] = std::exp(w_pe.log_evaluate(l[x])) / 8.0;
            for (std::size_t t = 0; t < m.size(); ++t)
                if (l[x] > m[t]) pi_pe[x] += 0.125 / z[t] / static_cast<double>(m.size());
        }
        normalize(pi_ss);
        normalize(pi_pe);
        for (std::size_t x = 0; x < 8; ++x)
            gap = std::max(gap, std::abs(pi_ss[x] / pi_pe[x] - 1.0));

        for (std::size_t t = 0; t < m.size(); ++t) log_omega[t] = -std::log(z[t]);
        CumulativeWeight w_pei =
            CumulativeWeight::from_knots(m, log_omega, WeightMode::Discrete);
        std::vector<double> pi_ssi(8), pi_pei(8);
        for (std::size_t x = 0; x < 8; ++x) {
            pi_ssi[x] = std::exp(w_pei.log_evaluate(l[x])) / 8.0;
            double v = 1.0;
            for (std::size_t t = 1; t < m.size(); ++t)
                if (l[x] > m[t]) v += (z[t - 1] - z[t]) / (z[t - 1] * z[t]);
            pi_pei[x] = v / 8.0;
        }
        normalize(pi_ssi);
        normalize(pi_pei);
        for (std::size_t x = 0; x < 8; ++x)
            gap = std::max(gap, std::abs(pi_ssi[x] / pi_pei[x] - 1.0));

        info("Theorem 1 worst relative gap (need <= 1e-12)", gap);
        ok &= gap <= 1e-12;
    }

    // Theorem 2: tail functional affine in log Z for Omega = 1/Z
    {
        CumulativeWeight w =
            CumulativeWeight::from_knots({0.0, 10.0}, {0.0, 10.0}, WeightMode::Continuous);
        auto tail = [&](double m) {
            const int steps = 4000;
            double h = (10.0 - m) / steps;
            double sum = 0.0;
            for (int i = 0; i <= steps; ++i) {
                double s = m + h * static_cast<double>(i);
                double coef = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
                sum += coef * std::exp(w.log_evaluate(s) - s);
            }
            return std::exp(w.log_evaluate(10.0) - 10.0) + sum * h / 3.0;
        };
        double n0 = tail(0.0);
        double slope_ref = (tail(1.0) - n0) / -1.0;
        double gap = 0.0;
        for (double m = 2.0; m <= 9.0; m += 1.0)
            gap = std::max(gap, std::abs((tail(m) - n0) / -m / slope_ref - 1.0));
        info("Theorem 2 slope-ratio spread (need <= 1e-8)", gap);
        ok &= gap <= 1e-8;
    }

    // NS shrinkage bookkeeping bit-exact
    {
        ExpToyModel model(1.0);
        Rng ns_rng(502);
        NsResult res = nested_sampling(model, 100, 2, 1e-6, ns_rng);
        double x = 1.0;
        for (std::uint64_t r = 0; r < res.replacements; ++r) x *= 1.0 - 0.01;
        bool exact = res.remaining_mass == x;
        info("NS shrinkage bit-exact (need 1)", exact ? 1.0 : 0.0);
        ok &= exact;
    }

    // CE identity blanket equals CMC exactly
    {
        const std::array<double, 5> u{0.25, 0.4, 0.1, 0.3, 0.2};
        ShortestPathModel model(u);
        const double gamma = 0.5;
        const std::size_t n = 100000;
        Rng a(503);
        CmcResult cmc = cmc_estimate(model, gamma, n, a);
        Rng b(503);
        KahanSum sum;
        bool weights_one = true;
        for (std::size_t i = 0; i < n; ++i) {
            Sample s = model.sample_prior(b);
            std::array<double, 5> x{s.x[0], s.x[1], s.x[2], s.x[3], s.x[4]};
            weights_one &= ce_log_weight(x, u, u) == 0.0;
            if (shortest_path_length(x) > gamma) sum.add(1.0);
        }
        bool equal = weights_one && sum.value() / static_cast<double>(n) == cmc.estimate;
        info("CE identity blanket equals CMC (need 1)", equal ? 1.0 : 0.0);
        ok &= equal;
    }

    return ok;
}

// --- criterion 6: sampler correctness ---------------------------------------

bool criterion_6() {
    bool ok = true;
    const std::array<double, 5> scales{0.25, 0.4, 0.1, 0.3, 0.2};

    // Gibbs coordinate-1 conditional vs rejection oracle
    {
        const std::array<double, 5> base{1.0, 1.0, 0.1, 0.3, 0.1};
        const double m = 0.5;
        const std::size_t n = 100000;
        Rng rng(601);
        std::vector<double> gibbs;
        gibbs.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, 5> x = base;
            gibbs_conditional_sweep(x, m, scales, rng);
            gibbs.push_back(x[0]);
        }
        Rng orng(602);
        std::vector<double> oracle;
        oracle.reserve(n);
        while (oracle.size() < n) {
            std::array<double, 5> x = base;
            x[0] = orng.exponential(scales[0]);
            if (shortest_path_length(x) > m) oracle.push_back(x[0]);
        }
        double ks = ks_two_sample(gibbs, oracle);
        info("Gibbs conditional KS (need < 0.01)", ks);
        ok &= ks < 0.01;
    }

    // MH uniform marginal at m = 0
    {
        GaussianMixtureModel model = GaussianMixtureModel::centered();
        Rng rng(603);
        Sample s = model.sample_prior(rng);
        std::vector<double> x = s.x;
        double log_l = s.log_l;
        // Pool all 20 coordinate marginals, recorded once per expected full
        // sweep, so the 10^6 draws are nearly independent despite the
        // single-coordinate proposal.
        const std::size_t stride = model.dimension();
        std::vector<double> draws;
        draws.reserve(1000000);
        for (std::size_t i = 0; i < 1000000; ++i) {
            rw_mh_constrained_step(x, log_l, neg_inf, model, rng);
            if ((i + 1) % stride == 0) draws.insert(draws.end(), x.begin(), x.end());
        }
        double ks = ks_one_sample(std::move(draws), [](double v) {
            return std::clamp(v + 0.5, 0.0, 1.0);
        });
        info("MH uniform-marginal KS (need < 0.01)", ks);
        ok &= ks < 0.01;
    }

    // uniform level occupancy under exact weights on the uniform toy
    {
        UniformToyModel model;
        const double rho = std::exp(-1.0);
        const std::size_t t_max = 7;
        std::vector<double> m(t_max + 1), log_omega(t_max + 1);
        double acc = 0.0;
        for (std::size_t t = 0; t <= t_max; ++t) {
            m[t] = 1.0 - std::pow(rho, static_cast<double>(t));
            acc += std::pow(rho, -static_cast<double>(t));
            log_omega[t] = std::log(acc);
        }
        CumulativeWeight w = CumulativeWeight::from_knots(m, log_omega, WeightMode::Discrete);
        Rng rng(604);
        SampleBatch batch = run_fixed_chain(model, w, 1000000, rng, nullptr);
        std::vector<double> observed(t_max + 1, 0.0);
        std::size_t used = 0;
        for (std::size_t i = 1000; i < batch.records.size(); i += 10) {
            auto it = std::lower_bound(m.begin(), m.end(), batch.records[i].m + 1e-12);
            observed[static_cast<std::size_t>(it - m.begin()) - 1] += 1.0;
            ++used;
        }
        std::vector<double> expected(t_max + 1,
                                     static_cast<double>(used) /
                                         static_cast<double>(t_max + 1));
        double stat = chi_square_stat(observed, expected);
        double crit = chi_square_upper(static_cast<double>(t_max), z_999);
        info("occupancy chi-square stat (need < crit)", stat);
        info("occupancy chi-square critical (p = 0.001)", crit);
        ok &= stat < crit;
    }

    return ok;
}

// --- criterion 7: determinism ------------------------------------------------

bool criterion_7() {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::RareEvent;
    cfg.model = ModelKind::ShortestPath;
    cfg.estimator = EstimatorKind::Ss;
    cfg.gamma = 2.0;
    cfg.n = 100000;
    cfg.n_level = 500;
    cfg.nu_init = 500.0;
    cfg.replicates = 6;
    cfg.seed = 701;

    auto render = [](const ExperimentConfig& c) {
        ReplicateReport rep = run_replicates(c);
        std::ostringstream csv, json;
        emit_csv(rep, csv);
        emit_json(rep, json);
        return csv.str() + "\n---\n" + json.str();
    };

    std::string serial = render(cfg);
    std::string again = render(cfg);
    ExperimentConfig threaded = cfg;
    threaded.threads = 4;
    std::string parallel = render(threaded);

    bool rerun_equal = serial == again;
    bool thread_equal = serial == parallel;
    info("re-run bytes identical (need 1)", rerun_equal ? 1.0 : 0.0);
    info("1-thread vs 4-thread bytes identical (need 1)", thread_equal ? 1.0 : 0.0);
    return rerun_equal && thread_equal;
}

} // namespace

int main() {
    criterion(1, "rare-event truth recovery, gamma=2, N=1e6, R=100", criterion_1());
    criterion(2, "deep rare event, SS gamma=4", criterion_2());
    criterion(3, "centered-mixture evidence, SS and NS", criterion_3());
    criterion(4, "de-centered mixture ordering SS < DNS < NS", criterion_4());
    criterion(5, "exact-identity suite", criterion_5());
    criterion(6, "sampler-correctness suite", criterion_6());
    criterion(7, "seed and thread-count determinism", criterion_7());

    if (failures > 0) {
        std::printf("ACCEPTANCE: %d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("ACCEPTANCE: all 7 criteria passed\n");
    return 0;
}
