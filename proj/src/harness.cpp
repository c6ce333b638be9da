#include "splitmc/harness.hpp"

#include "splitmc/gaussian_mixture.hpp"
#include "splitmc/logspace.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace splitmc {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad value for " + key + ": " + value);
    }
    if (pos != value.size()) throw std::invalid_argument("bad value for " + key + ": " + value);
    return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    std::uint64_t v;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad value for " + key + ": " + value);
    }
    if (pos != value.size()) throw std::invalid_argument("bad value for " + key + ": " + value);
    return v;
}

// %.17g round-trips doubles exactly through text.
std::string fmt(double v) {
    if (std::isnan(v)) return {};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::unique_ptr<TargetModel> make_model(ModelKind kind) {
    switch (kind) {
        case ModelKind::ShortestPath:
            return std::make_unique<ShortestPathModel>();
        case ModelKind::MixtureCentered:
            return std::make_unique<GaussianMixtureModel>(GaussianMixtureModel::centered());
        case ModelKind::MixtureDecentered:
            return std::make_unique<GaussianMixtureModel>(GaussianMixtureModel::decentered());
    }
    throw std::logic_error("unreachable");
}

SplitConfig make_split_config(const ExperimentConfig& cfg) {
    SplitConfig sc;
    sc.rho = cfg.rho;
    sc.n_level = cfg.n_level;
    sc.nu_init = cfg.nu_init;
    sc.lambda = cfg.resolved_lambda();
    sc.t_max = cfg.t_max;
    sc.n = cfg.n;
    if (cfg.kind == ExperimentKind::RareEvent || cfg.kind == ExperimentKind::Trace)
        if (cfg.model == ModelKind::ShortestPath) sc.gamma = cfg.gamma;
    return sc;
}

} // namespace

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::RareEvent: return "rare-event";
        case ExperimentKind::Evidence: return "evidence";
        case ExperimentKind::PropertySuite: return "property-suite";
        case ExperimentKind::Trace: return "trace";
    }
    return "?";
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::ShortestPath: return "shortest-path";
        case ModelKind::MixtureCentered: return "mixture-centered";
        case ModelKind::MixtureDecentered: return "mixture-decentered";
    }
    return "?";
}

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Cmc: return "cmc";
        case EstimatorKind::Cpp: return "cpp";
        case EstimatorKind::Ce: return "ce";
        case EstimatorKind::Ss: return "ss";
        case EstimatorKind::Ns: return "ns";
        case EstimatorKind::Dns: return "dns";
    }
    return "?";
}

double ExperimentConfig::resolved_lambda() const {
    if (lambda) return *lambda;
    return kind == ExperimentKind::Evidence ? 10.0 : 0.1;
}

void ExperimentConfig::validate() const {
    if (n == 0 || replicates == 0 || threads == 0)
        throw std::invalid_argument("n, replicates and threads must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0,1)");
    if (format != "csv" && format != "json")
        throw std::invalid_argument("format must be csv or json");
    bool rare = kind == ExperimentKind::RareEvent;
    bool evidence = kind == ExperimentKind::Evidence;
    if (rare) {
        if (model != ModelKind::ShortestPath)
            throw std::invalid_argument("rare-event experiments use the shortest-path model");
        if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
        if (estimator == EstimatorKind::Ns || estimator == EstimatorKind::Dns)
            throw std::invalid_argument("ns/dns are evidence estimators");
    }
    if (evidence) {
        if (model == ModelKind::ShortestPath)
            throw std::invalid_argument("evidence experiments use a mixture model");
        if (estimator != EstimatorKind::Ss && estimator != EstimatorKind::Ns &&
            estimator != EstimatorKind::Dns)
            throw std::invalid_argument("evidence estimators are ss, ns and dns");
    }
    if (estimator == EstimatorKind::Ce && model != ModelKind::ShortestPath)
        throw std::invalid_argument("ce requires the shortest-path model");
}

void set_option(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '-', '_');

    if (key == "kind" || key == "experiment") {
        if (value == "rare-event") cfg.kind = ExperimentKind::RareEvent;
        else if (value == "evidence") cfg.kind = ExperimentKind::Evidence;
        else if (value == "property-suite") cfg.kind = ExperimentKind::PropertySuite;
        else if (value == "trace") cfg.kind = ExperimentKind::Trace;
        else throw std::invalid_argument("unknown experiment kind: " + value);
    } else if (key == "model") {
        if (value == "shortest-path") cfg.model = ModelKind::ShortestPath;
        else if (value == "mixture-centered") cfg.model = ModelKind::MixtureCentered;
        else if (value == "mixture-decentered") cfg.model = ModelKind::MixtureDecentered;
        else throw std::invalid_argument("unknown model: " + value);
    } else if (key == "estimator") {
        if (value == "cmc") cfg.estimator = EstimatorKind::Cmc;
        else if (value == "cpp") cfg.estimator = EstimatorKind::Cpp;
        else if (value == "ce") cfg.estimator = EstimatorKind::Ce;
        else if (value == "ss") cfg.estimator = EstimatorKind::Ss;
        else if (value == "ns") cfg.estimator = EstimatorKind::Ns;
        else if (value == "dns") cfg.estimator = EstimatorKind::Dns;
        else throw std::invalid_argument("unknown estimator: " + value);
    } else if (key == "gamma") cfg.gamma = parse_double(key, value);
    else if (key == "n") cfg.n = parse_uint(key, value);
    else if (key == "replicates") cfg.replicates = parse_uint(key, value);
    else if (key == "seed") cfg.seed = parse_uint(key, value);
    else if (key == "threads") cfg.threads = parse_uint(key, value);
    else if (key == "rho") cfg.rho = parse_double(key, value);
    else if (key == "n_level") cfg.n_level = parse_uint(key, value);
    else if (key == "nu_init") cfg.nu_init = parse_double(key, value);
    else if (key == "lambda") cfg.lambda = parse_double(key, value);
    else if (key == "t_max") cfg.t_max = parse_uint(key, value);
    else if (key == "ns_particles") cfg.ns_particles = parse_uint(key, value);
    else if (key == "ns_steps") cfg.ns_steps = parse_uint(key, value);
    else if (key == "ns_eps") cfg.ns_eps = parse_double(key, value);
    else if (key == "n0") cfg.n0 = parse_uint(key, value);
    else if (key == "ce_rho") cfg.ce_rho = parse_double(key, value);
    else if (key == "dns_kappa") cfg.dns.kappa = parse_double(key, value);
    else if (key == "dns_rho") cfg.dns.rho = parse_double(key, value);
    else if (key == "dns_max_levels") cfg.dns.max_levels = parse_uint(key, value);
    else if (key == "dns_new_level_interval") cfg.dns.new_level_interval = parse_uint(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "format") cfg.format = value;
    else throw std::invalid_argument("unknown config key: " + raw_key);
}

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("malformed config line (expected key=value): " + line);
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg;
    for (const auto& [k, v] : parse_config_file(path)) set_option(cfg, k, v);
    return cfg;
}

std::optional<double> truth_value(ModelKind model, ExperimentKind kind, double gamma) {
    if (model != ModelKind::ShortestPath) return 101.0;
    if (kind != ExperimentKind::RareEvent) return std::nullopt;
    if (gamma == 2.0) return 1.34e-5;
    if (gamma == 3.0) return 2.06e-8;
    if (gamma == 4.0) return 3.10e-11;
    return std::nullopt;
}

std::size_t ReplicateReport::valid_count() const {
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.error.empty()) ++n;
    return n;
}

double ReplicateReport::mean_estimate() const {
    KahanSum s;
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.error.empty()) {
            s.add(r.estimate);
            ++n;
        }
    return n ? s.value() / static_cast<double>(n) : std::nan("");
}

double ReplicateReport::rel_rmse() const {
    KahanSum s;
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.error.empty()) {
            double d = r.estimate - truth;
            s.add(d * d);
            ++n;
        }
    return n ? std::sqrt(s.value() / static_cast<double>(n)) / truth : std::nan("");
}

double ReplicateReport::log_rms() const {
    KahanSum s;
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.error.empty()) {
            double d = std::log(r.estimate) - std::log(truth);
            s.add(d * d);
            ++n;
        }
    return n ? std::sqrt(s.value() / static_cast<double>(n)) : std::nan("");
}

double ReplicateReport::summary_error() const {
    return config.kind == ExperimentKind::Evidence ? log_rms() : rel_rmse();
}

double run_one(const ExperimentConfig& cfg, Rng& rng) {
    auto model = make_model(cfg.model);
    switch (cfg.estimator) {
        case EstimatorKind::Cmc:
            return cmc_estimate(*model, cfg.gamma, cfg.n, rng).estimate;
        case EstimatorKind::Cpp: {
            // Pilot run fixes the stage count T, then the remaining budget is
            // spread evenly so the total sample count stays close to n.
            CppResult pilot = cpp_estimate(*model, cfg.gamma, cfg.rho, cfg.n0, rng);
            std::size_t t = std::max<std::size_t>(pilot.levels.size(), 1);
            std::uint64_t remaining =
                cfg.n > pilot.samples_used ? cfg.n - pilot.samples_used : 0;
            std::uint64_t n0 = remaining / t;
            if (n0 < 2) return pilot.estimate;
            return cpp_estimate(*model, cfg.gamma, cfg.rho, n0, rng).estimate;
        }
        case EstimatorKind::Ce: {
            const auto& sp = dynamic_cast<const ShortestPathModel&>(*model);
            CeParams params;
            params.rho = cfg.ce_rho;
            params.n0 = cfg.n0;
            params.n = cfg.n;
            return ce_estimate(sp, cfg.gamma, params, rng).estimate;
        }
        case EstimatorKind::Ss:
            return split_sample(*model, make_split_config(cfg), rng).z_hat;
        case EstimatorKind::Ns:
            return nested_sampling(*model, cfg.ns_particles, cfg.ns_steps, cfg.ns_eps, rng)
                .estimate;
        case EstimatorKind::Dns: {
            DnsConfig dc = cfg.dns;
            dc.chain_length = cfg.n;
            return diffuse_nested_sampling(*model, dc, rng).estimate;
        }
    }
    throw std::logic_error("unreachable");
}

ReplicateReport run_replicates(const ExperimentConfig& cfg) {
    cfg.validate();
    ReplicateReport report;
    report.config = cfg;
    report.truth = truth_value(cfg.model, cfg.kind, cfg.gamma).value_or(std::nan(""));
    report.rows.resize(cfg.replicates);

    auto worker_body = [&](std::size_t r) {
        ReplicateRow row;
        row.replicate = r;
        Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        try {
            row.estimate = run_one(cfg, rng);
        } catch (const std::exception& e) {
            row.estimate = std::nan("");
            row.error = e.what();
        }
        report.rows[r] = std::move(row);
    };

    std::size_t workers = std::min<std::size_t>(cfg.threads, cfg.replicates);
    if (workers <= 1) {
        for (std::size_t r = 0; r < cfg.replicates; ++r) worker_body(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t r = next.fetch_add(1);
                    if (r >= cfg.replicates) return;
                    worker_body(r);
                }
            });
        for (auto& t : pool) t.join();
    }
    return report;
}

void emit_csv(const ReplicateReport& report, std::ostream& os) {
    os << "estimator,model,gamma_or_mode,n,replicate,estimate,truth,rel_error\n";
    const auto& cfg = report.config;
    std::string gamma_or_mode;
    if (cfg.model == ModelKind::ShortestPath) gamma_or_mode = fmt(cfg.gamma);
    else if (cfg.model == ModelKind::MixtureCentered) gamma_or_mode = "centered";
    else gamma_or_mode = "decentered";

    for (const auto& row : report.rows) {
        double rel = std::nan("");
        if (row.error.empty() && !std::isnan(report.truth))
            rel = cfg.kind == ExperimentKind::Evidence
                      ? std::log(row.estimate) - std::log(report.truth)
                      : (row.estimate - report.truth) / report.truth;
        os << to_string(cfg.estimator) << ',' << to_string(cfg.model) << ','
           << gamma_or_mode << ',' << cfg.n << ',' << row.replicate << ','
           << (row.error.empty() ? fmt(row.estimate) : std::string{}) << ','
           << fmt(report.truth) << ',' << fmt(rel) << '\n';
    }
}

namespace {

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["kind"] = to_string(cfg.kind);
    j["model"] = to_string(cfg.model);
    j["estimator"] = to_string(cfg.estimator);
    j["gamma"] = cfg.gamma;
    j["n"] = cfg.n;
    j["replicates"] = cfg.replicates;
    // threads is an execution detail, not part of the experiment: reports
    // must be byte-identical for any thread count
    j["seed"] = cfg.seed;
    j["rho"] = cfg.rho;
    j["n_level"] = cfg.n_level;
    j["nu_init"] = cfg.nu_init;
    if (cfg.lambda) j["lambda"] = *cfg.lambda;
    j["t_max"] = cfg.t_max;
    j["ns_particles"] = cfg.ns_particles;
    j["ns_steps"] = cfg.ns_steps;
    j["ns_eps"] = cfg.ns_eps;
    j["n0"] = cfg.n0;
    j["ce_rho"] = cfg.ce_rho;
    j["dns_kappa"] = cfg.dns.kappa;
    j["dns_rho"] = cfg.dns.rho;
    j["dns_max_levels"] = cfg.dns.max_levels;
    j["dns_new_level_interval"] = cfg.dns.new_level_interval;
    j["out"] = cfg.out;
    j["format"] = cfg.format;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    set_option(cfg, "kind", j.at("kind").get<std::string>());
    set_option(cfg, "model", j.at("model").get<std::string>());
    set_option(cfg, "estimator", j.at("estimator").get<std::string>());
    cfg.gamma = j.at("gamma").get<double>();
    cfg.n = j.at("n").get<std::uint64_t>();
    cfg.replicates = j.at("replicates").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<std::size_t>();
    cfg.rho = j.at("rho").get<double>();
    cfg.n_level = j.at("n_level").get<std::size_t>();
    cfg.nu_init = j.at("nu_init").get<double>();
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    cfg.t_max = j.at("t_max").get<std::size_t>();
    cfg.ns_particles = j.at("ns_particles").get<std::size_t>();
    cfg.ns_steps = j.at("ns_steps").get<std::size_t>();
    cfg.ns_eps = j.at("ns_eps").get<double>();
    cfg.n0 = j.at("n0").get<std::uint64_t>();
    cfg.ce_rho = j.at("ce_rho").get<double>();
    cfg.dns.kappa = j.at("dns_kappa").get<double>();
    cfg.dns.rho = j.at("dns_rho").get<double>();
    cfg.dns.max_levels = j.at("dns_max_levels").get<std::size_t>();
    cfg.dns.new_level_interval = j.at("dns_new_level_interval").get<std::uint64_t>();
    cfg.out = j.at("out").get<std::string>();
    cfg.format = j.at("format").get<std::string>();
    return cfg;
}

} // namespace

void emit_json(const ReplicateReport& report, std::ostream& os) {
    nlohmann::json j;
    j["config"] = config_to_json(report.config);
    // NaN is not representable in JSON; absent means unknown truth.
    if (!std::isnan(report.truth)) j["truth"] = report.truth;
    auto rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["replicate"] = row.replicate;
        if (row.error.empty()) r["estimate"] = row.estimate;
        else r["error"] = row.error;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    os << j.dump(2) << '\n';
}

ReplicateReport read_json_report(std::istream& is) {
    nlohmann::json j = nlohmann::json::parse(is);
    ReplicateReport report;
    report.config = config_from_json(j.at("config"));
    report.truth = j.contains("truth") ? j.at("truth").get<double>() : std::nan("");
    for (const auto& r : j.at("rows")) {
        ReplicateRow row;
        row.replicate = r.at("replicate").get<std::size_t>();
        if (r.contains("error")) {
            row.error = r.at("error").get<std::string>();
            row.estimate = std::nan("");
        } else {
            row.estimate = r.at("estimate").get<double>();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void emit_report(const ReplicateReport& report, const std::string& format,
                 const std::string& path) {
    std::ostringstream buf;
    if (format == "csv") emit_csv(report, buf);
    else if (format == "json") emit_json(report, buf);
    else throw std::invalid_argument("format must be csv or json");

    if (path.empty()) {
        std::cout << buf.str();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << buf.str();
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_trace(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.estimator != EstimatorKind::Ss)
        throw std::invalid_argument("trace is only available for the split sampler");
    auto model = make_model(cfg.model);
    SplitConfig sc = make_split_config(cfg);
    sc.record_trace = true;
    Rng rng(substream_seed(cfg.seed, 0));
    SplitResult res = split_sample(*model, sc, rng);
    os << "iteration,level,log_Omega\n";
    for (const auto& row : res.trace)
        os << row.iteration << ',' << row.level << ',' << fmt(row.log_omega) << '\n';
}

} // namespace splitmc
