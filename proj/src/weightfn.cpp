#include "splitmc/weightfn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace splitmc {

void LevelGrid::validate() const {
    if (m.empty() || m.size() != log_z.size() || m.size() != log_omega.size())
        throw std::invalid_argument("LevelGrid: inconsistent knot arrays");
    if (m.front() != 0.0 || log_z.front() != 0.0)
        throw std::invalid_argument("LevelGrid: requires m_0 = 0 and Z_0 = 1");
    for (std::size_t t = 1; t < m.size(); ++t) {
        if (!(m[t] > m[t - 1]))
            throw std::invalid_argument("LevelGrid: thresholds must be strictly increasing");
        if (log_z[t] > log_z[t - 1])
            throw std::invalid_argument("LevelGrid: Z_t must be nonincreasing");
        if (log_omega[t] < log_omega[t - 1])
            throw std::invalid_argument("LevelGrid: Omega_t must be nondecreasing");
        if (!std::isfinite(log_z[t]))
            throw std::invalid_argument("LevelGrid: Z_t must be strictly positive");
    }
}

CumulativeWeight CumulativeWeight::identity() {
    CumulativeWeight w;
    w.family_ = Family::Identity;
    return w;
}

CumulativeWeight CumulativeWeight::exponential(double kappa, double cap) {
    if (!(kappa > 0.0) || !(cap > 0.0))
        throw std::invalid_argument("CumulativeWeight::exponential: kappa and cap must be positive");
    CumulativeWeight w;
    w.family_ = Family::Exponential;
    w.kappa_ = kappa;
    w.cap_ = cap;
    return w;
}

CumulativeWeight CumulativeWeight::from_grid(const LevelGrid& grid, WeightMode mode) {
    grid.validate();
    return from_knots(grid.m, grid.log_omega, mode);
}

CumulativeWeight CumulativeWeight::from_knots(std::vector<double> m,
                                              std::vector<double> log_omega,
                                              WeightMode mode) {
    if (m.empty() || m.size() != log_omega.size())
        throw std::invalid_argument("CumulativeWeight: inconsistent knot arrays");
    for (std::size_t t = 1; t < m.size(); ++t) {
        if (!(m[t] > m[t - 1]))
            throw std::invalid_argument("CumulativeWeight: duplicate or unordered knots");
        if (log_omega[t] < log_omega[t - 1])
            throw std::invalid_argument("CumulativeWeight: Omega must be nondecreasing");
    }
    CumulativeWeight w;
    w.family_ = Family::Knots;
    w.mode_ = mode;
    w.m_ = std::move(m);
    w.log_omega_ = std::move(log_omega);
    if (mode == WeightMode::Continuous) {
        w.rate_.resize(w.m_.size(), 0.0);
        for (std::size_t t = 1; t < w.m_.size(); ++t) {
            double dlog = w.log_omega_[t] - w.log_omega_[t - 1];
            w.rate_[t] = dlog == 0.0 ? 0.0 : dlog / (w.m_[t] - w.m_[t - 1]);
        }
    }
    return w;
}

double CumulativeWeight::log_evaluate(double m) const {
    switch (family_) {
    case Family::Identity:
        return std::log(m);
    case Family::Exponential: {
        double a = kappa_ * std::min(m, cap_);
        if (a <= 0.0) return neg_inf;
        return a < 30.0 ? std::log(std::expm1(a)) : a + std::log1p(-std::exp(-a));
    }
    case Family::Knots:
        break;
    }
    if (m <= m_.front()) return log_omega_.front();
    if (m >= m_.back()) return log_omega_.back();
    if (mode_ == WeightMode::Discrete) {
        // right-continuous step function
        auto it = std::upper_bound(m_.begin(), m_.end(), m);
        return log_omega_[static_cast<std::size_t>(it - m_.begin()) - 1];
    }
    auto it = std::lower_bound(m_.begin(), m_.end(), m);
    std::size_t t = static_cast<std::size_t>(it - m_.begin());
    if (m_[t] == m) return log_omega_[t];
    return log_omega_[t - 1] + rate_[t] * (m - m_[t - 1]);
}

double CumulativeWeight::evaluate(double m) const {
    // Identity must stay exact in linear space (omega == 1 harmonic mean).
    if (family_ == Family::Identity) return m;
    return std::exp(log_evaluate(m));
}

double CumulativeWeight::log_invert(double log_u) const {
    switch (family_) {
    case Family::Identity:
        return std::exp(log_u);
    case Family::Exponential: {
        double log_cap = log_evaluate(cap_);
        if (log_u > log_cap)
            throw std::out_of_range("CumulativeWeight::invert: u above Omega maximum");
        if (log_u == neg_inf) return 0.0;
        // m = log(1 + u) / kappa
        return log_sum_exp(0.0, log_u) / kappa_;
    }
    case Family::Knots:
        break;
    }
    if (log_u > log_omega_.back())
        throw std::out_of_range("CumulativeWeight::invert: u above Omega(m_T)");
    if (log_u <= log_omega_.front()) return 0.0;
    auto it = std::lower_bound(log_omega_.begin(), log_omega_.end(), log_u);
    std::size_t t = static_cast<std::size_t>(it - log_omega_.begin());
    if (mode_ == WeightMode::Discrete) return m_[t];
    if (log_omega_[t] == log_u) return m_[t];
    // log_u falls strictly inside segment (t-1, t]; rate_[t] > 0 here since
    // constant segments carry no Omega mass between their endpoints.
    return m_[t - 1] + (log_u - log_omega_[t - 1]) / rate_[t];
}

std::size_t CumulativeWeight::level_below(double value) const {
    if (family_ != Family::Knots)
        throw std::logic_error("CumulativeWeight::level_below: requires knot form");
    auto it = std::lower_bound(m_.begin(), m_.end(), value);
    std::size_t idx = static_cast<std::size_t>(it - m_.begin());
    return idx == 0 ? 0 : idx - 1;
}

double CumulativeWeight::log_atom(std::size_t t) const {
    if (family_ != Family::Knots || t >= m_.size())
        throw std::logic_error("CumulativeWeight::log_atom: bad request");
    if (t == 0) return log_omega_.front();
    return log_diff_exp(log_omega_[t], log_omega_[t - 1]);
}

void CumulativeWeight::write_table(std::ostream& os) const {
    char buf[64];
    for (std::size_t t = 0; t < m_.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", m_[t], log_omega_[t]);
        os << buf;
    }
}

} // namespace splitmc
