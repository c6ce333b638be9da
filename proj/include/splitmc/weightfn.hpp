#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "splitmc/logspace.hpp"

namespace splitmc {

// Ordered likelihood thresholds with per-level estimates and weights.
// Knots are indexed t = 0..T with m[0] = 0, log_z[0] = 0, log_omega[0] = 0
// (Z_0 = Omega_0 = 1). All level quantities are carried in log space.
struct LevelGrid {
    std::vector<double> m;         // thresholds, strictly increasing
    std::vector<double> log_z;     // log Z_t, nonincreasing, log_z[0] = 0
    std::vector<double> log_omega; // log Omega_t, nondecreasing
    std::vector<double> nu;        // visit masses (log scale accumulators)

    std::size_t knot_count() const { return m.size(); }
    std::size_t top() const { return m.size() - 1; } // T

    // Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

enum class WeightMode {
    Continuous, // piecewise-exponential Omega(m) through the knots
    Discrete    // atoms omega_t at the knots; Omega(m) is a step function
};

// The cumulative weight Omega(m) = integral_0^m omega(s) ds, stored in log
// space. Evaluation is continuous and nondecreasing, constant beyond the last
// knot. Besides the knot-interpolated form there are two closed-form
// families: the slice-sampling identity Omega(m) = m and the truncated
// exponential Omega(m) = exp(kappa * min(m, cap)) - 1.
class CumulativeWeight {
public:
    // Omega(m) = m (omega == 1, no knots).
    static CumulativeWeight identity();

    // Omega(m) = exp(kappa * min(m, cap)) - 1.
    static CumulativeWeight exponential(double kappa, double cap);

    // Interpolates the grid's (m_t, log Omega_t) knots.
    static CumulativeWeight from_grid(const LevelGrid& grid, WeightMode mode);
    static CumulativeWeight from_knots(std::vector<double> m,
                                       std::vector<double> log_omega,
                                       WeightMode mode);

    double log_evaluate(double m) const;
    double evaluate(double m) const;

    // The unique m with Omega(m) = u on strictly increasing segments; the
    // left endpoint on constant segments; 0 for u <= Omega(0). Throws
    // std::out_of_range for u above the attained maximum.
    double invert(double u) const { return log_invert(std::log(u)); }
    double log_invert(double log_u) const;

    WeightMode mode() const { return mode_; }
    bool has_knots() const { return !m_.empty(); }
    std::size_t knot_count() const { return m_.size(); }
    const std::vector<double>& knots() const { return m_; }
    const std::vector<double>& log_knot_values() const { return log_omega_; }

    // Largest t with m_t < value (discrete form); knots start at m_0 = 0 so
    // this is well defined for any value > 0.
    std::size_t level_below(double value) const;

    // log of the atom omega_t = Omega_t - Omega_{t-1} (omega_0 = Omega_0).
    double log_atom(std::size_t t) const;

    // Two-column plain text table: m_t log(Omega_t).
    void write_table(std::ostream& os) const;

private:
    enum class Family { Identity, Exponential, Knots };

    Family family_ = Family::Identity;
    WeightMode mode_ = WeightMode::Continuous;
    double kappa_ = 0.0;
    double cap_ = 0.0;
    std::vector<double> m_;
    std::vector<double> log_omega_;
    std::vector<double> rate_; // per-segment kappa_t, continuous mode
};

} // namespace splitmc
