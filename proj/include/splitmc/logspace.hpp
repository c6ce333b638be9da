#pragma once

#include <cmath>
#include <limits>

namespace splitmc {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b))
inline double log_sum_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    double hi = a > b ? a : b;
    double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

// log(exp(a) - exp(b)), requires a >= b
inline double log_diff_exp(double a, double b) {
    if (b == neg_inf) return a;
    if (a == b) return neg_inf;
    return a + std::log1p(-std::exp(b - a));
}

// Neumaier compensated summation.
class KahanSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace splitmc
