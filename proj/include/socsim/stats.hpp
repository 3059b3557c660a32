#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>

namespace socsim {

struct SummaryStats {
    double mean = 0.0;
    std::optional<double> sd; ///< sample SD (divisor n-1); absent when n == 1
    std::size_t n = 0;
};

/// Throws std::invalid_argument on an empty sample.
SummaryStats summarize(std::span<const double> samples);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_tailed(double t, double df);

class DegenerateSamplesError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    double alpha = 0.05;
    bool reject() const { return p < alpha; }
};

/// Two-tailed unpaired Welch test. Needs |a|, |b| >= 2; throws
/// DegenerateSamplesError when both sample variances are zero.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

} // namespace socsim
