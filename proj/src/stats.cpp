#include "socsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace socsim {

SummaryStats summarize(std::span<const double> samples)
{
    if (samples.empty()) throw std::invalid_argument("summarize: empty sample");
    SummaryStats s;
    s.n = samples.size();
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : samples) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_cf(double a, double b, double x)
{
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df)
{
    if (!(df > 0.0)) throw std::invalid_argument("student t: df must be positive");
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b, double alpha)
{
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch: each sample needs n >= 2");
    const auto sa = summarize(a);
    const auto sb = summarize(b);
    const double va = *sa.sd * *sa.sd / static_cast<double>(sa.n);
    const double vb = *sb.sd * *sb.sd / static_cast<double>(sb.n);
    if (va == 0.0 && vb == 0.0) throw DegenerateSamplesError("welch: both samples have zero variance");

    WelchResult r;
    r.alpha = alpha;
    r.t = (sa.mean - sb.mean) / std::sqrt(va + vb);
    const double num = (va + vb) * (va + vb);
    double den = 0.0;
    if (va > 0.0) den += va * va / static_cast<double>(sa.n - 1);
    if (vb > 0.0) den += vb * vb / static_cast<double>(sb.n - 1);
    r.df = num / den;
    r.p = std::clamp(student_t_two_tailed(r.t, r.df), 0.0, 1.0);
    return r;
}

} // namespace socsim
