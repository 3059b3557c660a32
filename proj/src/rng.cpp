#include "socsim/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace socsim {

std::uint64_t derive_key(std::uint64_t root_seed, std::span<const std::string> labels)
{
    std::uint64_t key = mix64(root_seed ^ 0x5ca1ab1e0ddba11ULL);
    for (const auto& label : labels) {
        // Length is folded in so ["ab","c"] and ["a","bc"] hash apart.
        const std::uint64_t h = fnv1a64(label, fnv1a64(std::to_string(label.size()) + ":"));
        key = mix64(key + 0x9e3779b97f4a7c15ULL) ^ h;
        key = mix64(key);
    }
    return key;
}

RngStream::RngStream(std::uint64_t root_seed, LabelPath label_path)
    : root_seed_(root_seed), labels_(std::move(label_path))
{
    if (labels_.empty()) {
        throw std::invalid_argument("derive_stream: label path must not be empty");
    }
    key_ = derive_key(root_seed_, labels_);
    state_ = key_;
}

RngStream RngStream::from_key(std::uint64_t key)
{
    RngStream s;
    s.key_ = key;
    s.state_ = key;
    return s;
}

RngStream RngStream::derive(std::string label) const
{
    LabelPath path = labels_;
    path.push_back(std::move(label));
    if (labels_.empty()) {
        // Key-only stream: derive from the key itself.
        return RngStream(key_, std::move(path));
    }
    return RngStream(root_seed_, std::move(path));
}

RngStream derive_stream(std::uint64_t root_seed, LabelPath label_path)
{
    return RngStream(root_seed, std::move(label_path));
}

double RngStream::uniform01() noexcept
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n)
{
    if (n == 0) {
        throw std::invalid_argument("uniform_index: n must be positive");
    }
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi)
{
    if (hi < lo) {
        throw std::invalid_argument("uniform_int: empty range");
    }
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) { // full 64-bit range
        return static_cast<std::int64_t>(next_u64());
    }
    return lo + static_cast<std::int64_t>(uniform_index(span));
}

bool RngStream::bernoulli(double p)
{
    return uniform01() < p;
}

double RngStream::exponential(double mean)
{
    // 1 - u lies in (0, 1], so the log is finite.
    return -mean * std::log1p(-uniform01());
}

std::uint64_t RngStream::geometric(double p)
{
    if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument("geometric: p must be in (0, 1]");
    }
    if (p == 1.0) {
        return 0;
    }
    const double u = 1.0 - uniform01(); // (0, 1]
    return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

double RngStream::normal()
{
    // Marsaglia polar method; the spare value is discarded so the draw count
    // depends only on the number of calls.
    for (;;) {
        const double u = 2.0 * uniform01() - 1.0;
        const double v = 2.0 * uniform01() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

double RngStream::gamma(double shape, double scale)
{
    if (!(shape > 0.0) || !(scale > 0.0)) {
        throw std::invalid_argument("gamma: shape and scale must be positive");
    }
    if (shape < 1.0) {
        // Boost with U^(1/shape).
        const double g = gamma(shape + 1.0, 1.0);
        const double u = 1.0 - uniform01();
        return scale * g * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) {
            continue;
        }
        v = v * v * v;
        const double u = 1.0 - uniform01();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return scale * d * v;
        }
    }
}

std::uint64_t RngStream::poisson(double mean)
{
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("poisson: mean must be finite and non-negative");
    }
    if (mean == 0.0) {
        return 0;
    }
    if (mean < 10.0) {
        // Knuth multiplication.
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform01();
        while (prod > limit) {
            ++k;
            prod *= uniform01();
        }
        return k;
    }
    // PTRS transformed rejection (Hoermann 1993).
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = uniform01() - 0.5;
        const double v = uniform01();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) {
            return static_cast<std::uint64_t>(k);
        }
        if (k < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0)) {
            return static_cast<std::uint64_t>(k);
        }
    }
}

std::uint64_t RngStream::negative_binomial(double mean, double dispersion)
{
    if (!(mean >= 0.0)) {
        throw std::invalid_argument("negative_binomial: mean must be non-negative");
    }
    if (mean == 0.0) {
        return 0;
    }
    if (dispersion <= 0.0) {
        return poisson(mean);
    }
    const double shape = 1.0 / dispersion;
    return poisson(gamma(shape, mean / shape));
}

} // namespace socsim
