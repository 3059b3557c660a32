#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace socsim {

using LabelPath = std::vector<std::string>;

/// Identifier of the pinned generator. Bump when any draw sequence changes.
inline constexpr const char* kRngAlgorithm = "splitmix64/v1";

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept
{
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

/// A labelled random stream.
///
/// Streams are identified by (root seed, label path). The key is derived by
/// chaining the SplitMix64 finalizer over the root seed and the FNV-1a hash of
/// each label, so two streams with the same identity produce the same draws and
/// streams with different labels share no state. Output is the plain SplitMix64
/// sequence started at that key.
class RngStream {
  public:
    RngStream(std::uint64_t root_seed, LabelPath label_path);

    /// Stream that starts from an explicit key. Identity fields are left empty.
    static RngStream from_key(std::uint64_t key);

    std::uint64_t next_u64() noexcept
    {
        state_ += kGamma;
        ++draws_;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() noexcept;
    /// Uniform integer in [0, n). n must be > 0. Lemire's unbiased method.
    std::uint64_t uniform_index(std::uint64_t n);
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    bool bernoulli(double p);
    double exponential(double mean);
    /// Number of failures before the first success, success probability p in (0, 1].
    std::uint64_t geometric(double p);
    double normal();
    double gamma(double shape, double scale);
    std::uint64_t poisson(double mean);
    /// Over-dispersed count: Var = mean + dispersion * mean^2 (gamma-Poisson mixture).
    std::uint64_t negative_binomial(double mean, double dispersion);

    /// Child stream with label path extended by `label`.
    [[nodiscard]] RngStream derive(std::string label) const;

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t root_seed() const noexcept { return root_seed_; }
    const LabelPath& label_path() const noexcept { return labels_; }
    std::uint64_t draws() const noexcept { return draws_; }

  private:
    RngStream() = default;

    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    std::uint64_t root_seed_ = 0;
    LabelPath labels_;
    std::uint64_t key_ = 0;
    std::uint64_t state_ = 0;
    std::uint64_t draws_ = 0;
};

/// Key derivation used by RngStream. Exposed for documentation and tests.
std::uint64_t derive_key(std::uint64_t root_seed, std::span<const std::string> labels);

/// Throws std::invalid_argument on an empty label path.
RngStream derive_stream(std::uint64_t root_seed, LabelPath label_path);

} // namespace socsim
