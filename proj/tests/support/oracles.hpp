#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls into the code it checks.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

// ---- statistics ----

inline double mean(const std::vector<double>& x)
{
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample variance by the two-pass textbook formula.
inline double variance(const std::vector<double>& x)
{
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

inline double t_density(double x, double df)
{
    const double log_c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * std::numbers::pi);
    return std::exp(log_c - (df + 1) / 2 * std::log1p(x * x / df));
}

/// Two-tailed p-value by adaptive Gauss-Kronrod quadrature of the density over
/// [|t|, inf). Boost maps the infinite range onto a finite one.
inline double t_two_tailed_quadrature(double t, double df)
{
    using boost::math::quadrature::gauss_kronrod;
    const double tail = gauss_kronrod<double, 61>::integrate(
        [df](double x) { return t_density(x, df); }, std::fabs(t), std::numeric_limits<double>::infinity(), 15,
        1e-14);
    return 2.0 * tail;
}

struct Welch {
    double t;
    double df;
    double p;
};

inline Welch welch(const std::vector<double>& a, const std::vector<double>& b)
{
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double qa = variance(a) / na;
    const double qb = variance(b) / nb;
    const double t = (mean(a) - mean(b)) / std::sqrt(qa + qb);
    const double df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1) + qb * qb / (nb - 1));
    return {t, df, t_two_tailed_quadrature(t, df)};
}

// ---- attack chains ----

/// A chain as (step identifier, target host) pairs.
using ChainShape = std::vector<std::pair<std::string, std::string>>;

/// Every valid chain of exactly `length` entries, by exhaustive DFS. The rules
/// are restated here: infect and misc steps may start a chain; after a misc
/// step only infect or misc steps may follow; a c2 step needs an earlier
/// infect step on the same client; sqlmap targets the DMZ server and all other
/// steps target clients.
inline std::set<ChainShape> enumerate_chains(std::size_t length, const std::string& dmz,
                                             const std::vector<std::string>& clients)
{
    static const std::vector<std::string> infect = {"infect_email_exe", "infect_flashdrive_exe"};
    static const std::vector<std::string> c2 = {"c2_change_wallpaper", "c2_download_malware", "c2_exfiltration",
                                                "c2_mimikatz", "c2_take_screenshot"};
    static const std::vector<std::string> misc = {"misc_download_malware", "misc_execute_malware",
                                                  "misc_exfiltration", "misc_set_autostart"};
    std::set<ChainShape> out;
    ChainShape cur;
    std::set<std::string> infected;

    auto recurse = [&](auto&& self) -> void {
        if (cur.size() == length) {
            out.insert(cur);
            return;
        }
        const bool after_misc = !cur.empty() && cur.back().first.rfind("misc_", 0) == 0;
        auto push = [&](const std::string& step, const std::string& host) {
            cur.emplace_back(step, host);
            const bool fresh = step.rfind("infect_", 0) == 0 && infected.insert(host).second;
            self(self);
            if (fresh) infected.erase(host);
            cur.pop_back();
        };
        push("misc_sqlmap", dmz);
        for (const auto& c : clients) {
            for (const auto& s : infect) push(s, c);
            for (const auto& s : misc) push(s, c);
            if (!after_misc && infected.count(c)) {
                for (const auto& s : c2) push(s, c);
            }
        }
    };
    recurse(recurse);
    return out;
}

// ---- files ----

class TempDir {
  public:
    explicit TempDir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("socsim-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace oracle
