#pragma once

// Strict JSON object reading with field-path tracking. Internal to the library.

#include <functional>
#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace socsim::detail {

/// Raised for structural problems; `path` is the offending field.
struct JsonFieldError : std::runtime_error {
    JsonFieldError(std::string p, const std::string& msg)
        : std::runtime_error(p + ": " + msg), path(std::move(p))
    {
    }
    std::string path;
};

inline std::string join_path(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

class ObjectReader {
  public:
    ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw JsonFieldError(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    ObjectReader(nlohmann::json&&, std::string) = delete; // would dangle

    bool has(const std::string& key) const { return j_.contains(key); }

    const nlohmann::json& raw(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) {
            throw JsonFieldError(join_path(path_, key), "required field missing");
        }
        return *it;
    }

    template <class T>
    T required(const std::string& key)
    {
        return convert<T>(raw(key), join_path(path_, key));
    }

    template <class T>
    void optional(const std::string& key, T& out)
    {
        if (has(key)) {
            out = required<T>(key);
        }
    }

    std::string path(const std::string& key) const { return join_path(path_, key); }

    /// Rejects any key that was never read.
    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                throw JsonFieldError(join_path(path_, key), "unknown key");
            }
        }
    }

    template <class T>
    static T convert(const nlohmann::json& v, const std::string& path)
    {
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw JsonFieldError(path, "expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw JsonFieldError(path, "expected an integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw JsonFieldError(path, "expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw JsonFieldError(path, "expected a string");
            }
            return v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw JsonFieldError(path, e.what());
        }
    }

  private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline const nlohmann::json& require_array(const nlohmann::json& v, const std::string& path)
{
    if (!v.is_array()) {
        throw JsonFieldError(path, "expected an array");
    }
    return v;
}

inline std::string hex64(std::uint64_t v)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

} // namespace socsim::detail
