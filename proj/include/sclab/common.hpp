#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace sclab {

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a requested grid would exceed the point budget. Carries the
// count the caller would have needed so callers can report actionable limits.
struct budget_error : error {
    std::size_t required_points;
    std::size_t allowed_points;
    budget_error(std::size_t need, std::size_t allow)
        : error("grid budget exceeded: need " + std::to_string(need) +
                " points, limit " + std::to_string(allow)),
          required_points(need), allowed_points(allow) {}
};

struct config_error : error {
    explicit config_error(const std::string& msg) : error("config: " + msg) {}
};

using Point = std::array<double, 2>;

// Shortest decimal string that round-trips to the same double. Used for all
// numeric file output so re-emission is byte identical.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw error("bad number: '" + s + "'");
    return v;
}

// Order-fixed pairwise reduction; deterministic for a fixed input vector.
inline double pairwise_sum(const double* a, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& a) {
    return pairwise_sum(a.data(), a.size());
}

inline double sq(double x) { return x * x; }

}  // namespace sclab
