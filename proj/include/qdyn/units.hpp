#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qdyn {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_e = 2.71828182845904523536;

// 1 atomic unit of time in femtoseconds
inline constexpr double fs_per_au = 0.0241888;

inline double fs_to_au(double t_fs) { return t_fs / fs_per_au; }
inline double au_to_fs(double t_au) { return t_au * fs_per_au; }

inline double log2(double x) { return std::log2(x); }

// ceil(log2(x)) for integer x >= 1, computed without floating point
inline int ceil_log2(std::uint64_t x)
{
    if (x == 0) throw std::invalid_argument("ceil_log2 of zero");
    int n = 0;
    std::uint64_t p = 1;
    while (p < x) {
        p <<= 1;
        ++n;
    }
    return n;
}

// number of bits needed to write x in binary
inline int bit_length(std::uint64_t x)
{
    int n = 0;
    while (x) {
        x >>= 1;
        ++n;
    }
    return n;
}

// ceil(log2(x)) for real x > 0, robust to values that are exact powers of two
inline int ceil_log2_real(double x)
{
    if (!(x > 0.0)) throw std::invalid_argument("ceil_log2_real of non-positive value");
    double l = std::log2(x);
    double r = std::round(l);
    if (std::abs(l - r) < 1e-12) return static_cast<int>(r);
    return static_cast<int>(std::ceil(l));
}

// x ln x style terms with the 0 ln 0 limit
inline double xlog_4x(double x) { return x > 0.0 ? x * std::log(4.0 * x) : 0.0; }

inline std::int64_t pow2(int n) { return std::int64_t{1} << n; }

} // namespace qdyn
