#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "units.hpp"

namespace qdyn {

enum class NuMode { brute, bound, asymptotic };
enum class Strategy { OR, AND };

inline const char* to_string(Strategy s) { return s == Strategy::OR ? "OR" : "AND"; }

struct LcuNorms {
    double lambda_m = 0.0;
    double lambda_nu = 0.0;
    double lambda_T = 0.0;
    double lambda_V = 0.0;
    double lambda_H = 0.0;
    double lambda_H_tilde = 0.0;
    Strategy strategy = Strategy::OR;
    std::string lambda_nu_path;
};

struct PrecisionParams {
    int mu_T = 0;
    int n_M = 0;
    int n_theta = 0;
    double r_nu = 0.0;
};

struct SuccessProbs {
    double p_nu = 0.0;
    double p_zeta = 0.0;
    double Ps_3 = 0.0;
    double Ps_eta = 0.0;
    double P_eq = 0.0;
    std::string p_nu_path;
};

inline constexpr int brute_nu_cap = 6;

// integral of 1/|x|^2 over the cube [-1,1]^3
inline constexpr double cube_inverse_square_integral = 15.3482484448874640;

namespace detail {

inline std::int64_t grid_half_width(int n_p) { return pow2(n_p - 1) - 1; }

inline double lambda_nu_exact(int n_p)
{
    std::int64_t K = grid_half_width(n_p);
    // sum over the non-negative octant with multiplicity 2^(nonzero components)
    double total = 0.0;
    for (std::int64_t x = 0; x <= K; ++x) {
        double row = 0.0;
        for (std::int64_t y = 0; y <= K; ++y) {
            double col = 0.0;
            for (std::int64_t z = 0; z <= K; ++z) {
                std::int64_t r2 = x * x + y * y + z * z;
                if (r2 == 0) continue;
                col += (z ? 2.0 : 1.0) / static_cast<double>(r2);
            }
            row += (y ? 2.0 : 1.0) * col;
        }
        total += (x ? 2.0 : 1.0) * row;
    }
    return total;
}

} // namespace detail

inline double lambda_nu_bound(int n_p)
{
    return (7.0 * std::ldexp(1.0, n_p + 1) - 9.0 * n_p - 11.0 - 3.0 * std::ldexp(1.0, -n_p)) / 3.0;
}

inline double lambda_nu(int n_p, NuMode mode)
{
    if (n_p < 2) throw std::invalid_argument("lambda_nu: n_p must be >= 2");
    switch (mode) {
    case NuMode::bound:
        return lambda_nu_bound(n_p);
    case NuMode::brute:
        if (n_p > brute_nu_cap) throw std::invalid_argument("lambda_nu: brute mode is capped at n_p <= 6");
        return detail::lambda_nu_exact(n_p);
    case NuMode::asymptotic: {
        if (n_p <= brute_nu_cap) return detail::lambda_nu_exact(n_p);
        // linear growth in the half width, anchored at the largest brute-force grid
        double K_ref = static_cast<double>(detail::grid_half_width(brute_nu_cap));
        double K = static_cast<double>(detail::grid_half_width(n_p));
        return detail::lambda_nu_exact(brute_nu_cap) + cube_inverse_square_integral * (K - K_ref);
    }
    }
    return 0.0;
}

inline double r_nu(int n_p, double lambda_nu_value)
{
    return 4.0 / lambda_nu_value *
           (7.0 * std::ldexp(1.0, n_p + 1) - 9.0 * n_p - 11.0 - 3.0 * std::ldexp(1.0, -n_p));
}

inline double pair_charge_sum(const ParticleTable& p)
{
    double s1 = 0.0, s2 = 0.0;
    for (int z : p.charges) {
        s1 += std::abs(z);
        s2 += static_cast<double>(z) * z;
    }
    return s1 * s1 - s2;
}

inline LcuNorms lcu_norms(const ParticleTable& p, int n_p, double Omega)
{
    if (!(Omega > 0.0)) throw std::invalid_argument("lcu_norms: Omega must be positive");
    LcuNorms out;
    out.lambda_m = p.lambda_m();
    double half = static_cast<double>(detail::grid_half_width(n_p));
    out.lambda_T = 6.0 * pi * pi / std::cbrt(Omega * Omega) * half * half * out.lambda_m;
    out.lambda_nu = lambda_nu(n_p, NuMode::asymptotic);
    out.lambda_nu_path = n_p <= brute_nu_cap ? "brute" : "asymptotic";
    out.lambda_V = pair_charge_sum(p) / (2.0 * pi * std::cbrt(Omega)) * out.lambda_nu;
    out.lambda_H = out.lambda_T + out.lambda_V;
    return out;
}

inline double p_zeta(const ParticleTable& p)
{
    double s1 = 0.0, s2 = 0.0;
    for (int z : p.charges) {
        s1 += std::abs(z);
        s2 += static_cast<double>(z) * z;
    }
    return 1.0 - s2 / (s1 * s1);
}

inline constexpr int p_nu_enum_cap = 8;

// Exact double sum over the shells B_mu of the momentum grid.
inline double p_nu_exact(int n_p, int n_M)
{
    if (n_p < 2) throw std::invalid_argument("p_nu_exact: n_p must be >= 2");
    if (n_p > p_nu_enum_cap) throw std::invalid_argument("p_nu_exact: enumeration is capped at n_p <= 8");
    std::int64_t K = detail::grid_half_width(n_p);
    double M = std::ldexp(1.0, n_M);
    double total = 0.0;
    for (int mu = 2; mu <= n_p + 1; ++mu) {
        std::int64_t outer = pow2(mu - 1); // |nu_w| < outer
        std::int64_t inner = pow2(mu - 2); // some |nu_w| >= inner
        std::int64_t lim = std::min(outer - 1, K);
        double shell = 0.0;
        for (std::int64_t x = -lim; x <= lim; ++x)
            for (std::int64_t y = -lim; y <= lim; ++y)
                for (std::int64_t z = -lim; z <= lim; ++z) {
                    if (std::max({std::abs(x), std::abs(y), std::abs(z)}) < inner) continue;
                    double r2 = static_cast<double>(x * x + y * y + z * z);
                    double q = static_cast<double>(inner) * static_cast<double>(inner) / r2;
                    shell += std::ceil(M * q - 1e-12);
                }
        total += shell / (M * std::ldexp(1.0, 2 * mu) * std::ldexp(1.0, n_p + 1));
    }
    return total;
}

inline double round_half_up(double x) { return std::floor(x + 0.5); }

// success probability of preparing a uniform superposition over n states
inline double Ps(double n, int b_r)
{
    if (!(n >= 1.0)) throw std::invalid_argument("Ps: n must be >= 1");
    int k = ceil_log2(static_cast<std::uint64_t>(std::llround(n)));
    double x = n * std::ldexp(1.0, -k);
    double y = std::ldexp(1.0, b_r) / (2.0 * pi);
    double theta = round_half_up(y * std::asin(1.0 / std::sqrt(4.0 * x))) / y;
    double s = std::sin(theta);
    double a = 1.0 + (2.0 - 4.0 * x) * s * s;
    double s2 = std::sin(2.0 * theta);
    return x * (a * a + s2 * s2);
}

inline SuccessProbs success_probs(const ParticleTable& p, int n_p, int n_M, int b_r)
{
    if (b_r < 1) throw std::invalid_argument("success_probs: b_r must be >= 1");
    SuccessProbs s;
    if (n_p <= p_nu_enum_cap) {
        s.p_nu = p_nu_exact(n_p, n_M);
        s.p_nu_path = "exact";
    } else {
        s.p_nu = 0.25;
        s.p_nu_path = "nominal";
    }
    s.p_zeta = p_zeta(p);
    s.Ps_3 = Ps(3, 8);
    s.Ps_eta = Ps(p.eta(), b_r);
    s.P_eq = s.Ps_3 * s.Ps_eta * s.Ps_eta * s.Ps_eta;
    return s;
}

struct TildeLambda {
    double value = 0.0;
    Strategy strategy = Strategy::OR;
};

inline TildeLambda lambda_H_tilde(double lambda_T, double lambda_V, double p_nu, double p_zeta, double P_eq)
{
    if (!(p_nu > 0.0 && p_nu <= 1.0) || !(p_zeta > 0.0 && p_zeta <= 1.0) || !(P_eq > 0.0 && P_eq <= 1.0))
        throw std::invalid_argument("lambda_H_tilde: probabilities must lie in (0,1]");
    TildeLambda t;
    double pp = p_nu * p_zeta;
    t.value = std::max(lambda_T + lambda_V, lambda_V / pp) / P_eq;
    t.strategy = (1.0 - pp <= lambda_T / (lambda_T + lambda_V)) ? Strategy::OR : Strategy::AND;
    return t;
}

inline int ceil_log2_ratio(double num, double den)
{
    if (!(num > 0.0) || !(den > 0.0)) throw std::invalid_argument("precision parameters need positive inputs");
    return std::max(0, ceil_log2_real(num / den));
}

inline PrecisionParams precision_params(double lambda_T, double lambda_V, double lambda_tilde, double eps_T,
                                        double eps_V, double eps_theta, int n_p)
{
    PrecisionParams pp;
    pp.r_nu = r_nu(n_p, lambda_nu(n_p, NuMode::asymptotic));
    pp.mu_T = ceil_log2_ratio(lambda_T, eps_T);
    pp.n_M = ceil_log2_ratio(lambda_V * pp.r_nu, eps_V);
    pp.n_theta = ceil_log2_ratio(lambda_tilde, eps_theta);
    return pp;
}

inline double block_error(double eps_T, double eps_V, double lambda_tilde, int n_theta)
{
    if (n_theta < 0) throw std::invalid_argument("block_error: n_theta must be >= 0");
    return eps_T + eps_V + 2.0 * lambda_tilde * std::ldexp(1.0, -n_theta);
}

} // namespace qdyn
