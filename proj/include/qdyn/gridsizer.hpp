#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "units.hpp"

namespace qdyn {

enum class PadMode { LCT, SSCT };

inline PadMode pad_mode_from(const std::string& s)
{
    if (s == "LCT") return PadMode::LCT;
    if (s == "SSCT") return PadMode::SSCT;
    throw std::invalid_argument("unknown pad mode: " + s);
}

inline const char* to_string(PadMode m) { return m == PadMode::LCT ? "LCT" : "SSCT"; }

struct GridParams {
    double K_max = 0.0;
    double Delta = 0.0;
    double Delta_initial = 0.0;
    double L = 0.0;
    std::int64_t N_bar = 0;
    int n_p = 0;
    std::int64_t N = 0;
    int n_ISP = 0;
    int n_pad = 0;
    int n_bar_ISP = 0;
    int n_ext = 0;
};

inline double k_cutoff_electronic(double gamma_max, int l_max, double N_g, double Sigma, double delta)
{
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("k_cutoff_electronic: delta must lie in (0,1)");
    if (!(Sigma > 0.0) || !(gamma_max > 0.0) || !(N_g > 0.0))
        throw std::invalid_argument("k_cutoff_electronic: gamma_max, N_g and Sigma must be positive");
    double arg = 288.0 * std::sqrt(3.0) * N_g / (std::pow(delta, 4) * Sigma * Sigma);
    double inner = 2.0 * std::log(arg) + xlog_4x(l_max) + std::log(45.0);
    if (!(inner > 0.0)) throw std::domain_error("k_cutoff_electronic: radicand is not positive");
    return 2.0 * std::sqrt(2.0 * gamma_max) * std::sqrt(inner);
}

inline double k_cutoff_nuclear(double omega, double L, int N_hg, double delta)
{
    if (!(omega > 0.0) || !(L > 0.0) || N_hg < 1 || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("k_cutoff_nuclear: need omega > 0, L > 0, N_hg >= 1, delta in (0,1)");
    double geo = 1.0 / std::sqrt(2.0) + 2.0 * std::sqrt(pi) / (L * std::sqrt(omega));
    double inner = 2.0 * std::log(1.0 / delta) + std::log(geo) + xlog_4x(N_hg - 1) + 5.4;
    if (!(inner > 0.0)) throw std::domain_error("k_cutoff_nuclear: radicand is negative");
    return std::sqrt(2.0 * omega) * std::sqrt(inner);
}

// upper bound on the MPS bond dimension of a molecular orbital
inline double bond_dim_bound_electronic(int l_max, double N_g, double Sigma, double delta)
{
    if (!(delta > 0.0 && delta < 1.0) || !(Sigma > 0.0) || !(N_g > 0.0))
        throw std::invalid_argument("bond_dim_bound_electronic: invalid parameters");
    double arg = 288.0 * std::sqrt(3.0) * N_g / (std::pow(delta, 4) * Sigma * Sigma);
    double inner = 2.0 * std::log(arg) + xlog_4x(l_max) + 4.0;
    if (!(inner > 0.0)) throw std::domain_error("bond_dim_bound_electronic: bracket is not positive");
    return 8.0 * euler_e * euler_e * N_g * inner;
}

inline std::int64_t bond_dim_bound_nuclear(double K, double omega)
{
    if (!(omega > 0.0) || !(K >= 0.0)) throw std::invalid_argument("bond_dim_bound_nuclear: invalid parameters");
    double x = euler_e * euler_e * K * K / omega;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(x - 1e-9)));
}

inline std::int64_t data_qubits(int eta, int eta_e, int n_p)
{
    return 3LL * eta * n_p + eta_e;
}

// Padding for a dims-dimensional transform; dims = 3 eta_n in the molecular setting.
inline int pad_qubits_dims(PadMode mode, std::int64_t N_ISP, double norm_inf, int dims, int n_ISP)
{
    double inner;
    if (mode == PadMode::LCT) {
        double beta = 2.0 * dims * dims - 2.0 * dims + 1.0;
        inner = 1.619 * std::sqrt(static_cast<double>(dims)) * (static_cast<double>(N_ISP) * norm_inf + beta) + 1.0;
    } else {
        inner = static_cast<double>(N_ISP) * norm_inf + 1.0;
    }
    return std::max(0, ceil_log2_real(inner) - n_ISP);
}

inline int pad_qubits(PadMode mode, std::int64_t N_ISP, double norm_inf, int eta_n, int n_ISP)
{
    return pad_qubits_dims(mode, N_ISP, norm_inf, 3 * eta_n, n_ISP);
}

struct GridRequest {
    std::vector<double> K_candidates;
    std::vector<double> K_nuclear;
    double Delta_target = 0.0;
    PadMode pad_mode = PadMode::SSCT;
    double pad_norm = 1.0; // ||L||_inf for LCT, ||L^-T||_inf for SSCT
    int pad_dims = 0;
};

inline GridParams common_grid(const GridRequest& req)
{
    if (req.K_candidates.empty()) throw std::invalid_argument("common_grid: no cutoff candidates");
    if (!(req.Delta_target > 0.0)) throw std::invalid_argument("common_grid: Delta must be positive");
    GridParams g;
    g.K_max = *std::max_element(req.K_candidates.begin(), req.K_candidates.end());
    g.Delta_initial = req.Delta_target;
    g.L = 2.0 * pi / req.Delta_target;
    g.N_bar = 2 * static_cast<std::int64_t>(std::ceil(g.K_max / req.Delta_target - 1e-12)) + 1;
    g.n_p = ceil_log2(static_cast<std::uint64_t>(g.N_bar));
    g.N = pow2(g.n_p) - 1;
    g.Delta = 2.0 * g.K_max / static_cast<double>(g.N - 1);
    if (!req.K_nuclear.empty()) {
        std::int64_t widest = 0;
        for (double K : req.K_nuclear)
            widest = std::max(widest, 2 * static_cast<std::int64_t>(std::ceil(K / g.Delta - 1e-12)) + 1);
        g.n_ISP = ceil_log2(static_cast<std::uint64_t>(widest));
        g.n_pad = pad_qubits_dims(req.pad_mode, pow2(g.n_ISP), req.pad_norm, req.pad_dims, g.n_ISP);
    }
    g.n_bar_ISP = g.n_ISP + g.n_pad;
    g.n_ext = g.n_bar_ISP - g.n_p;
    return g;
}

} // namespace qdyn
