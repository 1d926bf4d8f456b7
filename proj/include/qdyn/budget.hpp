#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"

namespace qdyn {

// Default split at eps_total = 0.095, lambda_O = 1.
inline constexpr double default_eps_reference = 0.095;
inline constexpr double default_eps_QAE = 0.0625;
inline constexpr double default_eps_ISP = 0.015;
inline constexpr double default_eps_prop = 0.00125;

inline void check_budget(const ErrorBudget& b, double tol = 1e-12)
{
    for (double v : {b.eps_ISP, b.eps_prop, b.eps_B, b.eps_QAE, b.eps_O})
        if (v < 0.0) throw std::invalid_argument("budget: allocations must be non-negative");
    if (b.composed() > b.eps_total * (1.0 + tol) + tol)
        throw std::invalid_argument("budget: 2 lambda_O (eps_ISP + eps_prop + eps_B) + eps_meas exceeds eps_total");
}

// ISP and propagation shares are divided by lambda_O so the split stays feasible.
inline ErrorBudget allocate(double eps_total, double lambda_O, const std::string& policy = "paper_default",
                            const json& custom = json::object())
{
    if (!(eps_total > 0.0 && eps_total < 1.0)) throw std::invalid_argument("allocate: eps_total must lie in (0,1)");
    if (!(lambda_O > 0.0)) throw std::invalid_argument("allocate: lambda_O must be positive");
    ErrorBudget b;
    b.eps_total = eps_total;
    b.lambda_O = lambda_O;
    if (policy == "paper_default") {
        double s = eps_total / default_eps_reference;
        b.eps_QAE = default_eps_QAE * s;
        b.eps_ISP = default_eps_ISP * s / lambda_O;
        b.eps_prop = default_eps_prop * s / lambda_O;
        double rest = eps_total - (2.0 * lambda_O * (b.eps_ISP + b.eps_prop) + b.eps_QAE);
        if (rest < 0.0) rest = 0.0;
        b.eps_O = rest / 2.0;
        b.eps_B = rest / (4.0 * lambda_O);
    } else if (policy == "custom") {
        auto get = [&](const char* k) {
            if (!custom.contains(k)) throw std::invalid_argument(std::string("allocate: custom split is missing ") + k);
            return custom.at(k).get<double>();
        };
        b.eps_QAE = get("eps_QAE");
        b.eps_ISP = get("eps_ISP");
        b.eps_prop = get("eps_prop");
        b.eps_B = custom.value("eps_B", 0.0);
        b.eps_O = custom.value("eps_O", 0.0);
    } else {
        throw std::invalid_argument("allocate: unknown budget policy '" + policy + "'");
    }
    b.eps_meas = b.eps_QAE + b.eps_O;
    check_budget(b);
    return b;
}

// ---------------------------------------------------------------------------
// ISP error composition

inline double asp_error_bound(int b_asp, double D)
{
    if (!(D >= 1.0)) throw std::invalid_argument("asp_error_bound: D must be >= 1");
    return 2.0 * pi * std::ldexp(1.0, -b_asp) * std::log2(D);
}

struct IspErrorInputs {
    double eps_asp_e = 0.0;
    double eps_asp_n = 0.0;
    double eps_asp_en = 0.0;
    int eta_e = 0;
    std::vector<double> eps_orbital;       // per molecular orbital, eps_a
    std::vector<double> eps_modal_c;       // per (i, mu) preprocessing error
    std::vector<double> eps_modal_q;       // per (i, mu) synthesis error
    double eps_shear = 0.0;
    double eps_ortho = 0.0;
    double eps_PK = 0.0;
    double eps_trim = 0.0;
    double sum_abs_C = 1.0;
};

struct IspErrorBound {
    double electronic = 0.0;
    double nuclear = 0.0;
    double total = 0.0;
};

inline IspErrorBound isp_error_bound(bool separable, const IspErrorInputs& in)
{
    const double c = std::pow(2.0, 1.5);
    double orb = 0.0, modal = 0.0;
    for (double e : in.eps_orbital) orb += e;
    for (double e : in.eps_modal_c) modal += e;
    for (double e : in.eps_modal_q) modal += e;
    IspErrorBound b;
    b.electronic = c * in.eta_e * orb;
    double transform = in.eps_shear + in.eps_ortho + in.eps_PK;
    if (separable) {
        b.electronic += in.eps_asp_e;
        b.nuclear = in.eps_asp_n + c * modal + transform + in.eps_trim;
        b.total = b.electronic + b.nuclear;
    } else {
        b.nuclear = c * modal + in.sum_abs_C * transform;
        b.total = in.eps_asp_en + in.eps_trim + b.electronic + b.nuclear;
    }
    return b;
}

// ---------------------------------------------------------------------------
// propagation error

inline double prop_error(double eps_H, double t_au, double d_tilde, double eps_dtilde, double eps_rot,
                         double eps_phi, double eps_gamma)
{
    for (double v : {eps_H, t_au, d_tilde, eps_dtilde, eps_rot, eps_phi, eps_gamma})
        if (v < 0.0) throw std::invalid_argument("prop_error: arguments must be non-negative");
    return eps_H * t_au + eps_dtilde + (d_tilde + 1.0) * (eps_rot + eps_phi + eps_gamma);
}

// ---------------------------------------------------------------------------
// trimming error by Monte Carlo

struct TrimEstimate {
    double bound = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t inside = 0;
    bool all_inside = false;
    std::uint64_t seed = 0;
};

inline double trim_bound(double N_MC, double alpha, double N_inside)
{
    if (!(N_MC >= 1.0)) throw std::invalid_argument("trim bound: N_MC must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("trim bound: alpha must lie in (0,1)");
    if (N_inside >= N_MC) return std::sqrt(-std::expm1(std::log(alpha) / N_MC));
    return std::sqrt(1.0 - N_inside / N_MC);
}

using Rng = std::mt19937_64;
using PointSampler = std::function<bool(Rng&)>; // true when the drawn point is inside the interior box

inline TrimEstimate trim_error_mc(const PointSampler& sampler, std::uint64_t N_MC, double alpha, std::uint64_t seed)
{
    if (N_MC < 1) throw std::invalid_argument("trim_error_mc: N_MC must be >= 1");
    Rng rng(seed);
    TrimEstimate t;
    t.seed = seed;
    t.samples = N_MC;
    for (std::uint64_t k = 0; k < N_MC; ++k)
        if (sampler(rng)) ++t.inside;
    t.all_inside = t.inside == N_MC;
    t.bound = trim_bound(static_cast<double>(N_MC), alpha, static_cast<double>(t.inside));
    return t;
}

// Draws integer grid points from a discretized Gaussian with the given covariance (grid units)
// and reports whether every coordinate lies in [-half, half].
inline PointSampler gaussian_box_sampler(const Eigen::MatrixXd& cov, std::int64_t half)
{
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("gaussian_box_sampler: covariance must be SPD");
    Eigen::MatrixXd C = llt.matrixL();
    return [C, half](Rng& rng) {
        std::normal_distribution<double> z;
        Eigen::VectorXd v(C.rows());
        for (int k = 0; k < v.size(); ++k) v(k) = z(rng);
        Eigen::VectorXd x = C * v;
        for (int k = 0; k < x.size(); ++k) {
            double r = std::floor(x(k) + 0.5);
            if (r < -static_cast<double>(half) || r > static_cast<double>(half)) return false;
        }
        return true;
    };
}

} // namespace qdyn
