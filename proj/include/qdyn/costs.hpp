#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "units.hpp"

namespace qdyn {

// Toffoli and ancilla counts kept as reals; ceilings are applied when reporting.
struct CostPair {
    double toffoli = 0.0;
    double ancilla = 0.0;
    bool bound = false; // the formula is an upper bound

    CostPair operator+(const CostPair& o) const { return {toffoli + o.toffoli, ancilla + o.ancilla, bound || o.bound}; }
};

inline std::int64_t report_count(double x) { return static_cast<std::int64_t>(std::ceil(x - 1e-9)); }

namespace detail {

inline double clamp0(double x) { return std::max(0.0, x); }

inline CostPair pair(double toffoli, double ancilla, bool bound = false)
{
    return {clamp0(toffoli), clamp0(ancilla), bound};
}

} // namespace detail

struct Erasure {
    std::int64_t cost = 0;
    int k = 0;
};

inline Erasure erasure_cost(std::int64_t eta)
{
    if (eta < 1) throw std::invalid_argument("erasure_cost: eta must be >= 1");
    Erasure best{eta + 1, 0};
    for (int k = 1; pow2(k) <= 2 * eta; ++k) {
        std::int64_t p = pow2(k);
        std::int64_t c = (eta + p - 1) / p + p;
        if (c < best.cost) best = {c, k};
    }
    return best;
}

// ---------------------------------------------------------------- ISP

enum class IspKind { ASP, SoSlat, ONB2MOB, ASYM, W_e, ONB2SMB, W_n, LCT, SSCT, PK, TC2SM };

inline const char* to_string(IspKind k)
{
    switch (k) {
    case IspKind::ASP: return "ASP";
    case IspKind::SoSlat: return "SoSlat";
    case IspKind::ONB2MOB: return "ONB2MOB";
    case IspKind::ASYM: return "ASYM";
    case IspKind::W_e: return "W_e";
    case IspKind::ONB2SMB: return "ONB2SMB";
    case IspKind::W_n: return "W_n";
    case IspKind::LCT: return "LCT";
    case IspKind::SSCT: return "SSCT";
    case IspKind::PK: return "PK";
    case IspKind::TC2SM: return "TC2SM";
    }
    return "?";
}

using BondTable = std::vector<std::vector<int>>;           // [orbital][site]
using ModalBondTable = std::vector<std::vector<std::vector<int>>>; // [mode][modal][site]

struct IspParams {
    std::optional<double> D;
    std::optional<int> b_asp;
    std::optional<int> N_MOB;
    std::optional<int> eta_e;
    std::optional<int> n_p;
    std::optional<BondTable> m_e;
    std::optional<int> b_rot;
    std::optional<int> N_SMB;
    std::optional<int> N_vib;
    std::optional<ModalBondTable> m_n;
    std::optional<int> n_ISP;
    std::optional<int> eta_n;
    std::optional<int> n_bar_ISP;
    std::optional<int> b_grad;
    std::optional<double> eps_PK;
};

namespace detail {

template <class T>
const T& param(const std::optional<T>& v, const char* name, IspKind kind)
{
    if (!v) throw std::invalid_argument(std::string("cost_isp(") + to_string(kind) + "): missing parameter " + name);
    return *v;
}

inline double rounded_pow2(int m) { return static_cast<double>(pow2(ceil_log2(static_cast<std::uint64_t>(m)))); }

// sum over one MPS of the per-site synthesis terms, with m_0 = 1
inline double mps_synthesis_sum(const std::vector<int>& m, int b_rot)
{
    double total = 0.0;
    int prev = 1;
    for (int mi : m) {
        if (mi < 1) throw std::invalid_argument("bond dimensions must be >= 1");
        double mbar = std::max(rounded_pow2(prev), rounded_pow2(mi));
        total += 32.0 * (1.0 + std::sqrt(2.0)) * std::sqrt(b_rot + 1.0) * mi * std::sqrt(mbar) +
                 (8.0 * b_rot - 15.0) * mi * std::log2(2.0 * mbar);
        prev = mi;
    }
    return total;
}

inline double synthesis_ancilla(double m_max, int b_rot)
{
    return 0.5 * std::log2(m_max) + 2.0 * b_rot * std::sqrt(m_max) / std::sqrt(b_rot + 1.0) +
           0.5 * std::log2(b_rot + 1.0) + 3.0 * b_rot;
}

} // namespace detail

inline CostPair cost_asp(double D, int b)
{
    if (!(D >= 1.0) || b < 0) throw std::invalid_argument("cost_asp: need D >= 1 and b >= 0");
    double lD = std::log2(D);
    double anc = 0.5 * lD + D * b / (4.0 * std::sqrt(b + 1.0)) + 0.5 * std::log2(b + 1.0) + 3.0 * b - 4.0;
    double toff = std::pow(2.0, 2.5) * (1.0 + std::sqrt(2.0)) * D * std::sqrt(b + 1.0) + 2.0 * lD * (b - 4.0);
    return detail::pair(toff, anc);
}

inline CostPair cost_soslat(double D)
{
    if (!(D >= 1.0)) throw std::invalid_argument("cost_soslat: need D >= 1");
    double lD = std::log2(D);
    return detail::pair(D * (2.0 * lD + 3.0), 5.0 * lD - 3.0, true);
}

inline CostPair cost_isp(IspKind kind, const IspParams& p)
{
    using detail::param;
    switch (kind) {
    case IspKind::ASP:
        return cost_asp(param(p.D, "D", kind), param(p.b_asp, "b_asp", kind));
    case IspKind::SoSlat:
        return cost_soslat(param(p.D, "D", kind));
    case IspKind::ONB2MOB: {
        double N = param(p.N_MOB, "N_MOB", kind);
        int ee = param(p.eta_e, "eta_e", kind);
        double c = ceil_log2(static_cast<std::uint64_t>(ee + 1));
        double cN = ceil_log2(static_cast<std::uint64_t>(N));
        return detail::pair(N * (2.0 * ee + c + ee * cN - 4.0), N + 3.0 * c);
    }
    case IspKind::ASYM: {
        int ee = param(p.eta_e, "eta_e", kind);
        int np = param(p.n_p, "n_p", kind);
        if (ee < 1) throw std::invalid_argument("cost_isp(ASYM): eta_e must be >= 1");
        double nb = static_cast<double>(pow2(ceil_log2(static_cast<std::uint64_t>(np + 1))));
        double ln = std::log2(nb);
        double sort = 0.25 * nb * ln * (1.0 + ln);
        double anc = ee * std::log2(static_cast<double>(ee)) + sort + 2.0 * (ee - 1);
        double toff = 2.0 * (ee - 1) * (ln + 1.0) + sort * (6.0 * ln + np + 1.0);
        return detail::pair(toff, anc);
    }
    case IspKind::W_e: {
        int N = param(p.N_MOB, "N_MOB", kind);
        int ee = param(p.eta_e, "eta_e", kind);
        int np = param(p.n_p, "n_p", kind);
        int b = param(p.b_rot, "b_rot", kind);
        const auto& m = param(p.m_e, "bond dims", kind);
        double sum = 0.0;
        int m_max = 1;
        for (const auto& orb : m) {
            sum += detail::mps_synthesis_sum(orb, b);
            for (int x : orb) m_max = std::max(m_max, x);
        }
        double toff = static_cast<double>(ee) * N * np + 2.0 * ee * sum;
        double anc = static_cast<double>(N) * np + detail::synthesis_ancilla(m_max, b);
        return detail::pair(toff, anc, true);
    }
    case IspKind::ONB2SMB: {
        double N = param(p.N_SMB, "N_SMB", kind);
        double V = param(p.N_vib, "N_vib", kind);
        double cN = ceil_log2(static_cast<std::uint64_t>(N));
        return detail::pair(V * N * (cN - 2.0), N + 3.0);
    }
    case IspKind::W_n: {
        int nI = param(p.n_ISP, "n_ISP", kind);
        int b = param(p.b_rot, "b_rot", kind);
        const auto& m = param(p.m_n, "bond dims", kind);
        double toff = 0.0;
        int m_max = 1;
        for (const auto& mode : m) {
            double inner = 0.0;
            for (const auto& modal : mode) {
                inner += detail::mps_synthesis_sum(modal, b);
                for (int x : modal) m_max = std::max(m_max, x);
            }
            toff += static_cast<double>(mode.size()) * nI + 2.0 * inner;
        }
        return detail::pair(toff, detail::synthesis_ancilla(m_max, b), true);
    }
    case IspKind::LCT: {
        double e = param(p.eta_n, "eta_n", kind);
        double n = param(p.n_bar_ISP, "n_bar_ISP", kind);
        double toff = 4.5 * e * e * (8.0 * n * n + 39.0 * n - 8.0) - 1.5 * e * (8.0 * n * n + 35.0 * n - 8.0) - n;
        return detail::pair(toff, 4.0 * n - 3.0);
    }
    case IspKind::SSCT: {
        double e = param(p.eta_n, "eta_n", kind);
        double n = param(p.n_bar_ISP, "n_bar_ISP", kind);
        double toff = 9.0 * e * e * (n * n + 4.0 * n - 1.0) - 3.0 * e * (n * n + 2.0 * n - 1.0) - 2.0 * n;
        return detail::pair(toff, 4.0 * n - 3.0);
    }
    case IspKind::PK: {
        double e = param(p.eta_n, "eta_n", kind);
        double n = param(p.n_bar_ISP, "n_bar_ISP", kind);
        double bg = param(p.b_grad, "b_grad", kind);
        double eps = param(p.eps_PK, "eps_PK", kind);
        if (!(eps > 0.0)) throw std::invalid_argument("cost_isp(PK): eps_PK must be positive");
        double toff = 3.0 * e * (4.0 * n * bg + bg - 2.0 * n) + bg * (1.149 * std::log2(bg / eps) + 9.2) / 4.0;
        return detail::pair(toff, 4.0 * bg + 2.0 * n - 1.0);
    }
    case IspKind::TC2SM: {
        double e = param(p.eta_n, "eta_n", kind);
        double n = param(p.n_bar_ISP, "n_bar_ISP", kind);
        return detail::pair(3.0 * e * (n - 2.0), n - 2.0);
    }
    }
    throw std::invalid_argument("cost_isp: unknown kind");
}

enum class IspMode { separable, nonseparable };

inline IspMode isp_mode_from(const std::string& s)
{
    if (s == "separable") return IspMode::separable;
    if (s == "nonseparable") return IspMode::nonseparable;
    throw std::invalid_argument("unknown ISP mode: " + s);
}

inline const char* to_string(IspMode m) { return m == IspMode::separable ? "separable" : "nonseparable"; }

// Component names: ASP_e, SoSlat_e, ONB2MOB, ASYM, W_e, ASP_n, SoSlat_n, ONB2SMB, W_n,
// U_A (the LCT or SSCT), PK, TC2SM, ASP_en, SoSlat_en.
using IspComponents = std::map<std::string, CostPair>;

struct IspTotal {
    CostPair total;
    CostPair electronic;
    CostPair nuclear;
    std::string ancilla_argmax;
};

inline IspTotal cost_isp_total(IspMode mode, const IspComponents& c, int eta_n, int n_ext)
{
    auto get = [&](const std::string& k) -> const CostPair& {
        auto it = c.find(k);
        if (it == c.end()) throw std::invalid_argument("cost_isp_total: missing component " + k);
        return it->second;
    };
    std::vector<std::string> e_names{"ONB2MOB", "ASYM", "W_e"};
    std::vector<std::string> n_names{"ONB2SMB", "W_n", "U_A", "PK", "TC2SM"};
    if (mode == IspMode::separable) {
        e_names.insert(e_names.begin(), {"ASP_e", "SoSlat_e"});
        n_names.insert(n_names.begin(), {"ASP_n", "SoSlat_n"});
    }
    double ext = 3.0 * eta_n * std::max(0, n_ext);

    IspTotal out;
    std::string e_arg, n_arg;
    for (const auto& k : e_names) {
        const CostPair& x = get(k);
        out.electronic.toffoli += x.toffoli;
        out.electronic.bound = out.electronic.bound || x.bound;
        if (e_arg.empty() || x.ancilla > out.electronic.ancilla) {
            out.electronic.ancilla = x.ancilla;
            e_arg = k;
        }
    }
    double n_max = 0.0;
    for (const auto& k : n_names) {
        const CostPair& x = get(k);
        out.nuclear.toffoli += x.toffoli;
        out.nuclear.bound = out.nuclear.bound || x.bound;
        if (n_arg.empty() || x.ancilla > n_max) {
            n_max = x.ancilla;
            n_arg = k;
        }
    }
    out.nuclear.ancilla = ext + n_max;

    out.total.toffoli = out.electronic.toffoli + out.nuclear.toffoli;
    out.total.bound = out.electronic.bound || out.nuclear.bound;
    out.total.ancilla = out.electronic.ancilla;
    out.ancilla_argmax = e_arg;
    if (out.nuclear.ancilla > out.total.ancilla) {
        out.total.ancilla = out.nuclear.ancilla;
        out.ancilla_argmax = n_arg;
    }
    if (mode == IspMode::nonseparable) {
        for (const std::string k : {"ASP_en", "SoSlat_en"}) {
            const CostPair& x = get(k);
            out.total.toffoli += x.toffoli;
            out.total.bound = out.total.bound || x.bound;
            if (x.ancilla > out.total.ancilla) {
                out.total.ancilla = x.ancilla;
                out.ancilla_argmax = k;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- block encoding

enum class BlockKind { PREP_T, UNPREP_T, PREP_V, UNPREP_V, R_z, PREP_H, UNPREP_H, SEL_H, CTRL_SEL_H, REFLECT_W };

inline const char* to_string(BlockKind k)
{
    switch (k) {
    case BlockKind::PREP_T: return "PREP_T";
    case BlockKind::UNPREP_T: return "UNPREP_T";
    case BlockKind::PREP_V: return "PREP_V";
    case BlockKind::UNPREP_V: return "UNPREP_V";
    case BlockKind::R_z: return "R_z";
    case BlockKind::PREP_H: return "PREP_H";
    case BlockKind::UNPREP_H: return "UNPREP_H";
    case BlockKind::SEL_H: return "SEL_H";
    case BlockKind::CTRL_SEL_H: return "CTRL_SEL_H";
    case BlockKind::REFLECT_W: return "REFLECT_W";
    }
    return "?";
}

struct BlockParams {
    int eta = 0;
    int eta_e = 0;
    int n_p = 0;
    int mu_T = 0;
    int n_M = 0;
    int n_theta = 0;
    int b_r = 8;

    int n_eta() const { return ceil_log2(static_cast<std::uint64_t>(eta)); }
    int log_2eta_e() const { return ceil_log2(static_cast<std::uint64_t>(2 * eta_e)); }
    // size of the output register of the inverse Hamiltonian preparation
    double out() const { return n_eta() + 6.0 * n_p + n_M + 2.0 * log_2eta_e() + 11.0; }
};

inline CostPair cost_block_encoding(BlockKind kind, const BlockParams& p)
{
    if (p.eta < 1 || p.eta_e < 1 || p.n_p < 1)
        throw std::invalid_argument("cost_block_encoding: need eta >= 1, eta_e >= 1, n_p >= 1");
    if (p.mu_T < 0 || p.n_M < 0 || p.n_theta < 0 || p.b_r < 1)
        throw std::invalid_argument("cost_block_encoding: precision parameters must be non-negative");
    const double eta = p.eta, ee = p.eta_e, np = p.n_p, mu = p.mu_T, nM = p.n_M, nth = p.n_theta, br = p.b_r;
    const double ne = p.n_eta(), c2 = p.log_2eta_e();
    switch (kind) {
    case BlockKind::PREP_T:
        return detail::pair(eta + mu + 4.0 * ne + 2.0 * np + 14.0, 3.0 * ne + 3.0 * mu + 2.0 * np + 8.0);
    case BlockKind::UNPREP_T: {
        Erasure er = erasure_cost(p.eta);
        return detail::pair(er.cost + 4.0 * ne + 2.0 * np + 16.0, er.k);
    }
    case BlockKind::PREP_V:
        return detail::pair(4.0 * ee + ne + 6.0 * c2 + 4.0 * br - 24.0 + 3.0 * np * np + 11.0 * np + 4.0 * nM * (np + 1.0),
                            3.0 * np * np + 10.0 * np + 6.0 * c2 + 3.0 * ne + 5.0 * nM + 4.0 * nM * np + 14.0);
    case BlockKind::UNPREP_V: {
        Erasure er = erasure_cost(2 * p.eta_e);
        return detail::pair(ne + 2.0 * er.cost + 6.0 * c2 + 4.0 * br - 19.0 + 4.0 * (np - 1.0), er.k);
    }
    case BlockKind::R_z:
        return detail::pair(nth - 3.0, nth);
    case BlockKind::PREP_H:
        return cost_block_encoding(BlockKind::PREP_T, p) + cost_block_encoding(BlockKind::PREP_V, p) +
               cost_block_encoding(BlockKind::R_z, p);
    case BlockKind::UNPREP_H:
        return cost_block_encoding(BlockKind::UNPREP_T, p) + cost_block_encoding(BlockKind::UNPREP_V, p) +
               cost_block_encoding(BlockKind::R_z, p);
    case BlockKind::SEL_H:
        // 5 n_p and 24 n_p kept as separate terms
        return detail::pair(18.0 * eta * np + 6.0 * eta + 5.0 * np + 24.0 * np - 9.0, 5.0 * np + ne + 11.0);
    case BlockKind::CTRL_SEL_H: {
        CostPair s = cost_block_encoding(BlockKind::SEL_H, p);
        s.toffoli += 1.0;
        return s;
    }
    case BlockKind::REFLECT_W:
        return detail::pair(p.out() - 1.0, p.out() - 2.0);
    }
    throw std::invalid_argument("cost_block_encoding: unknown kind");
}

// ---------------------------------------------------------------- walk and propagator

struct WalkInputs {
    CostPair prep_H;
    CostPair sel_H;
    CostPair ctrl_sel_H;
    CostPair unprep_H;
    CostPair reflect;
    double out = 0.0;
};

inline WalkInputs walk_inputs(const BlockParams& p)
{
    return {cost_block_encoding(BlockKind::PREP_H, p), cost_block_encoding(BlockKind::SEL_H, p),
            cost_block_encoding(BlockKind::CTRL_SEL_H, p), cost_block_encoding(BlockKind::UNPREP_H, p),
            cost_block_encoding(BlockKind::REFLECT_W, p), p.out()};
}

struct WalkCost {
    CostPair ctrl_W;
    CostPair W;
    CostPair U_H;
};

inline WalkCost cost_walk(const WalkInputs& w)
{
    WalkCost c;
    c.U_H.toffoli = w.prep_H.toffoli + w.sel_H.toffoli + w.unprep_H.toffoli;
    c.U_H.ancilla = w.prep_H.ancilla + w.sel_H.ancilla;
    c.ctrl_W.toffoli = w.prep_H.toffoli + w.ctrl_sel_H.toffoli + w.unprep_H.toffoli + w.reflect.toffoli;
    c.ctrl_W.ancilla = std::max(c.U_H.ancilla, 2.0 * (w.out - 1.0));
    // the uncontrolled reflection has one control fewer
    c.W.toffoli = c.U_H.toffoli + std::max(0.0, w.out - 2.0);
    c.W.ancilla = c.ctrl_W.ancilla;
    return c;
}

inline double qsp_degree(double lambda_tilde, double t_au, double eps_dtilde)
{
    if (!(t_au >= 0.0)) throw std::invalid_argument("qsp_degree: t must be >= 0");
    if (!(eps_dtilde > 0.0 && eps_dtilde < 1.0)) throw std::invalid_argument("qsp_degree: eps must lie in (0,1)");
    if (!(lambda_tilde >= 0.0)) throw std::invalid_argument("qsp_degree: lambda must be >= 0");
    return lambda_tilde * t_au + std::log2(1.0 / eps_dtilde);
}

inline double qsp_rotation_toffoli(double eps_rot)
{
    if (!(eps_rot > 0.0)) throw std::invalid_argument("qsp rotation: eps_rot must be positive");
    return 0.5 * (0.56 * std::log2(1.0 / eps_rot) + 5.3);
}

inline CostPair cost_propagator(double d_tilde, const WalkCost& walk, double eps_rot)
{
    if (!(d_tilde >= 0.0)) throw std::invalid_argument("cost_propagator: degree must be >= 0");
    double d = std::ceil(d_tilde - 1e-9);
    CostPair c;
    c.toffoli = 2.0 * walk.ctrl_W.toffoli + d * walk.W.toffoli + (d + 1.0) * qsp_rotation_toffoli(eps_rot);
    c.ancilla = 2.0 + walk.ctrl_W.ancilla;
    c.bound = walk.ctrl_W.bound || walk.W.bound;
    return c;
}

// ---------------------------------------------------------------- measurement

inline CostPair cost_qft(double n, double eps)
{
    if (!(n >= 1.0) || !(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("cost_qft: need n >= 1 and eps in (0,1)");
    double l = std::log2(n / eps);
    return detail::pair(4.0 * n * (l - 2.0) + 0.6 * std::log2(n * l / eps), 0.0);
}

inline CostPair cost_indicator(int B_j, int n_p, int n_nuc)
{
    if (B_j < 1) throw std::invalid_argument("cost_indicator: a channel needs at least one constraint");
    if (n_p < 1 || n_nuc < 2) throw std::invalid_argument("cost_indicator: need n_p >= 1 and two nuclei");
    double np = n_p;
    return detail::pair(3.0 * B_j * (2.0 * np * np + 2.0 * np - 3.0) + 3.0 * n_nuc * (np - 2.0) - 1.0,
                        3.0 * np * np - np);
}

inline CostPair cost_reflect_qae(int eta_e, int n_p, int eta_n, int n_bar_ISP)
{
    double t = 3.0 * eta_e * n_p + 3.0 * eta_n * n_bar_ISP;
    return detail::pair(t, t - 1.0);
}

// ---------------------------------------------------------------- totals

struct TotalInputs {
    CostPair isp;
    CostPair prop;
    CostPair qft;
    CostPair indicator;
    CostPair reflect_qae;
    double lambda_O = 1.0;
    double eps_QAE = 0.0625;
    int eta_n = 0;
    int n_ext = 0;
};

struct TotalCost {
    double U_tilde = 0.0;  // one dynamics run: ISP, propagation, basis change
    double iterate = 0.0;  // one QAE iterate
    double qae_calls = 0.0;
    double qae = 0.0;
    double total = 0.0;
    int s = 0;
    double anc_iterate = 0.0;
    double anc_total = 0.0;
    std::string anc_argmax;
};

inline TotalCost cost_total(const TotalInputs& in)
{
    if (!(in.eps_QAE > 0.0)) throw std::invalid_argument("cost_total: eps_QAE must be positive");
    if (!(in.lambda_O > 0.0)) throw std::invalid_argument("cost_total: lambda_O must be positive");
    TotalCost t;
    t.U_tilde = in.qft.toffoli + in.prop.toffoli + in.isp.toffoli;
    t.iterate = 2.0 * (in.indicator.toffoli + t.U_tilde) + in.reflect_qae.toffoli;
    t.qae_calls = in.lambda_O / (2.0 * in.eps_QAE);
    t.qae = t.qae_calls * t.iterate;
    t.total = t.U_tilde + t.qae;
    t.s = std::max(0, ceil_log2_real(in.lambda_O / in.eps_QAE));

    double ext = 3.0 * in.eta_n * std::max(0, in.n_ext);
    std::vector<std::pair<std::string, double>> chain{
        {"indicator", in.indicator.ancilla - 1.0},
        {"propagator", in.prop.ancilla},
        {"ISP", in.isp.ancilla - ext},
        {"reflect_QAE", in.reflect_qae.ancilla},
    };
    double best = chain.front().second;
    t.anc_argmax = chain.front().first;
    for (const auto& [name, v] : chain)
        if (v > best) {
            best = v;
            t.anc_argmax = name;
        }
    t.anc_iterate = 1.0 + ext + best;
    t.anc_total = t.s + t.anc_iterate;
    return t;
}

} // namespace qdyn
