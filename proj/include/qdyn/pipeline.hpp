#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "budget.hpp"
#include "costs.hpp"
#include "encoding.hpp"
#include "gridsizer.hpp"
#include "lct.hpp"
#include "model.hpp"
#include "units.hpp"

namespace qdyn {

inline constexpr const char* estimator_version = "1.0.0";

// QFT precision used when the budget leaves nothing for the basis change
inline constexpr double eps_qft_floor = 1e-10;

// Time-evolution anchor for the largest tabulated molecule.
struct EvolutionAnchor {
    double lambda_tilde = 1.50e7;
    double t_fs = 30.0;
    int n_p = 16;
    int eta = 58;
    int eta_e = 52;
    double toffoli = 1.35e15;
};

inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string hash_json(const json& j) { return hex64(fnv1a(j.dump())); }

struct CostRow {
    std::string subroutine;
    double toffoli = 0.0;
    double ancilla = 0.0;
    bool is_bound = false;
    std::string params_hash;
};

struct EstimateOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> budget_policy;
    std::optional<double> trim_N_MC;
};

struct PropagationPlan {
    double eps_H = 0.0, eps_T = 0.0, eps_V = 0.0, eps_theta = 0.0;
    double eps_dtilde = 0.0, eps_rot = 0.0;
    double eps_H_achieved = 0.0;
    double d_tilde = 0.0;
    double eps_prop_achieved = 0.0;
};

struct EncodingPlan {
    LcuNorms norms;
    PrecisionParams precision;
    SuccessProbs probs;
    TildeLambda tilde;
    PropagationPlan prop;
};

// Splits the propagation budget: half to the block encoding over time t, a quarter to the
// QSP degree and a quarter shared equally by the phase rotations.
inline EncodingPlan plan_encoding(const ParticleTable& p, int n_p, double Omega, double t_au, double eps_prop,
                                  int b_r)
{
    if (!(eps_prop > 0.0)) throw std::invalid_argument("plan_encoding: eps_prop must be positive");
    EncodingPlan e;
    e.norms = lcu_norms(p, n_p, Omega);
    auto& pr = e.prop;
    pr.eps_H = t_au > 0.0 ? eps_prop / (2.0 * t_au) : eps_prop / 2.0;
    pr.eps_T = pr.eps_V = pr.eps_theta = pr.eps_H / 4.0;

    e.precision.r_nu = r_nu(n_p, lambda_nu(n_p, NuMode::asymptotic));
    e.precision.mu_T = ceil_log2_ratio(e.norms.lambda_T, pr.eps_T);
    e.precision.n_M = ceil_log2_ratio(e.norms.lambda_V * e.precision.r_nu, pr.eps_V);
    e.probs = success_probs(p, n_p, e.precision.n_M, b_r);
    e.tilde = lambda_H_tilde(e.norms.lambda_T, e.norms.lambda_V, e.probs.p_nu, e.probs.p_zeta, e.probs.P_eq);
    e.norms.lambda_H_tilde = e.tilde.value;
    e.norms.strategy = e.tilde.strategy;
    e.precision.n_theta = ceil_log2_ratio(e.tilde.value, pr.eps_theta);
    pr.eps_H_achieved = block_error(pr.eps_T, pr.eps_V, e.tilde.value, e.precision.n_theta);

    pr.eps_dtilde = eps_prop / 4.0;
    pr.d_tilde = qsp_degree(e.tilde.value, t_au, pr.eps_dtilde);
    pr.eps_rot = eps_prop / (12.0 * (std::ceil(pr.d_tilde) + 1.0));
    pr.eps_prop_achieved =
        prop_error(pr.eps_H_achieved, t_au, std::ceil(pr.d_tilde), pr.eps_dtilde, pr.eps_rot, pr.eps_rot, pr.eps_rot);
    return e;
}

// Nuclear transform data in grid units: Sigma' from the mode widths, the mode-to-Cartesian map.
struct NuclearTransform {
    int dims = 0;
    Matrix Sigma_prime;   // diagonal, 1/omega' per mode
    Matrix T;             // Cartesian point n carries the amplitude of mode point T n
    std::vector<double> widths;
};

// Mode order: translations (3), rotations (2 or 3), then vibrations.
inline NuclearTransform nuclear_transform(const NormalModeData& nm, int eta_n)
{
    NuclearTransform t;
    t.dims = 3 * eta_n;
    if (eta_n == 0) return t;
    int n_rot = nm.linear ? 2 : 3;
    if (eta_n == 1) n_rot = 0;
    for (int k = 0; k < 3; ++k) t.widths.push_back(nm.Gamma);
    for (int k = 0; k < n_rot; ++k) t.widths.push_back(nm.Upsilon);
    for (double w : nm.omegas) t.widths.push_back(w);
    if (static_cast<int>(t.widths.size()) != t.dims)
        throw InputError("mode count " + std::to_string(t.widths.size()) + " does not match 3*eta_n");
    t.Sigma_prime = Matrix::Zero(t.dims, t.dims);
    for (int k = 0; k < t.dims; ++k) {
        double scale = nm.d.size() == t.dims ? nm.d(k) * nm.d(k) : 1.0;
        t.widths[k] *= scale;
        t.Sigma_prime(k, k) = 1.0 / t.widths[k];
    }
    t.T = nm.A.transpose().inverse();
    return t;
}

struct Estimate {
    MoleculeSpec spec;
    std::string input_hash;
    std::uint64_t seed = 0;
    double t_au = 0.0;

    std::vector<double> K_nuclear;
    double K_e = 0.0;
    GridParams grid;
    double pad_norm = 1.0;
    EncodingPlan enc;
    ErrorBudget budget;
    double eps_QFT = 0.0;

    IspErrorInputs isp_inputs;
    IspErrorBound isp_bound;
    TrimEstimate trim;
    double eps_isp_component_share = 0.0;

    BlockParams block;
    WalkCost walk;
    IspComponents isp_components;
    IspTotal isp;
    CostPair prop;
    CostPair qft;
    struct Channel {
        std::string name;
        CostPair indicator;
        TotalCost total;
    };
    std::vector<Channel> channels;
    CostPair reflect_qae;

    std::int64_t C_data = 0;
    double C_anc = 0.0;
    double composed_evaluated = 0.0;
    double margin_evaluated = 0.0;

    std::vector<CostRow> rows;
    std::vector<std::string> flags;
    std::vector<std::string> warnings;
};

namespace detail {

inline double row_sum_norm(const Matrix& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

inline BondTable default_electronic_bonds(const ElectronicMeta& e, int n_p)
{
    if (!e.bond_dims.empty()) return e.bond_dims;
    int m = static_cast<int>(std::ceil(bond_dim_bound_electronic(e.l_max, e.N_g, e.Sigma, e.delta)));
    return BondTable(e.N_MOB, std::vector<int>(3 * n_p, m));
}

inline ModalBondTable default_nuclear_bonds(const NuclearMeta& n, const std::vector<double>& K,
                                            const std::vector<double>& widths, int n_ISP)
{
    if (!n.bond_dims.empty()) return n.bond_dims;
    ModalBondTable t;
    for (int v = 0; v < n.N_vib; ++v) {
        std::size_t k = widths.size() - n.N_vib + v;
        int m = static_cast<int>(bond_dim_bound_nuclear(K[k], widths[k]));
        t.push_back(std::vector<std::vector<int>>(n.N_SMB, std::vector<int>(n_ISP, m)));
    }
    return t;
}

inline void add_row(Estimate& est, const std::string& name, const CostPair& c, const json& params)
{
    est.rows.push_back({name, c.toffoli, c.ancilla, c.bound, hash_json(params)});
}

} // namespace detail

inline Estimate run_estimate(const MoleculeSpec& input, const EstimateOptions& opt = {})
{
    Estimate est;
    est.spec = input;
    MoleculeSpec& s = est.spec;
    if (opt.seed) s.budget.seed = *opt.seed;
    if (opt.budget_policy) s.budget.policy = *opt.budget_policy;
    if (opt.trim_N_MC) s.budget.trim_N_MC = *opt.trim_N_MC;
    validate_molecule(s);
    est.input_hash = hash_json(s.source);
    est.seed = s.budget.seed;
    est.t_au = fs_to_au(s.simulation.t_fs);

    const ParticleTable& p = s.particles;
    if (p.eta_e < 1) throw InputError("the estimator needs at least one electron");
    if (p.eta_n < 2) throw InputError("the estimator needs at least two nuclei");
    if (s.channels.empty()) throw InputError("at least one reaction channel is required");

    double Delta_target;
    if (s.simulation.Delta) Delta_target = *s.simulation.Delta;
    else if (s.simulation.L_bohr) Delta_target = 2.0 * pi / *s.simulation.L_bohr;
    else throw InputError("missing key 'L_bohr' or 'Delta' in simulation");
    double L_box = 2.0 * pi / Delta_target;

    // grid
    NuclearTransform nt = nuclear_transform(s.modes, p.eta_n);
    est.K_e = s.electronic.K_e ? *s.electronic.K_e
                               : k_cutoff_electronic(s.electronic.gamma_max, s.electronic.l_max, s.electronic.N_g,
                                                     s.electronic.Sigma, s.electronic.delta);
    int n_rigid = static_cast<int>(nt.widths.size()) - static_cast<int>(s.modes.omegas.size());
    for (int k = 0; k < nt.dims; ++k) {
        int N_hg = k < n_rigid ? 1 : s.nuclear.N_hg;
        est.K_nuclear.push_back(k_cutoff_nuclear(nt.widths[k], L_box, N_hg, s.nuclear.delta));
    }
    PadMode pad = pad_mode_from(s.nuclear.pad_mode);
    TransformProgram prog;
    Ldlt ch;
    Matrix Lambda_T = nt.T.transpose() * nt.Sigma_prime * nt.T;
    if (pad == PadMode::LCT) {
        prog = decompose_lct(nt.T);
        est.pad_norm = detail::row_sum_norm(prog.L);
    } else {
        ch = ldlt_decompose(Lambda_T);
        est.pad_norm = detail::row_sum_norm(Matrix(ch.L.transpose().inverse()));
    }
    GridRequest req;
    req.K_candidates = est.K_nuclear;
    req.K_candidates.push_back(est.K_e);
    req.K_nuclear = est.K_nuclear;
    req.Delta_target = Delta_target;
    req.pad_mode = pad;
    req.pad_norm = est.pad_norm;
    req.pad_dims = nt.dims;
    est.grid = common_grid(req);
    const GridParams& g = est.grid;
    if (g.n_p < 2) throw InputError("grid has fewer than two qubits per coordinate");
    if (g.n_ext < 0) est.warnings.push_back("padded ISP register is smaller than the simulation register");

    // budget and encoding
    est.budget = allocate(s.budget.eps_total, s.budget.lambda_O, s.budget.policy, s.budget.custom);
    ErrorBudget& b = est.budget;
    double Omega = g.L * g.L * g.L;
    est.enc = plan_encoding(p, g.n_p, Omega, est.t_au, b.eps_prop, s.simulation.b_r);
    const auto& pl = est.enc.prop;
    b.eps_H = pl.eps_H;
    b.eps_T = pl.eps_T;
    b.eps_V = pl.eps_V;
    b.eps_theta = pl.eps_theta;
    b.eps_dtilde = pl.eps_dtilde;
    b.eps_rot = b.eps_phi = b.eps_gamma = pl.eps_rot;
    b.eps_QSP = pl.eps_dtilde + (std::ceil(pl.d_tilde) + 1.0) * 3.0 * pl.eps_rot;
    b.eps_PK = s.nuclear.eps_PK;
    if (est.enc.probs.p_nu_path == "nominal") est.flags.push_back("p_nu_nominal");
    if (est.enc.norms.lambda_nu_path == "asymptotic") est.flags.push_back("lambda_nu_asymptotic");
    if (pl.eps_prop_achieved > b.eps_prop * (1.0 + 1e-12))
        est.warnings.push_back("propagation error exceeds its allocation");

    est.eps_QFT = b.eps_B;
    if (!(est.eps_QFT > 0.0)) {
        est.eps_QFT = eps_qft_floor;
        est.flags.push_back("eps_QFT_floor");
        est.warnings.push_back("budget leaves no basis-change error; QFT costed at eps 1e-10");
    }

    // ISP error evaluation
    bool separable = isp_mode_from(s.nuclear.isp_mode) == IspMode::separable;
    auto& ie = est.isp_inputs;
    ie.eta_e = p.eta_e;
    ie.eps_asp_e = asp_error_bound(s.electronic.b_asp, s.electronic.D_e);
    ie.eps_asp_n = asp_error_bound(s.nuclear.b_asp_n, s.nuclear.D_n);
    ie.eps_asp_en = asp_error_bound(std::min(s.electronic.b_asp, s.nuclear.b_asp_n),
                                    static_cast<double>(s.electronic.D_e) * s.nuclear.D_n);
    ie.eps_orbital.assign(s.electronic.N_MOB, s.electronic.delta);
    ie.eps_modal_c.assign(static_cast<std::size_t>(s.nuclear.N_vib) * s.nuclear.N_SMB, s.nuclear.delta);
    ie.eps_modal_q.assign(ie.eps_modal_c.size(), 0.0);
    ie.eps_PK = s.nuclear.eps_PK;
    ie.sum_abs_C = s.nuclear.sum_abs_C;
    if (pad == PadMode::LCT) {
        LctBounds lb = error_bounds(nt.Sigma_prime, prog, g.Delta);
        ie.eps_shear = lb.shear;
        ie.eps_ortho = lb.ortho;
    } else {
        ie.eps_shear = shear_error_bound(ch.D, Matrix(ch.L.transpose().inverse()), g.Delta, nt.dims);
    }
    b.eps_LCT = ie.eps_shear + ie.eps_ortho;

    Matrix cov = (2.0 * g.Delta * g.Delta * Lambda_T).inverse();
    std::int64_t half = pow2(g.n_p - 1) - 1;
    auto N_MC = static_cast<std::uint64_t>(std::llround(s.budget.trim_N_MC));
    est.trim = trim_error_mc(gaussian_box_sampler(cov, half), N_MC, s.budget.trim_alpha, est.seed);
    ie.eps_trim = est.trim.bound;
    b.eps_trim = est.trim.bound;
    if (!est.trim.all_inside) est.flags.push_back("trim_samples_outside");
    est.isp_bound = isp_error_bound(separable, ie);
    est.eps_isp_component_share = b.eps_ISP / 2.0 / 7.0;
    if (est.isp_bound.total > b.eps_ISP) est.warnings.push_back("evaluated ISP error bound exceeds its allocation");

    est.composed_evaluated = 2.0 * b.lambda_O * (est.isp_bound.total + pl.eps_prop_achieved + est.eps_QFT) + b.eps_meas;
    est.margin_evaluated = b.eps_total - est.composed_evaluated;
    if (est.margin_evaluated < 0.0) est.warnings.push_back("evaluated errors exceed eps_total");

    // costs: ISP
    IspParams ip;
    ip.b_asp = s.electronic.b_asp;
    ip.N_MOB = s.electronic.N_MOB;
    ip.eta_e = p.eta_e;
    ip.n_p = g.n_p;
    ip.m_e = detail::default_electronic_bonds(s.electronic, g.n_p);
    ip.b_rot = s.electronic.b_rot;
    ip.N_SMB = s.nuclear.N_SMB;
    ip.N_vib = s.nuclear.N_vib;
    ip.n_ISP = g.n_ISP;
    ip.m_n = detail::default_nuclear_bonds(s.nuclear, est.K_nuclear, nt.widths, g.n_ISP);
    ip.eta_n = p.eta_n;
    ip.n_bar_ISP = g.n_bar_ISP;
    ip.b_grad = s.nuclear.b_grad;
    ip.eps_PK = s.nuclear.eps_PK;
    if (s.electronic.bond_dims.empty()) est.flags.push_back("electronic_bond_dims_bound");
    if (s.nuclear.bond_dims.empty()) est.flags.push_back("nuclear_bond_dims_bound");

    auto with_D = [&](double D, int b_asp) {
        IspParams q = ip;
        q.D = D;
        q.b_asp = b_asp;
        return q;
    };
    auto& ic = est.isp_components;
    IspParams pe = with_D(s.electronic.D_e, s.electronic.b_asp);
    IspParams pn = with_D(s.nuclear.D_n, s.nuclear.b_asp_n);
    IspParams pen = with_D(static_cast<double>(s.electronic.D_e) * s.nuclear.D_n,
                           std::min(s.electronic.b_asp, s.nuclear.b_asp_n));
    ic["ASP_e"] = cost_isp(IspKind::ASP, pe);
    ic["SoSlat_e"] = cost_isp(IspKind::SoSlat, pe);
    ic["ONB2MOB"] = cost_isp(IspKind::ONB2MOB, ip);
    ic["ASYM"] = cost_isp(IspKind::ASYM, ip);
    ic["W_e"] = cost_isp(IspKind::W_e, ip);
    ic["ASP_n"] = cost_isp(IspKind::ASP, pn);
    ic["SoSlat_n"] = cost_isp(IspKind::SoSlat, pn);
    IspParams pw = ip;
    pw.b_rot = s.nuclear.b_rot_n;
    ic["ONB2SMB"] = cost_isp(IspKind::ONB2SMB, ip);
    ic["W_n"] = cost_isp(IspKind::W_n, pw);
    ic["U_A"] = cost_isp(pad == PadMode::LCT ? IspKind::LCT : IspKind::SSCT, ip);
    ic["PK"] = cost_isp(IspKind::PK, ip);
    ic["TC2SM"] = cost_isp(IspKind::TC2SM, ip);
    ic["ASP_en"] = cost_isp(IspKind::ASP, pen);
    ic["SoSlat_en"] = cost_isp(IspKind::SoSlat, pen);
    IspMode mode = separable ? IspMode::separable : IspMode::nonseparable;
    est.isp = cost_isp_total(mode, ic, p.eta_n, g.n_ext);

    // costs: block encoding, walk, propagator
    est.block = BlockParams{p.eta(), p.eta_e, g.n_p, est.enc.precision.mu_T, est.enc.precision.n_M,
                            est.enc.precision.n_theta, s.simulation.b_r};
    WalkInputs wi = walk_inputs(est.block);
    est.walk = cost_walk(wi);
    est.prop = cost_propagator(pl.d_tilde, est.walk, pl.eps_rot);

    // costs: measurement
    int n_regs = 3 * p.eta();
    CostPair q1 = cost_qft(g.n_p, est.eps_QFT / n_regs);
    est.qft = CostPair{q1.toffoli * n_regs, q1.ancilla, q1.bound};
    est.reflect_qae = cost_reflect_qae(p.eta_e, g.n_p, p.eta_n, g.n_bar_ISP);
    for (const auto& c : s.channels) {
        std::vector<int> nuc;
        for (const auto& k : c.constraints)
            for (int x : {k.alpha, k.beta})
                if (std::find(nuc.begin(), nuc.end(), x) == nuc.end()) nuc.push_back(x);
        Estimate::Channel ec;
        ec.name = c.name;
        ec.indicator = cost_indicator(c.B(), g.n_p, static_cast<int>(nuc.size()));
        TotalInputs ti{est.isp.total, est.prop, est.qft, ec.indicator, est.reflect_qae,
                       b.lambda_O, b.eps_QAE, p.eta_n, g.n_ext};
        ec.total = cost_total(ti);
        est.channels.push_back(ec);
    }

    est.C_data = data_qubits(p.eta(), p.eta_e, g.n_p);
    est.C_anc = est.channels.front().total.anc_total;
    for (const auto& c : est.channels) est.C_anc = std::max(est.C_anc, c.total.anc_total);

    // report rows
    const BlockParams& bp = est.block;
    json bj = {{"eta", bp.eta}, {"eta_e", bp.eta_e}, {"n_p", bp.n_p}, {"mu_T", bp.mu_T},
               {"n_M", bp.n_M}, {"n_theta", bp.n_theta}, {"b_r", bp.b_r}};
    json gj = {{"eta_e", p.eta_e}, {"eta_n", p.eta_n}, {"n_p", g.n_p}, {"n_ISP", g.n_ISP},
               {"n_bar_ISP", g.n_bar_ISP}, {"N_MOB", s.electronic.N_MOB}, {"N_SMB", s.nuclear.N_SMB},
               {"N_vib", s.nuclear.N_vib}, {"b_rot", s.electronic.b_rot}, {"b_rot_n", s.nuclear.b_rot_n},
               {"b_grad", s.nuclear.b_grad}, {"eps_PK", s.nuclear.eps_PK}, {"D_e", s.electronic.D_e},
               {"D_n", s.nuclear.D_n}, {"b_asp", s.electronic.b_asp}, {"b_asp_n", s.nuclear.b_asp_n}};
    for (const auto& [name, c] : ic) {
        if (separable && (name == "ASP_en" || name == "SoSlat_en")) continue;
        if (!separable && (name == "ASP_e" || name == "SoSlat_e" || name == "ASP_n" || name == "SoSlat_n")) continue;
        detail::add_row(est, "ISP." + name, c, gj);
    }
    detail::add_row(est, "ISP", est.isp.total, gj);
    for (BlockKind k : {BlockKind::PREP_T, BlockKind::UNPREP_T, BlockKind::PREP_V, BlockKind::UNPREP_V,
                        BlockKind::R_z, BlockKind::PREP_H, BlockKind::UNPREP_H, BlockKind::SEL_H,
                        BlockKind::CTRL_SEL_H, BlockKind::REFLECT_W})
        detail::add_row(est, std::string("block.") + to_string(k), cost_block_encoding(k, bp), bj);
    detail::add_row(est, "walk.ctrl_W", est.walk.ctrl_W, bj);
    detail::add_row(est, "walk.W", est.walk.W, bj);
    json pj = bj;
    pj["d_tilde"] = std::ceil(pl.d_tilde);
    pj["eps_rot"] = pl.eps_rot;
    detail::add_row(est, "time_evolution", est.prop, pj);
    detail::add_row(est, "QFT", est.qft, json{{"registers", n_regs}, {"n_p", g.n_p}, {"eps", est.eps_QFT}});
    detail::add_row(est, "reflect_QAE", est.reflect_qae,
                    json{{"eta_e", p.eta_e}, {"eta_n", p.eta_n}, {"n_p", g.n_p}, {"n_bar_ISP", g.n_bar_ISP}});
    for (const auto& c : est.channels) {
        json cj{{"channel", c.name}, {"n_p", g.n_p}, {"lambda_O", b.lambda_O}, {"eps_QAE", b.eps_QAE}};
        detail::add_row(est, "indicator." + c.name, c.indicator, cj);
        detail::add_row(est, "U_tilde." + c.name, CostPair{c.total.U_tilde, 0.0, est.prop.bound || est.isp.total.bound},
                        cj);
        detail::add_row(est, "QAE." + c.name, CostPair{c.total.qae, c.total.anc_total, est.prop.bound}, cj);
        detail::add_row(est, "total." + c.name, CostPair{c.total.total, c.total.anc_total, est.prop.bound}, cj);
    }
    return est;
}

// Time-evolution Toffoli count from the anchor's tabulated inputs, with the default budget.
inline double anchor_time_evolution(const EvolutionAnchor& a = {})
{
    ErrorBudget b = allocate(default_eps_reference, 1.0);
    double t_au = fs_to_au(a.t_fs);
    PropagationPlan pl;
    pl.eps_H = b.eps_prop / (2.0 * t_au);
    pl.eps_T = pl.eps_V = pl.eps_theta = pl.eps_H / 4.0;
    pl.eps_dtilde = b.eps_prop / 4.0;
    pl.d_tilde = qsp_degree(a.lambda_tilde, t_au, pl.eps_dtilde);
    pl.eps_rot = b.eps_prop / (12.0 * (std::ceil(pl.d_tilde) + 1.0));
    // the norms split evenly between kinetic and potential parts at this scale
    double lT = a.lambda_tilde / 2.0, lV = a.lambda_tilde / 2.0;
    BlockParams bp{a.eta, a.eta_e, a.n_p, ceil_log2_ratio(lT, pl.eps_T),
                   ceil_log2_ratio(lV * r_nu(a.n_p, lambda_nu(a.n_p, NuMode::asymptotic)), pl.eps_V),
                   ceil_log2_ratio(a.lambda_tilde, pl.eps_theta), 8};
    WalkCost w = cost_walk(walk_inputs(bp));
    return cost_propagator(pl.d_tilde, w, pl.eps_rot).toffoli;
}

// ---------------------------------------------------------------- serialization

inline json cost_json(const CostPair& c)
{
    return {{"toffoli", report_count(c.toffoli)}, {"ancilla", report_count(c.ancilla)}, {"is_bound", c.bound}};
}

inline json report_json(const Estimate& e)
{
    const auto& g = e.grid;
    const auto& b = e.budget;
    const auto& en = e.enc;
    json j;
    j["header"] = {{"molecule", e.spec.name}, {"version", estimator_version}, {"input_hash", e.input_hash},
                   {"seed", e.seed}, {"t_fs", e.spec.simulation.t_fs}, {"t_au", e.t_au}};
    j["grid"] = {{"K_e", e.K_e}, {"K_nuclear", e.K_nuclear}, {"K_max", g.K_max}, {"Delta", g.Delta},
                 {"Delta_initial", g.Delta_initial}, {"L", g.L}, {"N_bar", g.N_bar}, {"n_p", g.n_p}, {"N", g.N},
                 {"n_ISP", g.n_ISP}, {"n_pad", g.n_pad}, {"n_bar_ISP", g.n_bar_ISP}, {"n_ext", g.n_ext},
                 {"pad_mode", e.spec.nuclear.pad_mode}, {"pad_norm_inf", e.pad_norm}};
    j["encoding"] = {{"lambda_T", en.norms.lambda_T}, {"lambda_V", en.norms.lambda_V},
                     {"lambda_nu", en.norms.lambda_nu}, {"lambda_nu_path", en.norms.lambda_nu_path},
                     {"lambda_H", en.norms.lambda_H}, {"lambda_H_tilde", en.tilde.value},
                     {"strategy", to_string(en.tilde.strategy)}, {"r_nu", en.precision.r_nu},
                     {"mu_T", en.precision.mu_T}, {"n_M", en.precision.n_M}, {"n_theta", en.precision.n_theta},
                     {"p_nu", en.probs.p_nu}, {"p_nu_path", en.probs.p_nu_path}, {"p_zeta", en.probs.p_zeta},
                     {"P_eq", en.probs.P_eq}, {"d_tilde", std::ceil(en.prop.d_tilde)}};
    j["budget"] = {{"policy", e.spec.budget.policy}, {"eps_total", b.eps_total}, {"lambda_O", b.lambda_O},
                   {"allocated", {{"eps_ISP", b.eps_ISP}, {"eps_prop", b.eps_prop}, {"eps_B", b.eps_B},
                                  {"eps_QAE", b.eps_QAE}, {"eps_O", b.eps_O}, {"eps_meas", b.eps_meas},
                                  {"eps_ISP_component", e.eps_isp_component_share}}},
                   {"propagation", {{"eps_H", b.eps_H}, {"eps_T", b.eps_T}, {"eps_V", b.eps_V},
                                    {"eps_theta", b.eps_theta}, {"eps_H_achieved", en.prop.eps_H_achieved},
                                    {"eps_dtilde", b.eps_dtilde}, {"eps_rot", b.eps_rot}, {"eps_phi", b.eps_phi},
                                    {"eps_gamma", b.eps_gamma}, {"eps_prop_achieved", en.prop.eps_prop_achieved}}},
                   {"isp", {{"eps_asp_e", e.isp_inputs.eps_asp_e}, {"eps_asp_n", e.isp_inputs.eps_asp_n},
                            {"eps_asp_en", e.isp_inputs.eps_asp_en}, {"eps_shear", e.isp_inputs.eps_shear},
                            {"eps_ortho", e.isp_inputs.eps_ortho}, {"eps_PK", e.isp_inputs.eps_PK},
                            {"eps_trim", e.trim.bound}, {"trim_samples", e.trim.samples},
                            {"trim_inside", e.trim.inside}, {"electronic", e.isp_bound.electronic},
                            {"nuclear", e.isp_bound.nuclear}, {"total", e.isp_bound.total}}},
                   {"eps_QFT", e.eps_QFT},
                   {"composed_allocated", b.composed()}, {"margin_allocated", b.margin()},
                   {"composed_evaluated", e.composed_evaluated}, {"margin_evaluated", e.margin_evaluated}};
    json rows = json::array();
    for (const auto& r : e.rows)
        rows.push_back({{"subroutine", r.subroutine}, {"toffoli", report_count(r.toffoli)},
                        {"ancilla", report_count(r.ancilla)}, {"is_bound", r.is_bound},
                        {"params_hash", r.params_hash}});
    j["rows"] = rows;
    json ch = json::array();
    for (const auto& c : e.channels)
        ch.push_back({{"name", c.name}, {"U_tilde", report_count(c.total.U_tilde)},
                      {"iterate", report_count(c.total.iterate)}, {"qae_calls", c.total.qae_calls},
                      {"qae", report_count(c.total.qae)}, {"total", report_count(c.total.total)},
                      {"s", c.total.s}, {"ancilla_iterate", report_count(c.total.anc_iterate)},
                      {"ancilla_total", report_count(c.total.anc_total)}, {"ancilla_argmax", c.total.anc_argmax}});
    j["channels"] = ch;
    j["stages"] = {{"ISP", cost_json(e.isp.total)}, {"ISP_electronic", cost_json(e.isp.electronic)},
                   {"ISP_nuclear", cost_json(e.isp.nuclear)}, {"ISP_ancilla_argmax", e.isp.ancilla_argmax},
                   {"time_evolution", cost_json(e.prop)}, {"QFT", cost_json(e.qft)}};
    j["qubits"] = {{"C_data", e.C_data}, {"C_anc", report_count(e.C_anc)},
                   {"total", e.C_data + report_count(e.C_anc)}};
    EvolutionAnchor a;
    double v = anchor_time_evolution(a);
    j["anchor"] = {{"time_evolution_computed", v}, {"time_evolution_tabulated", a.toffoli},
                   {"ratio", v / a.toffoli}, {"lambda_H_tilde", a.lambda_tilde}, {"n_p", a.n_p}, {"eta", a.eta}};
    j["flags"] = e.flags;
    j["warnings"] = e.warnings;
    return j;
}

inline std::string report_csv(const Estimate& e)
{
    std::ostringstream os;
    os << "subroutine,toffoli,ancilla,is_bound,params_hash\n";
    for (const auto& r : e.rows)
        os << r.subroutine << ',' << report_count(r.toffoli) << ',' << report_count(r.ancilla) << ','
           << (r.is_bound ? "true" : "false") << ',' << r.params_hash << '\n';
    return os.str();
}

inline std::string report_markdown(const Estimate& e)
{
    std::ostringstream os;
    os.precision(6);
    os << "# Resource estimate: " << e.spec.name << "\n\n";
    os << "- input hash: `" << e.input_hash << "`\n";
    os << "- seed: " << e.seed << "\n";
    os << "- t = " << e.spec.simulation.t_fs << " fs = " << e.t_au << " a.u.\n";
    os << "- n_p = " << e.grid.n_p << ", n_ISP = " << e.grid.n_ISP << ", n_pad = " << e.grid.n_pad << "\n";
    os << "- lambda_H_tilde = " << e.enc.tilde.value << " (" << to_string(e.enc.tilde.strategy) << ")\n";
    os << "- qubits: C_data = " << e.C_data << ", C_anc = " << report_count(e.C_anc) << "\n";
    os << "- budget margin (allocated / evaluated): " << e.budget.margin() << " / " << e.margin_evaluated << "\n";
    EvolutionAnchor a;
    os << "- time-evolution anchor: computed " << anchor_time_evolution(a) << " vs tabulated " << a.toffoli << "\n\n";
    os << "| subroutine | toffoli | ancilla | bound | params |\n|---|---:|---:|:---:|---|\n";
    for (const auto& r : e.rows)
        os << "| " << r.subroutine << " | " << report_count(r.toffoli) << " | " << report_count(r.ancilla) << " | "
           << (r.is_bound ? "yes" : "no") << " | `" << r.params_hash << "` |\n";
    if (!e.flags.empty()) {
        os << "\nFlags:\n";
        for (const auto& f : e.flags) os << "- " << f << "\n";
    }
    if (!e.warnings.empty()) {
        os << "\nWarnings:\n";
        for (const auto& w : e.warnings) os << "- " << w << "\n";
    }
    return os.str();
}

inline std::string render_report(const Estimate& e, const std::string& format)
{
    if (format == "json") return report_json(e).dump(2) + "\n";
    if (format == "csv") return report_csv(e);
    if (format == "markdown" || format == "md") return report_markdown(e);
    throw std::invalid_argument("unknown report format '" + format + "'");
}

} // namespace qdyn
