#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "units.hpp"

namespace qdyn {

using json = nlohmann::json;

// malformed or inconsistent input; the CLI maps this to exit code 2
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Nucleus {
    std::string label;
    double mass = 0.0;
    int charge = 0;
};

struct ParticleTable {
    std::vector<double> masses;
    std::vector<int> charges;
    int eta_e = 0;
    int eta_n = 0;
    std::vector<std::string> labels;
    bool neutral_override = false;

    int eta() const { return eta_e + eta_n; }
    int n_eta() const { return eta() > 0 ? ceil_log2(static_cast<std::uint64_t>(eta())) : 0; }
    bool is_neutral() const
    {
        long s = 0;
        for (int z : charges) s += z;
        return s == 0;
    }
    double lambda_m() const
    {
        double s = 0.0;
        for (double m : masses) s += 1.0 / m;
        return s;
    }

    static ParticleTable from(int eta_e, const std::vector<Nucleus>& nuclei)
    {
        ParticleTable p;
        p.eta_e = eta_e;
        p.eta_n = static_cast<int>(nuclei.size());
        for (int i = 0; i < eta_e; ++i) {
            p.masses.push_back(1.0);
            p.charges.push_back(-1);
            p.labels.push_back("e");
        }
        for (const auto& n : nuclei) {
            p.masses.push_back(n.mass);
            p.charges.push_back(n.charge);
            p.labels.push_back(n.label);
        }
        return p;
    }
};

struct NormalModeData {
    std::vector<double> omegas;
    Eigen::MatrixXd A;
    Eigen::VectorXd d;
    Eigen::VectorXd R0;
    double Gamma = 0.0;
    double Upsilon = 0.0;
    bool linear = false;

    int dims() const { return static_cast<int>(A.rows()); }
};

struct ElectronicMeta {
    int N_MOB = 1;
    int D_e = 1;
    int N_g = 1;
    double gamma_max = 1.0;
    int l_max = 0;
    double Sigma = 1.0;
    std::vector<std::vector<int>> bond_dims; // [orbital][site]
    int b_asp = 10;
    int b_rot = 10;
    double delta = 1e-3;
    std::optional<double> K_e;
};

struct NuclearMeta {
    int N_SMB = 1;
    int N_vib = 0;
    int D_n = 1;
    int N_hg = 1;
    std::vector<std::vector<std::vector<int>>> bond_dims; // [mode][modal][site]
    int b_asp_n = 10;
    int b_rot_n = 10;
    int b_grad = 20;
    double eps_PK = 1e-4;
    std::string pad_mode = "SSCT";
    double delta = 1e-3;
    std::string isp_mode = "separable";
    double sum_abs_C = 1.0;
};

enum class Direction { greater, less };

struct Constraint {
    int alpha = 0;
    int beta = 1;
    double cutoff = 1.0;
    Direction direction = Direction::greater;
};

struct ReactionChannel {
    std::string name;
    std::vector<Constraint> constraints;
    int B() const { return static_cast<int>(constraints.size()); }
};

struct ErrorBudget {
    double eps_total = 0.0;
    double lambda_O = 1.0;
    double eps_ISP = 0.0, eps_prop = 0.0, eps_B = 0.0, eps_meas = 0.0;
    double eps_QAE = 0.0, eps_O = 0.0;
    double eps_H = 0.0, eps_QSP = 0.0;
    double eps_T = 0.0, eps_V = 0.0, eps_theta = 0.0;
    double eps_dtilde = 0.0, eps_rot = 0.0, eps_phi = 0.0, eps_gamma = 0.0;
    double eps_PK = 0.0, eps_trim = 0.0, eps_LCT = 0.0;

    // left-hand side of the top-level error split
    double composed() const { return 2.0 * lambda_O * (eps_ISP + eps_prop + eps_B) + eps_meas; }
    double margin() const { return eps_total - composed(); }
};

struct BudgetConfig {
    double eps_total = 0.095;
    double lambda_O = 1.0;
    std::string policy = "paper_default";
    json custom = json::object();
    std::uint64_t seed = 1;
    double trim_N_MC = 1e6;
    double trim_alpha = 1e-5;
};

struct SimulationConfig {
    double t_fs = 30.0;
    std::optional<double> L_bohr;
    std::optional<double> Delta;
    int b_r = 8;
};

struct MoleculeSpec {
    std::string name;
    ParticleTable particles;
    NormalModeData modes;
    ElectronicMeta electronic;
    NuclearMeta nuclear;
    std::vector<ReactionChannel> channels;
    BudgetConfig budget;
    SimulationConfig simulation;
    json source; // the parsed input, used for hashing
};

namespace detail {

inline const json& need(const json& j, const std::string& key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key)) throw InputError("missing key '" + key + "' in " + where);
    return j.at(key);
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback)
{
    if (j.is_object() && j.contains(key)) return j.at(key).get<T>();
    return fallback;
}

inline Eigen::MatrixXd matrix_from_rows(const std::vector<double>& v, int n, const std::string& what)
{
    if (static_cast<int>(v.size()) != n * n)
        throw InputError(what + " must have " + std::to_string(n * n) + " entries (row-major)");
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = v[r * n + c];
    return m;
}

inline std::vector<double> rows_from_matrix(const Eigen::MatrixXd& m)
{
    std::vector<double> v;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    return v;
}

inline std::vector<double> to_vec(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

} // namespace detail

inline MoleculeSpec parse_molecule(const json& j)
{
    using detail::get_or;
    using detail::need;
    MoleculeSpec s;
    s.source = j;
    s.name = get_or<std::string>(j, "name", "molecule");
    for (const char* key : {"particles", "normal_modes", "electronic", "nuclear", "channels", "budget"})
        need(j, key, "molecule file");

    try {
        const json& p = j.at("particles");
        std::vector<Nucleus> nuclei;
        for (const auto& n : need(p, "nuclei", "particles"))
            nuclei.push_back({get_or<std::string>(n, "label", "X"), need(n, "mass", "nucleus").get<double>(),
                              need(n, "charge", "nucleus").get<int>()});
        s.particles = ParticleTable::from(need(p, "eta_e", "particles").get<int>(), nuclei);
        s.particles.neutral_override = get_or<bool>(p, "neutral_override", false);

        const json& nm = j.at("normal_modes");
        int dims = 3 * s.particles.eta_n;
        s.modes.omegas = need(nm, "omegas", "normal_modes").get<std::vector<double>>();
        s.modes.A = detail::matrix_from_rows(need(nm, "A", "normal_modes").get<std::vector<double>>(), dims,
                                             "normal_modes.A");
        auto dvec = get_or<std::vector<double>>(nm, "d", std::vector<double>(dims, 1.0));
        if (static_cast<int>(dvec.size()) != dims) throw InputError("normal_modes.d must have 3*eta_n entries");
        s.modes.d = Eigen::Map<Eigen::VectorXd>(dvec.data(), dims);
        auto r0 = get_or<std::vector<double>>(nm, "R0", std::vector<double>(dims, 0.0));
        if (static_cast<int>(r0.size()) != dims) throw InputError("normal_modes.R0 must have 3*eta_n entries");
        s.modes.R0 = Eigen::Map<Eigen::VectorXd>(r0.data(), dims);
        s.modes.Gamma = need(nm, "Gamma", "normal_modes").get<double>();
        s.modes.Upsilon = need(nm, "Upsilon", "normal_modes").get<double>();
        s.modes.linear = get_or<bool>(nm, "linear", false);

        const json& e = j.at("electronic");
        auto& em = s.electronic;
        em.N_MOB = need(e, "N_MOB", "electronic").get<int>();
        em.D_e = need(e, "D_e", "electronic").get<int>();
        em.N_g = need(e, "N_g", "electronic").get<int>();
        em.gamma_max = need(e, "gamma_max", "electronic").get<double>();
        em.l_max = need(e, "l_max", "electronic").get<int>();
        em.Sigma = need(e, "Sigma", "electronic").get<double>();
        em.bond_dims = get_or<std::vector<std::vector<int>>>(e, "bond_dims", {});
        em.b_asp = get_or<int>(e, "b_asp", em.b_asp);
        em.b_rot = get_or<int>(e, "b_rot", em.b_rot);
        em.delta = get_or<double>(e, "delta", em.delta);
        if (e.contains("K_e")) em.K_e = e.at("K_e").get<double>();

        const json& n = j.at("nuclear");
        auto& nu = s.nuclear;
        nu.N_SMB = need(n, "N_SMB", "nuclear").get<int>();
        nu.N_vib = get_or<int>(n, "N_vib", static_cast<int>(s.modes.omegas.size()));
        nu.D_n = need(n, "D_n", "nuclear").get<int>();
        nu.N_hg = need(n, "N_hg", "nuclear").get<int>();
        nu.bond_dims = get_or<std::vector<std::vector<std::vector<int>>>>(n, "bond_dims", {});
        nu.b_asp_n = get_or<int>(n, "b_asp_n", nu.b_asp_n);
        nu.b_rot_n = get_or<int>(n, "b_rot_n", nu.b_rot_n);
        nu.b_grad = get_or<int>(n, "b_grad", nu.b_grad);
        nu.eps_PK = get_or<double>(n, "eps_PK", nu.eps_PK);
        nu.pad_mode = get_or<std::string>(n, "pad_mode", nu.pad_mode);
        nu.delta = get_or<double>(n, "delta", nu.delta);
        nu.isp_mode = get_or<std::string>(n, "isp_mode", nu.isp_mode);
        nu.sum_abs_C = get_or<double>(n, "sum_abs_C", nu.sum_abs_C);

        for (const auto& c : j.at("channels")) {
            ReactionChannel ch;
            ch.name = get_or<std::string>(c, "name", "channel" + std::to_string(s.channels.size()));
            for (const auto& k : need(c, "constraints", "channel")) {
                Constraint con;
                con.alpha = need(k, "alpha", "constraint").get<int>();
                con.beta = need(k, "beta", "constraint").get<int>();
                con.cutoff = need(k, "cutoff", "constraint").get<double>();
                std::string dir = get_or<std::string>(k, "direction", "greater");
                if (dir == "greater")
                    con.direction = Direction::greater;
                else if (dir == "less")
                    con.direction = Direction::less;
                else
                    throw InputError("constraint direction must be 'greater' or 'less'");
                ch.constraints.push_back(con);
            }
            s.channels.push_back(ch);
        }

        const json& b = j.at("budget");
        s.budget.eps_total = need(b, "eps_total", "budget").get<double>();
        s.budget.lambda_O = get_or<double>(b, "lambda_O", 1.0);
        s.budget.policy = get_or<std::string>(b, "policy", "paper_default");
        s.budget.custom = get_or<json>(b, "custom", json::object());
        s.budget.seed = get_or<std::uint64_t>(b, "seed", 1);
        s.budget.trim_N_MC = get_or<double>(b, "trim_N_MC", 1e6);
        s.budget.trim_alpha = get_or<double>(b, "trim_alpha", 1e-5);

        if (j.contains("simulation")) {
            const json& sim = j.at("simulation");
            s.simulation.t_fs = get_or<double>(sim, "t_fs", s.simulation.t_fs);
            if (sim.contains("L_bohr")) s.simulation.L_bohr = sim.at("L_bohr").get<double>();
            if (sim.contains("Delta")) s.simulation.Delta = sim.at("Delta").get<double>();
            s.simulation.b_r = get_or<int>(sim, "b_r", s.simulation.b_r);
        }
    } catch (const json::exception& ex) {
        throw InputError(std::string("malformed molecule file: ") + ex.what());
    }
    return s;
}

inline json to_json(const MoleculeSpec& s)
{
    json j;
    j["name"] = s.name;
    json nuclei = json::array();
    for (int i = s.particles.eta_e; i < s.particles.eta(); ++i)
        nuclei.push_back({{"label", s.particles.labels[i]}, {"mass", s.particles.masses[i]},
                          {"charge", s.particles.charges[i]}});
    j["particles"] = {{"eta_e", s.particles.eta_e}, {"nuclei", nuclei},
                      {"neutral_override", s.particles.neutral_override}};
    j["normal_modes"] = {{"omegas", s.modes.omegas},
                         {"A", detail::rows_from_matrix(s.modes.A)},
                         {"d", detail::to_vec(s.modes.d)},
                         {"R0", detail::to_vec(s.modes.R0)},
                         {"Gamma", s.modes.Gamma},
                         {"Upsilon", s.modes.Upsilon},
                         {"linear", s.modes.linear}};
    const auto& e = s.electronic;
    j["electronic"] = {{"N_MOB", e.N_MOB}, {"D_e", e.D_e},         {"N_g", e.N_g},
                       {"gamma_max", e.gamma_max}, {"l_max", e.l_max}, {"Sigma", e.Sigma},
                       {"bond_dims", e.bond_dims}, {"b_asp", e.b_asp}, {"b_rot", e.b_rot},
                       {"delta", e.delta}};
    if (e.K_e) j["electronic"]["K_e"] = *e.K_e;
    const auto& n = s.nuclear;
    j["nuclear"] = {{"N_SMB", n.N_SMB},     {"N_vib", n.N_vib},         {"D_n", n.D_n},
                    {"N_hg", n.N_hg},       {"bond_dims", n.bond_dims}, {"b_asp_n", n.b_asp_n},
                    {"b_rot_n", n.b_rot_n}, {"b_grad", n.b_grad},       {"eps_PK", n.eps_PK},
                    {"pad_mode", n.pad_mode}, {"delta", n.delta},       {"isp_mode", n.isp_mode},
                    {"sum_abs_C", n.sum_abs_C}};
    json chans = json::array();
    for (const auto& c : s.channels) {
        json cons = json::array();
        for (const auto& k : c.constraints)
            cons.push_back({{"alpha", k.alpha},
                            {"beta", k.beta},
                            {"cutoff", k.cutoff},
                            {"direction", k.direction == Direction::greater ? "greater" : "less"}});
        chans.push_back({{"name", c.name}, {"constraints", cons}});
    }
    j["channels"] = chans;
    j["budget"] = {{"eps_total", s.budget.eps_total}, {"lambda_O", s.budget.lambda_O},
                   {"policy", s.budget.policy},       {"custom", s.budget.custom},
                   {"seed", s.budget.seed},           {"trim_N_MC", s.budget.trim_N_MC},
                   {"trim_alpha", s.budget.trim_alpha}};
    j["simulation"] = {{"t_fs", s.simulation.t_fs}, {"b_r", s.simulation.b_r}};
    if (s.simulation.L_bohr) j["simulation"]["L_bohr"] = *s.simulation.L_bohr;
    if (s.simulation.Delta) j["simulation"]["Delta"] = *s.simulation.Delta;
    return j;
}

// Checks every invariant of the input types. Throws InputError with a list of diagnostics.
inline void validate_molecule(const MoleculeSpec& s)
{
    std::vector<std::string> diag;
    const auto& p = s.particles;
    if (p.eta() < 1) diag.push_back("particle table is empty");
    if (static_cast<int>(p.masses.size()) != p.eta() || static_cast<int>(p.charges.size()) != p.eta())
        diag.push_back("eta must equal the number of masses and charges");
    for (int i = 0; i < p.eta_e && i < static_cast<int>(p.masses.size()); ++i)
        if (p.masses[i] != 1.0 || p.charges[i] != -1) diag.push_back("electron entries need mass 1 and charge -1");
    for (double m : p.masses)
        if (!(m > 0.0)) diag.push_back("masses must be positive");
    if (!p.is_neutral() && !p.neutral_override)
        diag.push_back("particle table is not charge neutral (set neutral_override to accept)");

    const auto& nm = s.modes;
    int dims = 3 * p.eta_n;
    if (p.eta_n > 0) {
        if (nm.A.rows() != dims || nm.A.cols() != dims) diag.push_back("A must be 3*eta_n square");
        else if (std::abs(nm.A.determinant() - 1.0) > 1e-9)
            diag.push_back("det(A) must equal 1 (got " + std::to_string(nm.A.determinant()) + ")");
        for (int i = 0; i < nm.d.size(); ++i)
            if (!(nm.d(i) > 0.0)) diag.push_back("d must be positive");
        for (double w : nm.omegas)
            if (!(w > 0.0)) diag.push_back("frequencies must be positive");
        int expect = p.eta_n >= 2 ? dims - (nm.linear ? 5 : 6) : 0;
        if (static_cast<int>(nm.omegas.size()) != expect)
            diag.push_back("expected " + std::to_string(expect) + " vibrational frequencies, got " +
                           std::to_string(nm.omegas.size()));
        if (!(nm.Gamma > 0.0) || !(nm.Upsilon > 0.0)) diag.push_back("Gamma and Upsilon must be positive");
    }

    const auto& e = s.electronic;
    if (e.N_MOB < 1 || e.D_e < 1 || e.N_g < 1) diag.push_back("electronic counts must be >= 1");
    if (e.l_max < 0) diag.push_back("l_max must be >= 0");
    if (!(e.gamma_max > 0.0) || !(e.Sigma > 0.0)) diag.push_back("gamma_max and Sigma must be positive");
    if (!(e.delta > 0.0 && e.delta < 1.0)) diag.push_back("electronic delta must lie in (0,1)");
    for (const auto& row : e.bond_dims)
        for (int m : row)
            if (m < 1) diag.push_back("bond dimensions must be >= 1");

    const auto& n = s.nuclear;
    if (n.N_SMB < 1 || n.D_n < 1 || n.N_hg < 1) diag.push_back("nuclear counts must be >= 1");
    if (!(n.delta > 0.0 && n.delta < 1.0)) diag.push_back("nuclear delta must lie in (0,1)");
    if (n.pad_mode != "LCT" && n.pad_mode != "SSCT") diag.push_back("pad_mode must be LCT or SSCT");
    if (n.isp_mode != "separable" && n.isp_mode != "nonseparable")
        diag.push_back("isp_mode must be separable or nonseparable");
    for (const auto& mode : n.bond_dims)
        for (const auto& row : mode)
            for (int m : row)
                if (m < 1) diag.push_back("bond dimensions must be >= 1");

    int max_pairs = p.eta_n * (p.eta_n - 1) / 2;
    for (const auto& c : s.channels) {
        if (c.B() < 1) diag.push_back("channel '" + c.name + "' has no constraints");
        if (c.B() > max_pairs) diag.push_back("channel '" + c.name + "' has more constraints than nuclear pairs");
        for (const auto& k : c.constraints) {
            if (k.alpha == k.beta) diag.push_back("constraint pairs a nucleus with itself");
            if (k.alpha < 0 || k.beta < 0 || k.alpha >= p.eta_n || k.beta >= p.eta_n)
                diag.push_back("constraint nucleus index out of range");
            if (!(k.cutoff > 0.0)) diag.push_back("constraint cutoff must be positive");
        }
    }
    if (!(s.budget.eps_total > 0.0 && s.budget.eps_total < 1.0)) diag.push_back("eps_total must lie in (0,1)");
    if (!(s.budget.lambda_O > 0.0)) diag.push_back("lambda_O must be positive");
    if (s.simulation.t_fs < 0.0) diag.push_back("simulation time must be non-negative");

    if (!diag.empty()) {
        std::string msg = "invalid molecule '" + s.name + "':";
        for (const auto& d : diag) msg += "\n  - " + d;
        throw InputError(msg);
    }
}

} // namespace qdyn
