#pragma once

#include <fnmatch.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "budget.hpp"
#include "encoding.hpp"
#include "gridsizer.hpp"
#include "lct.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "verify.hpp"

namespace qdyn {

struct CheckResult {
    std::string name;
    std::string family;
    bool passed = false;
    double measured = 0.0;
    double bound = 0.0;
    std::string detail;
    double seconds = 0.0;
};

struct SuiteOptions {
    std::string only;          // glob over family and check names; empty runs everything
    std::uint64_t seed = 20240601;
    double lambda_scale = 1.0; // multiplies the normalization assumed by spectral predictions
    int lct_configs_2d = 25;
    int lct_configs_3d = 15;
};

struct CheckGroup {
    std::string family;
    std::vector<std::string> names;
    std::function<std::vector<CheckResult>(const SuiteOptions&)> run;
};

namespace suite_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline bool glob_match(const std::string& pattern, const std::string& s)
{
    return fnmatch(pattern.c_str(), s.c_str(), 0) == 0;
}

inline CheckResult make(const std::string& name, const std::string& family, double measured, double bound,
                        bool passed, const std::string& detail, Clock::time_point t0)
{
    return {name, family, passed, measured, bound, detail, seconds_since(t0)};
}

inline DenseOperator random_hermitian(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> z;
    DenseOperator A(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) A(r, c) = cdouble(z(rng), z(rng));
    return (A + A.adjoint()) / 2.0;
}

inline double row_sum_norm(const DenseOperator& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

// ---------------------------------------------------------------- LCU

inline std::vector<CheckResult> lcu_galerkin(const SuiteOptions&)
{
    auto t0 = Clock::now();
    double worst = 0.0;
    std::ostringstream os;
    ParticleTable pt = ParticleTable::from(1, {{"p", 1836.0, 1}});
    for (double Omega : {1.0, 8.0}) {
        double L = std::cbrt(Omega);
        DenseOperator G = galerkin_hamiltonian(pt, 2, L, 3);
        LcuAssembly a = lcu_assemble(pt, 2, Omega);
        double diff = row_sum_norm(a.H - G);
        worst = std::max(worst, diff);
        os << "Omega=" << Omega << " dim=" << G.rows() << " diff=" << diff << "; ";
    }
    double secs = seconds_since(t0);
    os << "runtime " << secs << " s";
    return {make("lcu.galerkin", "lcu", worst, 1e-12, worst <= 1e-12 && secs < 10.0, os.str(), t0)};
}

inline std::vector<CheckResult> lcu_norms_check(const SuiteOptions& opt)
{
    auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed + 2);
    std::uniform_real_distribution<double> mass(100.0, 5000.0), omega(0.5, 10.0);
    std::uniform_int_distribution<int> charge(1, 4), kind(0, 1);
    double worst = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        ParticleTable pt = kind(rng) ? ParticleTable::from(1, {{"X", mass(rng), charge(rng)}})
                                     : ParticleTable::from(0, {{"X", mass(rng), charge(rng)}, {"Y", mass(rng), charge(rng)}});
        double Omega = omega(rng);
        LcuAssembly a = lcu_assemble(pt, 2, Omega);
        LcuNorms n = lcu_norms(pt, 2, Omega);
        double lT = n.lambda_T * opt.lambda_scale, lV = n.lambda_V * opt.lambda_scale;
        worst = std::max({worst, std::abs(a.alpha_T - lT) / lT, std::abs(a.alpha_V - lV) / lV});
    }
    return {make("lcu_norms.cross_check", "lcu_norms", worst, 1e-10, worst <= 1e-10,
                 "max relative gap over 10 random tables", t0)};
}

// ---------------------------------------------------------------- spectra

inline std::vector<CheckResult> qubiterate_family(const SuiteOptions& opt)
{
    auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed + 3);
    std::uniform_int_distribution<int> dim(4, 16);
    std::uniform_real_distribution<double> slack(1.0, 2.0);
    double dev = 0.0, unit = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        DenseOperator H = random_hermitian(rng, dim(rng));
        double lambda = hermitian_eigen(H).values.cwiseAbs().maxCoeff() * slack(rng);
        QubiterateResult r = qubiterate_check(H, lambda, lambda * opt.lambda_scale);
        dev = std::max(dev, r.max_deviation);
        unit = std::max(unit, r.unitarity);
    }
    return {make("qubiterate.phases", "qubiterate", dev, 1e-10, dev <= 1e-10, "20 random Hermitian matrices", t0),
            make("unitarity.walk", "unitarity", unit, 1e-10, unit <= 1e-10, "two-block walk matrices", t0)};
}

inline std::vector<CheckResult> qsp_family(const SuiteOptions& opt)
{
    auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed + 4);
    std::ostringstream os;
    double worst_ratio = 0.0, worst_unit = 0.0;
    bool ok = true;
    for (double lt : {1.0, 5.0, 20.0})
        for (double eps : {1e-3, 1e-6}) {
            DenseOperator H = random_hermitian(rng, 8);
            double lambda = hermitian_eigen(H).values.cwiseAbs().maxCoeff();
            double t = lt / lambda;
            int d = static_cast<int>(std::ceil(lt + std::log2(1.0 / eps)));
            double err = jacobi_anger_check(H, lambda, t, d);
            ok = ok && err <= eps;
            worst_ratio = std::max(worst_ratio, err / eps);
            os << "lt=" << lt << " eps=" << eps << " d=" << d << " err=" << err << "; ";
            DenseOperator U = dense_propagator(H, t);
            worst_unit = std::max(worst_unit, max_abs(U.adjoint() * U - DenseOperator::Identity(8, 8)));
        }
    double secs = seconds_since(t0);
    os << "runtime " << secs << " s";
    return {make("qsp.degree", "qsp", worst_ratio, 1.0, ok && secs < 30.0, os.str(), t0),
            make("unitarity.propagator", "unitarity", worst_unit, 1e-10, worst_unit <= 1e-10, "dense exp(-iHt)", t0)};
}

// ---------------------------------------------------------------- LCT

struct LctInstance {
    int config = 0;
    LctTrial trial;
};

inline Matrix random_lct(std::mt19937_64& rng, int d)
{
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix G(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) G(a, b) = z(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    Matrix R = qr.matrixQR();
    for (int k = 0; k < d; ++k)
        if (R(k, k) < 0) Q.col(k) *= -1.0;
    Matrix L = Matrix::Identity(d, d);
    for (int a = 1; a < d; ++a)
        for (int b = 0; b < a; ++b) L(a, b) = u(rng);
    return (Q * L).inverse();
}

inline std::vector<double> log_spaced(double lo, double hi, int n)
{
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1)));
    return v;
}

inline std::vector<LctInstance> lct_instances(const SuiteOptions& opt)
{
    std::mt19937_64 rng(opt.seed + 5);
    std::uniform_real_distribution<double> s(0.5, 2.0);
    std::vector<LctInstance> out;
    int config = 0;
    for (int d : {2, 3}) {
        int count = d == 2 ? opt.lct_configs_2d : opt.lct_configs_3d;
        auto deltas = d == 2 ? log_spaced(0.02, 0.2, 5) : log_spaced(0.06, 0.2, 5);
        for (int c = 0; c < count; ++c, ++config) {
            Matrix T = random_lct(rng, d);
            Matrix Sigma = Matrix::Zero(d, d);
            for (int k = 0; k < d; ++k) Sigma(k, k) = s(rng);
            for (double D : deltas) out.push_back({config, lct_trial(T, Sigma, D, d == 2)});
        }
    }
    return out;
}

// slope of log(error) against log(Delta) with one intercept per configuration
inline double fixed_effects_slope(const std::vector<LctInstance>& v)
{
    std::map<int, std::vector<std::pair<double, double>>> groups;
    for (const auto& x : v)
        if (x.trial.measured > 0.0) groups[x.config].push_back({std::log(x.trial.Delta), std::log(x.trial.measured)});
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [c, pts] : groups) {
        double mx = 0.0, my = 0.0;
        for (const auto& [x, y] : pts) {
            mx += x;
            my += y;
        }
        mx /= pts.size();
        my /= pts.size();
        for (const auto& [x, y] : pts) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline std::vector<CheckResult> lct_family(const SuiteOptions& opt)
{
    auto t0 = Clock::now();
    auto inst = lct_instances(opt);
    int violations = 0;
    double worst_ratio = 0.0;
    std::int64_t support_wraps = 0, box_wraps = 0;
    for (const auto& x : inst) {
        if (x.trial.measured > x.trial.bound.total) ++violations;
        if (x.trial.bound.total > 0.0) worst_ratio = std::max(worst_ratio, x.trial.measured / x.trial.bound.total);
        support_wraps += x.trial.support_wraps;
        if (x.trial.box_wraps > 0) box_wraps += x.trial.box_wraps;
    }
    double slope = fixed_effects_slope(inst);
    std::ostringstream a, b, c;
    a << inst.size() << " instances, " << violations << " above the bound, max measured/bound " << worst_ratio;
    b << "fixed-effects log-log slope " << slope;
    c << inst.size() << " instances, support wraps " << support_wraps << ", interior box wraps (2D) " << box_wraps;
    bool enough = inst.size() >= 200;
    return {make("lct.error_bound", "lct", worst_ratio, 1.0, violations == 0 && enough, a.str(), t0),
            make("lct.slope", "lct", slope, 1.2, slope >= 0.8 && slope <= 1.2, b.str(), t0),
            make("lct.padding", "lct", static_cast<double>(support_wraps + box_wraps), 0.0,
                 support_wraps == 0 && box_wraps == 0 && enough, c.str(), t0)};
}

// ---------------------------------------------------------------- encoding bounds

inline std::vector<CheckResult> r_nu_family(const SuiteOptions&)
{
    auto t0 = Clock::now();
    double worst = 0.0;
    for (int n = 2; n <= 20; ++n) worst = std::max(worst, r_nu(n, lambda_nu_bound(n)));
    bool brute_ok = true;
    double worst_brute = 0.0;
    for (int n = 2; n <= 5; ++n) {
        double exact = lambda_nu(n, NuMode::brute);
        brute_ok = brute_ok && exact >= lambda_nu_bound(n);
        worst_brute = std::max(worst_brute, r_nu(n, exact));
    }
    std::ostringstream os;
    os << "closed bound max r_nu " << worst << ", brute-force max r_nu (n_p<=5) " << worst_brute;
    return {make("r_nu.bound", "r_nu", worst, 12.0, worst <= 12.0 * (1.0 + 1e-12) && brute_ok, os.str(), t0)};
}

inline std::vector<CheckResult> p_zeta_family(const SuiteOptions& opt)
{
    auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed + 8);
    std::uniform_int_distribution<int> ne(1, 40), zmax(1, 10);
    double worst = 1e300;
    for (int inst = 0; inst < 1000; ++inst) {
        int eta_e = ne(rng);
        std::vector<Nucleus> nuc;
        int left = eta_e;
        while (left > 0) {
            int z = std::min(left, zmax(rng));
            nuc.push_back({"X", 1000.0, z});
            left -= z;
        }
        ParticleTable pt = ParticleTable::from(eta_e, nuc);
        worst = std::min(worst, p_zeta(pt) - (0.75 - 0.25 / eta_e));
    }
    double hyd = p_zeta(ParticleTable::from(1, {{"H", 1836.15, 1}}));
    std::ostringstream os;
    os << "min p_zeta - bound over 1000 tables " << worst << ", hydrogen " << hyd;
    return {make("p_zeta.bound", "p_zeta", worst, 0.0, worst >= -1e-15 && hyd == 0.5, os.str(), t0)};
}

inline std::vector<CheckResult> hermite_family(const SuiteOptions&)
{
    auto t0 = Clock::now();
    const double L = 40.0;
    double worst = 0.0;
    bool ok = true;
    for (int nu = 0; nu <= 4; ++nu)
        for (double w : {0.5, 1.0, 2.0})
            for (double delta : {1e-2, 1e-3}) {
                double K = k_cutoff_nuclear(w, L, nu + 1, delta);
                double D = sm_projection_check(nu, w, L, K).truncation;
                ok = ok && D <= delta;
                worst = std::max(worst, D / delta);
            }
    return {make("hermite.truncation", "hermite", worst, 1.0, ok, "max truncation/delta over 30 cases", t0)};
}

inline std::vector<CheckResult> mps_family(const SuiteOptions& opt)
{
    auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed + 10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int worst_gap = -1000, worst_bond = 0;
    for (int d = 0; d <= 5; ++d)
        for (int n = 2; n <= 10; ++n) {
            std::vector<double> c(d + 1);
            for (auto& x : c) x = u(rng);
            PolyMpsCheck r = poly_mps_bond_check(c, n);
            worst_gap = std::max(worst_gap, r.max_bond - r.bound);
            worst_bond = std::max(worst_bond, r.max_bond);
        }
    std::ostringstream os;
    os << "largest bond " << worst_bond << ", max (bond - (2d+4)) " << worst_gap;
    return {make("mps.bond", "mps", worst_gap, 0.0, worst_gap <= 0, os.str(), t0)};
}

// ---------------------------------------------------------------- budget and anchor

inline std::vector<CheckResult> budget_family(const SuiteOptions&)
{
    auto t0 = Clock::now();
    ErrorBudget b = allocate(0.095, 1.0);
    double gap = std::abs(b.composed() - 0.095);
    double trim = trim_bound(1e9, 1e-5, 1e9);
    std::ostringstream os;
    os << "2(eps_ISP + eps_prop) + eps_QAE = " << b.composed() << " with eps_B = " << b.eps_B << ", eps_O = " << b.eps_O
       << "; trim bound " << trim;
    bool ok = gap <= 1e-15 && b.eps_B == 0.0 && b.eps_O == 0.0 && trim <= 1.1e-4;
    return {make("budget.closure", "budget", trim, 1.1e-4, ok, os.str(), t0)};
}

inline std::vector<CheckResult> anchor_family(const SuiteOptions&)
{
    auto t0 = Clock::now();
    EvolutionAnchor a;
    double v = anchor_time_evolution(a);
    double ratio = v / a.toffoli;
    std::ostringstream os;
    os.precision(4);
    os << "computed " << v << " vs tabulated " << a.toffoli << " (ratio " << ratio << ")";
    return {make("anchor.time_evolution", "anchor", v, a.toffoli, ratio >= 0.1 && ratio <= 10.0, os.str(), t0)};
}

// ---------------------------------------------------------------- projectors and conversions

inline std::vector<CheckResult> yield_family(const SuiteOptions& opt)
{
    auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed + 12);
    std::uniform_int_distribution<std::int64_t> coord(-6, 6);
    std::vector<std::vector<std::int64_t>> configs(2000, std::vector<std::int64_t>(9));
    for (auto& R : configs)
        for (auto& x : R) x = coord(rng);
    ReactionChannel far{"far", {{0, 1, 2.5, Direction::greater}, {0, 2, 3.0, Direction::greater}}};
    ReactionChannel near{"near", {{0, 1, 2.5, Direction::less}, {0, 2, 3.0, Direction::greater}}};
    ReactionChannel a{"a", {{0, 2, 3.0, Direction::less}}};
    auto p1 = yield_projector(far, configs, 0.5);
    auto p2 = yield_projector(near, configs, 0.5);
    auto p3 = yield_projector(a, configs, 0.5);
    int bad = 0;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        for (int v : {p1[k], p2[k], p3[k]})
            if (v * v != v) ++bad;
        if (p1[k] + p2[k] + p3[k] != 1) ++bad;
    }
    return {make("yield.projectors", "yield", bad, 0.0, bad == 0,
                 "idempotence and completeness over 2000 configurations", t0)};
}

inline std::vector<CheckResult> tc2sm_family(const SuiteOptions&)
{
    auto t0 = Clock::now();
    const int w = 6;
    int bad = 0;
    for (std::uint64_t x = 0; x < 64; ++x) {
        if (x == 32) continue;
        if (sm2tc_convert(tc2sm_convert(x, w), w) != x) ++bad;
    }
    bool min_rejected = false;
    try {
        tc2sm_convert(32, w);
    } catch (const std::invalid_argument&) {
        min_rejected = true;
    }
    return {make("tc2sm.roundtrip", "tc2sm", bad, 0.0, bad == 0 && min_rejected,
                 "all 6-bit values except -32 round-trip", t0)};
}

} // namespace suite_detail

inline std::vector<CheckGroup> verify_groups()
{
    using namespace suite_detail;
    return {
        {"lcu", {"lcu.galerkin"}, lcu_galerkin},
        {"lcu_norms", {"lcu_norms.cross_check"}, lcu_norms_check},
        {"qubiterate", {"qubiterate.phases", "unitarity.walk"}, qubiterate_family},
        {"qsp", {"qsp.degree", "unitarity.propagator"}, qsp_family},
        {"lct", {"lct.error_bound", "lct.slope", "lct.padding"}, lct_family},
        {"r_nu", {"r_nu.bound"}, r_nu_family},
        {"p_zeta", {"p_zeta.bound"}, p_zeta_family},
        {"hermite", {"hermite.truncation"}, hermite_family},
        {"mps", {"mps.bond"}, mps_family},
        {"budget", {"budget.closure"}, budget_family},
        {"anchor", {"anchor.time_evolution"}, anchor_family},
        {"yield", {"yield.projectors"}, yield_family},
        {"tc2sm", {"tc2sm.roundtrip"}, tc2sm_family},
    };
}

inline bool suite_selects(const std::string& pattern, const std::string& family, const std::string& name)
{
    if (pattern.empty()) return true;
    return suite_detail::glob_match(pattern, family) || suite_detail::glob_match(pattern, name);
}

inline std::vector<CheckResult> run_verify(const SuiteOptions& opt = {})
{
    std::vector<CheckResult> out;
    for (const auto& g : verify_groups()) {
        bool any = false;
        for (const auto& n : g.names) any = any || suite_selects(opt.only, g.family, n);
        if (!any) continue;
        for (auto& r : g.run(opt))
            if (suite_selects(opt.only, r.family, r.name)) out.push_back(std::move(r));
    }
    return out;
}

inline json verify_json(const std::vector<CheckResult>& results, const SuiteOptions& opt)
{
    json checks = json::array();
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        checks.push_back({{"name", r.name}, {"family", r.family}, {"passed", r.passed}, {"measured", r.measured},
                          {"bound", r.bound}, {"detail", r.detail}});
    }
    std::vector<std::string> failed;
    for (const auto& r : results)
        if (!r.passed) failed.push_back(r.name);
    return {{"passed", all && !results.empty()}, {"seed", opt.seed}, {"only", opt.only}, {"checks", checks},
            {"failed", failed}};
}

} // namespace qdyn
