#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "encoding.hpp"
#include "model.hpp"
#include "units.hpp"

namespace qdyn {

using cdouble = std::complex<double>;
using DenseOperator = Eigen::MatrixXcd;

inline constexpr std::int64_t dense_dimension_cap = 4096;

inline double max_abs(const DenseOperator& A) { return A.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const DenseOperator& A, double tol = 1e-12) { return max_abs(A - A.adjoint()) <= tol; }

inline double operator_norm(const DenseOperator& A)
{
    Eigen::JacobiSVD<DenseOperator> svd(A);
    return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// plane-wave basis

struct PlaneWaveBasis {
    int particles = 0;
    int dims = 3;
    int n_p = 2;
    std::int64_t K = 0; // grid half width
    std::int64_t N = 0; // points per axis
    std::int64_t size = 0;

    // momentum components for basis state idx, particle-major
    std::vector<std::int64_t> decode(std::int64_t idx) const
    {
        std::vector<std::int64_t> p(static_cast<std::size_t>(particles * dims));
        for (int k = particles * dims - 1; k >= 0; --k) {
            p[k] = idx % N - K;
            idx /= N;
        }
        return p;
    }

    std::int64_t encode(const std::vector<std::int64_t>& p) const
    {
        std::int64_t idx = 0;
        for (std::int64_t v : p) idx = idx * N + (v + K);
        return idx;
    }

    bool in_grid(std::int64_t v) const { return v >= -K && v <= K; }
};

inline PlaneWaveBasis plane_wave_basis(int particles, int n_p, int dims)
{
    if (particles < 1) throw std::invalid_argument("plane-wave basis needs at least one particle");
    if (n_p < 2) throw std::invalid_argument("plane-wave basis needs n_p >= 2");
    if (dims != 1 && dims != 3) throw std::invalid_argument("plane-wave basis supports dims 1 or 3");
    PlaneWaveBasis b;
    b.particles = particles;
    b.dims = dims;
    b.n_p = n_p;
    b.K = pow2(n_p - 1) - 1;
    b.N = 2 * b.K + 1;
    double size = std::pow(static_cast<double>(b.N), particles * dims);
    if (size > static_cast<double>(dense_dimension_cap))
        throw std::invalid_argument("dense operator dimension exceeds the cap of 4096");
    b.size = static_cast<std::int64_t>(std::llround(size));
    return b;
}

inline DenseOperator galerkin_hamiltonian(const ParticleTable& pt, int n_p, double L, int dims = 3)
{
    if (!(L > 0.0)) throw std::invalid_argument("galerkin_hamiltonian: L must be positive");
    PlaneWaveBasis b = plane_wave_basis(pt.eta(), n_p, dims);
    DenseOperator H = DenseOperator::Zero(b.size, b.size);
    double kunit = 2.0 * pi / L;
    double Vpre = 2.0 * pi / (L * L * L);
    int eta = pt.eta();
    for (std::int64_t col = 0; col < b.size; ++col) {
        auto p = b.decode(col);
        double t = 0.0;
        for (int j = 0; j < eta; ++j) {
            double k2 = 0.0;
            for (int w = 0; w < dims; ++w) k2 += std::pow(kunit * static_cast<double>(p[j * dims + w]), 2);
            t += k2 / (2.0 * pt.masses[j]);
        }
        H(col, col) += t;
        for (int i = 0; i < eta; ++i) {
            for (int j = 0; j < eta; ++j) {
                if (i == j) continue;
                double zz = static_cast<double>(pt.charges[i]) * pt.charges[j];
                // enumerate momentum transfers nu with p_i + nu and p_j - nu inside G
                std::vector<std::int64_t> nu(dims, -b.K);
                while (true) {
                    bool zero = std::all_of(nu.begin(), nu.end(), [](std::int64_t v) { return v == 0; });
                    bool in_g0 = std::all_of(nu.begin(), nu.end(), [&](std::int64_t v) { return b.in_grid(v); });
                    if (!zero && in_g0) {
                        bool ok = true;
                        for (int w = 0; w < dims && ok; ++w)
                            ok = b.in_grid(p[i * dims + w] + nu[w]) && b.in_grid(p[j * dims + w] - nu[w]);
                        if (ok) {
                            auto q = p;
                            double k2 = 0.0;
                            for (int w = 0; w < dims; ++w) {
                                q[i * dims + w] += nu[w];
                                q[j * dims + w] -= nu[w];
                                k2 += std::pow(kunit * static_cast<double>(nu[w]), 2);
                            }
                            H(b.encode(q), col) += Vpre * zz / k2;
                        }
                    }
                    int w = dims - 1;
                    while (w >= 0 && nu[w] == b.K) nu[w--] = -b.K;
                    if (w < 0) break;
                    ++nu[w];
                }
            }
        }
    }
    return H;
}

struct LcuAssembly {
    DenseOperator H;
    double alpha_T = 0.0; // sum of kinetic coefficients
    double alpha_V = 0.0; // sum of potential coefficients
    std::int64_t terms = 0;
};

// Sum of alpha_l H_l built term by term from the unitary decomposition.
inline LcuAssembly lcu_assemble(const ParticleTable& pt, int n_p, double Omega)
{
    if (!(Omega > 0.0)) throw std::invalid_argument("lcu_assemble: Omega must be positive");
    const int dims = 3;
    PlaneWaveBasis b = plane_wave_basis(pt.eta(), n_p, dims);
    LcuAssembly out;
    out.H = DenseOperator::Zero(b.size, b.size);
    int eta = pt.eta();
    double L = std::cbrt(Omega);
    std::vector<std::vector<std::int64_t>> states(static_cast<std::size_t>(b.size));
    for (std::int64_t s = 0; s < b.size; ++s) states[s] = b.decode(s);
    auto bit = [](std::int64_t v, int r) { return static_cast<int>((std::abs(v) >> r) & 1); };

    // kinetic terms (b, j, w, r, s)
    for (int j = 0; j < eta; ++j)
        for (int w = 0; w < dims; ++w)
            for (int r = 0; r <= n_p - 2; ++r)
                for (int s = 0; s <= n_p - 2; ++s)
                    for (int bb = 0; bb < 2; ++bb) {
                        double alpha = pi * pi * std::ldexp(1.0, r + s) / (std::cbrt(Omega * Omega) * pt.masses[j]);
                        out.alpha_T += alpha;
                        ++out.terms;
                        for (std::int64_t st = 0; st < b.size; ++st) {
                            std::int64_t comp = states[st][j * dims + w];
                            int f = bb * ((bit(comp, r) & bit(comp, s)) ^ 1);
                            out.H(st, st) += alpha * (f ? -1.0 : 1.0);
                        }
                    }

    // potential terms (b, i, j, nu)
    std::vector<std::int64_t> nu(dims, -b.K);
    while (true) {
        bool zero = std::all_of(nu.begin(), nu.end(), [](std::int64_t v) { return v == 0; });
        if (!zero) {
            double k2 = 0.0;
            for (int w = 0; w < dims; ++w) k2 += std::pow(2.0 * pi * static_cast<double>(nu[w]) / L, 2);
            for (int i = 0; i < eta; ++i)
                for (int j = 0; j < eta; ++j) {
                    if (i == j) continue;
                    int species = static_cast<int>(i < pt.eta_e) ^ static_cast<int>(j < pt.eta_e);
                    double alpha = pi * std::abs(pt.charges[i]) * std::abs(pt.charges[j]) / (Omega * k2);
                    for (int bb = 0; bb < 2; ++bb) {
                        out.alpha_V += alpha;
                        ++out.terms;
                        for (std::int64_t st = 0; st < b.size; ++st) {
                            auto q = states[st];
                            bool inside = true;
                            for (int w = 0; w < dims; ++w) {
                                q[i * dims + w] += nu[w];
                                q[j * dims + w] -= nu[w];
                                inside = inside && b.in_grid(q[i * dims + w]) && b.in_grid(q[j * dims + w]);
                            }
                            int f = (bb * static_cast<int>(!inside)) ^ species;
                            std::int64_t row = inside ? b.encode(q) : st;
                            out.H(row, st) += alpha * (f ? -1.0 : 1.0);
                        }
                    }
                }
        }
        int w = dims - 1;
        while (w >= 0 && nu[w] == b.K) nu[w--] = -b.K;
        if (w < 0) break;
        ++nu[w];
    }
    return out;
}

// ---------------------------------------------------------------------------
// qubiterate spectrum

struct SpectralFunction {
    Eigen::VectorXd values;
    DenseOperator vectors;
};

inline SpectralFunction hermitian_eigen(const DenseOperator& H)
{
    if (!is_hermitian(H, 1e-10 * std::max(1.0, max_abs(H)))) throw std::invalid_argument("operator is not Hermitian");
    Eigen::SelfAdjointEigenSolver<DenseOperator> es(H);
    return {es.eigenvalues(), es.eigenvectors()};
}

template <class F>
DenseOperator matrix_function(const SpectralFunction& s, F f)
{
    Eigen::VectorXcd d(s.values.size());
    for (int k = 0; k < s.values.size(); ++k) d(k) = f(s.values(k));
    return s.vectors * d.asDiagonal() * s.vectors.adjoint();
}

// (2|0><0| - I) applied to the block encoding [[A, B], [B, -A]] with A = H/lambda, B = sqrt(I - A^2)
inline DenseOperator qubiterate(const DenseOperator& H, double lambda)
{
    auto s = hermitian_eigen(H);
    if (s.values.cwiseAbs().maxCoeff() > lambda * (1.0 + 1e-12))
        throw std::invalid_argument("qubiterate: lambda is smaller than the operator norm");
    auto n = H.rows();
    DenseOperator A = H / lambda;
    DenseOperator B = matrix_function(s, [&](double e) {
        double x = std::clamp(e / lambda, -1.0, 1.0);
        return cdouble(std::sqrt(1.0 - x * x), 0.0);
    });
    DenseOperator W(2 * n, 2 * n);
    W.topLeftCorner(n, n) = A;
    W.topRightCorner(n, n) = B;
    W.bottomLeftCorner(n, n) = -B;
    W.bottomRightCorner(n, n) = A;
    return W;
}

struct QubiterateResult {
    double max_deviation = 0.0;
    double unitarity = 0.0;
};

inline double angle_distance(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 2.0 * pi);
    return std::min(d, 2.0 * pi - d);
}

// lambda_expected, when positive, is the normalization assumed for the predicted phases
inline QubiterateResult qubiterate_check(const DenseOperator& H, double lambda, double lambda_expected = 0.0)
{
    double lam_e = lambda_expected > 0.0 ? lambda_expected : lambda;
    DenseOperator W = qubiterate(H, lambda);
    QubiterateResult r;
    r.unitarity = max_abs(W.adjoint() * W - DenseOperator::Identity(W.rows(), W.cols()));
    Eigen::ComplexEigenSolver<DenseOperator> es(W, false);
    std::vector<double> got;
    for (int k = 0; k < es.eigenvalues().size(); ++k) got.push_back(std::arg(es.eigenvalues()(k)));
    auto s = hermitian_eigen(H);
    std::vector<bool> used(got.size(), false);
    for (int k = 0; k < s.values.size(); ++k) {
        double a = std::acos(std::clamp(s.values(k) / lam_e, -1.0, 1.0));
        for (double target : {a, -a}) {
            std::size_t best = got.size();
            double bd = 1e300;
            for (std::size_t m = 0; m < got.size(); ++m) {
                if (used[m]) continue;
                double dd = angle_distance(got[m], target);
                if (dd < bd) {
                    bd = dd;
                    best = m;
                }
            }
            used[best] = true;
            r.max_deviation = std::max(r.max_deviation, bd);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Jacobi-Anger truncation

inline DenseOperator jacobi_anger_series(const DenseOperator& H, double lambda, double t, int d)
{
    if (d < 0) throw std::invalid_argument("jacobi_anger: degree must be >= 0");
    auto n = H.rows();
    DenseOperator X = H / lambda;
    DenseOperator Tprev = DenseOperator::Identity(n, n);
    DenseOperator Tcur = X;
    double z = lambda * t;
    DenseOperator f = std::cyl_bessel_j(0.0, z) * Tprev;
    cdouble phase(1.0, 0.0);
    for (int k = 1; k <= d; ++k) {
        phase *= cdouble(0.0, -1.0);
        f += 2.0 * phase * std::cyl_bessel_j(static_cast<double>(k), z) * Tcur;
        DenseOperator Tnext = 2.0 * X * Tcur - Tprev;
        Tprev = std::move(Tcur);
        Tcur = std::move(Tnext);
    }
    return f;
}

inline double jacobi_anger_check(const DenseOperator& H, double lambda, double t, int d)
{
    auto s = hermitian_eigen(H);
    if (s.values.cwiseAbs().maxCoeff() > lambda * (1.0 + 1e-12))
        throw std::invalid_argument("jacobi_anger: lambda is smaller than the operator norm");
    DenseOperator U = matrix_function(s, [&](double e) { return std::exp(cdouble(0.0, -e * t)); });
    return operator_norm(U - jacobi_anger_series(H, lambda, t, d));
}

inline DenseOperator dense_propagator(const DenseOperator& H, double t)
{
    return matrix_function(hermitian_eigen(H), [&](double e) { return std::exp(cdouble(0.0, -e * t)); });
}

// ---------------------------------------------------------------------------
// Hermite-Gaussian projection onto the plane-wave lattice

inline double hermite_function(int nu, double x)
{
    double norm = 1.0 / std::sqrt(std::ldexp(1.0, nu) * std::tgamma(nu + 1.0) * std::sqrt(pi));
    return norm * std::hermite(static_cast<unsigned>(nu), x) * std::exp(-0.5 * x * x);
}

struct ProjectionCheck {
    std::vector<double> k;
    std::vector<cdouble> coefficients; // inside |k| <= K
    double truncation = 0.0;
};

inline ProjectionCheck sm_projection_check(int nu, double omega, double L, double K)
{
    if (nu < 0 || nu > 8) throw std::invalid_argument("sm_projection_check: nu must lie in [0, 8]");
    if (!(omega > 0.0) || !(L > 0.0) || !(K > 0.0)) throw std::invalid_argument("sm_projection_check: need omega, L, K > 0");
    ProjectionCheck out;
    double dk = 2.0 * pi / L;
    auto p_ref = static_cast<std::int64_t>(std::ceil(5.0 * K / dk));
    cdouble ph = std::pow(cdouble(0.0, -1.0), nu);
    double full = 0.0, inside = 0.0;
    for (std::int64_t p = -p_ref; p <= p_ref; ++p) {
        double k = dk * static_cast<double>(p);
        double v = hermite_function(nu, k / std::sqrt(omega));
        full += v * v;
        if (std::abs(k) <= K) {
            inside += v * v;
            out.k.push_back(k);
            out.coefficients.push_back(ph * v);
        }
    }
    out.truncation = std::sqrt(std::max(0.0, 1.0 - inside / full));
    return out;
}

// ---------------------------------------------------------------------------
// tensor-train rank of a polynomial on the two's-complement grid

struct PolyMpsCheck {
    std::vector<int> bonds;
    int max_bond = 0;
    int bound = 0;
};

inline PolyMpsCheck poly_mps_bond_check(const std::vector<double>& coeffs, int n_bits)
{
    if (coeffs.empty()) throw std::invalid_argument("poly_mps_bond_check: need at least one coefficient");
    int d = static_cast<int>(coeffs.size()) - 1;
    if (d > 6) throw std::invalid_argument("poly_mps_bond_check: degree must be <= 6");
    if (n_bits < 1 || n_bits > 12) throw std::invalid_argument("poly_mps_bond_check: n_bits must lie in [1, 12]");
    std::int64_t size = pow2(n_bits);
    // site 0 is the sign bit; column-major index over the bits keeps site 0 fastest
    Eigen::VectorXd values(size);
    for (std::int64_t idx = 0; idx < size; ++idx) {
        std::int64_t k = 0;
        for (int site = 0; site < n_bits; ++site) {
            int bit = static_cast<int>((idx >> site) & 1);
            int weight = n_bits - 1 - site;
            k += (site == 0 ? -1 : 1) * static_cast<std::int64_t>(bit) * pow2(weight);
        }
        double x = static_cast<double>(k), v = 0.0;
        for (int c = d; c >= 0; --c) v = v * x + coeffs[c];
        values(idx) = v;
    }
    PolyMpsCheck out;
    out.bound = 2 * d + 4;
    Eigen::MatrixXd rest = Eigen::Map<Eigen::MatrixXd>(values.data(), 1, size);
    int rank = 1;
    for (int site = 0; site < n_bits - 1; ++site) {
        Eigen::Index cols = rest.size() / (rank * 2);
        Eigen::MatrixXd C = Eigen::Map<Eigen::MatrixXd>(rest.data(), rank * 2, cols);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        int r = 0;
        double top = sv.size() ? sv(0) : 0.0;
        for (int m = 0; m < sv.size(); ++m)
            if (sv(m) > 1e-12 * std::max(top, 1e-300)) ++r;
        r = std::max(r, 1);
        out.bonds.push_back(r);
        Eigen::MatrixXd next = sv.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
        rest = Eigen::Map<Eigen::MatrixXd>(next.data(), 1, next.size());
        // next is r x cols in column-major order, matching (rank, remaining sites)
        rank = r;
    }
    out.max_bond = out.bonds.empty() ? 1 : *std::max_element(out.bonds.begin(), out.bonds.end());
    return out;
}

// ---------------------------------------------------------------------------
// reaction-channel projectors

// Positions are integer grid coordinates (eta_n x 3, row-major); spacing converts cutoffs to grid units.
inline bool channel_indicator(const ReactionChannel& ch, const std::vector<std::int64_t>& R, double spacing)
{
    if (ch.constraints.empty()) throw std::invalid_argument("channel indicator needs at least one constraint");
    if (!(spacing > 0.0)) throw std::invalid_argument("channel indicator: spacing must be positive");
    bool all = true;
    for (const auto& c : ch.constraints) {
        std::size_t a = 3 * static_cast<std::size_t>(c.alpha), b = 3 * static_cast<std::size_t>(c.beta);
        if (std::max(a, b) + 3 > R.size()) throw std::invalid_argument("channel indicator: nucleus index out of range");
        std::int64_t sq = 0;
        for (int w = 0; w < 3; ++w) {
            std::int64_t diff = R[a + w] - R[b + w];
            sq += diff * diff;
        }
        double b2 = (c.cutoff / spacing) * (c.cutoff / spacing);
        bool X = static_cast<double>(sq) > b2;
        all = all && (c.direction == Direction::greater ? X : !X);
    }
    return all;
}

inline std::vector<int> yield_projector(const ReactionChannel& ch, const std::vector<std::vector<std::int64_t>>& configs,
                                        double spacing)
{
    std::vector<int> diag;
    diag.reserve(configs.size());
    for (const auto& R : configs) diag.push_back(channel_indicator(ch, R, spacing) ? 1 : 0);
    return diag;
}

// ---------------------------------------------------------------------------
// two's complement to signed magnitude

inline std::uint64_t tc2sm_convert(std::uint64_t bits, int width)
{
    if (width < 2 || width > 63) throw std::invalid_argument("tc2sm: width must lie in [2, 63]");
    std::uint64_t sign = std::uint64_t{1} << (width - 1);
    std::uint64_t low = sign - 1;
    if (bits >> width) throw std::invalid_argument("tc2sm: input has bits above the width");
    if (!(bits & sign)) return bits;
    if ((bits & low) == 0) throw std::invalid_argument("tc2sm: -2^(w-1) has no signed-magnitude image");
    return sign | ((~bits + 1) & low);
}

inline std::uint64_t sm2tc_convert(std::uint64_t bits, int width)
{
    if (width < 2 || width > 63) throw std::invalid_argument("sm2tc: width must lie in [2, 63]");
    std::uint64_t sign = std::uint64_t{1} << (width - 1);
    std::uint64_t low = sign - 1;
    if (bits >> width) throw std::invalid_argument("sm2tc: input has bits above the width");
    if (!(bits & sign)) return bits;
    return sign | ((~bits + 1) & low);
}

} // namespace qdyn
