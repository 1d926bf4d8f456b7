#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridsizer.hpp"
#include "units.hpp"

namespace qdyn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point = std::vector<std::int64_t>;

enum class StepKind { LowerShear, UpperShear, UpperShear2D, LowerShear2D, QuarterTurn, Reflection };

inline const char* to_string(StepKind k)
{
    switch (k) {
    case StepKind::LowerShear: return "LowerShear";
    case StepKind::UpperShear: return "UpperShear";
    case StepKind::UpperShear2D: return "UpperShear2D";
    case StepKind::LowerShear2D: return "LowerShear2D";
    case StepKind::QuarterTurn: return "QuarterTurn";
    case StepKind::Reflection: return "Reflection";
    }
    return "?";
}

// UpperShear2D: n_i += coef * n_j.  LowerShear2D: n_j += coef * n_i.
// QuarterTurn: (n_i, n_j) -> (sign n_j, -sign n_i).  Reflection: n_axis -> -n_axis.
struct Step {
    StepKind kind = StepKind::LowerShear;
    int i = 0;
    int j = 0;
    double coef = 0.0;
    int sign = 1;
    Matrix shear; // full unit-triangular matrix for LowerShear / UpperShear
};

struct Givens {
    int i = 0;
    int j = 0;
    double theta = 0.0;
    double phi = 0.0;
    int h = 0;
};

struct TransformProgram {
    int dims = 0;
    std::vector<Step> steps;
    Matrix L;
    Matrix X;
    Matrix Y;
    std::vector<Givens> givens;
    bool has_reflection = false;
};

inline Matrix givens_matrix(int d, int i, int j, double theta)
{
    Matrix G = Matrix::Identity(d, d);
    double c = std::cos(theta), s = std::sin(theta);
    G(i, i) = c;
    G(j, j) = c;
    G(i, j) = s;
    G(j, i) = -s;
    return G;
}

inline Matrix step_matrix(const Step& s, int d)
{
    Matrix M = Matrix::Identity(d, d);
    switch (s.kind) {
    case StepKind::LowerShear:
    case StepKind::UpperShear: return s.shear;
    case StepKind::UpperShear2D: M(s.i, s.j) = s.coef; break;
    case StepKind::LowerShear2D: M(s.j, s.i) = s.coef; break;
    case StepKind::QuarterTurn: return givens_matrix(d, s.i, s.j, s.sign * pi / 2.0);
    case StepKind::Reflection: M(s.i, s.i) = -1.0; break;
    }
    return M;
}

// Product of the step matrices in application order (last step leftmost).
inline Matrix program_matrix(const TransformProgram& p)
{
    Matrix M = Matrix::Identity(p.dims, p.dims);
    for (const auto& s : p.steps) M = step_matrix(s, p.dims) * M;
    return M;
}

namespace detail {

inline Matrix reversal(int d)
{
    Matrix P = Matrix::Zero(d, d);
    for (int k = 0; k < d; ++k) P(k, d - 1 - k) = 1.0;
    return P;
}

// A = X L with X orthogonal and L lower triangular with positive diagonal
inline void ql_decompose(const Matrix& A, Matrix& X, Matrix& L)
{
    int d = static_cast<int>(A.rows());
    Matrix P = reversal(d);
    Eigen::HouseholderQR<Matrix> qr(P * A * P);
    Matrix Q = qr.householderQ();
    Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    X = P * Q * P;
    L = P * R * P;
    for (int k = 0; k < d; ++k) {
        if (L(k, k) < 0.0) {
            L.row(k) *= -1.0;
            X.col(k) *= -1.0;
        }
    }
}

inline double wrap_angle(double t)
{
    if (t <= -pi) t += 2.0 * pi;
    if (t > pi) t -= 2.0 * pi;
    if (t >= pi) t = -pi;
    return t;
}

} // namespace detail

inline Givens reduce_angle(int i, int j, double theta)
{
    Givens g;
    g.i = i;
    g.j = j;
    g.theta = detail::wrap_angle(theta);
    g.h = std::abs(g.theta) >= pi / 2.0 ? 1 : 0;
    double sg = g.theta < 0.0 ? -1.0 : 1.0;
    g.phi = g.theta - (pi / 2.0) * g.h * sg;
    return g;
}

inline TransformProgram decompose_lct(const Matrix& T)
{
    if (T.rows() != T.cols() || T.rows() == 0) throw std::invalid_argument("decompose_lct: T must be square");
    int d = static_cast<int>(T.rows());
    double det = T.determinant();
    if (!std::isfinite(det) || std::abs(std::abs(det) - 1.0) > 1e-9)
        throw std::invalid_argument("decompose_lct: |det T| must be 1");

    TransformProgram p;
    p.dims = d;
    Matrix Tinv = T.inverse();
    detail::ql_decompose(Tinv, p.X, p.L);
    for (int k = 0; k < d; ++k)
        if (std::abs(p.L(k, k) - 1.0) > 1e-9)
            throw std::invalid_argument("decompose_lct: T^{-1} = X L does not give a unit-lower L");
    for (int k = 0; k < d; ++k) p.L(k, k) = 1.0;

    p.Y = Matrix::Identity(d, d);
    p.has_reflection = p.X.determinant() < 0.0;
    if (p.has_reflection) p.Y(0, 0) = -1.0;

    // zero Y X below the diagonal; the stored rotations satisfy Y X = G_1 ... G_N
    Matrix A = p.Y * p.X;
    for (int c = 0; c < d - 1; ++c) {
        for (int j = c + 1; j < d; ++j) {
            if (A(j, c) == 0.0) continue;
            double theta = std::atan2(A(j, c), A(c, c));
            A = givens_matrix(d, c, j, theta) * A;
            A(j, c) = 0.0;
            p.givens.push_back(reduce_angle(c, j, -theta));
        }
    }

    bool lower_trivial = (p.L - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() == 0.0;
    if (!lower_trivial) {
        Step s;
        s.kind = StepKind::LowerShear;
        s.shear = p.L;
        p.steps.push_back(s);
    }
    for (auto it = p.givens.rbegin(); it != p.givens.rend(); ++it) {
        const Givens& g = *it;
        if (g.phi != 0.0) {
            Step s1{StepKind::UpperShear2D, g.i, g.j, std::tan(g.phi / 2.0), 1, {}};
            Step s2{StepKind::LowerShear2D, g.i, g.j, -std::sin(g.phi), 1, {}};
            p.steps.push_back(s1);
            p.steps.push_back(s2);
            p.steps.push_back(s1);
        }
        if (g.h) p.steps.push_back(Step{StepKind::QuarterTurn, g.i, g.j, 0.0, g.theta < 0.0 ? -1 : 1, {}});
    }
    if (p.has_reflection) p.steps.push_back(Step{StepKind::Reflection, 0, 0, 0.0, 1, {}});
    return p;
}

// ---------------------------------------------------------------------------
// integer grid arithmetic

inline std::int64_t cmod(std::int64_t y, std::int64_t M)
{
    std::int64_t m = (y + M) % (2 * M);
    if (m < 0) m += 2 * M;
    return m - M;
}

// round half up of s / 2^r
inline std::int64_t round_fixed(std::int64_t s, int r)
{
    if (r == 0) return s;
    return (s + (std::int64_t{1} << (r - 1))) >> r;
}

struct GridMap {
    int dims = 0;
    int n_bar = 0;
    int r = 0;
    std::int64_t M = 0;
};

inline GridMap grid_map(int dims, int n_bar)
{
    if (dims < 1) throw std::invalid_argument("grid_map: dims must be >= 1");
    if (n_bar < 2 || n_bar > 30) throw std::invalid_argument("grid_map: n_bar must lie in [2, 30]");
    return GridMap{dims, n_bar, n_bar - 1, pow2(n_bar - 1)};
}

struct CompiledStep {
    StepKind kind = StepKind::LowerShear;
    int i = 0;
    int j = 0;
    std::int64_t B = 0;
    int sign = 1;
    std::vector<std::vector<std::int64_t>> rows;
};

struct CompiledProgram {
    GridMap grid;
    std::vector<CompiledStep> steps;
};

inline std::int64_t quantize(double b, int r)
{
    if (!std::isfinite(b)) throw std::invalid_argument("shear coefficient is not finite");
    return std::llround(std::ldexp(b, r));
}

inline CompiledStep compile_step(const Step& s, const GridMap& g)
{
    CompiledStep c;
    c.kind = s.kind;
    c.i = s.i;
    c.j = s.j;
    c.sign = s.sign;
    if (s.kind == StepKind::UpperShear2D || s.kind == StepKind::LowerShear2D) c.B = quantize(s.coef, g.r);
    if (s.kind == StepKind::LowerShear || s.kind == StepKind::UpperShear) {
        if (s.shear.rows() != g.dims) throw std::invalid_argument("compile_step: shear dimension mismatch");
        c.rows.assign(g.dims, std::vector<std::int64_t>(g.dims, 0));
        for (int a = 0; a < g.dims; ++a)
            for (int b = 0; b < g.dims; ++b)
                if (a != b) c.rows[a][b] = quantize(s.shear(a, b), g.r);
    }
    return c;
}

inline CompiledProgram compile(const TransformProgram& p, const GridMap& g)
{
    if (p.dims != g.dims) throw std::invalid_argument("compile: dimension mismatch");
    CompiledProgram c{g, {}};
    for (const auto& s : p.steps) c.steps.push_back(compile_step(s, g));
    return c;
}

namespace detail {

inline void set_coord(std::int64_t& x, std::int64_t y, const GridMap& g, std::int64_t* wraps)
{
    if (wraps && (y < -g.M || y > g.M - 1)) ++*wraps;
    x = cmod(y, g.M);
}

} // namespace detail

// Apply one compiled step to an integer point; dir = -1 runs the exact inverse.
inline void apply_step(const CompiledStep& s, const GridMap& g, Point& n, int dir = 1,
                       std::int64_t* wraps = nullptr)
{
    int d = g.dims;
    switch (s.kind) {
    case StepKind::LowerShear: {
        auto row = [&](int a) {
            std::int64_t acc = 0;
            for (int b = 0; b < a; ++b) acc += s.rows[a][b] * n[b];
            detail::set_coord(n[a], n[a] + dir * round_fixed(acc, g.r), g, wraps);
        };
        if (dir > 0)
            for (int a = d - 1; a >= 1; --a) row(a);
        else
            for (int a = 1; a < d; ++a) row(a);
        break;
    }
    case StepKind::UpperShear: {
        auto row = [&](int a) {
            std::int64_t acc = 0;
            for (int b = a + 1; b < d; ++b) acc += s.rows[a][b] * n[b];
            detail::set_coord(n[a], n[a] + dir * round_fixed(acc, g.r), g, wraps);
        };
        if (dir > 0)
            for (int a = 0; a < d - 1; ++a) row(a);
        else
            for (int a = d - 2; a >= 0; --a) row(a);
        break;
    }
    case StepKind::UpperShear2D:
        detail::set_coord(n[s.i], n[s.i] + dir * round_fixed(s.B * n[s.j], g.r), g, wraps);
        break;
    case StepKind::LowerShear2D:
        detail::set_coord(n[s.j], n[s.j] + dir * round_fixed(s.B * n[s.i], g.r), g, wraps);
        break;
    case StepKind::QuarterTurn: {
        int sg = dir > 0 ? s.sign : -s.sign;
        std::int64_t a = n[s.i], b = n[s.j];
        detail::set_coord(n[s.i], sg * b, g, wraps);
        detail::set_coord(n[s.j], -sg * a, g, wraps);
        break;
    }
    case StepKind::Reflection: detail::set_coord(n[s.i], -n[s.i], g, wraps); break;
    }
}

inline void map_point(const CompiledProgram& c, Point& n, std::int64_t* wraps = nullptr)
{
    for (const auto& s : c.steps) apply_step(s, c.grid, n, 1, wraps);
}

inline void unmap_point(const CompiledProgram& c, Point& n)
{
    for (auto it = c.steps.rbegin(); it != c.steps.rend(); ++it) apply_step(*it, c.grid, n, -1);
}

// ---------------------------------------------------------------------------
// dense grid states

inline constexpr int grid_state_bit_cap = 24;

struct GridState {
    int dims = 0;
    int n_bits = 0;
    std::vector<double> amp;

    std::int64_t side() const { return pow2(n_bits); }
    std::int64_t half() const { return pow2(n_bits - 1); }

    std::size_t index(const Point& n) const
    {
        std::size_t idx = 0;
        std::int64_t s = side();
        for (int k = 0; k < dims; ++k) idx = idx * static_cast<std::size_t>(s) + static_cast<std::size_t>(n[k] + half());
        return idx;
    }

    Point point(std::size_t idx) const
    {
        Point n(dims);
        std::int64_t s = side();
        for (int k = dims - 1; k >= 0; --k) {
            n[k] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(s)) - half();
            idx /= static_cast<std::size_t>(s);
        }
        return n;
    }

    double norm() const
    {
        double s = 0.0;
        for (double a : amp) s += a * a;
        return std::sqrt(s);
    }

    void normalize()
    {
        double nn = norm();
        if (!(nn > 0.0)) throw std::runtime_error("GridState: zero state cannot be normalized");
        for (double& a : amp) a /= nn;
    }
};

inline GridState make_state(int dims, int n_bits)
{
    if (dims < 1 || n_bits < 2) throw std::invalid_argument("GridState: need dims >= 1 and n_bits >= 2");
    if (dims * n_bits > grid_state_bit_cap) throw std::invalid_argument("GridState: dims * n_bits exceeds 24 bits");
    GridState s;
    s.dims = dims;
    s.n_bits = n_bits;
    s.amp.assign(static_cast<std::size_t>(1) << (dims * n_bits), 0.0);
    return s;
}

inline GridState delta_state(int dims, int n_bits, const Point& at)
{
    GridState s = make_state(dims, n_bits);
    s.amp[s.index(at)] = 1.0;
    return s;
}

// exp(-Delta^2 n^T Lambda' n / 2) sampled on the grid and normalized
inline GridState gaussian_state(int dims, int n_bits, const Matrix& Lambda_prime, double Delta)
{
    GridState s = make_state(dims, n_bits);
    for (std::size_t idx = 0; idx < s.amp.size(); ++idx) {
        Point n = s.point(idx);
        Vector v(dims);
        for (int k = 0; k < dims; ++k) v(k) = static_cast<double>(n[k]);
        s.amp[idx] = std::exp(-0.5 * Delta * Delta * v.dot(Lambda_prime * v));
    }
    s.normalize();
    return s;
}

inline GridState apply_compiled(const GridState& in, const CompiledProgram& c, std::int64_t* wraps = nullptr)
{
    if (c.grid.dims != in.dims || c.grid.n_bar != in.n_bits)
        throw std::invalid_argument("apply_program: state and program grids differ");
    GridState out = make_state(in.dims, in.n_bits);
    for (std::size_t idx = 0; idx < in.amp.size(); ++idx) {
        if (in.amp[idx] == 0.0) continue;
        Point n = in.point(idx);
        map_point(c, n, wraps);
        out.amp[out.index(n)] = in.amp[idx];
    }
    return out;
}

inline GridState apply_program(const GridState& in, const TransformProgram& p, std::int64_t* wraps = nullptr)
{
    return apply_compiled(in, compile(p, grid_map(in.dims, in.n_bits)), wraps);
}

enum class ShearDirection { lower, upper };

inline GridState apply_shear_grid(const GridState& in, const Matrix& shear, ShearDirection dir,
                                  std::int64_t* wraps = nullptr)
{
    if (shear.rows() != in.dims || shear.cols() != in.dims)
        throw std::invalid_argument("apply_shear_grid: shear dimension mismatch");
    TransformProgram p;
    p.dims = in.dims;
    Step s;
    s.kind = dir == ShearDirection::lower ? StepKind::LowerShear : StepKind::UpperShear;
    s.shear = shear;
    p.steps.push_back(s);
    return apply_program(in, p, wraps);
}

inline double measure_transform_error(const GridState& approx, const GridState& exact)
{
    if (approx.dims != exact.dims || approx.n_bits != exact.n_bits)
        throw std::invalid_argument("measure_transform_error: states live on different grids");
    double ov = 0.0;
    for (std::size_t k = 0; k < approx.amp.size(); ++k) ov += approx.amp[k] * exact.amp[k];
    return std::sqrt(std::max(0.0, 1.0 - ov * ov));
}

// ---------------------------------------------------------------------------
// single-shear coordinate transform

struct Ldlt {
    Matrix L;
    Vector D;
};

inline Ldlt ldlt_decompose(const Matrix& Lambda)
{
    int d = static_cast<int>(Lambda.rows());
    if (Lambda.cols() != d) throw std::invalid_argument("ldlt: matrix must be square");
    if ((Lambda - Lambda.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Lambda.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("ldlt: matrix must be symmetric");
    Ldlt out{Matrix::Identity(d, d), Vector::Zero(d)};
    for (int j = 0; j < d; ++j) {
        double dj = Lambda(j, j);
        for (int k = 0; k < j; ++k) dj -= out.L(j, k) * out.L(j, k) * out.D(k);
        if (!(dj > 0.0)) throw std::invalid_argument("ldlt: matrix is not positive definite");
        out.D(j) = dj;
        for (int i = j + 1; i < d; ++i) {
            double v = Lambda(i, j);
            for (int k = 0; k < j; ++k) v -= out.L(i, k) * out.L(j, k) * out.D(k);
            out.L(i, j) = v / dj;
        }
    }
    return out;
}

struct SsctResult {
    Ldlt factors;
    Matrix shear; // S = L^{-T}
    GridState state;
    std::int64_t wraps = 0;
};

inline SsctResult apply_ssct(int n_bits, const Matrix& Lambda, double Delta)
{
    SsctResult r;
    r.factors = ldlt_decompose(Lambda);
    int d = static_cast<int>(Lambda.rows());
    r.shear = r.factors.L.transpose().inverse();
    GridState product = gaussian_state(d, n_bits, Matrix(r.factors.D.asDiagonal()), Delta);
    r.state = apply_shear_grid(product, r.shear, ShearDirection::upper, &r.wraps);
    return r;
}

// ---------------------------------------------------------------------------
// error bounds

inline double gaussian_step_bound(double Delta, double x) { return std::sqrt(2.0) * std::sqrt(1.0 - std::exp(-Delta * Delta * x)); }

inline double lambda_max(const Matrix& S)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

inline void require_spd(const Matrix& Sigma)
{
    Eigen::LLT<Matrix> llt(Sigma);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("error bound: Sigma' must be symmetric positive definite");
}

inline double shear_error_bound(const Matrix& Sigma_prime, const Matrix& S, double Delta, int dims)
{
    require_spd(Sigma_prime);
    Matrix Sinv = S.inverse();
    Matrix Lp = Sinv.transpose() * Sigma_prime * Sinv;
    return gaussian_step_bound(Delta, dims * lambda_max(Lp));
}

struct LctBounds {
    double shear = 0.0;
    std::vector<double> steps; // one entry per program step after the lower shear
    double ortho = 0.0;
    double total = 0.0;
};

inline LctBounds error_bounds(const Matrix& Sigma_prime, const TransformProgram& p, double Delta)
{
    require_spd(Sigma_prime);
    LctBounds b;
    int d = p.dims;
    b.shear = shear_error_bound(Sigma_prime, p.L, Delta, d);
    Matrix Minv = p.L.inverse();
    for (const auto& s : p.steps) {
        if (s.kind == StepKind::LowerShear || s.kind == StepKind::UpperShear) continue;
        Minv = Minv * step_matrix(s, d).inverse();
        double e = 0.0;
        if (s.kind == StepKind::UpperShear2D || s.kind == StepKind::LowerShear2D) {
            int k = s.kind == StepKind::UpperShear2D ? s.i : s.j;
            Matrix Lp = Minv.transpose() * Sigma_prime * Minv;
            e = gaussian_step_bound(Delta, Lp(k, k));
        }
        b.steps.push_back(e);
        b.ortho += e;
    }
    b.total = b.shear + b.ortho;
    return b;
}

// ---------------------------------------------------------------------------
// streaming verifier over the support of a Gaussian

inline constexpr double support_amplitude_cut = 1e-6;

// visit every integer point with n^T Q n <= c, Q symmetric positive definite
inline void for_each_in_ellipsoid(const Matrix& Q, double c, const std::function<void(const Point&)>& f)
{
    int d = static_cast<int>(Q.rows());
    // Schur complements: the form minimized over coordinates k+1.. with 0..k fixed
    std::vector<Matrix> schur(d);
    for (int k = 0; k < d; ++k) {
        int m = d - k - 1;
        Matrix S = Q.topLeftCorner(k + 1, k + 1);
        if (m > 0) {
            Matrix Qht = Q.topRightCorner(k + 1, m);
            S -= Qht * Q.bottomRightCorner(m, m).inverse() * Qht.transpose();
        }
        schur[k] = S;
    }
    Point n(d, 0);
    std::function<void(int)> rec = [&](int k) {
        const Matrix& S = schur[k];
        double a = 0.0, bb = 0.0;
        for (int p1 = 0; p1 < k; ++p1) {
            bb += S(k, p1) * static_cast<double>(n[p1]);
            for (int p2 = 0; p2 < k; ++p2) a += S(p1, p2) * static_cast<double>(n[p1]) * static_cast<double>(n[p2]);
        }
        double disc = bb * bb - S(k, k) * (a - c);
        if (disc < 0.0) return;
        double root = std::sqrt(disc);
        auto lo = static_cast<std::int64_t>(std::ceil((-bb - root) / S(k, k)));
        auto hi = static_cast<std::int64_t>(std::floor((-bb + root) / S(k, k)));
        for (std::int64_t x = lo; x <= hi; ++x) {
            n[k] = x;
            if (k + 1 < d)
                rec(k + 1);
            else
                f(n);
        }
        n[k] = 0;
    };
    rec(0);
}

struct LctTrial {
    int dims = 0;
    double Delta = 0.0;
    int n_ISP = 0;
    int n_pad = 0;
    std::int64_t support_points = 0;
    std::int64_t support_wraps = 0;
    std::int64_t box_wraps = -1; // -1 when the interior box was not scanned
    double measured = 0.0;
    LctBounds bound;
};

// Runs the LCT program for T on exp(-Delta^2 m^T Sigma' m / 2) and compares with the
// exactly resampled target exp(-Delta^2 n^T T^T Sigma' T n / 2).
inline LctTrial lct_trial(const Matrix& T, const Matrix& Sigma_prime, double Delta, bool scan_box = false)
{
    if (!(Delta > 0.0)) throw std::invalid_argument("lct_trial: Delta must be positive");
    require_spd(Sigma_prime);
    LctTrial tr;
    tr.dims = static_cast<int>(T.rows());
    tr.Delta = Delta;
    int d = tr.dims;
    TransformProgram prog = decompose_lct(T);
    tr.bound = error_bounds(Sigma_prime, prog, Delta);

    double cut = 2.0 * std::log(1.0 / support_amplitude_cut) / (Delta * Delta);
    Matrix Sigma_inv = Sigma_prime.inverse();
    double reach = 0.0;
    for (int k = 0; k < d; ++k) reach = std::max(reach, std::sqrt(cut * Sigma_inv(k, k)));
    std::int64_t half_width = static_cast<std::int64_t>(std::floor(reach + 1e-9));
    tr.n_ISP = ceil_log2(static_cast<std::uint64_t>(2 * half_width + 2));
    std::int64_t N_ISP = pow2(tr.n_ISP);
    double norm_inf = prog.L.cwiseAbs().rowwise().sum().maxCoeff();
    tr.n_pad = pad_qubits_dims(PadMode::LCT, N_ISP, norm_inf, d, tr.n_ISP);
    GridMap g = grid_map(d, tr.n_ISP + tr.n_pad);
    CompiledProgram c = compile(prog, g);

    Matrix Lambda_T = T.transpose() * Sigma_prime * T;
    double d2 = Delta * Delta;
    auto quad = [&](const Matrix& Q, const Point& n) {
        double s = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) s += Q(a, b) * static_cast<double>(n[a]) * static_cast<double>(n[b]);
        return s;
    };

    double norm_in = 0.0, norm_out = 0.0, overlap = 0.0;
    for_each_in_ellipsoid(Sigma_prime, cut, [&](const Point& m) {
        double a = std::exp(-0.5 * d2 * quad(Sigma_prime, m));
        Point n = m;
        map_point(c, n, &tr.support_wraps);
        overlap += a * std::exp(-0.5 * d2 * quad(Lambda_T, n));
        norm_in += a * a;
        ++tr.support_points;
    });
    for_each_in_ellipsoid(Lambda_T, cut, [&](const Point& n) {
        double b = std::exp(-0.5 * d2 * quad(Lambda_T, n));
        norm_out += b * b;
    });
    double ov = overlap / std::sqrt(norm_in * norm_out);
    tr.measured = std::sqrt(std::max(0.0, 1.0 - ov * ov));

    if (scan_box) {
        tr.box_wraps = 0;
        std::int64_t lo = -N_ISP / 2, hi = N_ISP / 2 - 1;
        Point m(d, lo);
        while (true) {
            Point n = m;
            map_point(c, n, &tr.box_wraps);
            int k = d - 1;
            while (k >= 0 && m[k] == hi) m[k--] = lo;
            if (k < 0) break;
            ++m[k];
        }
    }
    return tr;
}

} // namespace qdyn
