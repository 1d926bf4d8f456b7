#include <catch_amalgamated.hpp>

#include <random>

#include <qdyn/encoding.hpp>

using namespace qdyn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ParticleTable water()
{
    return ParticleTable::from(10, {{"O", 29156.95, 8}, {"H", 1836.15, 1}, {"H", 1836.15, 1}});
}

} // namespace

TEST_CASE("Coulomb sum on the smallest grid", "[encoding]")
{
    CHECK_THAT(lambda_nu(2, NuMode::brute), WithinRel(44.0 / 3.0, 1e-14));
    CHECK_THAT(lambda_nu(3, NuMode::brute), WithinRel(45.052004777701534, 1e-12));
    CHECK_THAT(r_nu(2, 44.0 / 3.0), WithinRel(7.15909090909091, 1e-12));
    CHECK_THROWS_AS(lambda_nu(7, NuMode::brute), std::invalid_argument);
    CHECK_THROWS_AS(lambda_nu(1, NuMode::bound), std::invalid_argument);
}

TEST_CASE("asymptotic Coulomb sum grows past the brute-force cap", "[encoding][property]")
{
    double prev = lambda_nu(brute_nu_cap, NuMode::asymptotic);
    CHECK(prev == lambda_nu(brute_nu_cap, NuMode::brute));
    for (int n = brute_nu_cap + 1; n <= 20; ++n) {
        double v = lambda_nu(n, NuMode::asymptotic);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("kinetic and potential norms", "[encoding]")
{
    ParticleTable e1 = ParticleTable::from(1, {});
    LcuNorms a = lcu_norms(e1, 2, 1.0);
    CHECK_THAT(a.lambda_T, WithinRel(59.21762640653615, 1e-12));
    CHECK(a.lambda_nu_path == "brute");

    ParticleTable two;
    two.eta_e = 2;
    two.masses = {1.0, 1.0};
    two.charges = {1, 1};
    LcuNorms b = lcu_norms(two, 2, 1.0);
    CHECK_THAT(b.lambda_V, WithinRel(4.668544997362263, 1e-12));
    CHECK_THAT(b.lambda_H, WithinRel(b.lambda_T + b.lambda_V, 1e-15));
    CHECK_THROWS_AS(lcu_norms(e1, 2, 0.0), std::invalid_argument);
}

TEST_CASE("charge-pair probability", "[encoding]")
{
    CHECK_THAT(p_zeta(water()), WithinAbs(0.81, 1e-12));
}

TEST_CASE("charge-pair probability lies in [0,1)", "[encoding][property]")
{
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> z(1, 30), count(1, 6);
    for (int k = 0; k < 300; ++k) {
        std::vector<Nucleus> nuc;
        int n = count(rng), total = 0;
        for (int i = 0; i < n; ++i) {
            int c = z(rng);
            total += c;
            nuc.push_back({"X", 1000.0, c});
        }
        double p = p_zeta(ParticleTable::from(total, nuc));
        CHECK(p >= 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("uniform-state success probability", "[encoding][property]")
{
    for (int k = 0; k <= 10; ++k) CHECK_THAT(Ps(static_cast<double>(pow2(k)), 12), WithinAbs(1.0, 1e-3));
    for (int n = 1; n <= 200; ++n) {
        double p = Ps(n, 8);
        CHECK(p > 0.5);
        CHECK(p <= 1.0 + 1e-9);
    }
    CHECK_THROWS_AS(Ps(0.5, 8), std::invalid_argument);
}

TEST_CASE("momentum-state success probability", "[encoding][property]")
{
    for (int n_p = 2; n_p <= 5; ++n_p) {
        double lo = p_nu_exact(n_p, 2), hi = p_nu_exact(n_p, 8);
        CHECK(lo > 0.0);
        CHECK(hi > 0.0);
        CHECK(hi <= lo + 1e-12);
        CHECK(lo <= 1.0);
    }
    CHECK_THROWS_AS(p_nu_exact(9, 4), std::invalid_argument);
}

TEST_CASE("success probabilities pick a path by grid size", "[encoding]")
{
    SuccessProbs small = success_probs(water(), 4, 6, 8);
    CHECK(small.p_nu_path == "exact");
    SuccessProbs big = success_probs(water(), 10, 6, 8);
    CHECK(big.p_nu_path == "nominal");
    CHECK(big.p_nu == 0.25);
    CHECK_THAT(big.P_eq, WithinRel(big.Ps_3 * std::pow(big.Ps_eta, 3), 1e-15));
}

TEST_CASE("rescaled normalization and strategy", "[encoding]")
{
    TildeLambda or1 = lambda_H_tilde(3.0, 1.0, 0.5, 1.0, 1.0);
    CHECK(or1.value == 4.0);
    CHECK(or1.strategy == Strategy::OR);

    TildeLambda edge = lambda_H_tilde(1.0, 1.0, 0.5, 1.0, 1.0);
    CHECK(edge.value == 2.0);
    CHECK(edge.strategy == Strategy::OR);

    TildeLambda and1 = lambda_H_tilde(1.0, 3.0, 0.5, 1.0, 1.0);
    CHECK(and1.value == 6.0);
    CHECK(and1.strategy == Strategy::AND);

    TildeLambda scaled = lambda_H_tilde(1.0, 3.0, 0.5, 1.0, 0.5);
    CHECK(scaled.value == 12.0);

    CHECK_THROWS_AS(lambda_H_tilde(1.0, 1.0, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("rescaled normalization dominates the plain one", "[encoding][property]")
{
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> lam(0.1, 1e6), p(0.01, 1.0);
    for (int k = 0; k < 1000; ++k) {
        double T = lam(rng), V = lam(rng);
        TildeLambda t = lambda_H_tilde(T, V, p(rng), p(rng), p(rng));
        CHECK(t.value >= T + V);
    }
}

TEST_CASE("precision parameters", "[encoding]")
{
    PrecisionParams pp = precision_params(60000.0, 1.0, 4.0, 1.0, 1.0, 1.0, 3);
    CHECK(pp.mu_T == 16);
    CHECK(pp.n_theta == 2);
    CHECK_THAT(block_error(0.0, 0.0, 4.0, 2), WithinAbs(2.0, 1e-15));
    CHECK_THROWS_AS(block_error(0.0, 0.0, 4.0, -1), std::invalid_argument);
}

TEST_CASE("precision parameters meet their targets", "[encoding][property]")
{
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> lam(1.0, 1e8), eps(1e-8, 1e-2);
    for (int k = 0; k < 500; ++k) {
        double lt = lam(rng), lv = lam(rng), e = eps(rng);
        double tilde = lt + lv;
        PrecisionParams pp = precision_params(lt, lv, tilde, e, e, e, 4);
        CHECK(lt * std::ldexp(1.0, -pp.mu_T) <= e * (1.0 + 1e-12));
        CHECK(tilde * std::ldexp(1.0, -pp.n_theta) <= e * (1.0 + 1e-12));
        CHECK(block_error(e, e, tilde, pp.n_theta + 1) < block_error(e, e, tilde, pp.n_theta));
    }
}
