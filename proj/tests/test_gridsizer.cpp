#include <catch_amalgamated.hpp>

#include <random>

#include <qdyn/gridsizer.hpp>

using namespace qdyn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("electronic cutoff", "[gridsizer]")
{
    // 2 sqrt(2) sqrt(2 ln(288 sqrt(3) / 1e-4) + ln 45)
    CHECK_THAT(k_cutoff_electronic(1.0, 0, 1.0, 1.0, 0.1), WithinRel(16.649775129451495, 1e-12));
    CHECK(k_cutoff_electronic(1.0, 0, 1.0, 1.0, 0.2) < k_cutoff_electronic(1.0, 0, 1.0, 1.0, 0.1));
    double k0 = k_cutoff_electronic(1.0, 0, 1.0, 1.0, 0.1);
    double k1 = k_cutoff_electronic(1.0, 1, 1.0, 1.0, 0.1);
    CHECK_THAT(k1 * k1 / 8.0 - k0 * k0 / 8.0, WithinAbs(std::log(4.0), 1e-12));
    CHECK_THROWS_AS(k_cutoff_electronic(1.0, 0, 1.0, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("nuclear cutoff", "[gridsizer]")
{
    CHECK_THAT(k_cutoff_nuclear(1.0, 100.0, 1, 1e-3), WithinRel(6.151073626081, 1e-10));
    CHECK_THROWS_AS(k_cutoff_nuclear(-1.0, 100.0, 1, 1e-3), std::invalid_argument);
}

TEST_CASE("cutoff monotonicity", "[gridsizer][property]")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> w(0.1, 5.0), dl(1e-4, 0.05), L(5.0, 200.0), g(0.1, 10.0);
    std::uniform_int_distribution<int> nh(1, 6), lm(0, 3);
    for (int k = 0; k < 500; ++k) {
        double om = w(rng), d = dl(rng), len = L(rng);
        int n = nh(rng);
        CHECK(k_cutoff_nuclear(om, len, n, 2.0 * d) < k_cutoff_nuclear(om, len, n, d));
        CHECK(k_cutoff_nuclear(1.5 * om, len, n, d) > k_cutoff_nuclear(om, len, n, d));
        double gm = g(rng);
        int l = lm(rng);
        CHECK(k_cutoff_electronic(gm, l, 2.0, 1.0, 2.0 * d) < k_cutoff_electronic(gm, l, 2.0, 1.0, d));
    }
}

TEST_CASE("bond dimension bounds", "[gridsizer]")
{
    CHECK(bond_dim_bound_nuclear(6.151, 1.0) == 280);
    CHECK(bond_dim_bound_nuclear(1.0 / euler_e, 1.0) == 1);
    CHECK_THAT(bond_dim_bound_electronic(0, 1.0, 1.0, 0.1), WithinRel(2059.7859277817997, 1e-12));
}

TEST_CASE("common grid", "[gridsizer]")
{
    GridRequest r;
    r.K_candidates = {10.0};
    r.Delta_target = 1.0;
    GridParams g = common_grid(r);
    CHECK(g.N_bar == 21);
    CHECK(g.n_p == 5);
    CHECK(g.N == 31);
    CHECK_THAT(g.Delta, WithinRel(20.0 / 30.0, 1e-15));
    CHECK_THAT(g.L, WithinRel(2.0 * pi, 1e-15));

    r.K_candidates = {1.0};
    g = common_grid(r);
    CHECK(g.N_bar == 3);
    CHECK(g.n_p == 2);
    CHECK(g.N == 3);

    r.K_candidates = {3.0, 7.0, 5.0};
    CHECK(common_grid(r).K_max == 7.0);
}

TEST_CASE("grid spacing reproduces the cutoff", "[gridsizer][property]")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> K(0.5, 200.0), D(0.01, 2.0);
    for (int k = 0; k < 500; ++k) {
        GridRequest r;
        r.K_candidates = {K(rng), K(rng)};
        r.Delta_target = D(rng);
        GridParams g = common_grid(r);
        if (g.N < 3) continue;
        CHECK_THAT(g.Delta * static_cast<double>(g.N - 1) / 2.0, WithinRel(g.K_max, 1e-12));
        CHECK(g.N % 2 == 1);
        CHECK(g.N == pow2(g.n_p) - 1);
    }
}

TEST_CASE("data qubits", "[gridsizer]")
{
    CHECK(data_qubits(15, 10, 12) == 550);
    CHECK(data_qubits(1, 1, 1) == 4);
    CHECK(data_qubits(4, 0, 7) == 84);
}

TEST_CASE("padding qubits", "[gridsizer]")
{
    CHECK(pad_qubits(PadMode::SSCT, 16, 1.0, 1, 4) == 1);
    CHECK(pad_qubits(PadMode::SSCT, 15, 1.0, 1, 4) == 0);
    CHECK(pad_qubits(PadMode::LCT, 16, 1.0, 1, 4) == 3);
    CHECK(pad_qubits(PadMode::SSCT, 16, 1.0, 1, 30) == 0);
}

TEST_CASE("LCT padding dominates SSCT padding", "[gridsizer][property]")
{
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> nI(1, 20), en(1, 10);
    std::uniform_real_distribution<double> nrm(1.0, 10.0);
    for (int k = 0; k < 500; ++k) {
        int n = nI(rng), e = en(rng);
        double x = nrm(rng);
        CHECK(pad_qubits(PadMode::LCT, pow2(n), x, e, n) >= pad_qubits(PadMode::SSCT, pow2(n), x, e, n));
    }
}
