#include <catch_amalgamated.hpp>

#include <random>

#include <qdyn/suite.hpp>
#include <qdyn/verify.hpp>

using namespace qdyn;
using Catch::Matchers::WithinAbs;

TEST_CASE("one-dimensional kinetic diagonal", "[verify]")
{
    ParticleTable p = ParticleTable::from(1, {});
    DenseOperator H = galerkin_hamiltonian(p, 2, 2.0 * pi, 1);
    REQUIRE(H.rows() == 3);
    CHECK_THAT(H(0, 0).real(), WithinAbs(0.5, 1e-14));
    CHECK_THAT(H(1, 1).real(), WithinAbs(0.0, 1e-14));
    CHECK_THAT(H(2, 2).real(), WithinAbs(0.5, 1e-14));
}

TEST_CASE("dense operators respect the dimension cap", "[verify]")
{
    ParticleTable three = ParticleTable::from(3, {});
    CHECK_THROWS_WITH(plane_wave_basis(3, 2, 3), Catch::Matchers::ContainsSubstring("4096"));
    CHECK_NOTHROW(plane_wave_basis(2, 2, 3));
    CHECK_THROWS_AS(galerkin_hamiltonian(three, 2, 10.0), std::invalid_argument);
}

TEST_CASE("term-by-term assembly matches the Galerkin matrix", "[verify]")
{
    ParticleTable p;
    p.eta_e = 1;
    p.eta_n = 1;
    p.masses = {1.0, 3.0};
    p.charges = {-1, 1};
    double L = 7.0;
    DenseOperator G = galerkin_hamiltonian(p, 2, L);
    LcuAssembly a = lcu_assemble(p, 2, L * L * L);
    CHECK(is_hermitian(G));
    CHECK(max_abs(G - a.H) < 1e-10);
}

TEST_CASE("basis encode and decode are inverse", "[verify][property]")
{
    PlaneWaveBasis b = plane_wave_basis(2, 2, 3);
    for (std::int64_t i = 0; i < b.size; ++i) CHECK(b.encode(b.decode(i)) == i);
}

TEST_CASE("qubiterate phases and unitarity", "[verify][property]")
{
    std::mt19937_64 rng(61);
    for (int k = 0; k < 10; ++k) {
        DenseOperator H = suite_detail::random_hermitian(rng, 6);
        double lam = 1.2 * operator_norm(H);
        QubiterateResult r = qubiterate_check(H, lam);
        CHECK(r.unitarity < 1e-10);
        CHECK(r.max_deviation < 1e-8);
    }
}

TEST_CASE("a wrong normalization is detected", "[verify]")
{
    std::mt19937_64 rng(62);
    DenseOperator H = suite_detail::random_hermitian(rng, 6);
    double lam = 1.2 * operator_norm(H);
    CHECK(qubiterate_check(H, lam, 1.001 * lam).max_deviation > 1e-4);
    CHECK_THROWS_AS(qubiterate(H, 0.5 * operator_norm(H)), std::invalid_argument);
}

TEST_CASE("Jacobi-Anger truncation converges", "[verify][property]")
{
    std::mt19937_64 rng(63);
    DenseOperator H = suite_detail::random_hermitian(rng, 8);
    double lam = operator_norm(H);
    double t = 5.0 / lam;
    double prev = jacobi_anger_check(H, lam, t, 2);
    for (int d = 6; d <= 30; d += 4) {
        double e = jacobi_anger_check(H, lam, t, d);
        CHECK(e <= prev + 1e-12);
        prev = e;
    }
    CHECK(prev < 1e-10);
    DenseOperator U = dense_propagator(H, t);
    CHECK(max_abs(U.adjoint() * U - DenseOperator::Identity(8, 8)) < 1e-12);
}

TEST_CASE("Hermite functions are normalized", "[verify][property]")
{
    for (int nu = 0; nu <= 6; ++nu) {
        double s = 0.0, h = 1e-3;
        for (double x = -12.0; x <= 12.0; x += h) s += hermite_function(nu, x) * hermite_function(nu, x) * h;
        CHECK_THAT(s, WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("projection truncation shrinks with the cutoff", "[verify][property]")
{
    for (int nu = 0; nu <= 4; ++nu) {
        double a = sm_projection_check(nu, 1.0, 60.0, 3.0).truncation;
        double b = sm_projection_check(nu, 1.0, 60.0, 6.0).truncation;
        CHECK(b < a);
    }
}

TEST_CASE("polynomial MPS bond dimensions", "[verify][property]")
{
    for (int d = 0; d <= 6; ++d) {
        std::vector<double> c(d + 1, 0.0);
        c[d] = 1.0;
        if (d > 0) c[0] = 0.5;
        PolyMpsCheck r = poly_mps_bond_check(c, 10);
        CHECK(r.max_bond <= r.bound);
    }
    CHECK(poly_mps_bond_check({3.0}, 8).max_bond == 1);
}

TEST_CASE("channel indicators", "[verify]")
{
    ReactionChannel far{"far", {Constraint{0, 1, 1.8, Direction::greater}}};
    ReactionChannel near{"near", {Constraint{0, 1, 1.8, Direction::less}}};
    std::vector<std::vector<std::int64_t>> configs{{0, 0, 0, 1, 0, 0}, {0, 0, 0, 3, 0, 0}, {0, 0, 0, 1, 1, 1}};
    CHECK(yield_projector(far, configs, 1.0) == std::vector<int>{0, 1, 0});
    CHECK(yield_projector(near, configs, 1.0) == std::vector<int>{1, 0, 1});
    CHECK(channel_indicator(far, configs[2], 2.0));
}

TEST_CASE("complementary channels partition configurations", "[verify][property]")
{
    std::mt19937_64 rng(64);
    std::uniform_int_distribution<std::int64_t> c(-6, 6);
    ReactionChannel far{"far", {Constraint{0, 1, 2.5, Direction::greater}}};
    ReactionChannel near{"near", {Constraint{0, 1, 2.5, Direction::less}}};
    for (int k = 0; k < 2000; ++k) {
        std::vector<std::int64_t> R(6);
        for (auto& x : R) x = c(rng);
        CHECK(channel_indicator(far, R, 0.7) != channel_indicator(near, R, 0.7));
    }
}

TEST_CASE("two's complement to signed magnitude", "[verify]")
{
    CHECK(tc2sm_convert(0b1011, 4) == 0b1101);
    CHECK(tc2sm_convert(0b0101, 4) == 0b0101);
    CHECK_THROWS_AS(tc2sm_convert(0b1000, 4), std::invalid_argument);
    CHECK_THROWS_AS(tc2sm_convert(0b10000, 4), std::invalid_argument);
}

TEST_CASE("signed-magnitude conversion round-trips", "[verify][property]")
{
    for (int w = 2; w <= 10; ++w) {
        std::uint64_t sign = std::uint64_t{1} << (w - 1);
        for (std::uint64_t x = 0; x < (std::uint64_t{1} << w); ++x) {
            if (x == sign) continue;
            CHECK(sm2tc_convert(tc2sm_convert(x, w), w) == x);
        }
    }
}

TEST_CASE("suite selection by glob", "[verify]")
{
    CHECK(suite_selects("", "lct", "lct.slope"));
    CHECK(suite_selects("lct", "lct", "lct.slope"));
    CHECK(suite_selects("lct.s*", "lct", "lct.slope"));
    CHECK_FALSE(suite_selects("lcu", "lct", "lct.slope"));
}

TEST_CASE("verification suite subset", "[verify]")
{
    SuiteOptions opt;
    opt.only = "lcu";
    auto r = run_verify(opt);
    REQUIRE(r.size() == 1);
    CHECK(r[0].name == "lcu.galerkin");
    CHECK(r[0].passed);

    opt.only = "tc2sm";
    auto t = run_verify(opt);
    REQUIRE(t.size() == 1);
    CHECK(t[0].passed);
    CHECK(verify_json(t, opt)["passed"] == true);
}

TEST_CASE("perturbed normalization fails the phase check", "[verify]")
{
    SuiteOptions opt;
    opt.only = "qubiterate";
    opt.lambda_scale = 1.001;
    auto r = run_verify(opt);
    bool phase_failed = false;
    for (const auto& c : r)
        if (c.name == "qubiterate.phases") phase_failed = !c.passed;
    CHECK(phase_failed);
    json j = verify_json(r, opt);
    CHECK(j["passed"] == false);
    CHECK(j["failed"][0] == "qubiterate.phases");
}
