#include <catch_amalgamated.hpp>

#include <random>

#include <qdyn/costs.hpp>

using namespace qdyn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("erasure cost", "[costs]")
{
    CHECK(erasure_cost(16).cost == 8);
    CHECK(erasure_cost(16).k == 2);
    CHECK(erasure_cost(1).cost == 2);
    CHECK(erasure_cost(1).k == 0);
    CHECK_THROWS_AS(erasure_cost(0), std::invalid_argument);
}

TEST_CASE("erasure cost never exceeds eta + 1", "[costs][property]")
{
    for (std::int64_t eta = 1; eta <= 5000; ++eta) {
        Erasure e = erasure_cost(eta);
        CHECK(e.cost <= eta + 1);
        CHECK(e.cost >= 1);
    }
}

TEST_CASE("nuclear ISP components", "[costs]")
{
    IspParams p;
    p.eta_n = 5;
    p.n_bar_ISP = 10;
    CostPair tc = cost_isp(IspKind::TC2SM, p);
    CHECK(tc.toffoli == 120.0);
    CHECK(tc.ancilla == 8.0);

    p.eta_n = 1;
    p.n_bar_ISP = 4;
    CostPair lct = cost_isp(IspKind::LCT, p);
    CHECK(lct.toffoli == 848.0);
    CHECK(lct.ancilla == 13.0);
    CHECK(cost_isp(IspKind::SSCT, p).toffoli < lct.toffoli);
}

TEST_CASE("antisymmetrization", "[costs]")
{
    IspParams p;
    p.eta_e = 2;
    p.n_p = 3;
    CHECK(cost_isp(IspKind::ASYM, p).toffoli == 102.0);
}

TEST_CASE("missing ISP parameters are named", "[costs]")
{
    IspParams p;
    CHECK_THROWS_WITH(cost_isp(IspKind::LCT, p), Catch::Matchers::ContainsSubstring("eta_n"));
    p.D = 4.0;
    CHECK_THROWS_WITH(cost_isp(IspKind::ASP, p), Catch::Matchers::ContainsSubstring("b_asp"));
}

TEST_CASE("synthesis costs are flagged as bounds", "[costs]")
{
    IspParams p;
    p.N_MOB = 1;
    p.eta_e = 1;
    p.n_p = 4;
    p.b_rot = 10;
    p.m_e = BondTable{{2, 2, 1}};
    CHECK(cost_isp(IspKind::W_e, p).bound);
    CHECK(cost_soslat(4.0).bound);
    CHECK_FALSE(cost_asp(4.0, 10).bound);
}

TEST_CASE("synthesis cost grows with bond dimension", "[costs][property]")
{
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> m(1, 64), len(1, 12);
    for (int k = 0; k < 300; ++k) {
        std::vector<int> bonds(len(rng));
        for (auto& b : bonds) b = m(rng);
        std::vector<int> bigger = bonds;
        bigger[0] += 1;
        IspParams a, b;
        for (IspParams* q : {&a, &b}) {
            q->N_MOB = 1;
            q->eta_e = 2;
            q->n_p = 5;
            q->b_rot = 10;
        }
        a.m_e = BondTable{bonds};
        b.m_e = BondTable{bigger};
        CHECK(cost_isp(IspKind::W_e, b).toffoli > cost_isp(IspKind::W_e, a).toffoli);
    }
}

TEST_CASE("costs are never negative", "[costs][property]")
{
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> small(1, 12);
    for (int k = 0; k < 500; ++k) {
        IspParams p;
        p.D = small(rng);
        p.b_asp = small(rng) - 1;
        p.N_MOB = small(rng);
        p.eta_e = small(rng);
        p.n_p = small(rng);
        p.N_SMB = small(rng);
        p.N_vib = small(rng) - 1;
        p.eta_n = small(rng);
        p.n_bar_ISP = small(rng) + 1;
        p.b_grad = small(rng);
        p.eps_PK = 1e-4;
        for (IspKind kind : {IspKind::ASP, IspKind::SoSlat, IspKind::ONB2MOB, IspKind::ASYM, IspKind::ONB2SMB,
                             IspKind::LCT, IspKind::SSCT, IspKind::PK, IspKind::TC2SM}) {
            CostPair c = cost_isp(kind, p);
            CHECK(c.toffoli >= 0.0);
            CHECK(c.ancilla >= 0.0);
        }
    }
}

TEST_CASE("ISP totals add Toffolis and take the ancilla maximum", "[costs]")
{
    IspComponents c;
    for (const char* k : {"ASP_e", "SoSlat_e", "ONB2MOB", "ASYM", "W_e", "ASP_n", "SoSlat_n", "ONB2SMB", "W_n", "U_A",
                          "PK", "TC2SM"})
        c[k] = CostPair{10.0, 1.0, false};
    c["W_e"].ancilla = 7.0;
    c["PK"].ancilla = 4.0;
    IspTotal t = cost_isp_total(IspMode::separable, c, 2, 1);
    CHECK(t.total.toffoli == 120.0);
    CHECK(t.electronic.ancilla == 7.0);
    CHECK(t.nuclear.ancilla == 10.0);
    CHECK(t.total.ancilla == 10.0);
    CHECK(t.ancilla_argmax == "PK");

    CHECK_THROWS_AS(cost_isp_total(IspMode::nonseparable, c, 2, 1), std::invalid_argument);
    c["ASP_en"] = CostPair{5.0, 20.0, false};
    c["SoSlat_en"] = CostPair{5.0, 1.0, true};
    IspTotal ns = cost_isp_total(IspMode::nonseparable, c, 2, 1);
    CHECK(ns.total.toffoli == 90.0);
    CHECK(ns.total.ancilla == 20.0);
    CHECK(ns.ancilla_argmax == "ASP_en");
    CHECK(ns.total.bound);
}

TEST_CASE("block-encoding components", "[costs]")
{
    BlockParams p;
    p.eta = 3;
    p.eta_e = 1;
    p.mu_T = 10;
    p.n_p = 4;
    CHECK(cost_block_encoding(BlockKind::PREP_T, p).toffoli == 43.0);

    BlockParams s;
    s.eta = 2;
    s.eta_e = 1;
    s.n_p = 3;
    CHECK(cost_block_encoding(BlockKind::SEL_H, s).toffoli == 198.0);
    CHECK(cost_block_encoding(BlockKind::CTRL_SEL_H, s).toffoli == 199.0);

    s.n_M = 5;
    CHECK(s.out() == 37.0);
    CHECK(cost_block_encoding(BlockKind::REFLECT_W, s).toffoli == 36.0);

    p.n_theta = 6;
    CostPair ph = cost_block_encoding(BlockKind::PREP_H, p);
    double sum = cost_block_encoding(BlockKind::PREP_T, p).toffoli + cost_block_encoding(BlockKind::PREP_V, p).toffoli +
                 cost_block_encoding(BlockKind::R_z, p).toffoli;
    CHECK(ph.toffoli == sum);
}

TEST_CASE("controlled walk step", "[costs]")
{
    WalkInputs w;
    w.prep_H = {43.0, 0.0};
    w.ctrl_sel_H = {199.0, 0.0};
    w.sel_H = {198.0, 0.0};
    w.unprep_H = {30.0, 0.0};
    w.reflect = {36.0, 35.0};
    w.out = 37.0;
    WalkCost c = cost_walk(w);
    CHECK(c.ctrl_W.toffoli == 308.0);
    CHECK(c.W.toffoli == 43.0 + 198.0 + 30.0 + 35.0);
    CHECK(c.ctrl_W.ancilla == 72.0);
}

TEST_CASE("QSP degree and rotations", "[costs]")
{
    CHECK_THAT(qsp_degree(100.0, 10.0, std::ldexp(1.0, -10)), WithinAbs(1010.0, 1e-9));
    CHECK_THAT(qsp_rotation_toffoli(std::ldexp(1.0, -10)), WithinAbs(5.45, 1e-12));
    CHECK_THROWS_AS(qsp_degree(1.0, -1.0, 0.1), std::invalid_argument);

    WalkCost w;
    w.ctrl_W = {308.0, 72.0};
    w.W = {306.0, 72.0};
    CostPair u = cost_propagator(3.2, w, std::ldexp(1.0, -10));
    CHECK_THAT(u.toffoli, WithinAbs(2.0 * 308.0 + 4.0 * 306.0 + 5.0 * 5.45, 1e-9));
    CHECK(u.ancilla == 74.0);
}

TEST_CASE("QFT cost", "[costs]")
{
    CHECK_THAT(cost_qft(4.0, 0.01).toffoli, WithinRel(113.35501779218893, 1e-12));
    CHECK_THROWS_AS(cost_qft(4.0, 0.0), std::invalid_argument);
}

TEST_CASE("channel indicator", "[costs]")
{
    CostPair c = cost_indicator(1, 3, 2);
    CHECK(c.toffoli == 68.0);
    CHECK(c.ancilla == 24.0);
    CHECK_THROWS_AS(cost_indicator(0, 3, 2), std::invalid_argument);
}

TEST_CASE("amplitude estimation wrapper", "[costs]")
{
    TotalInputs in;
    in.isp = {100.0, 10.0};
    in.prop = {1000.0, 50.0};
    in.qft = {10.0, 0.0};
    in.indicator = {68.0, 24.0};
    in.reflect_qae = {30.0, 29.0};
    TotalCost t = cost_total(in);
    CHECK(t.qae_calls == 8.0);
    CHECK(t.s == 4);
    CHECK(t.U_tilde == 1110.0);
    CHECK(t.iterate == 2.0 * (68.0 + 1110.0) + 30.0);
    CHECK(t.total == t.U_tilde + 8.0 * t.iterate);
    CHECK(t.anc_argmax == "propagator");
    CHECK(t.anc_total == 4.0 + 1.0 + 50.0);
}

TEST_CASE("reported counts round up", "[costs]")
{
    CHECK(report_count(5.45) == 6);
    CHECK(report_count(6.0) == 6);
    CHECK(report_count(6.0 + 1e-12) == 6);
}
