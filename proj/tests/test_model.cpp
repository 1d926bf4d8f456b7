#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include <qdyn/model.hpp>

using namespace qdyn;

namespace {

json load(const std::string& name)
{
    std::ifstream f(std::string(QDYN_TEST_DATA) + "/" + name);
    return json::parse(f);
}

} // namespace

TEST_CASE("particle counts for a CH4-sized table", "[model]")
{
    std::vector<Nucleus> nuc{{"C", 21874.66, 6}};
    for (int k = 0; k < 4; ++k) nuc.push_back({"H", 1836.15, 1});
    ParticleTable p = ParticleTable::from(10, nuc);
    CHECK(p.eta_e == 10);
    CHECK(p.eta_n == 5);
    CHECK(p.eta() == 15);
    CHECK(p.n_eta() == 4);
    CHECK(p.is_neutral());
}

TEST_CASE("single free electron", "[model]")
{
    ParticleTable p = ParticleTable::from(1, {});
    CHECK(p.eta() == 1);
    CHECK(p.eta_e == 1);
    CHECK(p.eta_n == 0);
    CHECK(p.n_eta() == 0);
}

TEST_CASE("n_eta agrees with the bit length of eta - 1", "[model][property]")
{
    for (std::uint64_t eta = 2; eta <= 4096; ++eta) CHECK(ceil_log2(eta) == bit_length(eta - 1));
    CHECK(ceil_log2(1) == 0);
}

TEST_CASE("fixture parses and validates", "[model]")
{
    MoleculeSpec s = parse_molecule(load("h2.json"));
    REQUIRE_NOTHROW(validate_molecule(s));
    CHECK(s.particles.eta() == 4);
    CHECK(s.modes.linear);
    CHECK(s.channels.size() == 2);
    CHECK(s.channels[1].constraints[0].direction == Direction::less);
}

TEST_CASE("identity transform passes the determinant check exactly", "[model]")
{
    MoleculeSpec s = parse_molecule(load("h2.json"));
    s.modes.A = Eigen::MatrixXd::Identity(6, 6);
    s.modes.d = Eigen::VectorXd::Ones(6);
    CHECK_NOTHROW(validate_molecule(s));
}

TEST_CASE("validation rejects broken inputs", "[model]")
{
    MoleculeSpec base = parse_molecule(load("h2.json"));

    SECTION("charge imbalance without override")
    {
        MoleculeSpec s = base;
        s.particles.charges.back() = 2;
        CHECK_THROWS_AS(validate_molecule(s), InputError);
        s.particles.neutral_override = true;
        CHECK_NOTHROW(validate_molecule(s));
    }
    SECTION("determinant away from one")
    {
        MoleculeSpec s = base;
        s.modes.A(0, 0) *= 1.01;
        CHECK_THROWS_WITH(validate_molecule(s), Catch::Matchers::ContainsSubstring("det(A)"));
    }
    SECTION("negative mass")
    {
        MoleculeSpec s = base;
        s.particles.masses.back() = -1.0;
        CHECK_THROWS_AS(validate_molecule(s), InputError);
    }
    SECTION("negative frequency")
    {
        MoleculeSpec s = base;
        s.modes.omegas[0] = -0.1;
        CHECK_THROWS_AS(validate_molecule(s), InputError);
    }
    SECTION("constraint pairing a nucleus with itself")
    {
        MoleculeSpec s = base;
        s.channels[0].constraints[0].beta = 0;
        CHECK_THROWS_AS(validate_molecule(s), InputError);
    }
}

TEST_CASE("missing top-level key is named", "[model]")
{
    json j = load("h2.json");
    j.erase("budget");
    CHECK_THROWS_WITH(parse_molecule(j), Catch::Matchers::ContainsSubstring("missing key 'budget'"));
}

TEST_CASE("re-serialization is idempotent", "[model][property]")
{
    MoleculeSpec s = parse_molecule(load("h2.json"));
    validate_molecule(s);
    json once = to_json(s);
    MoleculeSpec again = parse_molecule(once);
    REQUIRE_NOTHROW(validate_molecule(again));
    CHECK(to_json(again) == once);
}

TEST_CASE("time conversion", "[model]")
{
    CHECK(fs_to_au(30.0) == Catch::Approx(1240.243418441593).epsilon(1e-12));
    CHECK(au_to_fs(fs_to_au(12.5)) == Catch::Approx(12.5).epsilon(1e-15));
}
