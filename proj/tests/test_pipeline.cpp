#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include <qdyn/pipeline.hpp>

using namespace qdyn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::string data_path(const std::string& name) { return std::string(QDYN_TEST_DATA) + "/" + name; }

json load(const std::string& name)
{
    std::ifstream f(data_path(name));
    return json::parse(f);
}

std::string slurp(const std::string& name)
{
    std::ifstream f(data_path(name), std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

const Estimate& h2()
{
    static const Estimate e = run_estimate(parse_molecule(load("h2.json")));
    return e;
}

double row_toffoli(const Estimate& e, const std::string& name)
{
    for (const auto& r : e.rows)
        if (r.subroutine == name) return r.toffoli;
    throw std::runtime_error("no row " + name);
}

} // namespace

TEST_CASE("JSON report matches the stored golden file", "[pipeline]")
{
    CHECK(render_report(h2(), "json") == slurp("h2_report.json"));
}

TEST_CASE("repeated runs are identical", "[pipeline]")
{
    MoleculeSpec s = parse_molecule(load("h2.json"));
    for (const char* fmt : {"json", "csv", "markdown"})
        CHECK(render_report(run_estimate(s), fmt) == render_report(run_estimate(s), fmt));
}

TEST_CASE("the seed reaches the report header", "[pipeline]")
{
    MoleculeSpec s = parse_molecule(load("h2.json"));
    EstimateOptions opt;
    opt.seed = 99;
    Estimate e = run_estimate(s, opt);
    CHECK(e.seed == 99);
    CHECK(report_json(e)["header"]["seed"] == 99);
    CHECK(report_json(h2())["header"]["seed"] == 12345);
}

TEST_CASE("simulation time in atomic units", "[pipeline]")
{
    CHECK_THAT(h2().t_au, WithinAbs(1240.3, 0.06));
}

TEST_CASE("grid and register sizes", "[pipeline]")
{
    const Estimate& e = h2();
    CHECK(e.grid.n_p >= 2);
    CHECK(e.grid.n_ext == e.grid.n_ISP + e.grid.n_pad - e.grid.n_p);
    CHECK(e.C_data == data_qubits(e.spec.particles.eta(), e.spec.particles.eta_e, e.grid.n_p));
    CHECK(e.C_anc > 0.0);
    CHECK(e.K_nuclear.size() == 6);
}

TEST_CASE("report rows cover the subroutines", "[pipeline]")
{
    const Estimate& e = h2();
    for (const char* name : {"ISP", "time_evolution", "QFT", "reflect_QAE", "walk.ctrl_W", "walk.W", "block.SEL_H"})
        CHECK(row_toffoli(e, name) > 0.0);
    CHECK(row_toffoli(e, "total.dissociated") > row_toffoli(e, "U_tilde.dissociated"));
    for (const auto& r : e.rows) {
        CHECK(r.toffoli >= 0.0);
        CHECK(r.ancilla >= 0.0);
        CHECK(r.params_hash.size() == 16);
    }
}

TEST_CASE("channel totals decompose", "[pipeline][property]")
{
    for (const auto& c : h2().channels) {
        CHECK_THAT(c.total.total, WithinRel(c.total.U_tilde + c.total.qae, 1e-12));
        CHECK(c.total.qae_calls == Catch::Approx(h2().budget.lambda_O / (2.0 * h2().budget.eps_QAE)));
    }
}

TEST_CASE("allocated budget closes", "[pipeline][property]")
{
    const ErrorBudget& b = h2().budget;
    CHECK(b.composed() <= b.eps_total * (1.0 + 1e-12));
    CHECK(h2().enc.prop.eps_prop_achieved <= b.eps_prop * (1.0 + 1e-9));
}

TEST_CASE("missing budget is an input error", "[pipeline]")
{
    CHECK_THROWS_AS(parse_molecule(load("h2_no_budget.json")), InputError);
    CHECK_THROWS_WITH(parse_molecule(load("h2_no_budget.json")),
                      Catch::Matchers::ContainsSubstring("missing key 'budget'"));
}

TEST_CASE("a single nucleus is rejected by the estimator", "[pipeline]")
{
    json j = load("h2.json");
    j["particles"]["nuclei"].erase(1);
    j["particles"]["eta_e"] = 1;
    j["normal_modes"]["A"] = std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1};
    j["normal_modes"]["d"] = std::vector<double>{1, 1, 1};
    j["normal_modes"]["R0"] = std::vector<double>{0, 0, 0};
    j["normal_modes"]["omegas"] = json::array();
    j["channels"] = json::array();
    CHECK_THROWS_AS(run_estimate(parse_molecule(j)), InputError);
}

TEST_CASE("unknown budget policy is rejected", "[pipeline]")
{
    EstimateOptions opt;
    opt.budget_policy = "greedy";
    CHECK_THROWS_AS(run_estimate(parse_molecule(load("h2.json")), opt), std::invalid_argument);
}

TEST_CASE("hashes are stable", "[pipeline]")
{
    CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
    CHECK(h2().input_hash == hash_json(parse_molecule(load("h2.json")).source));
}

TEST_CASE("time-evolution anchor", "[pipeline]")
{
    EvolutionAnchor a;
    double r = anchor_time_evolution(a) / a.toffoli;
    CHECK(r > 0.1);
    CHECK(r < 10.0);
}

TEST_CASE("csv and markdown renderings", "[pipeline]")
{
    std::string csv = render_report(h2(), "csv");
    CHECK(csv.rfind("subroutine,toffoli,ancilla,is_bound,params_hash\n", 0) == 0);
    std::string md = render_report(h2(), "md");
    CHECK(md.find("| subroutine |") != std::string::npos);
    CHECK_THROWS_AS(render_report(h2(), "xml"), std::invalid_argument);
}
