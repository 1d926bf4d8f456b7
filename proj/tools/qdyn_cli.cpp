#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <qdyn/pipeline.hpp>
#include <qdyn/suite.hpp>

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check = 1;
constexpr int exit_input = 2;

struct Args {
    std::string input;
    std::vector<std::string> batch;
    std::string out;
    std::string format = "json";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> policy;
    std::string only;
};

qdyn::json read_json(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw qdyn::InputError("cannot open '" + path + "'");
    try {
        return qdyn::json::parse(f);
    } catch (const qdyn::json::parse_error& e) {
        throw qdyn::InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void emit(const std::string& text, const std::string& out)
{
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    f << text;
}

std::string estimate_one(const std::string& path, const Args& a)
{
    qdyn::MoleculeSpec spec = qdyn::parse_molecule(read_json(path));
    qdyn::EstimateOptions opt;
    opt.seed = a.seed;
    opt.budget_policy = a.policy;
    return qdyn::render_report(qdyn::run_estimate(spec, opt), a.format);
}

int cmd_estimate(const Args& a)
{
    std::vector<std::string> inputs = a.batch;
    if (!a.input.empty()) inputs.insert(inputs.begin(), a.input);
    if (inputs.empty()) throw qdyn::InputError("estimate needs --input or --batch");
    if (inputs.size() == 1) {
        emit(estimate_one(inputs.front(), a), a.out);
        return exit_ok;
    }
    std::string ext = a.format == "markdown" ? "md" : a.format;
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        for (const auto& in : inputs)
            emit(estimate_one(in, a), (fs::path(a.out) / (fs::path(in).stem().string() + "." + ext)).string());
        return exit_ok;
    }
    for (const auto& in : inputs) emit(estimate_one(in, a), "");
    return exit_ok;
}

// Re-renders a saved JSON report as CSV or markdown rows.
int cmd_report(const Args& a)
{
    if (a.input.empty()) throw qdyn::InputError("report needs --input with a JSON report");
    qdyn::json j = read_json(a.input);
    if (!j.contains("rows")) throw qdyn::InputError("missing key 'rows' in report");
    std::ostringstream os;
    if (a.format == "json") {
        os << j.dump(2) << "\n";
    } else if (a.format == "csv") {
        os << "subroutine,toffoli,ancilla,is_bound,params_hash\n";
        for (const auto& r : j["rows"])
            os << r["subroutine"].get<std::string>() << ',' << r["toffoli"] << ',' << r["ancilla"] << ','
               << (r["is_bound"].get<bool>() ? "true" : "false") << ',' << r["params_hash"].get<std::string>() << '\n';
    } else if (a.format == "markdown") {
        const auto& h = j.at("header");
        os << "# Resource estimate: " << h.value("molecule", "") << "\n\n";
        os << "- input hash: `" << h.value("input_hash", "") << "`\n";
        if (j.contains("anchor"))
            os << "- time-evolution anchor: computed " << j["anchor"]["time_evolution_computed"] << " vs tabulated "
               << j["anchor"]["time_evolution_tabulated"] << "\n";
        os << "\n| subroutine | toffoli | ancilla | bound |\n|---|---:|---:|:---:|\n";
        for (const auto& r : j["rows"])
            os << "| " << r["subroutine"].get<std::string>() << " | " << r["toffoli"] << " | " << r["ancilla"]
               << " | " << (r["is_bound"].get<bool>() ? "yes" : "no") << " |\n";
    } else {
        throw qdyn::InputError("unknown report format '" + a.format + "'");
    }
    emit(os.str(), a.out);
    return exit_ok;
}

int cmd_verify(const Args& a)
{
    qdyn::SuiteOptions opt;
    if (!a.input.empty()) {
        qdyn::json cfg = read_json(a.input);
        opt.only = cfg.value("only", opt.only);
        opt.seed = cfg.value("seed", opt.seed);
        opt.lambda_scale = cfg.value("lambda_scale", opt.lambda_scale);
    }
    if (!a.only.empty()) opt.only = a.only;
    if (a.seed) opt.seed = *a.seed;
    auto results = qdyn::run_verify(opt);
    if (results.empty()) throw qdyn::InputError("no checks match '" + opt.only + "'");
    qdyn::json j = qdyn::verify_json(results, opt);
    emit(j.dump(2) + "\n", a.out);
    for (const auto& r : results)
        if (!r.passed) std::cerr << "FAILED " << r.name << ": " << r.detail << "\n";
    return j["passed"].get<bool>() ? exit_ok : exit_check;
}

int cmd_lct_bench(const Args& a)
{
    qdyn::SuiteOptions opt;
    if (a.seed) opt.seed = *a.seed;
    auto inst = qdyn::suite_detail::lct_instances(opt);
    std::ostringstream os;
    os.precision(10);
    os << "config,dims,Delta,measured,bound,shear,ortho,n_ISP,n_pad,support_points,support_wraps\n";
    for (const auto& x : inst)
        os << x.config << ',' << x.trial.dims << ',' << x.trial.Delta << ',' << x.trial.measured << ','
           << x.trial.bound.total << ',' << x.trial.bound.shear << ',' << x.trial.bound.ortho << ',' << x.trial.n_ISP
           << ',' << x.trial.n_pad << ',' << x.trial.support_points << ',' << x.trial.support_wraps << '\n';
    emit(os.str(), a.out);
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Resource estimator and verifier for end-to-end quantum chemical dynamics"};
    app.require_subcommand(1, 1);
    Args a;

    auto add_common = [&](CLI::App* sc) {
        sc->add_option("--out", a.out, "output path (stdout when omitted)");
        sc->add_option("--seed", a.seed, "64-bit seed for stochastic steps");
    };
    auto* est = app.add_subcommand("estimate", "run the resource estimate for a molecule file");
    est->add_option("--input", a.input, "molecule JSON file");
    est->add_option("--batch", a.batch, "several molecule files, processed in order");
    est->add_option("--format", a.format, "json, csv or markdown")->check(CLI::IsMember({"json", "csv", "markdown"}));
    est->add_option("--budget-policy", a.policy, "paper_default or custom");
    add_common(est);

    auto* ver = app.add_subcommand("verify", "run the brute-force verification suite");
    ver->add_option("--input", a.input, "optional suite config JSON (only, seed, lambda_scale)");
    ver->add_option("--only", a.only, "glob over check families and names");
    add_common(ver);

    auto* bench = app.add_subcommand("lct-bench", "CSV of LCT error and bound versus Delta");
    add_common(bench);

    auto* rep = app.add_subcommand("report", "re-render a saved JSON report");
    rep->add_option("--input", a.input, "JSON report")->required();
    rep->add_option("--format", a.format, "json, csv or markdown")->check(CLI::IsMember({"json", "csv", "markdown"}));
    add_common(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (est->parsed()) return cmd_estimate(a);
        if (ver->parsed()) return cmd_verify(a);
        if (bench->parsed()) return cmd_lct_bench(a);
        if (rep->parsed()) return cmd_report(a);
    } catch (const qdyn::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_check;
    }
    return exit_input;
}
