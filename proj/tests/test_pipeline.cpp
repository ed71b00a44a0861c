#include "durstat/error.hpp"
#include "durstat/events.hpp"
#include "durstat/pipeline.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace durstat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("durstat_test_pipeline_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), dir).generic_string()] = ss.str();
    }
    return files;
}

PipelineConfig synthetic_config(const fs::path& out, std::size_t symbols = 3) {
    std::ostringstream text;
    text << "output_dir = " << out.string() << "\n"
         << "seed = 11\n"
         << "synthetic.symbols = " << symbols << "\n"
         << "synthetic.days = 3\n";
    return PipelineConfig::parse(text.str());
}

std::map<DirectionClass, ClassSummary> summaries(const EventSeries& s) {
    return {{DirectionClass::all, summarize_class(s, DirectionClass::all)},
            {DirectionClass::buy, summarize_class(s, DirectionClass::buy)},
            {DirectionClass::sell, summarize_class(s, DirectionClass::sell)}};
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = PipelineConfig::parse(
        "# comment\n"
        "output_dir = out\n"
        "classes = all, buy\n"
        "bins_per_decade = 10\n"
        "q_min = -4\n"
        "q_max = 4\n"
        "synthetic.symbols = 2\n"
        "synthetic.hurst = 0.8\n",
        "/base");
    CHECK(c.output_dir == "out");
    CHECK(c.classes == std::vector<DirectionClass>{DirectionClass::all, DirectionClass::buy});
    CHECK(c.bins_per_decade == 10);
    CHECK(c.q_min == -4.0);
    CHECK(c.synthetic.symbols == 2);
    CHECK(c.synthetic.hurst == 0.8);
    CHECK(c.resolve("out") == fs::path("/base/out"));
    CHECK(c.resolve("/abs/x") == fs::path("/abs/x"));
    CHECK_NOTHROW(c.validate());

    CHECK_THROWS_AS(PipelineConfig::parse("colour = red\n"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::parse("seed = 1\nseed = 2\n"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::parse("seed\n"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::parse("bins_per_decade = ten\n"), ValidationError);
}

TEST_CASE("config validation") {
    auto c = PipelineConfig::parse("synthetic.symbols = 1\n");
    CHECK_NOTHROW(c.validate());
    c.q_min = 3.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = PipelineConfig::parse("synthetic.symbols = 1\nsynthetic.hurst = 1.0\n");
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = PipelineConfig::parse("seed = 3\n");
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = PipelineConfig::parse("bins_per_decade = 0\nsynthetic.symbols = 1\n");
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::parse("dfa_order = -1\n"), ValidationError);
}

TEST_CASE("config hash ignores the output location") {
    const auto a = PipelineConfig::parse("output_dir = a\nsynthetic.symbols = 2\n");
    const auto b = PipelineConfig::parse("output_dir = b\nsynthetic.symbols = 2\n");
    const auto c = PipelineConfig::parse("output_dir = a\nsynthetic.symbols = 3\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("missing input fails before any output") {
    const auto dir = scratch("missing");
    auto c = PipelineConfig::parse("output_dir = out\ninput.AAA = nowhere.csv\n", dir);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK_THROWS_AS(run_pipeline(c, 1), ValidationError);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("load resolves against the config directory") {
    const auto dir = scratch("load");
    std::ofstream(dir / "run.cfg") << "output_dir = results\nsynthetic.symbols = 1\n";
    const auto c = PipelineConfig::load(dir / "run.cfg");
    CHECK(c.resolve(c.output_dir) == dir / "results");
    CHECK_THROWS_AS(PipelineConfig::load(dir / "absent.cfg"), ValidationError);
}

TEST_CASE("synthetic seeds and names") {
    CHECK(synthetic_symbol(0) == "SYN01");
    CHECK(synthetic_symbol(11) == "SYN12");
    CHECK(synthetic_seed(1, 0) == synthetic_seed(1, 0));
    CHECK(synthetic_seed(1, 0) != synthetic_seed(1, 1));
    CHECK(synthetic_seed(1, 0) != synthetic_seed(2, 0));
}

TEST_CASE("three synthetic symbols give nine class analyses") {
    const auto dir = scratch("three");
    const auto r = run_pipeline(synthetic_config(dir / "out"), 2);
    CHECK(r.exit_code == 0);
    CHECK(r.class_analyses_total == 9);
    CHECK(r.class_analyses_completed == 9);

    std::ifstream in(dir / "out" / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    CHECK(m["status"] == "complete");
    CHECK(m["class_analyses"].size() == 9);
    CHECK(m["class_analyses_completed"] == 9);
    CHECK(m["symbols"].size() == 3);
    CHECK(m["synthetic_seeds"].size() == 3);
    CHECK(m["config_hash"] == synthetic_config(dir / "out").hash());
    for (const auto& a : m["class_analyses"]) CHECK(a["status"] == "completed");

    for (const char* f : {"table1_summary.csv", "table2_fits.csv", "table3_ensemble_fits.csv", "table4_fractal.csv",
                          "collapse.csv", "identities.csv", "ingest.csv"})
        CHECK(fs::exists(dir / "out" / f));
    CHECK(fs::exists(dir / "out" / "intraday" / "SYN01_buy_profile.csv"));
    CHECK(fs::exists(dir / "out" / "fractal" / "SYN02_sell_adjusted_spectrum.csv"));
    CHECK(fs::exists(dir / "out" / "conditional" / "all_curve.csv"));

    // table rows carry the version and settings
    std::ifstream t2(dir / "out" / "table2_fits.csv");
    std::string header, row;
    std::getline(t2, header);
    std::getline(t2, row);
    CHECK(header.find("version") != std::string::npos);
    CHECK(header.find("settings") != std::string::npos);
    CHECK(row.find(std::string(version_string)) != std::string::npos);
    std::size_t rows = 1;
    while (std::getline(t2, row)) ++rows;
    CHECK(rows == 9 * 4);
}

TEST_CASE("reruns and worker counts give identical bytes") {
    const auto dir = scratch("determinism");
    run_pipeline(synthetic_config(dir / "a"), 1);
    run_pipeline(synthetic_config(dir / "b"), 4);
    run_pipeline(synthetic_config(dir / "c"), 1);
    const auto a = snapshot(dir / "a");
    CHECK(a.size() > 20);
    CHECK(a == snapshot(dir / "b"));
    CHECK(a == snapshot(dir / "c"));
}

TEST_CASE("csv inputs run through ingest") {
    const auto dir = scratch("csv");
    StreamSpec s;
    s.symbol = "000001";
    s.days = 2;
    s.seed = 5;
    std::ofstream out(dir / "000001.csv");
    write_events_csv(out, gen_event_stream(s));
    out.close();
    std::ofstream(dir / "run.cfg") << "output_dir = out\ninput.000001 = 000001.csv\n";
    const auto r = run_pipeline(PipelineConfig::load(dir / "run.cfg"), 1);
    CHECK(r.exit_code == 0);
    CHECK(r.class_analyses_completed == 3);
    CHECK(fs::exists(dir / "out" / "events" / "000001.csv"));
}

TEST_CASE("a failing stage gives a partial run") {
    const auto dir = scratch("partial");
    // one-sided flow leaves the sell class without data
    auto c = PipelineConfig::parse("output_dir = out\nsynthetic.symbols = 1\nsynthetic.days = 2\n"
                                   "synthetic.buy_fraction = 1\n",
                                   dir);
    const auto r = run_pipeline(c, 1);
    CHECK(r.exit_code == 3);
    CHECK(r.class_analyses_completed < r.class_analyses_total);
    std::ifstream in(dir / "out" / "manifest.json");
    CHECK(nlohmann::json::parse(in)["status"] == "partial");
}

TEST_CASE("identities on two-sided streams") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        StreamSpec s;
        s.days = 2;
        s.seed = seed;
        const auto rep = validate_identities(summaries(gen_event_stream(s)));
        CHECK(rep.passed());
        CHECK(rep["N = Nb + Ns"].status == IdentityStatus::pass);
        CHECK(rep["<tau_b> > <tau>"].status == IdentityStatus::pass);
        CHECK(rep["<tau_s> > <tau>"].status == IdentityStatus::pass);
    }
}

TEST_CASE("single-direction stream") {
    StreamSpec s;
    s.days = 2;
    s.buy_fraction = 1.0;
    const auto rep = validate_identities(summaries(gen_event_stream(s)));
    CHECK(rep["N = Nb + Ns"].status == IdentityStatus::pass);
    CHECK(rep["<tau_b> > <tau>"].status == IdentityStatus::not_applicable);
    CHECK(rep["<tau_s> > <tau>"].status == IdentityStatus::not_applicable);
}

TEST_CASE("cross-direction simultaneous events") {
    StreamSpec s;
    s.days = 2;
    s.simultaneous = 0.2;
    const auto by = summaries(gen_event_stream(s));
    CHECK(by.at(DirectionClass::all).zeros >
          by.at(DirectionClass::buy).zeros + by.at(DirectionClass::sell).zeros);
    CHECK(validate_identities(by)["N0 >= N0b + N0s"].status == IdentityStatus::pass);
}

TEST_CASE("identity checks flag violations") {
    std::map<DirectionClass, ClassSummary> by{{DirectionClass::all, {10, 1, 9, 1.0}},
                                              {DirectionClass::buy, {6, 1, 5, 2.0}},
                                              {DirectionClass::sell, {5, 1, 4, 0.5}}};
    const auto rep = validate_identities(by);
    CHECK_FALSE(rep.passed());
    CHECK(rep["N = Nb + Ns"].status == IdentityStatus::fail);
    CHECK(rep["N0 >= N0b + N0s"].status == IdentityStatus::fail);
    CHECK(rep["<tau_b> > <tau>"].status == IdentityStatus::pass);
    CHECK(rep["<tau_s> > <tau>"].status == IdentityStatus::fail);
    by.erase(DirectionClass::sell);
    CHECK_THROWS_AS(validate_identities(by), InvalidArgument);
}

TEST_CASE("worker count from the environment") {
    setenv(std::string(workers_env).c_str(), "3", 1);
    CHECK(workers_from_env() == 3);
    setenv(std::string(workers_env).c_str(), "0", 1);
    CHECK(workers_from_env() >= 1);
    unsetenv(std::string(workers_env).c_str());
    CHECK(workers_from_env() >= 1);
}
