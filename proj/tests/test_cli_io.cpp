#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "crosslayer/report.hpp"
#include "crosslayer/scenario.hpp"
#include "paper_data.hpp"

using namespace crosslayer;
using Catch::Approx;

namespace {

std::filesystem::path repo_root() {
    // tests run from the build tree; the bundled scenarios live in the source tree
    std::filesystem::path p = std::filesystem::current_path();
    for (int up = 0; up < 6; ++up) {
        if (std::filesystem::exists(p / "scenarios" / "paper_example.json")) return p;
        p = p.parent_path();
    }
    throw std::runtime_error("bundled scenarios not found from " +
                             std::filesystem::current_path().string());
}

} // namespace

TEST_CASE("bundled scenario loads with the expected shape", "[cli_io]") {
    Scenario sc = load_scenario((repo_root() / "scenarios/paper_example.json").string());
    PplsSystem sys = sc.system();
    CHECK(sys.n() == 4);
    CHECK(sys.subsystem_count() == 3);
    CHECK(sys.period() == 15);
    CHECK(sc.p_override.has_value());
    CHECK(sc.k_override.has_value());
    CHECK(sc.network.total_bandwidth == Approx(20.0));
}

TEST_CASE("bandwidth below the per-channel requirement is rejected", "[cli_io]") {
    Scenario sc = load_scenario((repo_root() / "scenarios/paper_example.json").string());
    sc.network.total_bandwidth = 10.0; // cap 15 + flow 5 needs 20
    try {
        validate_scenario(sc);
        FAIL("expected a validation error");
    } catch (const InvalidInputError& e) {
        CHECK(std::string(e.what()).find("bandwidth") != std::string::npos);
    }
}

TEST_CASE("wrong field types are reported with their path", "[cli_io]") {
    json j = scenario_to_json(
        load_scenario((repo_root() / "scenarios/paper_example.json").string()));
    j["attack"]["duration_caps"] = "two"; // wrong type
    try {
        scenario_from_json(j);
        FAIL("expected a parse error");
    } catch (const InvalidInputError& e) {
        CHECK(std::string(e.what()).find("duration_caps") != std::string::npos);
    }
}

TEST_CASE("scenario round-trip is value-identical", "[cli_io][property]") {
    const std::string src = (repo_root() / "scenarios/paper_example.json").string();
    Scenario sc = load_scenario(src);
    const std::string tmp = (std::filesystem::temp_directory_path() /
                             "crosslayer_roundtrip.json").string();
    save_scenario(sc, tmp);
    Scenario back = load_scenario(tmp);
    CHECK(scenario_to_json(sc).dump() == scenario_to_json(back).dump());
    CHECK(scenario_hash(sc) == scenario_hash(back));
}

TEST_CASE("outputs embed the scenario hash and settings", "[cli_io]") {
    Scenario sc = load_scenario((repo_root() / "scenarios/paper_example.json").string());
    const auto dir = std::filesystem::temp_directory_path() / "crosslayer_out_test";
    std::filesystem::remove_all(dir);
    OutputContext ctx(dir.string(), sc);
    {
        auto f = ctx.open_csv("probe.csv");
        f << "a,b\n1,2\n";
    }
    std::ifstream in(dir / "probe.csv");
    std::string line1, line2;
    std::getline(in, line1);
    std::getline(in, line2);
    CHECK(line1 == "# scenario_hash=" + scenario_hash(sc));
    CHECK(line2.find("boundary_mode=paper-table") != std::string::npos);
    CHECK(line2.find("strict_eps=") != std::string::npos);
}

TEST_CASE("design artifacts round-trip", "[cli_io]") {
    LyapunovDesign d = paper::printed_design();
    LyapunovDesign back = design_from_json(design_to_json(d));
    for (size_t i = 0; i < d.p.size(); ++i)
        CHECK((d.p[i].m() - back.p[i].m()).cwiseAbs().maxCoeff() == 0.0);
    for (size_t i = 0; i < d.k_default.size(); ++i)
        CHECK((d.k_default[i] - back.k_default[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("explicit traces are validated on load", "[cli_io]") {
    Scenario sc = load_scenario((repo_root() / "scenarios/paper_example.json").string());
    sc.explicit_trace = std::vector<Vector>{Vector::Constant(4, 15.0)}; // sum 60 > 20
    CHECK_THROWS_AS(validate_scenario(sc), InvalidInputError);
}

TEST_CASE("overridden design must be complete", "[cli_io]") {
    Scenario sc = load_scenario((repo_root() / "scenarios/paper_example.json").string());
    sc.k_override.reset();
    CHECK_THROWS_AS(validate_scenario(sc), InvalidInputError);
}

TEST_CASE("csv floats carry nine significant digits", "[cli_io]") {
    CHECK(fmt9(1.0 / 3.0) == "0.333333333");
    CHECK(fmt9(1.50386953e2) == "150.386953");
    CHECK(fmt9(0.0) == "0");
}
