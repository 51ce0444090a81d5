#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crosslayer/worst_case_sea.hpp"
#include "paper_data.hpp"
#include "random_systems.hpp"

using namespace crosslayer;
using Catch::Approx;

TEST_CASE("force patterns of the worked example", "[worst_case]") {
    auto patterns = enumerate_force(paper::network());
    CHECK(patterns.size() == 5); // four single jams + the no-jam pattern
    int singles = 0, empty = 0;
    for (const auto& f : patterns) {
        if (f.jam_count() == 1) ++singles;
        if (f.jam_count() == 0) ++empty;
        CHECK(f.jam_count() <= 1); // two jams need 30 > budget 20
    }
    CHECK(singles == 4);
    CHECK(empty == 1);
}

TEST_CASE("force patterns under budget extremes", "[worst_case]") {
    NetworkConfig none = paper::network();
    none.attack_budget = 0.0;
    CHECK(enumerate_force(none).size() == 1); // only the no-jam pattern

    NetworkConfig rich = paper::network();
    rich.attack_budget = 1e6;
    rich.attack_cap = Vector::Constant(4, 1e5);
    rich.total_bandwidth = 2e5;
    CHECK(enumerate_force(rich).size() == 16); // all subsets affordable
}

TEST_CASE("safe sets reproduce the published table", "[worst_case][paper]") {
    NetworkConfig cfg = paper::network();

    ForcePattern jam4{0b1000, 4};
    auto safe4 = enumerate_safe(cfg, jam4, BoundaryMode::PaperTable);
    CHECK(safe4.size() == 8); // every state with channel 4 off
    for (const auto& l : safe4) CHECK(l.l[3] == 0);

    ForcePattern jam_none{0, 4};
    auto safe0 = enumerate_safe(cfg, jam_none, BoundaryMode::PaperTable);
    REQUIRE(safe0.size() == 1); // only the all-off state survives a free attacker
    CHECK(safe0[0] == ChannelState::all_off(4));

    ForcePattern jam1{0b0001, 4};
    auto safe1 = enumerate_safe(cfg, jam1, BoundaryMode::PaperTable);
    CHECK(safe1.size() == 8);
    for (const auto& l : safe1) CHECK(l.l[0] == 0);
}

TEST_CASE("printed allocation bound admits singles at the boundary",
          "[worst_case]") {
    NetworkConfig cfg = paper::network();
    ForcePattern jam_none{0, 4};
    auto safe = enumerate_safe(cfg, jam_none, BoundaryMode::FormulaNonstrict);
    // min{20 - 0 + 5, 5 + 15} = 20 <= 20: all four singles qualify, plus all-off
    CHECK(safe.size() == 5);
    int singles = 0;
    for (const auto& l : safe) singles += l.count() == 1;
    CHECK(singles == 4);
}

TEST_CASE("worst case of the worked example, full audit", "[worst_case][paper]") {
    PplsSystem sys = paper::system();
    LyapunovDesign d = paper::printed_design();
    NetworkConfig cfg = paper::network();

    WorstCaseResult r1 = sea(sys, d, cfg, 1);
    CHECK(r1.beta_bar == Approx(paper::beta_bar_1).margin(0.005));
    CHECK(r1.beta_tilde == Approx(1.5038).margin(0.005));

    int excluded = 0;
    for (const auto& br : r1.branches) {
        if (br.excluded) {
            ++excluded;
            CHECK(br.pattern.jam_count() == 1); // the three cheap single jams
            CHECK(br.pattern.jams(3) == false);
        }
        if (br.pattern.jam_count() == 0)
            CHECK(br.beta_hat == Approx(2.0661).margin(0.005));
        if (br.pattern.jams(3) && br.pattern.jam_count() == 1)
            CHECK(br.beta_bar == Approx(1.5038).margin(0.005));
    }
    CHECK(excluded == 3);

    CHECK(sea(sys, d, cfg, 2).beta_bar == Approx(paper::beta_bar_2).margin(0.005));
    CHECK(sea(sys, d, cfg, 3).beta_bar == Approx(paper::beta_bar_3).margin(0.005));
}

TEST_CASE("both boundary modes give the same worst case here", "[worst_case]") {
    PplsSystem sys = paper::system();
    LyapunovDesign d = paper::printed_design();
    NetworkConfig cfg = paper::network();
    StateBetaTable t = state_beta_table(sys, d, 1, paper::k_bar);
    SeaOptions strict_mode;
    strict_mode.boundary = BoundaryMode::FormulaNonstrict;
    CHECK(sea(sys, d, cfg, 1, strict_mode, &t).beta_bar ==
          Approx(sea(sys, d, cfg, 1, {}, &t).beta_bar).margin(1e-9));
}

TEST_CASE("worst case bounded by the floor and the table", "[worst_case][property]") {
    PplsSystem sys = paper::system();
    LyapunovDesign d = paper::printed_design();
    NetworkConfig cfg = paper::network();
    for (int mode = 1; mode <= 3; ++mode) {
        StateBetaTable t = state_beta_table(sys, d, mode, paper::k_bar);
        WorstCaseResult r = sea(sys, d, cfg, mode, {}, &t);
        CHECK(r.beta_bar >= r.beta_tilde - 1e-9);
        CHECK(r.beta_bar <=
              *std::max_element(t.beta.begin(), t.beta.end()) + 1e-9);
        // candidate filter soundness: whatever the filter dropped is outside
        // the [floor, branch cap] window
        for (const auto& br : r.branches) {
            for (unsigned mask = 0; mask < 16; ++mask) {
                if (mask & br.pattern.jam_mask) continue;
                const ChannelState l = ChannelState::from_mask(mask, 4);
                const bool in =
                    std::find(br.candidates.begin(), br.candidates.end(), l) !=
                    br.candidates.end();
                if (!in) {
                    const double b = t.beta[mask];
                    CHECK((b < r.beta_tilde + 1e-6 || b > br.beta_hat - 1e-6));
                }
            }
        }
    }
}

TEST_CASE("degenerate budgets reduce to the table extremes", "[worst_case]") {
    PplsSystem sys = paper::system();
    LyapunovDesign d = paper::printed_design();
    StateBetaTable t = state_beta_table(sys, d, 1, paper::k_bar);

    // no attacker: the defender keeps every channel
    NetworkConfig cfg0 = paper::network();
    cfg0.attack_budget = 0.0;
    WorstCaseResult r0 = sea(sys, d, cfg0, 1, {}, &t);
    CHECK(r0.beta_bar == Approx(t.beta_of(ChannelState::all_on(4))).margin(1e-9));
    const double oracle0 = brute_force_worst_case(sys, d, cfg0, 1, 4, {}, &t);
    CHECK(r0.beta_bar == Approx(oracle0).margin(1e-9));
}

TEST_CASE("enumeration equals the oracle on random two-channel instances",
          "[worst_case][oracle]") {
    std::mt19937 rng(2024);
    int done = 0;
    while (done < 10) {
        auto inst = testgen::random_instance(rng, 2, 1, 1);
        if (!inst) continue;
        SeaOptions opt;
        opt.k_bar = inst->k_bar;
        StateBetaTable t =
            state_beta_table(inst->sys, inst->design, 1, inst->k_bar);
        WorstCaseResult r = sea(inst->sys, inst->design, inst->cfg, 1, opt, &t);
        const double oracle =
            brute_force_worst_case(inst->sys, inst->design, inst->cfg, 1, 24, opt, &t);
        INFO("instance " << done << ": sea=" << r.beta_bar << " oracle=" << oracle);
        CHECK(r.beta_bar == Approx(oracle).margin(1e-6));
        ++done;
    }
}

TEST_CASE("channels dead at zero attack join every pattern", "[worst_case]") {
    NetworkConfig cfg = paper::network();
    cfg.buffer(1) = 2.0; // 2/0.5 - 5 = -1: channel 2 cannot survive its own flow
    auto patterns = enumerate_force(cfg);
    for (const auto& f : patterns) CHECK(f.jams(1));

    PplsSystem sys = paper::system();
    LyapunovDesign d = paper::printed_design();
    StateBetaTable t = state_beta_table(sys, d, 1, paper::k_bar);
    WorstCaseResult r = sea(sys, d, cfg, 1, {}, &t);
    const double oracle = brute_force_worst_case(sys, d, cfg, 1, 16, {}, &t);
    CHECK(r.beta_bar == Approx(oracle).margin(1e-6));
}

TEST_CASE("attack-irrelevant dynamics collapse the worst case", "[worst_case]") {
    // no input matrix: every state has the same rate, so the worst case is
    // that rate no matter what the attacker does
    Matrix a(2, 2);
    a << 0.6, 0.1, 0.0, 0.5;
    Matrix b = Matrix::Zero(2, 1);
    PplsSystem sys({{a, b, 3}});
    LyapunovDesign d;
    d.alpha = Vector::Ones(1);
    d.p = {SymMatrix::identity(2), SymMatrix::identity(2)};
    d.k_default = {Matrix::Zero(1, 2)};

    NetworkConfig cfg;
    cfg.normal_flow = Vector::Constant(2, 2.0);
    cfg.buffer = Vector::Constant(2, 4.0);
    cfg.attack_cap = Vector::Constant(2, 6.0);
    cfg.alloc_delay = 0.5;
    cfg.total_bandwidth = 9.0;
    cfg.attack_budget = 7.0;

    StateBetaTable t = state_beta_table(sys, d, 1, 10.0);
    for (double bt : t.beta) CHECK(bt == Approx(t.beta[0]).margin(1e-6));
    WorstCaseResult r = sea(sys, d, cfg, 1, {.boundary = BoundaryMode::PaperTable,
                                             .k_bar = 10.0},
                            &t);
    const double oracle = brute_force_worst_case(
        sys, d, cfg, 1, 12, {.boundary = BoundaryMode::PaperTable, .k_bar = 10.0}, &t);
    CHECK(r.beta_bar == Approx(t.beta[0]).margin(1e-6));
    CHECK(r.beta_bar == Approx(oracle).margin(1e-6));
}
