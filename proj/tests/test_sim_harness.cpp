#include <catch2/catch_amalgamated.hpp>

#include "crosslayer/sim_harness.hpp"
#include "paper_data.hpp"

using namespace crosslayer;
using Catch::Approx;

namespace {

struct Fixture {
    PplsSystem sys = paper::system();
    LyapunovDesign design = paper::printed_design();
    NetworkConfig cfg = paper::network();
    AttackBudget budget{paper::duration_caps()};
    Defender defender{sys, design, cfg, paper::k_bar};
};

} // namespace

TEST_CASE("zero budget gives an all-zero trace", "[sim]") {
    Fixture fx;
    AttackBudget none{{0, 0, 0}};
    AttackTrace tr =
        generate_trace(fx.cfg, none, fx.sys, TracePolicy::UniformSplit, 1, 60);
    for (const auto& f : tr.flows) CHECK(f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform-split trace hits the published attack pattern", "[sim]") {
    Fixture fx;
    AttackTrace tr =
        generate_trace(fx.cfg, fx.budget, fx.sys, TracePolicy::UniformSplit, 1, 30);
    tr.validate(fx.cfg, fx.budget, fx.sys);
    // attacks at offsets 1..2 of each dwell: k = 1, 5, 10 are attacked
    for (long k : {1L, 2L, 5L, 6L, 10L, 11L}) {
        CHECK(tr.attacked(k));
        CHECK(tr.flows[k] == Vector::Constant(4, 5.0));
    }
    for (long k : {0L, 3L, 4L, 7L, 9L, 14L}) CHECK_FALSE(tr.attacked(k));
}

TEST_CASE("random traces are admissible and budget-respecting", "[sim][property]") {
    Fixture fx;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::RandomAdmissible, 9, 1000);
    CHECK_NOTHROW(tr.validate(fx.cfg, fx.budget, fx.sys));
    int attacked = 0;
    for (long k = 0; k < tr.horizon(); ++k) attacked += tr.attacked(k);
    CHECK(attacked > 0);
}

TEST_CASE("force-one-channel trace uses the jam threshold", "[sim]") {
    Fixture fx;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::ForceOneChannel, 4, 60);
    tr.validate(fx.cfg, fx.budget, fx.sys);
    bool saw = false;
    for (long k = 0; k < tr.horizon(); ++k) {
        if (!tr.attacked(k)) continue;
        saw = true;
        int hot = 0;
        for (int j = 0; j < 4; ++j)
            if (tr.flows[k](j) > 0) {
                ++hot;
                CHECK(tr.flows[k](j) == Approx(15.0));
            }
        CHECK(hot == 1);
    }
    CHECK(saw);
}

TEST_CASE("traces are deterministic in the seed", "[sim]") {
    Fixture fx;
    AttackTrace a = generate_trace(fx.cfg, fx.budget, fx.sys,
                                   TracePolicy::RandomAdmissible, 7, 100);
    AttackTrace b = generate_trace(fx.cfg, fx.budget, fx.sys,
                                   TracePolicy::RandomAdmissible, 7, 100);
    for (long k = 0; k < 100; ++k)
        CHECK((a.flows[k] - b.flows[k]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attack-free closed loop decays at the designed rates", "[sim]") {
    Fixture fx;
    AttackBudget none{{0, 0, 0}};
    AttackTrace tr =
        generate_trace(fx.cfg, none, fx.sys, TracePolicy::UniformSplit, 1, 90);
    SimResult r = run(fx.defender, tr, Strategy::CrossLayered, paper::x0());
    CHECK(verify_lemma_rates(fx.sys, fx.design, r).ok());
    CHECK(r.metrics.final_norm_ratio < 1e-6);
}

TEST_CASE("per-step contracts hold for every strategy", "[sim][property]") {
    Fixture fx;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::UniformSplit, 1, 150);
    Comparison cmp = compare_strategies(fx.defender, tr, paper::x0());
    for (const SimResult* r : {&cmp.cross, &cmp.gain_only, &cmp.alloc_only}) {
        auto rep = verify_lemma_rates(fx.sys, fx.design, *r);
        INFO(to_string(r->strategy));
        CHECK(rep.ok());
    }
}

TEST_CASE("decision log shows the published channel preferences", "[sim][paper]") {
    Fixture fx;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::UniformSplit, 1, 15);
    SimResult r = run(fx.defender, tr, Strategy::CrossLayered, paper::x0());
    CHECK(r.decisions[1].l == ChannelState::from_mask(0b1100, 4));  // mode 1: 3,4
    CHECK(r.decisions[5].l == ChannelState::from_mask(0b1010, 4));  // mode 2: 2,4
    CHECK(r.decisions[10].l == ChannelState::from_mask(0b0011, 4)); // mode 3: 1,2
}

TEST_CASE("online rates never exceed the offline worst case", "[sim][property]") {
    Fixture fx;
    Vector beta_bar(3);
    beta_bar << paper::beta_bar_1, paper::beta_bar_2, paper::beta_bar_3;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::RandomAdmissible, 3, 150);
    SimResult r = run(fx.defender, tr, Strategy::CrossLayered, paper::x0());
    for (size_t k = 0; k < r.decisions.size(); ++k)
        if (r.attacked[k]) {
            const int mode = fx.sys.mode_at(k).mode;
            CHECK(r.decisions[k].beta_star <= beta_bar(mode - 1) + 0.005 + 1e-6);
        }
}

TEST_CASE("identical runs give bit-identical logs", "[sim]") {
    Fixture fx;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::RandomAdmissible, 21, 60);
    SimResult r1 = run(fx.defender, tr, Strategy::CrossLayered, paper::x0());
    Defender def2(fx.sys, fx.design, fx.cfg, paper::k_bar);
    SimResult r2 = run(def2, tr, Strategy::CrossLayered, paper::x0());
    REQUIRE(r1.decisions.size() == r2.decisions.size());
    for (size_t k = 0; k < r1.decisions.size(); ++k) {
        CHECK(r1.decisions[k].l == r2.decisions[k].l);
        CHECK(r1.decisions[k].beta_star == r2.decisions[k].beta_star);
        CHECK((r1.decisions[k].w.w - r2.decisions[k].w.w).cwiseAbs().maxCoeff() == 0.0);
        CHECK((r1.x[k] - r2.x[k]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("ablations do not beat the joint strategy on paired metrics",
          "[sim][paper]") {
    Fixture fx;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::UniformSplit, 1, 150);
    Comparison cmp = compare_strategies(fx.defender, tr, paper::x0());
    CHECK(cmp.cross.metrics.peak_norm_ratio <=
          cmp.gain_only.metrics.peak_norm_ratio + 1e-9);
    CHECK(cmp.cross.metrics.peak_norm_ratio <=
          cmp.alloc_only.metrics.peak_norm_ratio + 1e-9);
    // per-step dominance over the shared trace
    for (size_t k = 0; k < cmp.cross.decisions.size(); ++k)
        if (cmp.cross.attacked[k]) {
            CHECK(cmp.cross.decisions[k].beta_star <=
                  cmp.gain_only.decisions[k].beta_star + 1e-6);
            CHECK(cmp.cross.decisions[k].beta_star <=
                  cmp.alloc_only.decisions[k].beta_star + 1e-6);
        }
}

TEST_CASE("corrupted gains break the rate contract detectably", "[sim]") {
    Fixture fx;
    AttackTrace tr = generate_trace(fx.cfg, fx.budget, fx.sys,
                                    TracePolicy::UniformSplit, 1, 30);
    SimResult good = run(fx.defender, tr, Strategy::CrossLayered, paper::x0());
    REQUIRE(verify_lemma_rates(fx.sys, fx.design, good).ok());

    // replay the trajectory with one step's gain zeroed out: the logged rate
    // no longer covers the true growth
    SimResult bad = good;
    const long k = 1; // an attacked step
    REQUIRE(bad.attacked[k]);
    SystemState st{k, bad.x[k]};
    SystemState next = step(fx.sys, st, Matrix::Zero(2, 4), bad.decisions[k].l);
    bad.x[k + 1] = next.x;
    bad.v[k + 1] = lyapunov_value(fx.sys, fx.design, next);
    auto rep = verify_lemma_rates(fx.sys, fx.design, bad);
    CHECK_FALSE(rep.ok());
    CHECK(std::find(rep.violations.begin(), rep.violations.end(), k) !=
          rep.violations.end());
}
