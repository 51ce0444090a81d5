// Command-line surface over the pipeline:
//   design    solve the offline synthesis and write the design artifact
//   analyze   per-state tables, worst-case enumeration, stability certificate
//   simulate  closed-loop run under one strategy
//   compare   the three strategies on one shared attack trace
//
// Exit codes: 0 success, 2 validation failure, 3 infeasible, 4 solver failure.

#include <CLI11.hpp>
#include <iostream>

#include "crosslayer/offline_design.hpp"
#include "crosslayer/report.hpp"
#include "crosslayer/scenario.hpp"

using namespace crosslayer;

namespace {

struct CommonArgs {
    std::string scenario_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> boundary;
    std::string strategy = "cross";
};

Scenario load_with_overrides(const CommonArgs& args) {
    Scenario sc = load_scenario(args.scenario_path);
    if (args.seed) sc.seed = *args.seed;
    if (args.boundary) {
        if (*args.boundary == "paper-table") sc.boundary = BoundaryMode::PaperTable;
        else if (*args.boundary == "formula") sc.boundary = BoundaryMode::FormulaNonstrict;
        else throw InvalidInputError("--boundary: expected paper-table or formula");
    }
    return sc;
}

LyapunovDesign obtain_design(const Scenario& sc, const PplsSystem& sys, bool* resolved) {
    if (sc.p_override) {
        if (resolved) *resolved = false;
        LyapunovDesign d = sc.overridden_design();
        d.validate_shapes(sys.n(), sys.nu());
        return d;
    }
    if (resolved) *resolved = true;
    return design(sys, sc.alpha);
}

Vector default_x0(const Scenario& sc, const PplsSystem& sys) {
    return sc.initial_state.size() ? sc.initial_state : Vector::Ones(sys.n());
}

int cmd_design(const CommonArgs& args) {
    Scenario sc = load_with_overrides(args);
    PplsSystem sys = sc.system();
    LyapunovDesign d = design(sys, sc.alpha);
    DesignReport rep = validate(d, sys);
    OutputContext ctx(args.out_dir, sc);
    json j = design_to_json(d);
    j["validation"] = report_to_json(rep);
    ctx.write_json("design.json", std::move(j));
    std::cout << "design: " << (rep.ok() ? "valid" : "INVALID") << ", written to "
              << args.out_dir << "/design.json\n";
    for (const auto& c : rep.checks)
        std::cout << "  " << (c.pass ? "ok  " : "FAIL") << "  " << c.name << "\n";
    return rep.ok() ? 0 : 4;
}

int cmd_analyze(const CommonArgs& args) {
    Scenario sc = load_with_overrides(args);
    PplsSystem sys = sc.system();
    bool resolved = false;
    LyapunovDesign d = obtain_design(sc, sys, &resolved);
    OutputContext ctx(args.out_dir, sc);

    SeaOptions opt;
    opt.boundary = sc.boundary;
    opt.k_bar = sc.gain_bound;
    opt.k_box_active = sc.gain_box_active;

    Vector beta_bar(sys.subsystem_count());
    json modes = json::array();
    for (int i = 1; i <= sys.subsystem_count(); ++i) {
        WorstCaseResult r = sea(sys, d, sc.network, i, opt);
        beta_bar(i - 1) = r.beta_bar;
        write_beta_table_csv(ctx, r.table, "beta_table_mode" + std::to_string(i) + ".csv");
        write_sea_audit_csv(ctx, r, "sea_audit_mode" + std::to_string(i) + ".csv");
        modes.push_back(worst_case_to_json(r));
        std::cout << "mode " << i << ": beta_bar = " << fmt9(r.beta_bar) << " (pattern "
                  << r.worst_pattern.str() << ", state " << r.worst_state.str() << ")\n";
    }
    Certificate cert = certify(sc.alpha, beta_bar, sc.budget(), sys, d.p);
    std::cout << (cert.certified ? "certified: chi = " : "NOT certified: chi = ")
              << fmt9(cert.chi) << "  (c = " << fmt9(cert.c) << ")\n";

    json report;
    report["design_resolved"] = resolved;
    report["design"] = design_to_json(d);
    report["modes"] = std::move(modes);
    report["certificate"] = certificate_to_json(cert);
    ctx.write_json("analysis.json", std::move(report));
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    Scenario sc = load_with_overrides(args);
    PplsSystem sys = sc.system();
    LyapunovDesign d = obtain_design(sc, sys, nullptr);
    OutputContext ctx(args.out_dir, sc);

    Strategy strat;
    if (args.strategy == "cross") strat = Strategy::CrossLayered;
    else if (args.strategy == "a") strat = Strategy::FixedAllocation;
    else if (args.strategy == "b") strat = Strategy::FixedGain;
    else throw InvalidInputError("--strategy: expected cross, a, or b");

    Defender def(sys, d, sc.network, sc.gain_bound, sc.gain_box_active);
    AttackTrace tr = sc.trace(sys);
    std::optional<BandwidthAlloc> w0;
    if (sc.initial_allocation) w0 = BandwidthAlloc{*sc.initial_allocation};
    SimResult res = run(def, tr, strat, default_x0(sc, sys), w0 ? &*w0 : nullptr);

    RateReport rr = verify_lemma_rates(sys, d, res);
    write_trajectory_csv(ctx, sys, res, "trajectory.csv");
    write_decisions_csv(ctx, sys, tr, res, "decisions.csv");
    write_metrics_csv(ctx, {&res}, "metrics.csv");
    plot_state_norms(ctx, {&res}, "state_norm.svg");
    plot_bandwidth_vs_flow(ctx, sc.network, tr, res, "bandwidth_flow.svg");

    std::cout << to_string(strat) << ": peak " << fmt9(res.metrics.peak_norm_ratio)
              << ", oscillation " << fmt9(res.metrics.oscillation) << ", final "
              << fmt9(res.metrics.final_norm_ratio) << ", rate contract "
              << (rr.ok() ? "ok" : "VIOLATED") << "\n";
    return rr.ok() ? 0 : 4;
}

int cmd_compare(const CommonArgs& args) {
    Scenario sc = load_with_overrides(args);
    PplsSystem sys = sc.system();
    LyapunovDesign d = obtain_design(sc, sys, nullptr);
    OutputContext ctx(args.out_dir, sc);

    Defender def(sys, d, sc.network, sc.gain_bound, sc.gain_box_active);
    AttackTrace tr = sc.trace(sys);
    Comparison cmp = compare_strategies(def, tr, default_x0(sc, sys));

    std::vector<const SimResult*> runs{&cmp.cross, &cmp.gain_only, &cmp.alloc_only};
    write_metrics_csv(ctx, runs, "compare_metrics.csv");
    plot_state_norms(ctx, runs, "compare_state_norm.svg");
    for (const SimResult* r : runs)
        write_trajectory_csv(ctx, sys, *r,
                             std::string("trajectory_") + to_string(r->strategy) + ".csv");

    std::cout << "strategy            peak        oscillation  final\n";
    for (const SimResult* r : runs)
        printf("%-18s  %-10.4g  %-11.4g  %-10.4g\n", to_string(r->strategy),
               r->metrics.peak_norm_ratio, r->metrics.oscillation,
               r->metrics.final_norm_ratio);
    const bool ordered =
        cmp.cross.metrics.peak_norm_ratio <=
            std::min(cmp.gain_only.metrics.peak_norm_ratio,
                     cmp.alloc_only.metrics.peak_norm_ratio) + 1e-9;
    std::cout << "qualitative ordering (peak): cross-layered "
              << (ordered ? "<=" : "NOT <=") << " ablations\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"online cross-layered bandwidth/gain defense for multi-channel "
                 "periodic systems"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool with_strategy) {
        sub->add_option("scenario", args.scenario_path, "scenario JSON file")
            ->required();
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed, "override the attack trace seed");
        sub->add_option("--boundary", args.boundary,
                        "safe-set boundary mode: paper-table|formula");
        if (with_strategy)
            sub->add_option("--strategy", args.strategy, "cross|a|b");
    };
    CLI::App* sdesign = app.add_subcommand("design", "offline synthesis");
    CLI::App* sanalyze = app.add_subcommand("analyze", "worst case + certificate");
    CLI::App* ssim = app.add_subcommand("simulate", "closed-loop run");
    CLI::App* scomp = app.add_subcommand("compare", "three strategies, one trace");
    add_common(sdesign, false);
    add_common(sanalyze, false);
    add_common(ssim, true);
    add_common(scomp, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sdesign->parsed()) return cmd_design(args);
        if (sanalyze->parsed()) return cmd_analyze(args);
        if (ssim->parsed()) return cmd_simulate(args);
        if (scomp->parsed()) return cmd_compare(args);
    } catch (const InvalidInputError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
