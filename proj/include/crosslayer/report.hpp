#pragma once

// Result persistence: CSV tables, JSON reports, and small SVG line plots.
// Every file starts with the scenario hash and the semantic settings so runs
// are reproducible from the artifact alone. Floats are serialized with 9
// significant digits.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crosslayer/offline_design.hpp"
#include "crosslayer/scenario.hpp"
#include "crosslayer/sim_harness.hpp"
#include "crosslayer/stability_cert.hpp"
#include "crosslayer/worst_case_sea.hpp"

namespace crosslayer {

inline std::string fmt9(double v) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct OutputContext {
    std::filesystem::path dir;
    std::string hash;
    std::string settings;

    OutputContext(const std::string& out_dir, const Scenario& sc)
        : dir(out_dir), hash(scenario_hash(sc)), settings(settings_line(sc)) {
        std::filesystem::create_directories(dir);
    }

    std::ofstream open_csv(const std::string& name) const {
        std::ofstream f(dir / name);
        if (!f) throw InvalidInputError("cannot write " + (dir / name).string());
        f << "# scenario_hash=" << hash << "\n# " << settings << "\n";
        return f;
    }

    void write_json(const std::string& name, json j) const {
        j["meta"] = {{"scenario_hash", hash}, {"settings", settings}};
        std::ofstream f(dir / name);
        if (!f) throw InvalidInputError("cannot write " + (dir / name).string());
        f << j.dump(2) << "\n";
    }
};

// ----------------------------------------------------------------------------
// CSV writers
// ----------------------------------------------------------------------------

inline void write_trajectory_csv(const OutputContext& ctx, const PplsSystem& sys,
                                 const SimResult& r, const std::string& name) {
    auto f = ctx.open_csv(name);
    f << "k,mode";
    for (int j = 0; j < sys.n(); ++j) f << ",x" << j + 1;
    f << ",v,attacked\n";
    for (size_t k = 0; k < r.x.size(); ++k) {
        f << k << "," << sys.mode_at(k).mode;
        for (int j = 0; j < sys.n(); ++j) f << "," << fmt9(r.x[k](j));
        f << "," << fmt9(r.v[k]) << ","
          << (k < r.attacked.size() ? (r.attacked[k] ? 1 : 0) : 0) << "\n";
    }
}

inline void write_decisions_csv(const OutputContext& ctx, const PplsSystem& sys,
                                const AttackTrace& trace, const SimResult& r,
                                const std::string& name) {
    auto f = ctx.open_csv(name);
    f << "k,mode";
    for (int j = 0; j < sys.n(); ++j) f << ",attack" << j + 1;
    for (int j = 0; j < sys.n(); ++j) f << ",w" << j + 1;
    for (int j = 0; j < sys.n(); ++j) f << ",l" << j + 1;
    f << ",beta";
    for (int i = 0; i < sys.nu(); ++i)
        for (int j = 0; j < sys.n(); ++j) f << ",k" << i + 1 << j + 1;
    f << "\n";
    for (size_t k = 0; k < r.decisions.size(); ++k) {
        const auto& d = r.decisions[k];
        f << k << "," << sys.mode_at(k).mode;
        for (int j = 0; j < sys.n(); ++j) f << "," << fmt9(trace.flows[k](j));
        for (int j = 0; j < sys.n(); ++j) f << "," << fmt9(d.w.w(j));
        for (int j = 0; j < sys.n(); ++j) f << "," << d.l.l[j];
        f << "," << fmt9(d.beta_star);
        for (int i = 0; i < sys.nu(); ++i)
            for (int j = 0; j < sys.n(); ++j) f << "," << fmt9(d.gain(i, j));
        f << "\n";
    }
}

inline void write_metrics_csv(const OutputContext& ctx,
                              const std::vector<const SimResult*>& runs,
                              const std::string& name) {
    auto f = ctx.open_csv(name);
    f << "strategy,peak_norm_ratio,oscillation,final_norm_ratio,settling_index\n";
    for (const SimResult* r : runs)
        f << to_string(r->strategy) << "," << fmt9(r->metrics.peak_norm_ratio) << ","
          << fmt9(r->metrics.oscillation) << "," << fmt9(r->metrics.final_norm_ratio)
          << "," << r->metrics.settling_index << "\n";
}

inline void write_beta_table_csv(const OutputContext& ctx, const StateBetaTable& t,
                                 const std::string& name) {
    auto f = ctx.open_csv(name);
    f << "state,beta\n";
    for (unsigned mask = 0; mask < t.beta.size(); ++mask)
        f << ChannelState::from_mask(mask, t.n).str() << "," << fmt9(t.beta[mask]) << "\n";
}

inline void write_sea_audit_csv(const OutputContext& ctx, const WorstCaseResult& r,
                                const std::string& name) {
    auto f = ctx.open_csv(name);
    f << "pattern,beta_open,beta_hat,safe_count,candidate_count,lp_checks,excluded,"
         "beta_bar_branch,decided_state\n";
    for (const auto& br : r.branches)
        f << br.pattern.str() << "," << fmt9(br.beta_open) << ","
          << (std::isfinite(br.beta_hat) ? fmt9(br.beta_hat) : "inf") << ","
          << br.safe.size() << "," << br.candidates.size() << "," << br.lp_checks << ","
          << (br.excluded ? 1 : 0) << ","
          << (br.excluded ? "excluded" : fmt9(br.beta_bar)) << ","
          << (br.excluded ? "-" : br.decided_state.str()) << "\n";
}

// ----------------------------------------------------------------------------
// JSON reports
// ----------------------------------------------------------------------------

inline json design_to_json(const LyapunovDesign& d) {
    json j;
    j["alpha"] = scenario_detail::dump_vector(d.alpha);
    j["p"] = json::array();
    for (size_t i = 1; i < d.p.size(); ++i)
        j["p"].push_back(scenario_detail::dump_matrix(d.p[i].m()));
    j["k_default"] = json::array();
    for (const auto& k : d.k_default)
        j["k_default"].push_back(scenario_detail::dump_matrix(k));
    return j;
}

inline LyapunovDesign design_from_json(const json& j) {
    LyapunovDesign d;
    d.alpha = scenario_detail::parse_vector(j.at("alpha"), "design.alpha");
    const int s = static_cast<int>(j.at("p").size());
    d.p.resize(s + 1);
    for (int i = 0; i < s; ++i)
        d.p[i + 1] = SymMatrix(
            scenario_detail::parse_matrix(j["p"][i], "design.p[" + std::to_string(i) + "]"),
            1e-6);
    d.p[0] = d.p[s];
    for (const auto& k : j.at("k_default"))
        d.k_default.push_back(scenario_detail::parse_matrix(k, "design.k_default"));
    return d;
}

inline json report_to_json(const DesignReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"margin", c.margin}, {"pass", c.pass}});
    return {{"ok", rep.ok()}, {"checks", std::move(checks)}};
}

inline json worst_case_to_json(const WorstCaseResult& r) {
    json branches = json::array();
    for (const auto& br : r.branches) {
        json jb = {{"pattern", br.pattern.str()},
                   {"beta_open", br.beta_open},
                   {"safe_count", br.safe.size()},
                   {"candidates", br.candidates.size()},
                   {"lp_checks", br.lp_checks},
                   {"excluded", br.excluded}};
        if (std::isfinite(br.beta_hat)) jb["beta_hat"] = br.beta_hat;
        if (!br.excluded) {
            jb["beta_bar"] = br.beta_bar;
            jb["decided_state"] = br.decided_state.str();
        }
        if (br.last_push_witness)
            jb["last_push_witness"] = scenario_detail::dump_vector(*br.last_push_witness);
        branches.push_back(std::move(jb));
    }
    json table = json::array();
    for (unsigned mask = 0; mask < r.table.beta.size(); ++mask)
        table.push_back({{"state", ChannelState::from_mask(mask, r.table.n).str()},
                         {"beta", r.table.beta[mask]}});
    return {{"mode", r.mode},
            {"beta_bar", r.beta_bar},
            {"beta_tilde", r.beta_tilde},
            {"worst_pattern", r.worst_pattern.str()},
            {"worst_state", r.worst_state.str()},
            {"branches", std::move(branches)},
            {"table", std::move(table)}};
}

inline json certificate_to_json(const Certificate& c) {
    return {{"certified", c.certified},
            {"chi", c.chi},
            {"c", c.c},
            {"lhs", c.lhs},
            {"theta", scenario_detail::dump_vector(c.theta)},
            {"delta", scenario_detail::dump_vector(c.delta)}};
}

// ----------------------------------------------------------------------------
// SVG line plots
// ----------------------------------------------------------------------------

struct SvgSeries {
    std::string label;
    std::string color;
    std::vector<double> y;
};

inline void write_svg_plot(const OutputContext& ctx, const std::string& name,
                           const std::string& title,
                           const std::vector<SvgSeries>& series) {
    const int w = 760, h = 420, ml = 60, mr = 20, mt = 40, mb = 40;
    double ymin = 0.0, ymax = 1e-12;
    size_t nmax = 1;
    for (const auto& s : series) {
        nmax = std::max(nmax, s.y.size());
        for (double v : s.y) {
            ymax = std::max(ymax, v);
            ymin = std::min(ymin, v);
        }
    }
    const double xs = double(w - ml - mr) / std::max<size_t>(1, nmax - 1);
    const double ys = double(h - mt - mb) / (ymax - ymin);

    std::ofstream f(ctx.dir / name);
    if (!f) throw InvalidInputError("cannot write " + (ctx.dir / name).string());
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<desc>scenario_hash=" << ctx.hash << " " << ctx.settings << "</desc>\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
    // axes
    f << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << ml - 8 << "\" y=\"" << mt + 4
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt9(ymax) << "</text>\n";
    f << "<text x=\"" << ml - 8 << "\" y=\"" << h - mb
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt9(ymin) << "</text>\n";
    int li = 0;
    for (const auto& s : series) {
        f << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t k = 0; k < s.y.size(); ++k)
            f << ml + xs * k << "," << (h - mb) - ys * (s.y[k] - ymin) << " ";
        f << "\"/>\n";
        f << "<text x=\"" << w - mr - 150 << "\" y=\"" << mt + 14 * (li + 1)
          << "\" font-size=\"11\" fill=\"" << s.color << "\">" << s.label << "</text>\n";
        ++li;
    }
    f << "</svg>\n";
}

inline void plot_state_norms(const OutputContext& ctx,
                             const std::vector<const SimResult*>& runs,
                             const std::string& name) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::vector<SvgSeries> series;
    int i = 0;
    for (const SimResult* r : runs) {
        SvgSeries s;
        s.label = to_string(r->strategy);
        s.color = colors[i++ % 4];
        for (const auto& x : r->x) s.y.push_back(x.norm());
        series.push_back(std::move(s));
    }
    write_svg_plot(ctx, name, "state norm over time", series);
}

inline void plot_bandwidth_vs_flow(const OutputContext& ctx, const NetworkConfig& cfg,
                                   const AttackTrace& trace, const SimResult& r,
                                   const std::string& name) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#8c564b", "#e377c2"};
    std::vector<SvgSeries> series;
    for (int j = 0; j < cfg.n(); ++j) {
        SvgSeries sw, sf;
        sw.label = "bandwidth ch" + std::to_string(j + 1);
        sw.color = colors[j % 6];
        sf.label = "input flow ch" + std::to_string(j + 1);
        sf.color = "#aaaaaa";
        for (size_t k = 0; k < r.decisions.size(); ++k) {
            sw.y.push_back(r.decisions[k].w.w(j));
            sf.y.push_back(cfg.normal_flow(j) + trace.flows[k](j));
        }
        series.push_back(std::move(sw));
        series.push_back(std::move(sf));
    }
    write_svg_plot(ctx, name, "bandwidth against input flow", series);
}

} // namespace crosslayer
