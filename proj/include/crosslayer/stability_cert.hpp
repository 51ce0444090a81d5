#pragma once

// Exponential-stability certificate: combine the attack-free rates, the
// worst-case attacked rates, and the attack-duration budget into the decay
// rate chi and the trajectory envelope constant c.

#include <cmath>
#include <vector>

#include "crosslayer/errors.hpp"
#include "crosslayer/lyapunov_design.hpp"
#include "crosslayer/plant.hpp"

namespace crosslayer {

struct AttackBudget {
    std::vector<int> duration_caps; // per-subsystem cap on attacked steps per dwell

    void validate(const PplsSystem& sys) const {
        if (static_cast<int>(duration_caps.size()) != sys.subsystem_count())
            throw InvalidInputError("AttackBudget: one duration cap per subsystem");
        for (int i = 1; i <= sys.subsystem_count(); ++i)
            if (duration_caps[i - 1] < 0 || duration_caps[i - 1] > sys.sub(i).dwell)
                throw InvalidInputError("AttackBudget: cap must lie in [0, dwell]");
    }
    double delta(const PplsSystem& sys, int i) const {
        return static_cast<double>(duration_caps[i - 1]) / sys.sub(i).dwell;
    }
};

struct Certificate {
    bool certified = false;
    double chi = 0.0;     // decay rate; certified iff < 1
    double c = 0.0;       // envelope constant
    double lhs = 0.0;     // product of the per-period rate factors (= chi^(2T))
    Vector theta;         // per-subsystem excursion factors
    Vector delta;         // attack duration ratios actually used
};

// chi solves the per-period product condition with equality:
//   prod_i alpha_i^((1-delta_i) T_i) * beta_bar_i^(delta_i T_i) = chi^(2T).
inline Certificate certify(const Vector& alpha, const Vector& beta_bar,
                           const AttackBudget& budget, const PplsSystem& sys,
                           const std::vector<SymMatrix>& p) {
    const int s = sys.subsystem_count();
    if (alpha.size() != s || beta_bar.size() != s)
        throw InvalidInputError("certify: one rate pair per subsystem");
    for (int i = 0; i < s; ++i)
        if (!(alpha(i) > 0) || !(beta_bar(i) > 0))
            throw InvalidInputError("certify: rates must be positive");
    budget.validate(sys);

    Certificate cert;
    cert.delta = Vector(s);
    double log_lhs = 0.0;
    for (int i = 1; i <= s; ++i) {
        const double t = sys.sub(i).dwell;
        const double del = budget.delta(sys, i);
        cert.delta(i - 1) = del;
        log_lhs += (1.0 - del) * t * std::log(alpha(i - 1)) +
                   del * t * std::log(beta_bar(i - 1));
    }
    cert.lhs = std::exp(log_lhs);
    cert.chi = std::exp(log_lhs / (2.0 * sys.period()));
    cert.certified = cert.chi < 1.0;

    // envelope constant from the proof: within-dwell excursions bounded by
    // theta_i, then period-level decay anchored at P_s
    cert.theta = Vector(s);
    double log_c = 0.0;
    for (int i = 1; i <= s; ++i) {
        const auto ep = eig_extrema(p[i]);
        const auto epm = eig_extrema(p[i - 1]);
        const double ratio = std::max(ep.max_eig, epm.max_eig) /
                             std::min(ep.min_eig, epm.min_eig);
        const double t = sys.sub(i).dwell;
        cert.theta(i - 1) =
            std::max(1.0, std::pow(beta_bar(i - 1) * ratio, t / 2.0));
        log_c += std::log(cert.theta(i - 1));
    }
    const auto eps = eig_extrema(p[sys.subsystem_count()]);
    log_c += 0.5 * std::log(eps.max_eig / eps.min_eig) -
             sys.period() * std::log(cert.chi);
    cert.c = std::exp(log_c);
    return cert;
}

struct EnvelopeReport {
    double max_ratio = 0.0; // max over k of |x(k)| / (c chi^k |x(0)|)
    bool pass = false;
    bool budget_respected = true;
    std::vector<long> budget_violations; // dwell start indices over budget
};

// Check a simulated trajectory against the envelope |x(k)| <= c chi^k |x(0)|,
// flagging attack-budget violations separately (the envelope is only
// guaranteed for budget-respecting traces).
inline EnvelopeReport check_envelope(const std::vector<Vector>& traj,
                                     const std::vector<bool>& attacked,
                                     const Certificate& cert, const PplsSystem& sys,
                                     const AttackBudget& budget) {
    EnvelopeReport rep;
    if (traj.empty()) {
        rep.pass = true;
        return rep;
    }
    const double x0 = traj[0].norm();
    if (x0 == 0.0) {
        rep.pass = true;
        for (const auto& x : traj) rep.pass = rep.pass && x.norm() < 1e-15;
        return rep;
    }
    double scale = cert.c;
    for (size_t k = 0; k < traj.size(); ++k) {
        rep.max_ratio = std::max(rep.max_ratio, traj[k].norm() / (scale * x0));
        scale *= cert.chi;
    }
    rep.pass = rep.max_ratio <= 1.0 + 1e-6;

    // per-dwell attacked-step accounting, each step attributed to the dwell
    // interval containing it
    for (long start = 0; start + 1 < static_cast<long>(attacked.size());) {
        const ModePhase mp = sys.mode_at(start);
        const int dwell = sys.sub(mp.mode).dwell;
        const long dwell_start = start - mp.phase;
        int count = 0;
        for (long k = dwell_start;
             k < dwell_start + dwell && k < static_cast<long>(attacked.size()); ++k)
            if (attacked[k]) ++count;
        if (count > budget.duration_caps[mp.mode - 1]) {
            rep.budget_respected = false;
            rep.budget_violations.push_back(dwell_start);
        }
        start = dwell_start + dwell;
    }
    return rep;
}

} // namespace crosslayer
