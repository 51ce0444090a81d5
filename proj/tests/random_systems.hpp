#pragma once

// Seeded random problem instances for property and oracle tests: stabilizable
// periodic systems with a feasible offline design, and network configurations
// satisfying the standing assumptions.

#include <optional>
#include <random>

#include "crosslayer/offline_design.hpp"

namespace testgen {

using namespace crosslayer;

struct Instance {
    PplsSystem sys;
    LyapunovDesign design;
    NetworkConfig cfg;
    double k_bar = 50.0;
};

inline Matrix randn(std::mt19937& rng, int r, int c) {
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

inline double spectral_radius(const Matrix& a) {
    return a.eigenvalues().cwiseAbs().maxCoeff();
}

// One subsystem with spectral radius scaled into [0.7, 1.5].
inline Subsystem random_subsystem(std::mt19937& rng, int n, int nu, int dwell) {
    std::uniform_real_distribution<double> u(0.7, 1.5);
    Matrix a = randn(rng, n, n);
    const double rho = spectral_radius(a);
    if (rho > 1e-9) a *= u(rng) / rho;
    return {a, randn(rng, n, nu), dwell};
}

// Try increasingly generous rates until the offline synthesis succeeds.
inline std::optional<Instance> random_instance(std::mt19937& rng, int n, int nu,
                                               int subsystems) {
    std::uniform_int_distribution<int> dw(2, 4);
    std::vector<Subsystem> subs;
    for (int i = 0; i < subsystems; ++i) subs.push_back(random_subsystem(rng, n, nu, dw(rng)));
    PplsSystem sys(subs);

    for (double a : {0.8, 1.2, 2.0, 4.0, 8.0}) {
        try {
            LyapunovDesign d = design(sys, Vector::Constant(subsystems, a));
            Instance inst{sys, std::move(d), {}, 50.0};
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            NetworkConfig& cfg = inst.cfg;
            cfg.normal_flow = Vector(n);
            cfg.buffer = Vector(n);
            cfg.attack_cap = Vector(n);
            cfg.alloc_delay = 0.2 + 0.6 * u01(rng);
            double need = 0.0;
            for (int j = 0; j < n; ++j) {
                cfg.normal_flow(j) = 1.0 + 4.0 * u01(rng);
                cfg.buffer(j) = 2.0 + 10.0 * u01(rng);
                cfg.attack_cap(j) = 5.0 + 15.0 * u01(rng);
                need = std::max(need, cfg.normal_flow(j) + cfg.attack_cap(j));
            }
            cfg.total_bandwidth = need * (1.0 + 0.5 * u01(rng));
            cfg.attack_budget = cfg.total_bandwidth * (0.3 + 1.2 * u01(rng));
            cfg.validate();
            return inst;
        } catch (const InfeasibleError&) {
            continue;
        } catch (const SolverError&) {
            continue;
        }
    }
    return std::nullopt;
}

} // namespace testgen
