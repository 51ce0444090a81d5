#pragma once

// Reference data for the published four-channel, three-subsystem example:
// system matrices, network and attack parameters, the printed Lyapunov
// matrices and default gains, and the reported optimization results used as
// test oracles.

#include <map>
#include <string>
#include <vector>

#include "crosslayer/channel_net.hpp"
#include "crosslayer/lyapunov_design.hpp"
#include "crosslayer/plant.hpp"

namespace paper {

using crosslayer::ChannelState;
using crosslayer::Matrix;
using crosslayer::NetworkConfig;
using crosslayer::PplsSystem;
using crosslayer::SymMatrix;
using crosslayer::Vector;

inline PplsSystem system() {
    Matrix a1(4, 4), a2(4, 4), a3(4, 4), b1(4, 2), b2(4, 2), b3(4, 2);
    a1 << 1.0526, -0.0066, -0.2211, 0.2816,
        -0.0500, 1.1000, -0.1500, 0.2000,
        -0.0395, -0.0013, 0.9658, 0.1763,
        -0.0224, -0.0066, -0.1461, 1.2816;
    b1 << 0.8, 0.4, 0.4, 0.8, 0.4, 0.4, 0.6, 0.4;
    a2 << 0.4434, -1.6224, 0.2039, 1.8211,
        -0.2461, -0.4066, 0.2776, 1.1474,
        -0.5395, -1.3342, 1.2237, 1.5263,
        -0.1592, -1.2513, 0.2355, 1.9895;
    b2 << 0.8, 0.4, 0.4, 0.4, 0.4, 0.8, 0.6, 0.4;
    a3 << -0.5947, 1.2421, -0.2632, 0.3079,
        -1.3671, 2.0132, -0.1697, 0.2618,
        -1.7658, 1.9737, 0.3395, 0.2263,
        -1.4553, 1.6579, -0.5868, 1.1921;
    b3 << 0.4, 0.4, 0.6, 0.4, 0.8, 0.4, 0.4, 0.8;
    return PplsSystem({{a1, b1, 4}, {a2, b2, 5}, {a3, b3, 6}});
}

inline NetworkConfig network() {
    NetworkConfig cfg;
    cfg.normal_flow = Vector::Constant(4, 5.0);
    cfg.buffer = Vector::Constant(4, 10.0);
    cfg.attack_cap = Vector::Constant(4, 15.0);
    cfg.alloc_delay = 0.5;
    cfg.total_bandwidth = 20.0;
    cfg.attack_budget = 20.0;
    return cfg;
}

inline Vector alpha() {
    Vector a(3);
    a << 1.3, 0.4, 0.3;
    return a;
}

constexpr double k_bar = 100.0;

inline Vector x0() {
    Vector x(4);
    x << 2.0, 3.2, 1.3, 3.0;
    return x;
}

// attack duration caps per dwell
inline std::vector<int> duration_caps() { return {2, 2, 2}; }

// printed Lyapunov matrices
inline std::vector<SymMatrix> printed_p() {
    Matrix p1(4, 4), p2(4, 4), p3(4, 4);
    p1 << 1.8998, -0.8123, -0.2081, -0.6923,
        -0.8123, 5.4990, -0.6873, -1.8391,
        -0.2081, -0.6873, 1.0702, 0.1122,
        -0.6923, -1.8391, 0.1122, 4.9075;
    p2 << 2.9788, -1.0600, -0.3289, -0.7628,
        -1.0600, 7.9116, -0.6624, -2.5654,
        -0.3289, -0.6624, 1.0624, -0.0210,
        -0.7628, -2.5654, -0.0210, 3.9751;
    p3 << 2.5458, -0.2577, -0.4802, -0.8349,
        -0.2577, 6.4729, -0.6880, -2.6528,
        -0.4802, -0.6880, 1.1266, 0.1856,
        -0.8349, -2.6528, 0.1856, 3.6621;
    return {SymMatrix(p1), SymMatrix(p2), SymMatrix(p3)};
}

inline std::vector<Matrix> printed_k() {
    Matrix k1(2, 4), k2(2, 4), k3(2, 4);
    k1 << -0.5485, 1.4088, 0.1241, -1.1827,
        0.5403, -1.9166, 0.1856, 0.6356;
    k2 << -0.9037, 1.9401, 0.5662, -2.1235,
        1.3998, 0.0509, -1.5069, -1.0168;
    k3 << 1.6078, -2.8021, -0.4213, 0.8067,
        1.0113, -0.6582, 0.9367, -1.8909;
    return {k1, k2, k3};
}

// Design assembled from the printed matrices; p[0] = p[3] cyclic convention.
inline crosslayer::LyapunovDesign printed_design() {
    crosslayer::LyapunovDesign d;
    d.alpha = alpha();
    auto ps = printed_p();
    d.p = {ps[2], ps[0], ps[1], ps[2]};
    d.k_default = printed_k();
    return d;
}

// Reported per-state optimal exponential orders for subsystem 1. Key: channel
// state as printed [l1 l2 l3 l4].
inline std::map<std::string, double> beta_table_sub1() {
    return {
        {"[1 1 1 1]", 1.2689}, {"[1 0 1 1]", 1.2689}, {"[0 1 1 1]", 1.2689},
        {"[0 0 1 1]", 1.2689}, {"[1 1 0 1]", 1.3737}, {"[0 1 0 1]", 1.3926},
        {"[1 0 0 1]", 1.4258}, {"[0 0 0 1]", 1.4275}, {"[1 1 1 0]", 1.5038},
        {"[0 1 1 0]", 1.5646}, {"[1 1 0 0]", 1.6701}, {"[0 1 0 0]", 1.7068},
        {"[1 0 1 0]", 1.8282}, {"[1 0 0 0]", 1.9140}, {"[0 0 1 0]", 2.0299},
        {"[0 0 0 0]", 2.0661},
    };
}

constexpr double beta_bar_1 = 1.5038;
constexpr double beta_bar_2 = 3.1578;
constexpr double beta_bar_3 = 3.4006;
constexpr double chi = 0.9520;

} // namespace paper
