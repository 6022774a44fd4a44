#pragma once

#include <gtest/gtest.h>

#include <random>

#include "kgbohm/error.hpp"
#include "kgbohm/wavefunction.hpp"

namespace fixtures {

using namespace kgbohm;

inline void expect_code(ErrorCode code, auto&& fn)
{
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

/// p = (sqrt 2, 1, 0, 0), m = 1.
inline WaveFunction plane_wave() { return make_wavefunction(1.0, 1, {{1.0, {{{1, 0, 0}, +1}}}}); }

/// exp(-i p.x) + 0.5 exp(-i q.x), p = (1,0,0), q = (5,0,0), m = 1.
inline WaveFunction two_mode()
{
    return make_wavefunction(1.0, 1, {{1.0, {{{1, 0, 0}, +1}}}, {0.5, {{{5, 0, 0}, +1}}}});
}

inline WaveFunction entangled_pair()
{
    const Vec3 pa{0.4, 0.1, 0}, pb{-0.3, 0.5, 0.2}, pc{0.9, -0.2, 0.1};
    return symmetrize(make_wavefunction(
        1.0, 2, {{1.0, {{pa, +1}, {pb, +1}}}, {Complex(0.3, 0.4), {{pc, +1}, {pa, +1}}}}));
}

inline Configuration random_config(std::mt19937_64& rng, std::size_t n, double scale = 3.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    Configuration cfg;
    for (std::size_t a = 0; a < n; ++a) {
        cfg.emplace_back(u(rng), u(rng), u(rng), u(rng));
    }
    return cfg;
}

inline Configuration shifted(Configuration cfg, std::size_t a, std::size_t mu, double h)
{
    auto c = cfg[a].components();
    c[mu] += h;
    cfg[a] = FourVector(c);
    return cfg;
}

}  // namespace fixtures
