#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "pmd/channel.hpp"

using namespace pmd;

TEST_CASE("reference ramp taps") {
    const auto h0 = reference_taps(0);
    CHECK(h0.taps == std::vector<double>{1.0});
    const auto h2 = reference_taps(2);
    REQUIRE(h2.taps.size() == 3);
    // raw (3,2,1)/3 scaled to unit energy
    const double s = std::sqrt(14.0);
    CHECK(h2.taps[0] == doctest::Approx(3 / s).epsilon(1e-14));
    CHECK(h2.taps[1] == doctest::Approx(2 / s).epsilon(1e-14));
    CHECK(h2.taps[2] == doctest::Approx(1 / s).epsilon(1e-14));
    CHECK(h2.norm == doctest::Approx(s / 3));
    CHECK(h2.memory() == 2);
    CHECK(h2.channel_states(4) == 16);
    CHECK_THROWS_AS(reference_taps(-1), std::invalid_argument);
}

TEST_CASE("reference taps have unit energy and decrease") {
    for (int L = 0; L <= 8; ++L) {
        const auto h = reference_taps(L);
        double e = 0;
        for (double v : h.taps) e += v * v;
        CHECK(e == doctest::Approx(1.0).epsilon(1e-14));
        for (int k = 1; k <= L; ++k) CHECK(h.taps[static_cast<std::size_t>(k)] < h.taps[static_cast<std::size_t>(k - 1)]);
    }
}

TEST_CASE("custom taps are renormalised") {
    bool changed = false;
    const auto h = custom_taps({2.0, 0.0}, &changed);
    CHECK(changed);
    CHECK(h.taps == std::vector<double>{1.0, 0.0});
    custom_taps({0.6, 0.8}, &changed);
    CHECK_FALSE(changed);
    CHECK_THROWS_AS(custom_taps({}), std::invalid_argument);
    CHECK_THROWS_AS(custom_taps({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("filtering starts from an empty channel") {
    const auto h = custom_taps({0.6, 0.8});
    const SymbolStream m{1, -3, 3};
    const auto r = filter(m, h);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(0.6));
    CHECK(r[1] == doctest::Approx(0.6 * -3 + 0.8));
    CHECK(r[2] == doctest::Approx(0.6 * 3 + 0.8 * -3));
    const auto flushed = filter(m, h, true);
    REQUIRE(flushed.size() == 4);
    CHECK(flushed[3] == doctest::Approx(0.8 * 3));
}

TEST_CASE("noise calibration") {
    // Es = 5, R = 4/3, 10 dB: N0 = 5 / (4/3 * 10)
    NoiseSpec n{10.0, 4.0 / 3.0, 5.0, false};
    CHECK(n.n0() == doctest::Approx(0.375));
    CHECK(n.variance() == doctest::Approx(0.1875));
    n.noiseless = true;
    CHECK(n.variance() == 0.0);
    NoiseSpec bad{0.0, 0.0, 5.0, false};
    CHECK_THROWS_AS(bad.n0(), std::invalid_argument);
}

TEST_CASE("added noise has the calibrated variance") {
    const NoiseSpec n{3.0, 4.0 / 3.0, 5.0, false};
    CounterRng rng(99);
    const SymbolStream zero(200000, 0.0);
    const auto y = add_awgn(zero, n, rng);
    double mean = 0, var = 0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size() - 1);
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(n.variance()).epsilon(0.02));
}

TEST_CASE("noiseless flag passes the signal through") {
    CounterRng rng(1);
    const SymbolStream s{1.5, -2.5};
    CHECK(add_awgn(s, NoiseSpec{0.0, 1.0, 1.0, true}, rng) == s);
}

TEST_CASE("counter generator substreams") {
    const std::uint64_t a[] = {1, 2, 3}, b[] = {1, 2, 4};
    CHECK(CounterRng::derive(5, a) == CounterRng::derive(5, a));
    CHECK(CounterRng::derive(5, a) != CounterRng::derive(5, b));
    CHECK(CounterRng::derive(5, a) != CounterRng::derive(6, a));
    CounterRng x(CounterRng::derive(5, a)), y(CounterRng::derive(5, a));
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = x();
        CHECK(v == y());
        seen.insert(v);
    }
    CHECK(seen.size() == 1000);
    CHECK(x.counter() == 1000);
}

TEST_CASE("counter generator bits are balanced") {
    CounterRng rng(7);
    long long ones = 0;
    const int words = 20000;
    for (int i = 0; i < words; ++i) ones += __builtin_popcountll(rng());
    const double frac = static_cast<double>(ones) / (64.0 * words);
    CHECK(frac == doctest::Approx(0.5).epsilon(0.01));
}
