#include <random>
#include <stdexcept>

#include "doctest.h"
#include "pmd/coding.hpp"

using namespace pmd;

namespace {

const CodeSpec k57 = CodeSpec::from_octal({5, 7});
const PuncturingScheme kP = PuncturingScheme::from_rows({"10", "11"});

BitStream random_bits(std::size_t n, std::mt19937_64& g) {
    BitStream b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(g() & 1U);
    return b;
}

// c_i = sum_j g_i[j] u[k-j] written out directly for (5,7)
BitStream encode57_by_hand(const BitStream& u) {
    BitStream out;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const int u0 = u[k], u1 = k >= 1 ? u[k - 1] : 0, u2 = k >= 2 ? u[k - 2] : 0;
        out.push_back(static_cast<std::uint8_t>(u0 ^ u2));
        out.push_back(static_cast<std::uint8_t>(u0 ^ u1 ^ u2));
    }
    return out;
}

}  // namespace

TEST_CASE("octal generators put the current input on the leading tap") {
    CHECK(k57.n_out == 2);
    CHECK(k57.memory == 2);
    CHECK(k57.states() == 4);
    CHECK(k57.generators[0] == std::vector<std::uint8_t>{1, 0, 1});
    CHECK(k57.generators[1] == std::vector<std::uint8_t>{1, 1, 1});
    const auto c = CodeSpec::from_octal({015, 017});
    CHECK(c.memory == 3);
    CHECK(c.generators[0] == std::vector<std::uint8_t>{1, 1, 0, 1});
}

TEST_CASE("code validation") {
    CodeSpec c = k57;
    c.generators[0][0] = 0;
    c.generators[1][0] = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = k57;
    c.generators[1].pop_back();
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("impulse response of (5,7) is 11 01 11") {
    const BitStream u{1};
    CHECK(encode(u, k57, true) == BitStream{1, 1, 0, 1, 1, 1});
    CHECK(encode(u, k57, false) == BitStream{1, 1});
}

TEST_CASE("encoder matches the polynomial products on random input") {
    std::mt19937_64 g(11);
    for (int t = 0; t < 50; ++t) {
        const auto u = random_bits(1 + g() % 40, g);
        CHECK(encode(u, k57, false) == encode57_by_hand(u));
    }
}

TEST_CASE("encoder is linear over GF(2)") {
    std::mt19937_64 g(12);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + g() % 64;
        const auto a = random_bits(n, g), b = random_bits(n, g);
        BitStream s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = a[i] ^ b[i];
        const auto ea = encode(a, k57, true), eb = encode(b, k57, true), es = encode(s, k57, true);
        for (std::size_t i = 0; i < es.size(); ++i) CHECK(es[i] == (ea[i] ^ eb[i]));
    }
}

TEST_CASE("termination appends memory zero steps") {
    const BitStream u{1, 0, 1, 1};
    CHECK(encode(u, k57, true).size() == 2 * (4 + 2));
    CHECK_THROWS_AS(encode(BitStream{}, k57, true), std::invalid_argument);
}

TEST_CASE("puncturing keeps 3 of 4 bits per period and records origins") {
    CHECK(kP.period() == 2);
    CHECK(kP.kept_per_period() == 3);
    const BitStream coded{1, 0, 1, 1, 0, 0, 1, 0};
    const auto p = puncture(coded, kP);
    CHECK(p.bits == BitStream{1, 0, 1, 0, 0, 0});
    REQUIRE(p.trace.size() == 6);
    CHECK(p.trace[0].generator == 0);
    CHECK(p.trace[1].generator == 1);
    CHECK(p.trace[2].generator == 1);
    CHECK(p.trace[2].step == 1);
    CHECK(p.trace[5].step == 3);
    CHECK(kP.kept_in(4) == 6);
    CHECK(kP.kept_in(3) == 5);
}

TEST_CASE("puncturing rejects degenerate patterns") {
    CHECK_THROWS_AS(PuncturingScheme::from_rows({"00", "00"}), std::invalid_argument);
    CHECK_THROWS_AS(PuncturingScheme::from_rows({"10", "1"}), std::invalid_argument);
    CHECK_THROWS_AS(PuncturingScheme::from_rows({"1x", "11"}), std::invalid_argument);
    CHECK_NOTHROW(PuncturingScheme::from_rows({"10", "01"}));
}

TEST_CASE("transmitted bits follow the rate accounting") {
    std::mt19937_64 g(13);
    for (int n : {2, 8, 20, 64}) {
        const auto u = random_bits(static_cast<std::size_t>(n), g);
        const auto coded = encode(u, k57, false);
        const auto p = puncture(coded, kP);
        CHECK(p.bits.size() * 2 * kP.period() == coded.size() * kP.kept_per_period());
    }
}

TEST_CASE("4-ASK labelings") {
    const Labeling nat{4, LabelKind::natural}, gray{4, LabelKind::gray};
    CHECK(nat.bits_per_symbol() == 2);
    CHECK(nat.alphabet() == std::vector<double>{-3, -1, 1, 3});
    CHECK(nat.average_energy() == doctest::Approx(5.0));
    // natural: 2(2 msb + lsb) - 3
    for (unsigned b = 0; b < 4; ++b) CHECK(nat.amplitude_of_bits(b) == 2.0 * (2 * (b >> 1) + (b & 1)) - 3.0);
    CHECK(gray.amplitude_of_bits(0b00) == -3);
    CHECK(gray.amplitude_of_bits(0b01) == -1);
    CHECK(gray.amplitude_of_bits(0b11) == 1);
    CHECK(gray.amplitude_of_bits(0b10) == 3);
    // neighbours differ in one bit under gray
    for (int d = 0; d + 1 < 4; ++d) {
        const unsigned x = gray.bits_of_index(d) ^ gray.bits_of_index(d + 1);
        CHECK((x & (x - 1)) == 0);
    }
    for (int d = 0; d < 4; ++d) CHECK(gray.index_of_bits(gray.bits_of_index(d)) == d);
    double mean = 0, energy = 0;
    for (double a : gray.alphabet()) mean += a, energy += a * a;
    CHECK(mean == 0.0);
    CHECK(energy / 4 == doctest::Approx(gray.average_energy()));
    CHECK_THROWS_AS((Labeling{3, LabelKind::natural}.validate()), std::invalid_argument);
    CHECK(parse_label_kind("gray") == LabelKind::gray);
    CHECK_THROWS(parse_label_kind("binary"));
}

TEST_CASE("mapping packs bits MSB first") {
    const Labeling nat{4, LabelKind::natural};
    CHECK(map_symbols(BitStream{0, 0, 1, 1, 1, 0}, nat) == SymbolStream{-3, 3, 1});
    CHECK_THROWS_AS(map_symbols(BitStream{0, 1, 1}, nat), std::invalid_argument);
}

TEST_CASE("depuncturing inserts exact zeros at dropped positions") {
    const std::vector<double> llr{1.5, -2, 3, 4, -5, 6};
    const auto d = depuncture_llrs(llr, kP);
    CHECK(d == std::vector<double>{1.5, -2, 0, 3, 4, -5, 0, 6});
    const std::vector<double> five{1, 2, 3, 4, 5};
    const auto odd = depuncture_llrs(five, kP);
    REQUIRE(odd.size() == 6);
    CHECK(odd[5] == 5.0);
    CHECK(odd[2] == 0.0);
    CHECK_THROWS_AS(depuncture_llrs(llr, kP, 5), std::invalid_argument);
}

TEST_CASE("depuncturing inverts puncturing on kept positions") {
    std::mt19937_64 g(14);
    const auto coded = encode(random_bits(24, g), k57, false);
    const auto p = puncture(coded, kP);
    std::vector<double> soft(p.bits.begin(), p.bits.end());
    for (auto& v : soft) v = v ? -1.0 : 1.0;
    const auto d = depuncture_llrs(soft, kP, 24);
    for (std::size_t i = 0; i < coded.size(); ++i) {
        const bool kept = kP.keep(static_cast<int>(i % 2), static_cast<long long>(i / 2));
        if (kept)
            CHECK(d[i] == (coded[i] ? -1.0 : 1.0));
        else
            CHECK(d[i] == 0.0);
    }
}

TEST_CASE("frame layout of the reference configuration") {
    const Labeling gray{4, LabelKind::gray};
    CHECK(symbol_cycle_steps(kP, 2) == 4);
    CHECK(symbol_cycle_steps(PuncturingScheme::all_keep(2), 2) == 1);
    const auto f8 = make_frame_layout(k57, kP, gray, 8);
    CHECK(f8.tail_bits == 4);
    CHECK(f8.steps() == 12);
    CHECK(f8.symbols() == 9);
    const auto f256 = make_frame_layout(k57, kP, gray, 256);
    CHECK(f256.symbols() * 4 == f256.steps() * 3);
    const auto f10 = make_frame_layout(k57, kP, gray, 10);
    CHECK(f10.tail_bits >= 2);
    CHECK(f10.steps() % 4 == 0);
    CHECK(with_tail(BitStream{1, 1}, make_frame_layout(k57, PuncturingScheme::all_keep(2), gray, 2)) ==
          BitStream{1, 1, 0, 0});
}

TEST_CASE("modulate_frame is encode, puncture, map") {
    std::mt19937_64 g(15);
    const Labeling gray{4, LabelKind::gray};
    const auto layout = make_frame_layout(k57, kP, gray, 16);
    const auto u = random_bits(16, g);
    const auto full = with_tail(u, layout);
    const auto expect = map_symbols(puncture(encode(full, k57, false), kP).bits, gray);
    CHECK(modulate_frame(u, k57, kP, gray, layout) == expect);
    CHECK(expect.size() == static_cast<std::size_t>(layout.symbols()));
}
