// Discrete-time ISI channel and calibrated AWGN.
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pmd/coding.hpp"

namespace pmd {

/// Real channel impulse response h[0..L] with unit energy.
struct ChannelTaps {
    std::vector<double> taps;
    double norm = 1.0;  // alpha: the factor the raw taps were divided by

    int memory() const { return static_cast<int>(taps.size()) - 1; }
    /// Z_cha for an M-ary alphabet.
    std::size_t channel_states(int m_ary) const;
};

/// Minimum-phase ramp h[k] = (L-k+1)/((L+1) alpha), normalised to unit energy.
ChannelTaps reference_taps(int memory);

/// Arbitrary taps; rescaled to unit energy. `renormalized` reports whether
/// the input energy differed from one by more than 1e-12.
ChannelTaps custom_taps(std::vector<double> taps, bool* renormalized = nullptr);

/// r[k] = sum_i h[i] m[k-i] with zero channel memory before the first symbol.
/// With `flush`, L extra outputs drain the channel.
SymbolStream filter(std::span<const double> symbols, const ChannelTaps& taps, bool flush = false);

struct NoiseSpec {
    double ebn0_db = 0.0;
    double rate = 1.0;           // info bits per transmitted symbol
    double symbol_energy = 1.0;  // average Es of the alphabet
    bool noiseless = false;

    double n0() const;
    /// Per real sample: N0 / 2. Zero when noiseless.
    double variance() const;
};

/// Counter-based 64-bit generator (splitmix64 finaliser over key + counter).
/// Satisfies UniformRandomBitGenerator; copies are independent replicas.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) : key_(key) {}

    /// Key for a named substream; identical words give identical streams.
    static std::uint64_t derive(std::uint64_t seed, std::span<const std::uint64_t> words);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

SymbolStream add_awgn(std::span<const double> signal, const NoiseSpec& noise, CounterRng& rng);

}  // namespace pmd
