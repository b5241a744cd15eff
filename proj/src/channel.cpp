#include "pmd/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pmd {

std::size_t ChannelTaps::channel_states(int m_ary) const {
    std::size_t z = 1;
    for (int i = 0; i < memory(); ++i) z *= static_cast<std::size_t>(m_ary);
    return z;
}

ChannelTaps reference_taps(int memory) {
    if (memory < 0) throw std::invalid_argument("reference_taps: negative channel memory");
    const double len = memory + 1.0;
    double alpha2 = 0.0;
    for (int k = 0; k <= memory; ++k) {
        const double v = (memory - k + 1.0) / len;
        alpha2 += v * v;
    }
    ChannelTaps out;
    out.norm = std::sqrt(alpha2);
    for (int k = 0; k <= memory; ++k) out.taps.push_back((memory - k + 1.0) / (len * out.norm));
    return out;
}

ChannelTaps custom_taps(std::vector<double> taps, bool* renormalized) {
    if (taps.empty()) throw std::invalid_argument("custom_taps: empty tap vector");
    double energy = 0.0;
    for (double h : taps) energy += h * h;
    if (!(energy > 0.0) || !std::isfinite(energy)) throw std::invalid_argument("custom_taps: taps have no energy");
    ChannelTaps out;
    out.norm = std::sqrt(energy);
    for (double& h : taps) h /= out.norm;
    out.taps = std::move(taps);
    if (renormalized) *renormalized = std::abs(energy - 1.0) > 1e-12;
    return out;
}

SymbolStream filter(std::span<const double> symbols, const ChannelTaps& taps, bool flush) {
    const std::size_t extra = flush ? static_cast<std::size_t>(taps.memory()) : 0;
    SymbolStream out(symbols.size() + extra, 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < taps.taps.size() && i <= k; ++i)
            if (k - i < symbols.size()) acc += taps.taps[i] * symbols[k - i];
        out[k] = acc;
    }
    return out;
}

double NoiseSpec::n0() const {
    const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
    if (!(ebn0 > 0.0) || !std::isfinite(ebn0)) throw std::invalid_argument("noise: Eb/N0 must be a positive finite ratio");
    if (!(rate > 0.0) || !(symbol_energy > 0.0)) throw std::invalid_argument("noise: rate and symbol energy must be positive");
    return symbol_energy / (rate * ebn0);
}

double NoiseSpec::variance() const { return noiseless ? 0.0 : n0() / 2.0; }

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t CounterRng::derive(std::uint64_t seed, std::span<const std::uint64_t> words) {
    std::uint64_t key = mix64(seed);
    for (auto w : words) key = mix64(key ^ mix64(w + 0x632BE59BD9B4E019ULL));
    return key;
}

CounterRng::result_type CounterRng::operator()() {
    return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_);
}

SymbolStream add_awgn(std::span<const double> signal, const NoiseSpec& noise, CounterRng& rng) {
    SymbolStream out(signal.begin(), signal.end());
    if (noise.noiseless) return out;
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise.variance()));
    for (double& v : out) v += gauss(rng);
    return out;
}

}  // namespace pmd
