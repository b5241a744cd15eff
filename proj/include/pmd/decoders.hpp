// Sequence estimators over the super-trellis and separated baselines.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pmd/channel.hpp"
#include "pmd/coding.hpp"
#include "pmd/trellis.hpp"

namespace pmd {

/// Log-likelihood ratio, positive when bit 0 is more likely. Erasure is 0.
using SoftValue = double;

/// Per-state accumulated metric and the most recent decided info bits
/// (newest least significant) of each survivor.
struct SurvivorMemory {
    std::vector<double> metric;
    std::vector<std::uint64_t> recent_bits;
};

/// Decoded info bits and the winning path metric.
struct DecodeResult {
    BitStream info;
    double metric = 0.0;
};

/// Minimum squared-Euclidean path through a time-variant trellis. The frame
/// starts in state 0 at phase 0; tail inputs are forced to zero and the best
/// end state is taken. Ties keep the lower from-state, then the lower input.
DecodeResult viterbi_decode(const TimeVariantTrellis& trellis, std::span<const double> received,
                            const FrameLayout& layout);

BitStream viterbi_time_variant(const TimeVariantTrellis& trellis, std::span<const double> received,
                               const FrameLayout& layout);

/// Truncation partition of matched-trellis window states: a class keeps the
/// newest log2(S) + lead bits of the window.
class RssePartition {
public:
    RssePartition(const TimeVariantTrellis& trellis, std::size_t reduced_states);

    std::size_t reduced_states() const { return reduced_; }
    int class_bits(std::size_t phase) const { return class_bits_.at(phase); }
    std::size_t classes(std::size_t phase) const { return std::size_t{1} << class_bits_.at(phase); }
    std::uint32_t class_of(std::size_t phase, std::uint64_t window_state) const {
        return static_cast<std::uint32_t>(window_state & (classes(phase) - 1));
    }

private:
    std::size_t reduced_;
    std::vector<int> class_bits_;
};

/// Viterbi over partition classes; window bits outside the class come from
/// each survivor's own decision history.
DecodeResult rsse_decode(const TimeVariantTrellis& trellis, const RssePartition& partition,
                         std::span<const double> received, const FrameLayout& layout);

struct EqualizerOutput {
    std::vector<double> posteriors;  // symbols x M, probability domain
    std::vector<SoftValue> llrs;     // symbols x bits_per_symbol, MSB first
};

/// Exact log-domain forward-backward over the M^L channel trellis with an
/// empty channel before the frame and an open end.
EqualizerOutput bcjr_equalize(std::span<const double> received, const ChannelTaps& taps, const Labeling& label,
                              double noise_variance);

/// Reduced-state channel Viterbi keeping `kept_states` = M^J states; taps
/// beyond J use per-survivor symbol decisions. Returns alphabet indices.
std::vector<int> dfse_equalize(std::span<const double> received, const ChannelTaps& taps, const Labeling& label,
                               std::size_t kept_states);

/// Standard Viterbi on the mother-code trellis with correlation metrics
/// over depunctured soft values (n_out per step); tail inputs forced to zero.
BitStream code_viterbi(std::span<const double> depunctured, const CodeSpec& code, const FrameLayout& layout);

enum class SeparatedMode { hard, soft };

struct SeparatedReceiver {
    CodeSpec code;
    PuncturingScheme scheme;
    Labeling label;
    ChannelTaps taps;
    SeparatedMode mode = SeparatedMode::soft;
    std::size_t eq_states = 0;  // DFSE kept states (hard mode)

    /// Per-kept-bit metrics after equalization (before depuncturing).
    std::vector<SoftValue> bit_metrics(std::span<const double> received, double noise_variance) const;
    BitStream decode(std::span<const double> received, double noise_variance, const FrameLayout& layout) const;
};

BitStream separated_receiver(std::span<const double> received, const SeparatedReceiver& receiver,
                             double noise_variance, const FrameLayout& layout);

/// Noiseless channel output of one frame: encode, puncture, map, filter.
SymbolStream replay(std::span<const std::uint8_t> info, const CodeSpec& code, const PuncturingScheme& scheme,
                    const Labeling& label, const ChannelTaps& taps, const FrameLayout& layout);

/// Exhaustive search over all 2^n info sequences (n <= 20); ties go to the
/// smallest sequence read as an unsigned integer with the first bit as MSB.
BitStream brute_force_mlse(std::span<const double> received, const CodeSpec& code, const PuncturingScheme& scheme,
                           const Labeling& label, const ChannelTaps& taps, const FrameLayout& layout);

}  // namespace pmd
