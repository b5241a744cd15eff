// Convolutional encoding, periodic puncturing and M-ASK mapping.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pmd {

using BitStream = std::vector<std::uint8_t>;
using SymbolStream = std::vector<double>;

/// Feed-forward binary convolutional code with a single input line.
///
/// `generators[i][j]` is the tap of output i on the input delayed by j steps,
/// so `generators[i][0]` multiplies the current input bit.
struct CodeSpec {
    int k_in = 1;
    int n_out = 0;
    int memory = 0;
    std::vector<std::vector<std::uint8_t>> generators;

    /// Octal generators with the most significant bit on the current input
    /// (5 -> 101, 7 -> 111). Memory is taken from the longest generator.
    static CodeSpec from_octal(const std::vector<unsigned>& octal);

    std::size_t states() const { return std::size_t{1} << memory; }
    void validate() const;
};

/// Periodic keep(1)/drop(0) pattern, one row per encoder output.
class PuncturingScheme {
public:
    PuncturingScheme() = default;
    explicit PuncturingScheme(std::vector<std::vector<std::uint8_t>> pattern);

    /// Rows of '0'/'1' characters, e.g. {"10", "11"}.
    static PuncturingScheme from_rows(const std::vector<std::string>& rows);
    static PuncturingScheme all_keep(int n_out);

    int rows() const { return static_cast<int>(pattern_.size()); }
    int period() const { return pattern_.empty() ? 0 : static_cast<int>(pattern_[0].size()); }
    int kept_per_period() const { return kept_per_period_; }
    bool keep(int generator, long long step) const;
    /// Kept bits produced by the first `steps` encoder steps.
    long long kept_in(long long steps) const;
    const std::vector<std::vector<std::uint8_t>>& pattern() const { return pattern_; }

private:
    std::vector<std::vector<std::uint8_t>> pattern_;
    int kept_per_period_ = 0;
};

enum class LabelKind { natural, gray };

/// Bits-to-amplitude labeling for the alphabet {-(M-1), ..., M-1}.
struct Labeling {
    int m_ary = 4;
    LabelKind kind = LabelKind::natural;

    int bits_per_symbol() const;
    /// Alphabet index d of a bit group given as an integer (first bit = MSB).
    int index_of_bits(unsigned bits) const;
    unsigned bits_of_index(int index) const;
    double amplitude_of_index(int index) const { return 2.0 * index - (m_ary - 1); }
    double amplitude_of_bits(unsigned bits) const { return amplitude_of_index(index_of_bits(bits)); }
    std::vector<double> alphabet() const;
    double average_energy() const;
    void validate() const;
};

LabelKind parse_label_kind(const std::string& text);
std::string to_string(LabelKind kind);

/// Origin of one transmitted coded bit.
struct BitOrigin {
    int generator = 0;
    long long step = 0;
};

struct PuncturedBits {
    BitStream bits;
    std::vector<BitOrigin> trace;
};

BitStream encode(std::span<const std::uint8_t> info, const CodeSpec& code, bool terminate);
PuncturedBits puncture(std::span<const std::uint8_t> coded, const PuncturingScheme& scheme);
SymbolStream map_symbols(std::span<const std::uint8_t> bits, const Labeling& label);

/// Re-inserts erasures (exact 0) at dropped positions. The step count is the
/// smallest one whose kept-bit count equals `llrs.size()`.
std::vector<double> depuncture_llrs(std::span<const double> llrs, const PuncturingScheme& scheme);
std::vector<double> depuncture_llrs(std::span<const double> llrs, const PuncturingScheme& scheme,
                                    long long steps);

/// Encoder steps after which the kept-bit stream packs into whole symbols
/// and the puncturing pattern returns to its first column.
int symbol_cycle_steps(const PuncturingScheme& scheme, int bits_per_symbol);

/// Info bits of a frame plus the zero tail that flushes the encoder and
/// realigns the frame to a symbol-cycle boundary.
struct FrameLayout {
    int info_bits = 0;
    int tail_bits = 0;
    int cycle_steps = 1;
    int symbols_per_cycle = 1;

    int steps() const { return info_bits + tail_bits; }
    int symbols() const { return steps() / cycle_steps * symbols_per_cycle; }
};

FrameLayout make_frame_layout(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label,
                              int info_bits);

/// Info bits followed by the frame's zero tail.
BitStream with_tail(std::span<const std::uint8_t> info, const FrameLayout& layout);

/// encode -> puncture -> map for one frame (tail appended internally).
SymbolStream modulate_frame(std::span<const std::uint8_t> info, const CodeSpec& code,
                            const PuncturingScheme& scheme, const Labeling& label, const FrameLayout& layout);

}  // namespace pmd
