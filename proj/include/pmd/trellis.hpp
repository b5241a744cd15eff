// Time-variant super-trellis synthesis for (punctured) convolutional codes
// over ISI channels.
//
// Info bits are indexed per encoder step (one input line). A symbol cycle
// spans `cycle_steps` info bits and `symbols_per_cycle` transmitted symbols;
// all per-phase indices below are relative to the start of the cycle that
// contains the phase's symbol.
//
// Matched trellis states are windows of the most recent info bits, newest
// bit least significant. The window length at a boundary is U + lead, where
// lead counts info bits already introduced whose encoder steps have not been
// fully transmitted yet. Phases that raise the lead split the state space,
// phases that lower it merge and decide more than one bit.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmd/channel.hpp"
#include "pmd/coding.hpp"

namespace pmd {

/// One coded bit of a symbol: generator `generator` evaluated at encoder
/// step `step` (cycle-relative).
struct BitSource {
    int generator = 0;
    int step = 0;
};

/// Generator-offset descriptor and bookkeeping for one symbol phase.
struct PhaseInfo {
    std::vector<BitSource> sources;  // MSB first
    int window_lo = 0;               // oldest info bit the symbol depends on
    int window_hi = 0;               // newest info bit the symbol depends on
    int first_new_bit = 0;           // info bits introduced before this symbol
    int new_bits = 0;
    int decided_bits = 0;
    int lead_before = 0;
    int lead_after = 0;
    bool split = false;
    bool merge = false;
};

struct PhasePlan {
    int cycle_steps = 1;
    int symbols_per_cycle = 1;
    int bits_per_symbol = 1;
    int memory = 0;
    std::vector<PhaseInfo> phases;

    int period() const { return symbols_per_cycle; }
    /// Window bounds of an arbitrary (possibly negative) symbol index.
    long long window_lo(long long symbol) const;
    long long window_hi(long long symbol) const;
};

PhasePlan compute_phase_plan(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label);

/// Transitions of one phase. Transition (from, x) is stored at
/// from * branches() + x; x carries the new info bits, earliest bit most
/// significant.
struct TrellisSection {
    int phase = 0;
    std::size_t from_states = 0;
    std::size_t to_states = 0;
    int new_bits = 0;
    int decided_bits = 0;
    int first_new_bit = 0;
    bool split = false;
    bool merge = false;
    std::vector<std::uint32_t> next;
    std::vector<double> hypothesis;

    std::size_t branches() const { return std::size_t{1} << new_bits; }
    std::uint32_t next_state(std::size_t from, unsigned input) const { return next[from * branches() + input]; }
    double yhat(std::size_t from, unsigned input) const { return hypothesis[from * branches() + input]; }
};

enum class StateLayout { info_window, encoder_and_symbols };

class TimeVariantTrellis {
public:
    TimeVariantTrellis(PhasePlan plan, std::vector<TrellisSection> sections, std::vector<int> state_bits,
                       std::vector<double> startup_offsets, StateLayout layout);

    const PhasePlan& plan() const { return plan_; }
    std::size_t period() const { return sections_.size(); }
    const TrellisSection& section(std::size_t phase) const { return sections_.at(phase); }
    const std::vector<TrellisSection>& sections() const { return sections_; }
    /// States entering the given phase.
    std::size_t states(std::size_t phase) const { return sections_.at(phase).from_states; }
    std::size_t max_states() const;
    /// Largest state count over boundaries that are not inside a split.
    std::size_t unsplit_states() const;
    /// Info-window length entering each phase (info_window layout only).
    const std::vector<int>& state_bits() const { return state_bits_; }
    StateLayout layout() const { return layout_; }

    /// Correction subtracted from stored hypotheses for the first L symbols
    /// of a frame: the channel is empty before the frame, while the zero
    /// state stands for symbols mapped from all-zero bits.
    double startup_offset(std::size_t symbol) const {
        return symbol < startup_.size() ? startup_[symbol] : 0.0;
    }
    /// Hypothesis as seen at absolute frame symbol index `symbol`.
    double frame_yhat(std::size_t symbol, std::size_t from, unsigned input) const {
        return section(symbol % period()).yhat(from, input) - startup_offset(symbol);
    }

private:
    PhasePlan plan_;
    std::vector<TrellisSection> sections_;
    std::vector<int> state_bits_;
    std::vector<double> startup_;
    StateLayout layout_;
};

struct TrellisOptions {
    std::size_t state_cap = std::size_t{1} << 20;
};

TimeVariantTrellis build_matched_trellis(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label,
                                         const ChannelTaps& taps, const TrellisOptions& options = {});

/// Straightforward super-trellis: (encoder window, last L symbols).
struct ProductTrellis {
    TimeVariantTrellis trellis;
    std::vector<int> encoder_bits;  // encoder window length entering each phase
    std::size_t channel_states = 1;

    std::size_t states(std::size_t phase) const { return trellis.states(phase); }
    std::size_t max_states() const { return trellis.max_states(); }
};

ProductTrellis build_product_trellis(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label,
                                     const ChannelTaps& taps, const TrellisOptions& options = {});

struct Hypothesis {
    unsigned input = 0;
    double yhat = 0.0;
    std::uint32_t next = 0;
};

/// Outgoing transitions of `state` in `phase`, ordered by input then next state.
std::vector<Hypothesis> enumerate_hypotheses(const TimeVariantTrellis& trellis, std::size_t state, std::size_t phase);

/// Hypotheses along the path driven by `bits` (info plus tail, indexed by
/// encoder step) from the zero state, start-up corrected, for `symbols` symbols.
std::vector<double> trace_path(const TimeVariantTrellis& trellis, std::span<const std::uint8_t> bits,
                               std::size_t symbols);

/// Text dump of one section: "phase from input yhat to decided" per line,
/// yhat with 12 significant digits.
std::string dump_section(const TimeVariantTrellis& trellis, std::size_t phase);

}  // namespace pmd
