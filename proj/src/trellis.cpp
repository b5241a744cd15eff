#include "pmd/trellis.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace pmd {
namespace {

long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::size_t checked_pow2(int bits, std::size_t cap, const std::string& what, int phase) {
    if (bits < 0 || bits > 40 || (std::size_t{1} << bits) > cap)
        throw std::runtime_error(what + ": phase " + std::to_string(phase) + " needs 2^" + std::to_string(bits) +
                                 " window states, above the state cap of " + std::to_string(cap));
    return std::size_t{1} << bits;
}

/// Evaluates symbol `symbol` (cycle-relative, may be negative) from an info
/// window whose least significant bit is info index `newest`.
class SymbolEvaluator {
public:
    SymbolEvaluator(const PhasePlan& plan, const CodeSpec& code, const Labeling& label)
        : plan_(plan), code_(code), label_(label) {}

    int index(long long symbol, std::uint64_t window, int width, long long newest) const {
        const long long cycle = floor_div(symbol, plan_.symbols_per_cycle);
        const auto& phase = plan_.phases[static_cast<std::size_t>(symbol - cycle * plan_.symbols_per_cycle)];
        unsigned bits = 0;
        for (const auto& src : phase.sources) {
            const long long step = src.step + cycle * plan_.cycle_steps;
            const auto& g = code_.generators[static_cast<std::size_t>(src.generator)];
            // integer sum of the tapped inputs, reduced with v - 2*floor(v/2)
            int v = 0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                const long long age = newest - (step - static_cast<long long>(k));
                assert(age >= 0 && age < width);
                (void)width;
                v += g[k] * static_cast<int>((window >> age) & 1U);
            }
            const int bit = v - 2 * (v / 2);
            bits = (bits << 1) | static_cast<unsigned>(bit);
        }
        return label_.index_of_bits(bits);
    }

private:
    const PhasePlan& plan_;
    const CodeSpec& code_;
    const Labeling& label_;
};

std::vector<double> startup_offsets(const ChannelTaps& taps, const Labeling& label) {
    const double a0 = label.amplitude_of_bits(0);
    const int L = taps.memory();
    std::vector<double> out(static_cast<std::size_t>(L), 0.0);
    for (int s = 0; s < L; ++s)
        for (int j = s + 1; j <= L; ++j) out[static_cast<std::size_t>(s)] += taps.taps[static_cast<std::size_t>(j)] * a0;
    return out;
}

void check_inputs(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label) {
    code.validate();
    label.validate();
    if (scheme.rows() != code.n_out) throw std::invalid_argument("trellis: puncturing rows do not match n_out");
}

}  // namespace

long long PhasePlan::window_lo(long long symbol) const {
    const long long cycle = floor_div(symbol, symbols_per_cycle);
    return phases[static_cast<std::size_t>(symbol - cycle * symbols_per_cycle)].window_lo + cycle * cycle_steps;
}

long long PhasePlan::window_hi(long long symbol) const {
    const long long cycle = floor_div(symbol, symbols_per_cycle);
    return phases[static_cast<std::size_t>(symbol - cycle * symbols_per_cycle)].window_hi + cycle * cycle_steps;
}

PhasePlan compute_phase_plan(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label) {
    check_inputs(code, scheme, label);
    PhasePlan plan;
    plan.bits_per_symbol = label.bits_per_symbol();
    plan.memory = code.memory;
    plan.cycle_steps = symbol_cycle_steps(scheme, plan.bits_per_symbol);

    std::vector<BitSource> kept;
    for (int t = 0; t < plan.cycle_steps; ++t)
        for (int g = 0; g < code.n_out; ++g)
            if (scheme.keep(g, t)) kept.push_back({g, t});
    const auto nb = static_cast<std::size_t>(plan.bits_per_symbol);
    plan.symbols_per_cycle = static_cast<int>(kept.size() / nb);
    if (plan.symbols_per_cycle == 0) throw std::invalid_argument("phase plan: degenerate puncturing scheme");

    for (int p = 0; p < plan.symbols_per_cycle; ++p) {
        PhaseInfo phase;
        phase.sources.assign(kept.begin() + static_cast<long>(p * nb), kept.begin() + static_cast<long>((p + 1) * nb));
        int lo = phase.sources.front().step, hi = lo;
        for (const auto& s : phase.sources) {
            lo = std::min(lo, s.step);
            hi = std::max(hi, s.step);
        }
        phase.window_lo = lo - code.memory;
        phase.window_hi = hi;
        plan.phases.push_back(std::move(phase));
    }

    const long long syms = plan.symbols_per_cycle;
    // Info bits introduced before symbol s, and encoder steps fully sent before it.
    auto introduced = [&](long long s) { return plan.window_hi(s - 1) + 1; };
    auto synced = [&](long long s) {
        const long long cycle = floor_div(s, syms);
        const auto p = static_cast<std::size_t>(s - cycle * syms);
        return cycle * plan.cycle_steps + kept[p * nb].step;
    };
    auto lead = [&](long long s) { return std::max(0LL, introduced(s) - synced(s)); };

    int total_new = 0, total_decided = 0;
    for (int p = 0; p < plan.symbols_per_cycle; ++p) {
        auto& phase = plan.phases[static_cast<std::size_t>(p)];
        phase.first_new_bit = static_cast<int>(introduced(p));
        phase.new_bits = static_cast<int>(introduced(p + 1) - introduced(p));
        phase.lead_before = static_cast<int>(lead(p));
        phase.lead_after = static_cast<int>(lead(p + 1));
        phase.decided_bits = phase.new_bits - (phase.lead_after - phase.lead_before);
        phase.split = phase.lead_after > phase.lead_before;
        phase.merge = phase.lead_after < phase.lead_before;
        if (phase.decided_bits < 0 || phase.new_bits > 16)
            throw std::invalid_argument("phase plan: unsupported puncturing scheme at phase " + std::to_string(p));
        total_new += phase.new_bits;
        total_decided += phase.decided_bits;
    }
    if (total_new != plan.cycle_steps || total_decided != plan.cycle_steps)
        throw std::logic_error("phase plan: bit accounting does not close over one cycle");
    return plan;
}

TimeVariantTrellis::TimeVariantTrellis(PhasePlan plan, std::vector<TrellisSection> sections,
                                       std::vector<int> state_bits, std::vector<double> startup_offsets,
                                       StateLayout layout)
    : plan_(std::move(plan)),
      sections_(std::move(sections)),
      state_bits_(std::move(state_bits)),
      startup_(std::move(startup_offsets)),
      layout_(layout) {}

std::size_t TimeVariantTrellis::max_states() const {
    std::size_t m = 0;
    for (const auto& s : sections_) m = std::max(m, s.from_states);
    return m;
}

std::size_t TimeVariantTrellis::unsplit_states() const {
    std::size_t m = 0;
    for (std::size_t p = 0; p < sections_.size(); ++p)
        if (plan_.phases[p].lead_before == 0) m = std::max(m, sections_[p].from_states);
    return m;
}

TimeVariantTrellis build_matched_trellis(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label,
                                         const ChannelTaps& taps, const TrellisOptions& options) {
    PhasePlan plan = compute_phase_plan(code, scheme, label);
    const int L = taps.memory();
    const int syms = plan.symbols_per_cycle;

    int base = 0;
    for (int p = 0; p < syms; ++p) {
        const auto& phase = plan.phases[static_cast<std::size_t>(p)];
        const long long needed = std::max(0LL, phase.first_new_bit - plan.window_lo(p - L));
        base = std::max(base, static_cast<int>(needed) - phase.lead_before);
    }
    std::vector<int> bits(static_cast<std::size_t>(syms) + 1);
    for (int p = 0; p < syms; ++p) bits[static_cast<std::size_t>(p)] = base + plan.phases[static_cast<std::size_t>(p)].lead_before;
    bits[static_cast<std::size_t>(syms)] = bits[0];

    const SymbolEvaluator eval(plan, code, label);
    std::vector<TrellisSection> sections;
    for (int p = 0; p < syms; ++p) {
        const auto& phase = plan.phases[static_cast<std::size_t>(p)];
        TrellisSection sec;
        sec.phase = p;
        sec.from_states = checked_pow2(bits[static_cast<std::size_t>(p)], options.state_cap, "matched trellis", p);
        sec.to_states = checked_pow2(bits[static_cast<std::size_t>(p) + 1], options.state_cap, "matched trellis", p);
        sec.new_bits = phase.new_bits;
        sec.decided_bits = bits[static_cast<std::size_t>(p)] + phase.new_bits - bits[static_cast<std::size_t>(p) + 1];
        sec.first_new_bit = phase.first_new_bit;
        sec.split = phase.split;
        sec.merge = phase.merge;
        const int width = bits[static_cast<std::size_t>(p)] + phase.new_bits;
        const long long newest = phase.first_new_bit + phase.new_bits - 1;
        const std::uint64_t to_mask = sec.to_states - 1;
        const std::size_t branches = sec.branches();
        sec.next.resize(sec.from_states * branches);
        sec.hypothesis.resize(sec.from_states * branches);
        for (std::size_t from = 0; from < sec.from_states; ++from) {
            for (std::size_t x = 0; x < branches; ++x) {
                const std::uint64_t window = (static_cast<std::uint64_t>(from) << phase.new_bits) | x;
                double y = 0.0;
                for (int j = 0; j <= L; ++j)
                    y += taps.taps[static_cast<std::size_t>(j)] *
                         label.amplitude_of_index(eval.index(p - j, window, width, newest));
                sec.hypothesis[from * branches + x] = y;
                sec.next[from * branches + x] = static_cast<std::uint32_t>(window & to_mask);
            }
        }
        sections.push_back(std::move(sec));
    }
    bits.pop_back();
    return TimeVariantTrellis(std::move(plan), std::move(sections), std::move(bits), startup_offsets(taps, label),
                              StateLayout::info_window);
}

ProductTrellis build_product_trellis(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label,
                                     const ChannelTaps& taps, const TrellisOptions& options) {
    PhasePlan plan = compute_phase_plan(code, scheme, label);
    const int L = taps.memory();
    const int syms = plan.symbols_per_cycle;
    const auto m = static_cast<std::size_t>(label.m_ary);
    const std::size_t zc = taps.channel_states(label.m_ary);

    int base = 0;
    for (int p = 0; p < syms; ++p) {
        const auto& phase = plan.phases[static_cast<std::size_t>(p)];
        const long long needed = std::max(0LL, phase.first_new_bit - plan.window_lo(p));
        base = std::max(base, static_cast<int>(needed) - phase.lead_before);
    }
    std::vector<int> enc(static_cast<std::size_t>(syms) + 1);
    for (int p = 0; p < syms; ++p) enc[static_cast<std::size_t>(p)] = base + plan.phases[static_cast<std::size_t>(p)].lead_before;
    enc[static_cast<std::size_t>(syms)] = enc[0];

    auto states_for = [&](int enc_bits, int p) {
        const std::size_t e = checked_pow2(enc_bits, options.state_cap, "product trellis", p);
        if (e * zc > options.state_cap || e * zc / zc != e)
            throw std::runtime_error("product trellis: phase " + std::to_string(p) + " exceeds the state cap of " +
                                     std::to_string(options.state_cap));
        return e * zc;
    };

    const SymbolEvaluator eval(plan, code, label);
    std::vector<TrellisSection> sections;
    for (int p = 0; p < syms; ++p) {
        const auto& phase = plan.phases[static_cast<std::size_t>(p)];
        const int e_from = enc[static_cast<std::size_t>(p)];
        const int e_to = enc[static_cast<std::size_t>(p) + 1];
        TrellisSection sec;
        sec.phase = p;
        sec.from_states = states_for(e_from, p);
        sec.to_states = states_for(e_to, p);
        sec.new_bits = phase.new_bits;
        sec.decided_bits = e_from + phase.new_bits - e_to;
        sec.first_new_bit = phase.first_new_bit;
        sec.split = phase.split;
        sec.merge = phase.merge;
        const int width = e_from + phase.new_bits;
        const long long newest = phase.first_new_bit + phase.new_bits - 1;
        const std::uint64_t enc_mask = (std::uint64_t{1} << e_to) - 1;
        const std::size_t branches = sec.branches();
        sec.next.resize(sec.from_states * branches);
        sec.hypothesis.resize(sec.from_states * branches);
        for (std::size_t from = 0; from < sec.from_states; ++from) {
            const std::uint64_t enc_state = from / zc;
            const std::size_t history = from % zc;
            double isi = 0.0;
            std::size_t digits = history;
            for (int j = 1; j <= L; ++j) {
                isi += taps.taps[static_cast<std::size_t>(j)] * label.amplitude_of_index(static_cast<int>(digits % m));
                digits /= m;
            }
            for (std::size_t x = 0; x < branches; ++x) {
                const std::uint64_t window = (enc_state << phase.new_bits) | x;
                const int d = eval.index(p, window, width, newest);
                sec.hypothesis[from * branches + x] = taps.taps[0] * label.amplitude_of_index(d) + isi;
                const std::size_t next_history = zc == 1 ? 0 : (history * m + static_cast<std::size_t>(d)) % zc;
                sec.next[from * branches + x] = static_cast<std::uint32_t>((window & enc_mask) * zc + next_history);
            }
        }
        sections.push_back(std::move(sec));
    }
    enc.pop_back();
    ProductTrellis out{TimeVariantTrellis(std::move(plan), std::move(sections), {}, startup_offsets(taps, label),
                                          StateLayout::encoder_and_symbols),
                       std::move(enc), zc};
    return out;
}

std::vector<Hypothesis> enumerate_hypotheses(const TimeVariantTrellis& trellis, std::size_t state, std::size_t phase) {
    if (phase >= trellis.period()) throw std::out_of_range("enumerate_hypotheses: phase out of range");
    const auto& sec = trellis.section(phase);
    if (state >= sec.from_states) throw std::out_of_range("enumerate_hypotheses: state out of range");
    std::vector<Hypothesis> out;
    for (unsigned x = 0; x < sec.branches(); ++x) out.push_back({x, sec.yhat(state, x), sec.next_state(state, x)});
    std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
        return a.input != b.input ? a.input < b.input : a.next < b.next;
    });
    return out;
}

std::vector<double> trace_path(const TimeVariantTrellis& trellis, std::span<const std::uint8_t> bits,
                               std::size_t symbols) {
    std::vector<double> out;
    out.reserve(symbols);
    std::size_t state = 0;
    const std::size_t period = trellis.period();
    for (std::size_t s = 0; s < symbols; ++s) {
        const auto& sec = trellis.section(s % period);
        const long long first = static_cast<long long>(s / period) * trellis.plan().cycle_steps + sec.first_new_bit;
        unsigned x = 0;
        for (int k = 0; k < sec.new_bits; ++k) {
            const long long idx = first + k;
            const unsigned bit = (idx >= 0 && idx < static_cast<long long>(bits.size())) ? bits[static_cast<std::size_t>(idx)] & 1U : 0U;
            x = (x << 1) | bit;
        }
        out.push_back(trellis.frame_yhat(s, state, x));
        state = sec.next_state(state, x);
    }
    return out;
}

std::string dump_section(const TimeVariantTrellis& trellis, std::size_t phase) {
    const auto& sec = trellis.section(phase);
    std::ostringstream os;
    char buf[64];
    for (std::size_t from = 0; from < sec.from_states; ++from)
        for (unsigned x = 0; x < sec.branches(); ++x) {
            std::snprintf(buf, sizeof buf, "%.12g", sec.yhat(from, x));
            os << phase << ' ' << from << ' ' << x << ' ' << buf << ' ' << sec.next_state(from, x) << ' '
               << sec.decided_bits << '\n';
        }
    return os.str();
}

}  // namespace pmd
