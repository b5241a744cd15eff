#include "pmd/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

struct Backpointer {
    std::uint32_t from = kNone;
    std::uint32_t input = 0;
};

void check_frame(const TimeVariantTrellis& trellis, std::span<const double> received, const FrameLayout& layout) {
    if (received.size() % trellis.period() != 0)
        throw std::invalid_argument("decoder: received length is not a multiple of the phase period");
    if (layout.cycle_steps != trellis.plan().cycle_steps ||
        layout.symbols_per_cycle != trellis.plan().symbols_per_cycle)
        throw std::invalid_argument("decoder: frame layout does not match the trellis cycle");
    if (static_cast<int>(received.size()) != layout.symbols())
        throw std::invalid_argument("decoder: received length does not match the frame layout");
}

/// Info index of the first new bit entering at absolute symbol `symbol`.
long long first_new_index(const TimeVariantTrellis& trellis, std::size_t symbol) {
    const std::size_t period = trellis.period();
    const auto& sec = trellis.section(symbol % period);
    return static_cast<long long>(symbol / period) * trellis.plan().cycle_steps + sec.first_new_bit;
}

/// Inputs with a set bit in this mask are outside the frame's info bits and
/// must be zero (tail, or bits before the frame).
unsigned forced_zero_mask(const TimeVariantTrellis& trellis, std::size_t symbol, int info_bits) {
    const auto& sec = trellis.section(symbol % trellis.period());
    const long long first = first_new_index(trellis, symbol);
    unsigned mask = 0;
    for (int k = 0; k < sec.new_bits; ++k) {
        const long long idx = first + k;
        if (idx < 0 || idx >= info_bits) mask |= 1U << (sec.new_bits - 1 - k);
    }
    return mask;
}

void store_bits(const TimeVariantTrellis& trellis, std::size_t symbol, unsigned input, BitStream& info) {
    const auto& sec = trellis.section(symbol % trellis.period());
    const long long first = first_new_index(trellis, symbol);
    for (int k = 0; k < sec.new_bits; ++k) {
        const long long idx = first + k;
        if (idx >= 0 && idx < static_cast<long long>(info.size()))
            info[static_cast<std::size_t>(idx)] = static_cast<std::uint8_t>((input >> (sec.new_bits - 1 - k)) & 1U);
    }
}

std::size_t argmin_first(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

int exact_log(std::size_t value, std::size_t base) {
    int e = 0;
    std::size_t v = 1;
    while (v < value) {
        v *= base;
        ++e;
    }
    return v == value ? e : -1;
}

}  // namespace

DecodeResult viterbi_decode(const TimeVariantTrellis& trellis, std::span<const double> received,
                            const FrameLayout& layout) {
    check_frame(trellis, received, layout);
    const std::size_t n = received.size();
    std::vector<double> metric(trellis.states(0), kInf);
    metric[0] = 0.0;
    std::vector<std::vector<Backpointer>> back(n);

    for (std::size_t s = 0; s < n; ++s) {
        const auto& sec = trellis.section(s % trellis.period());
        const unsigned mask = forced_zero_mask(trellis, s, layout.info_bits);
        const double r = received[s] + trellis.startup_offset(s);
        std::vector<double> next(sec.to_states, kInf);
        auto& bp = back[s];
        bp.assign(sec.to_states, {});
        const auto branches = static_cast<unsigned>(sec.branches());
        for (std::size_t from = 0; from < sec.from_states; ++from) {
            if (metric[from] == kInf) continue;
            for (unsigned x = 0; x < branches; ++x) {
                if (x & mask) continue;
                const std::uint32_t to = sec.next_state(from, x);
                const double e = r - sec.yhat(from, x);
                const double cand = metric[from] + e * e;
                if (cand < next[to]) {
                    next[to] = cand;
                    bp[to] = {static_cast<std::uint32_t>(from), x};
                }
            }
        }
        metric.swap(next);
    }

    DecodeResult out;
    out.info.assign(static_cast<std::size_t>(layout.info_bits), 0);
    std::size_t state = argmin_first(metric);
    out.metric = metric[state];
    for (std::size_t s = n; s-- > 0;) {
        const Backpointer bp = back[s][state];
        store_bits(trellis, s, bp.input, out.info);
        state = bp.from;
    }
    return out;
}

BitStream viterbi_time_variant(const TimeVariantTrellis& trellis, std::span<const double> received,
                               const FrameLayout& layout) {
    return viterbi_decode(trellis, received, layout).info;
}

RssePartition::RssePartition(const TimeVariantTrellis& trellis, std::size_t reduced_states) : reduced_(reduced_states) {
    if (trellis.layout() != StateLayout::info_window)
        throw std::invalid_argument("rsse: partition needs a matched (info window) trellis");
    if (reduced_states == 0 || (reduced_states & (reduced_states - 1)) != 0)
        throw std::invalid_argument("rsse: reduced state count must be a power of two");
    if (reduced_states > trellis.unsplit_states())
        throw std::invalid_argument("rsse: reduced state count exceeds the full state count");
    int bits = 0;
    while ((std::size_t{1} << bits) < reduced_states) ++bits;
    for (std::size_t p = 0; p < trellis.period(); ++p)
        class_bits_.push_back(
            std::min(trellis.state_bits()[p], bits + trellis.plan().phases[p].lead_before));
}

DecodeResult rsse_decode(const TimeVariantTrellis& trellis, const RssePartition& partition,
                         std::span<const double> received, const FrameLayout& layout) {
    check_frame(trellis, received, layout);
    if (trellis.layout() != StateLayout::info_window)
        throw std::invalid_argument("rsse: needs a matched (info window) trellis");
    const std::size_t n = received.size();
    const std::size_t period = trellis.period();

    SurvivorMemory mem{std::vector<double>(partition.classes(0), kInf), std::vector<std::uint64_t>(partition.classes(0), 0)};
    mem.metric[0] = 0.0;
    std::vector<std::vector<Backpointer>> back(n);

    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t p = s % period;
        const auto& sec = trellis.section(p);
        const std::size_t q = (p + 1) % period;
        const std::uint64_t state_mask = sec.from_states - 1;
        const unsigned mask = forced_zero_mask(trellis, s, layout.info_bits);
        const double r = received[s] + trellis.startup_offset(s);
        SurvivorMemory next{std::vector<double>(partition.classes(q), kInf),
                            std::vector<std::uint64_t>(partition.classes(q), 0)};
        auto& bp = back[s];
        bp.assign(partition.classes(q), {});
        const auto branches = static_cast<unsigned>(sec.branches());
        for (std::size_t c = 0; c < mem.metric.size(); ++c) {
            if (mem.metric[c] == kInf) continue;
            const std::uint64_t history = mem.recent_bits[c];
            const std::size_t full = static_cast<std::size_t>(history & state_mask);
            for (unsigned x = 0; x < branches; ++x) {
                if (x & mask) continue;
                const std::uint32_t to = partition.class_of(q, sec.next_state(full, x));
                const double e = r - sec.yhat(full, x);
                const double cand = mem.metric[c] + e * e;
                if (cand < next.metric[to]) {
                    next.metric[to] = cand;
                    next.recent_bits[to] = (history << sec.new_bits) | x;
                    bp[to] = {static_cast<std::uint32_t>(c), x};
                }
            }
        }
        mem = std::move(next);
    }

    DecodeResult out;
    out.info.assign(static_cast<std::size_t>(layout.info_bits), 0);
    std::size_t cls = argmin_first(mem.metric);
    out.metric = mem.metric[cls];
    for (std::size_t s = n; s-- > 0;) {
        const Backpointer bp = back[s][cls];
        store_bits(trellis, s, bp.input, out.info);
        cls = bp.from;
    }
    return out;
}

EqualizerOutput bcjr_equalize(std::span<const double> received, const ChannelTaps& taps, const Labeling& label,
                              double noise_variance) {
    label.validate();
    const auto m = static_cast<std::size_t>(label.m_ary);
    const int L = taps.memory();
    const std::size_t zc = taps.channel_states(label.m_ary);
    const std::size_t n = received.size();
    const double inv2var = 1.0 / (2.0 * std::max(noise_variance, 1e-12));
    const auto alphabet = label.alphabet();

    // yhat for state (digit 0 = previous symbol) and new symbol d at time s
    auto yhat = [&](std::size_t s, std::size_t state, std::size_t d) {
        double y = taps.taps[0] * alphabet[d];
        std::size_t digits = state;
        for (int j = 1; j <= L; ++j) {
            if (static_cast<std::size_t>(j) <= s) y += taps.taps[static_cast<std::size_t>(j)] * alphabet[digits % m];
            digits /= m;
        }
        return y;
    };
    auto next_state = [&](std::size_t state, std::size_t d) { return zc == 1 ? 0 : (state * m + d) % zc; };

    std::vector<double> alpha((n + 1) * zc, -kInf);
    alpha[0] = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double* a_next = &alpha[(s + 1) * zc];
        const double* a = &alpha[s * zc];
        for (std::size_t st = 0; st < zc; ++st) {
            if (a[st] == -kInf) continue;
            for (std::size_t d = 0; d < m; ++d) {
                const double e = received[s] - yhat(s, st, d);
                const std::size_t to = next_state(st, d);
                a_next[to] = log_add(a_next[to], a[st] - e * e * inv2var);
            }
        }
        const double peak = *std::max_element(a_next, a_next + zc);
        for (std::size_t st = 0; st < zc; ++st) a_next[st] -= peak;
    }

    std::vector<double> beta(zc, 0.0), beta_prev(zc);
    EqualizerOutput out;
    const auto nb = static_cast<std::size_t>(label.bits_per_symbol());
    out.posteriors.assign(n * m, 0.0);
    out.llrs.assign(n * nb, 0.0);
    std::vector<double> log_post(m);
    for (std::size_t s = n; s-- > 0;) {
        std::fill(log_post.begin(), log_post.end(), -kInf);
        std::fill(beta_prev.begin(), beta_prev.end(), -kInf);
        const double* a = &alpha[s * zc];
        for (std::size_t st = 0; st < zc; ++st) {
            for (std::size_t d = 0; d < m; ++d) {
                const double e = received[s] - yhat(s, st, d);
                const double g = -e * e * inv2var;
                const double b = beta[next_state(st, d)];
                beta_prev[st] = log_add(beta_prev[st], g + b);
                if (a[st] != -kInf) log_post[d] = log_add(log_post[d], a[st] + g + b);
            }
        }
        double total = -kInf;
        for (double lp : log_post) total = log_add(total, lp);
        for (std::size_t d = 0; d < m; ++d) out.posteriors[s * m + d] = std::exp(log_post[d] - total);
        for (std::size_t b = 0; b < nb; ++b) {
            double zero = -kInf, one = -kInf;
            for (std::size_t d = 0; d < m; ++d) {
                const unsigned bits = label.bits_of_index(static_cast<int>(d));
                if ((bits >> (nb - 1 - b)) & 1U)
                    one = log_add(one, log_post[d]);
                else
                    zero = log_add(zero, log_post[d]);
            }
            out.llrs[s * nb + b] = zero - one;
        }
        const double peak = *std::max_element(beta_prev.begin(), beta_prev.end());
        for (std::size_t st = 0; st < zc; ++st) beta[st] = beta_prev[st] - peak;
    }
    return out;
}

std::vector<int> dfse_equalize(std::span<const double> received, const ChannelTaps& taps, const Labeling& label,
                               std::size_t kept_states) {
    label.validate();
    const auto m = static_cast<std::size_t>(label.m_ary);
    const int L = taps.memory();
    const int J = exact_log(kept_states, m);
    if (J < 0 || J > L) throw std::invalid_argument("dfse: kept states must be M^J with J <= L");
    const int nb = label.bits_per_symbol();
    if (nb * L > 64) throw std::invalid_argument("dfse: channel memory too long for the survivor register");
    const std::uint64_t reg_mask = nb * L == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << (nb * L)) - 1;
    const std::uint64_t state_mask = (std::uint64_t{1} << (nb * J)) - 1;
    const auto alphabet = label.alphabet();
    const std::size_t n = received.size();

    std::vector<double> metric(kept_states, kInf);
    std::vector<std::uint64_t> reg(kept_states, 0);
    metric[0] = 0.0;
    std::vector<std::vector<Backpointer>> back(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> next(kept_states, kInf);
        std::vector<std::uint64_t> next_reg(kept_states, 0);
        auto& bp = back[s];
        bp.assign(kept_states, {});
        for (std::size_t st = 0; st < kept_states; ++st) {
            if (metric[st] == kInf) continue;
            double isi = 0.0;
            for (int j = 1; j <= L && static_cast<std::size_t>(j) <= s; ++j)
                isi += taps.taps[static_cast<std::size_t>(j)] * alphabet[(reg[st] >> (nb * (j - 1))) & (m - 1)];
            for (std::size_t d = 0; d < m; ++d) {
                const double e = received[s] - (taps.taps[0] * alphabet[d] + isi);
                const double cand = metric[st] + e * e;
                const std::uint64_t r = ((reg[st] << nb) | d) & reg_mask;
                const auto to = static_cast<std::size_t>(r & state_mask);
                if (cand < next[to]) {
                    next[to] = cand;
                    next_reg[to] = r;
                    bp[to] = {static_cast<std::uint32_t>(st), static_cast<std::uint32_t>(d)};
                }
            }
        }
        metric.swap(next);
        reg.swap(next_reg);
    }
    std::vector<int> symbols(n);
    std::size_t st = argmin_first(metric);
    for (std::size_t s = n; s-- > 0;) {
        symbols[s] = static_cast<int>(back[s][st].input);
        st = back[s][st].from;
    }
    return symbols;
}

BitStream code_viterbi(std::span<const double> depunctured, const CodeSpec& code, const FrameLayout& layout) {
    const auto nout = static_cast<std::size_t>(code.n_out);
    const auto steps = static_cast<std::size_t>(layout.steps());
    if (depunctured.size() != steps * nout) throw std::invalid_argument("code_viterbi: soft value count mismatch");
    const std::size_t states = code.states();
    const std::uint64_t state_mask = states - 1;

    // coded bits of every (state, input) pair
    std::vector<std::uint8_t> coded(states * 2 * nout);
    for (std::size_t st = 0; st < states; ++st)
        for (unsigned u = 0; u < 2; ++u) {
            const std::uint64_t w = (st << 1) | u;
            for (std::size_t i = 0; i < nout; ++i) {
                unsigned acc = 0;
                for (std::size_t j = 0; j < code.generators[i].size(); ++j) acc ^= code.generators[i][j] & ((w >> j) & 1U);
                coded[(st * 2 + u) * nout + i] = static_cast<std::uint8_t>(acc);
            }
        }

    std::vector<double> metric(states, kInf);
    metric[0] = 0.0;
    std::vector<std::vector<Backpointer>> back(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> next(states, kInf);
        auto& bp = back[t];
        bp.assign(states, {});
        const unsigned inputs = t < static_cast<std::size_t>(layout.info_bits) ? 2 : 1;
        for (std::size_t st = 0; st < states; ++st) {
            if (metric[st] == kInf) continue;
            for (unsigned u = 0; u < inputs; ++u) {
                double bm = 0.0;
                for (std::size_t i = 0; i < nout; ++i) {
                    const double llr = depunctured[t * nout + i];
                    bm -= coded[(st * 2 + u) * nout + i] ? -llr : llr;
                }
                const auto to = static_cast<std::size_t>(((st << 1) | u) & state_mask);
                const double cand = metric[st] + bm;
                if (cand < next[to]) {
                    next[to] = cand;
                    bp[to] = {static_cast<std::uint32_t>(st), u};
                }
            }
        }
        metric.swap(next);
    }
    BitStream info(static_cast<std::size_t>(layout.info_bits), 0);
    std::size_t st = metric[0] < kInf ? 0 : argmin_first(metric);
    for (std::size_t t = steps; t-- > 0;) {
        if (t < info.size()) info[t] = static_cast<std::uint8_t>(back[t][st].input);
        st = back[t][st].from;
    }
    return info;
}

std::vector<SoftValue> SeparatedReceiver::bit_metrics(std::span<const double> received, double noise_variance) const {
    if (mode == SeparatedMode::soft) return bcjr_equalize(received, taps, label, noise_variance).llrs;
    const auto symbols = dfse_equalize(received, taps, label, eq_states);
    const int nb = label.bits_per_symbol();
    std::vector<SoftValue> out;
    out.reserve(symbols.size() * static_cast<std::size_t>(nb));
    for (int d : symbols) {
        const unsigned bits = label.bits_of_index(d);
        for (int b = nb - 1; b >= 0; --b) out.push_back(((bits >> b) & 1U) ? -1.0 : 1.0);
    }
    return out;
}

BitStream SeparatedReceiver::decode(std::span<const double> received, double noise_variance,
                                    const FrameLayout& layout) const {
    const auto metrics = bit_metrics(received, noise_variance);
    const auto depunctured = depuncture_llrs(metrics, scheme, layout.steps());
    return code_viterbi(depunctured, code, layout);
}

BitStream separated_receiver(std::span<const double> received, const SeparatedReceiver& receiver,
                             double noise_variance, const FrameLayout& layout) {
    return receiver.decode(received, noise_variance, layout);
}

SymbolStream replay(std::span<const std::uint8_t> info, const CodeSpec& code, const PuncturingScheme& scheme,
                    const Labeling& label, const ChannelTaps& taps, const FrameLayout& layout) {
    return filter(modulate_frame(info, code, scheme, label, layout), taps);
}

BitStream brute_force_mlse(std::span<const double> received, const CodeSpec& code, const PuncturingScheme& scheme,
                           const Labeling& label, const ChannelTaps& taps, const FrameLayout& layout) {
    const int n = layout.info_bits;
    if (n > 20) throw std::invalid_argument("brute_force_mlse: at most 20 info bits");
    if (static_cast<int>(received.size()) != layout.symbols())
        throw std::invalid_argument("brute_force_mlse: received length does not match the frame layout");
    BitStream info(static_cast<std::size_t>(n)), best_info;
    double best = kInf;
    for (std::uint32_t v = 0; v < (1U << n); ++v) {
        for (int i = 0; i < n; ++i) info[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> (n - 1 - i)) & 1U);
        const auto y = replay(info, code, scheme, label, taps, layout);
        double metric = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double e = received[k] - y[k];
            metric += e * e;
        }
        if (metric < best) {
            best = metric;
            best_info = info;
        }
    }
    return best_info;
}

}  // namespace pmd
