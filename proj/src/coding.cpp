#include "pmd/coding.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pmd {

CodeSpec CodeSpec::from_octal(const std::vector<unsigned>& octal) {
    if (octal.empty()) throw std::invalid_argument("code: no generators");
    unsigned widest = 0;
    for (unsigned g : octal) widest = std::max(widest, g);
    if (widest == 0) throw std::invalid_argument("code: all generators are zero");
    int length = 0;
    while ((widest >> length) != 0) ++length;

    CodeSpec code;
    code.k_in = 1;
    code.n_out = static_cast<int>(octal.size());
    code.memory = length - 1;
    for (unsigned g : octal) {
        std::vector<std::uint8_t> taps(static_cast<std::size_t>(length));
        for (int j = 0; j < length; ++j) taps[static_cast<std::size_t>(j)] = (g >> (code.memory - j)) & 1U;
        code.generators.push_back(std::move(taps));
    }
    code.validate();
    return code;
}

void CodeSpec::validate() const {
    if (k_in != 1) throw std::invalid_argument("code: only one input line is supported");
    if (n_out < 1 || static_cast<int>(generators.size()) != n_out)
        throw std::invalid_argument("code: generator count does not match n_out");
    if (memory < 0 || memory > 24) throw std::invalid_argument("code: memory out of range");
    bool delay_free = false;
    for (const auto& g : generators) {
        if (static_cast<int>(g.size()) != memory + 1)
            throw std::invalid_argument("code: every generator needs memory+1 taps");
        for (auto t : g)
            if (t > 1) throw std::invalid_argument("code: taps must be binary");
        delay_free = delay_free || g[0] != 0;
    }
    if (!delay_free) throw std::invalid_argument("code: no generator taps the current input");
}

PuncturingScheme::PuncturingScheme(std::vector<std::vector<std::uint8_t>> pattern) : pattern_(std::move(pattern)) {
    if (pattern_.empty() || pattern_[0].empty()) throw std::invalid_argument("puncturing: empty pattern");
    for (const auto& row : pattern_) {
        if (row.size() != pattern_[0].size()) throw std::invalid_argument("puncturing: ragged pattern rows");
        for (auto v : row) {
            if (v > 1) throw std::invalid_argument("puncturing: flags must be 0 or 1");
            kept_per_period_ += v;
        }
    }
    if (kept_per_period_ == 0) throw std::invalid_argument("puncturing: pattern keeps no bits");
}

PuncturingScheme PuncturingScheme::from_rows(const std::vector<std::string>& rows) {
    std::vector<std::vector<std::uint8_t>> pattern;
    for (const auto& row : rows) {
        std::vector<std::uint8_t> flags;
        for (char c : row) {
            if (c != '0' && c != '1') throw std::invalid_argument("puncturing: row '" + row + "' is not 0/1");
            flags.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        pattern.push_back(std::move(flags));
    }
    return PuncturingScheme(std::move(pattern));
}

PuncturingScheme PuncturingScheme::all_keep(int n_out) {
    return PuncturingScheme(std::vector<std::vector<std::uint8_t>>(static_cast<std::size_t>(n_out), {1}));
}

bool PuncturingScheme::keep(int generator, long long step) const {
    const long long p = period();
    const long long col = ((step % p) + p) % p;
    return pattern_[static_cast<std::size_t>(generator)][static_cast<std::size_t>(col)] != 0;
}

long long PuncturingScheme::kept_in(long long steps) const {
    const long long p = period();
    long long total = (steps / p) * kept_per_period_;
    for (long long t = 0; t < steps % p; ++t)
        for (int g = 0; g < rows(); ++g) total += keep(g, t) ? 1 : 0;
    return total;
}

int Labeling::bits_per_symbol() const {
    int n = 0;
    while ((1 << n) < m_ary) ++n;
    return n;
}

void Labeling::validate() const {
    if (m_ary < 2 || (m_ary & (m_ary - 1)) != 0) throw std::invalid_argument("labeling: M must be a power of two >= 2");
}

int Labeling::index_of_bits(unsigned bits) const {
    if (kind == LabelKind::natural) return static_cast<int>(bits);
    unsigned d = bits;
    for (unsigned shift = bits >> 1; shift != 0; shift >>= 1) d ^= shift;
    return static_cast<int>(d);
}

unsigned Labeling::bits_of_index(int index) const {
    const auto d = static_cast<unsigned>(index);
    return kind == LabelKind::natural ? d : d ^ (d >> 1);
}

std::vector<double> Labeling::alphabet() const {
    std::vector<double> a(static_cast<std::size_t>(m_ary));
    for (int d = 0; d < m_ary; ++d) a[static_cast<std::size_t>(d)] = amplitude_of_index(d);
    return a;
}

double Labeling::average_energy() const { return (static_cast<double>(m_ary) * m_ary - 1.0) / 3.0; }

LabelKind parse_label_kind(const std::string& text) {
    if (text == "natural") return LabelKind::natural;
    if (text == "gray") return LabelKind::gray;
    throw std::invalid_argument("unknown labeling '" + text + "'");
}

std::string to_string(LabelKind kind) { return kind == LabelKind::natural ? "natural" : "gray"; }

BitStream encode(std::span<const std::uint8_t> info, const CodeSpec& code, bool terminate) {
    if (info.empty()) throw std::invalid_argument("encode: empty input");
    BitStream input(info.begin(), info.end());
    if (terminate) input.insert(input.end(), static_cast<std::size_t>(code.memory), 0);

    BitStream out;
    out.reserve(input.size() * static_cast<std::size_t>(code.n_out));
    // register[j] holds the input delayed by j steps
    std::vector<std::uint8_t> reg(static_cast<std::size_t>(code.memory) + 1, 0);
    for (auto u : input) {
        std::rotate(reg.rbegin(), reg.rbegin() + 1, reg.rend());
        reg[0] = u & 1U;
        for (const auto& g : code.generators) {
            unsigned acc = 0;
            for (std::size_t j = 0; j < g.size(); ++j) acc ^= g[j] & reg[j];
            out.push_back(static_cast<std::uint8_t>(acc));
        }
    }
    return out;
}

PuncturedBits puncture(std::span<const std::uint8_t> coded, const PuncturingScheme& scheme) {
    const auto n = static_cast<std::size_t>(scheme.rows());
    if (coded.size() % n != 0) throw std::invalid_argument("puncture: coded length is not a multiple of n_out");
    PuncturedBits out;
    const auto steps = static_cast<long long>(coded.size() / n);
    for (long long t = 0; t < steps; ++t)
        for (int g = 0; g < scheme.rows(); ++g)
            if (scheme.keep(g, t)) {
                out.bits.push_back(coded[static_cast<std::size_t>(t) * n + static_cast<std::size_t>(g)]);
                out.trace.push_back({g, t});
            }
    return out;
}

SymbolStream map_symbols(std::span<const std::uint8_t> bits, const Labeling& label) {
    label.validate();
    const auto nb = static_cast<std::size_t>(label.bits_per_symbol());
    if (bits.size() % nb != 0) throw std::invalid_argument("map_symbols: ragged tail");
    SymbolStream out;
    out.reserve(bits.size() / nb);
    for (std::size_t i = 0; i < bits.size(); i += nb) {
        unsigned group = 0;
        for (std::size_t b = 0; b < nb; ++b) group = (group << 1) | (bits[i + b] & 1U);
        out.push_back(label.amplitude_of_bits(group));
    }
    return out;
}

std::vector<double> depuncture_llrs(std::span<const double> llrs, const PuncturingScheme& scheme) {
    const auto count = static_cast<long long>(llrs.size());
    const long long full_periods = count / scheme.kept_per_period();
    long long steps = std::max(0LL, full_periods - 1) * scheme.period();
    while (scheme.kept_in(steps) < count) ++steps;
    if (scheme.kept_in(steps) != count) throw std::invalid_argument("depuncture: soft value count does not match scheme");
    return depuncture_llrs(llrs, scheme, steps);
}

std::vector<double> depuncture_llrs(std::span<const double> llrs, const PuncturingScheme& scheme, long long steps) {
    if (scheme.kept_in(steps) != static_cast<long long>(llrs.size()))
        throw std::invalid_argument("depuncture: soft value count does not match scheme");
    std::vector<double> out(static_cast<std::size_t>(steps * scheme.rows()), 0.0);
    std::size_t next = 0;
    for (long long t = 0; t < steps; ++t)
        for (int g = 0; g < scheme.rows(); ++g)
            if (scheme.keep(g, t)) out[static_cast<std::size_t>(t * scheme.rows() + g)] = llrs[next++];
    return out;
}

int symbol_cycle_steps(const PuncturingScheme& scheme, int bits_per_symbol) {
    const int g = std::gcd(scheme.kept_per_period(), bits_per_symbol);
    return scheme.period() * (bits_per_symbol / g);
}

FrameLayout make_frame_layout(const CodeSpec& code, const PuncturingScheme& scheme, const Labeling& label,
                              int info_bits) {
    if (info_bits <= 0) throw std::invalid_argument("frame: info bit count must be positive");
    if (scheme.rows() != code.n_out) throw std::invalid_argument("frame: puncturing rows do not match n_out");
    FrameLayout layout;
    layout.info_bits = info_bits;
    layout.cycle_steps = symbol_cycle_steps(scheme, label.bits_per_symbol());
    layout.symbols_per_cycle =
        static_cast<int>(scheme.kept_in(layout.cycle_steps) / label.bits_per_symbol());
    int tail = code.memory;
    while ((info_bits + tail) % layout.cycle_steps != 0) ++tail;
    layout.tail_bits = tail;
    return layout;
}

BitStream with_tail(std::span<const std::uint8_t> info, const FrameLayout& layout) {
    if (static_cast<int>(info.size()) != layout.info_bits) throw std::invalid_argument("frame: info length mismatch");
    BitStream bits(info.begin(), info.end());
    bits.insert(bits.end(), static_cast<std::size_t>(layout.tail_bits), 0);
    return bits;
}

SymbolStream modulate_frame(std::span<const std::uint8_t> info, const CodeSpec& code,
                            const PuncturingScheme& scheme, const Labeling& label, const FrameLayout& layout) {
    const BitStream framed = with_tail(info, layout);
    const BitStream coded = encode(framed, code, false);
    return map_symbols(puncture(coded, scheme).bits, label);
}

}  // namespace pmd
