#include "pmd/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "pmd/decoders.hpp"
#include "pmd/sim.hpp"
#include "pmd/trellis.hpp"

namespace pmd {
namespace {

using Clock = std::chrono::steady_clock;

struct Reference {
    CodeSpec code = CodeSpec::from_octal({5, 7});
    PuncturingScheme punctured = PuncturingScheme::from_rows({"10", "11"});
    Labeling label{4, LabelKind::gray};
};

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

BitStream random_bits(std::size_t n, CounterRng& rng) {
    BitStream out(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng();
        out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
    return out;
}

NoiseSpec noise_for(double ebn0_db, const FrameLayout& layout, const Labeling& label) {
    return NoiseSpec{ebn0_db, static_cast<double>(layout.cycle_steps) / layout.symbols_per_cycle,
                     label.average_energy(), false};
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

double min_pair_distance(const std::vector<std::vector<double>>& paths) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t j = i + 1; j < paths.size(); ++j) best = std::min(best, squared_distance(paths[i], paths[j]));
    return best;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

namespace oracle {

BitStream punctured_code_ml(std::span<const double> received, const CodeSpec& code, const PuncturingScheme& scheme,
                            const Labeling& label, const FrameLayout& layout) {
    const int nb = label.bits_per_symbol();
    const std::size_t z = code.states();
    const std::size_t pending = std::size_t{1} << (nb - 1);
    const std::size_t states = z * pending;
    const int steps = layout.steps();
    const double inf = std::numeric_limits<double>::infinity();

    // state = encoder register (bit j = input j+1 steps ago) + z * buffered bits
    std::vector<double> metric(states, inf), next(states);
    metric[0] = 0.0;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint8_t>>> back(
        static_cast<std::size_t>(steps), std::vector<std::pair<std::uint32_t, std::uint8_t>>(states, {0, 0}));

    for (int t = 0; t < steps; ++t) {
        std::fill(next.begin(), next.end(), inf);
        const long long before = scheme.kept_in(t);
        const int buffered = static_cast<int>(before % nb);
        const auto first_symbol = static_cast<std::size_t>(before / nb);
        const int inputs = t < layout.info_bits ? 2 : 1;
        for (std::size_t from = 0; from < states; ++from) {
            if (metric[from] == inf) continue;
            const std::size_t enc = from % z;
            const auto buf = static_cast<unsigned>(from / z);
            if (buf >> buffered) continue;
            for (int u = 0; u < inputs; ++u) {
                unsigned b = buf;
                int len = buffered;
                std::size_t sym = first_symbol;
                double m = metric[from];
                for (int g = 0; g < code.n_out; ++g) {
                    if (!scheme.keep(g, t)) continue;
                    const auto& taps = code.generators[static_cast<std::size_t>(g)];
                    unsigned bit = taps[0] & static_cast<unsigned>(u);
                    for (int j = 1; j <= code.memory; ++j) bit ^= taps[static_cast<std::size_t>(j)] & ((enc >> (j - 1)) & 1U);
                    b = (b << 1) | bit;
                    if (++len == nb) {
                        const double e = received[sym++] - label.amplitude_of_bits(b);
                        m += e * e;
                        b = 0;
                        len = 0;
                    }
                }
                const std::size_t to = (((enc << 1) | static_cast<unsigned>(u)) & (z - 1)) + z * b;
                if (m < next[to]) {
                    next[to] = m;
                    back[static_cast<std::size_t>(t)][to] = {static_cast<std::uint32_t>(from), static_cast<std::uint8_t>(u)};
                }
            }
        }
        metric.swap(next);
    }

    std::size_t state = 0;
    for (std::size_t s = 1; s < states; ++s)
        if (metric[s] < metric[state]) state = s;
    BitStream path(static_cast<std::size_t>(steps));
    for (int t = steps - 1; t >= 0; --t) {
        const auto [from, u] = back[static_cast<std::size_t>(t)][state];
        path[static_cast<std::size_t>(t)] = u;
        state = from;
    }
    path.resize(static_cast<std::size_t>(layout.info_bits));
    return path;
}

std::vector<double> ask_bit_llrs(double received, const Labeling& label, double noise_variance) {
    const int nb = label.bits_per_symbol();
    std::vector<double> out;
    for (int i = 0; i < nb; ++i) {
        const unsigned mask = 1U << (nb - 1 - i);
        std::vector<long double> zero, one;
        for (unsigned bits = 0; bits < static_cast<unsigned>(label.m_ary); ++bits) {
            const long double e = received - label.amplitude_of_bits(bits);
            (bits & mask ? one : zero).push_back(-e * e / (2.0L * noise_variance));
        }
        auto log_sum = [](const std::vector<long double>& xs) {
            const long double top = *std::max_element(xs.begin(), xs.end());
            long double acc = 0.0L;
            for (long double x : xs) acc += std::exp(x - top);
            return top + std::log(acc);
        };
        out.push_back(static_cast<double>(log_sum(zero) - log_sum(one)));
    }
    return out;
}

}  // namespace oracle

CheckResult check_state_counts() {
    const auto t0 = Clock::now();
    CheckResult r{"state counts", true, {}, 0.0};
    const Reference ref;
    std::ostringstream os;
    auto expect = [&](const std::string& what, std::size_t got, std::size_t want) {
        os << what << "=" << got << (got == want ? "" : " (want " + std::to_string(want) + ")") << "; ";
        if (got != want) r.passed = false;
    };
    double slowest = 0.0;
    auto timed = [&](auto&& build) {
        const auto s0 = Clock::now();
        auto out = build();
        slowest = std::max(slowest, elapsed(s0));
        return out;
    };
    const auto plain = timed([&] {
        return build_matched_trellis(ref.code, PuncturingScheme::all_keep(2), ref.label, reference_taps(4));
    });
    expect("non-punctured L=4", plain.max_states(), 64);
    const auto m4 = timed([&] { return build_matched_trellis(ref.code, ref.punctured, ref.label, reference_taps(4)); });
    expect("matched L=4", m4.unsplit_states(), 256);
    expect("matched L=4 split", m4.max_states(), 512);
    const auto p4 = timed([&] { return build_product_trellis(ref.code, ref.punctured, ref.label, reference_taps(4)); });
    expect("product L=4", p4.trellis.unsplit_states(), 1024);
    expect("product L=4 split", p4.max_states(), 2048);
    const auto m3 = timed([&] { return build_matched_trellis(ref.code, ref.punctured, ref.label, reference_taps(3)); });
    expect("matched L=3", m3.max_states(), 128);
    os << "slowest build " << fmt("%.3f", slowest) << " s";
    if (slowest >= 1.0) r.passed = false;
    r.detail = os.str();
    r.seconds = elapsed(t0);
    return r;
}

CheckResult check_oracle_equivalence(int frames_per_config, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r{"oracle equivalence", true, {}, 0.0};
    const Reference ref;
    const double grid[] = {2.0, 6.0, 10.0};
    const int sizes[] = {8, 10, 12};
    long long frames = 0, mismatches = 0;
    for (int L = 0; L <= 2; ++L) {
        const auto taps = reference_taps(L);
        const auto trellis = build_matched_trellis(ref.code, ref.punctured, ref.label, taps);
        for (int g = 0; g < 3; ++g) {
            for (int f = 0; f < frames_per_config; ++f) {
                const int n = sizes[f % 3];
                const auto layout = make_frame_layout(ref.code, ref.punctured, ref.label, n);
                const std::uint64_t words[] = {static_cast<std::uint64_t>(L), static_cast<std::uint64_t>(g),
                                               static_cast<std::uint64_t>(f)};
                CounterRng rng(CounterRng::derive(seed, words));
                const auto info = random_bits(static_cast<std::size_t>(n), rng);
                const auto rx = add_awgn(replay(info, ref.code, ref.punctured, ref.label, taps, layout),
                                         noise_for(grid[g], layout, ref.label), rng);
                const auto a = viterbi_time_variant(trellis, rx, layout);
                const auto b = brute_force_mlse(rx, ref.code, ref.punctured, ref.label, taps, layout);
                ++frames;
                if (a != b) ++mismatches;
            }
        }
    }
    r.passed = mismatches == 0 && frames > 0;
    r.detail = std::to_string(mismatches) + " mismatches in " + std::to_string(frames) + " frames";
    r.seconds = elapsed(t0);
    return r;
}

CheckResult check_distance_preservation(int info_bits) {
    const auto t0 = Clock::now();
    CheckResult r{"distance preservation", true, {}, 0.0};
    const Reference ref;
    const int pad = 8;
    std::ostringstream os;
    for (int L = 0; L <= 2; ++L) {
        const auto taps = reference_taps(L);
        const auto matched = build_matched_trellis(ref.code, ref.punctured, ref.label, taps);
        const auto product = build_product_trellis(ref.code, ref.punctured, ref.label, taps);
        const auto layout = make_frame_layout(ref.code, ref.punctured, ref.label, info_bits + pad);
        const auto symbols = static_cast<std::size_t>(layout.symbols());
        std::vector<std::vector<double>> pm, pp;
        for (std::uint32_t v = 0; v < (1U << info_bits); ++v) {
            BitStream info(static_cast<std::size_t>(info_bits + pad), 0);
            for (int i = 0; i < info_bits; ++i) info[static_cast<std::size_t>(i)] = (v >> (info_bits - 1 - i)) & 1U;
            const auto bits = with_tail(info, layout);
            pm.push_back(trace_path(matched, bits, symbols));
            pp.push_back(trace_path(product.trellis, bits, symbols));
        }
        const double dm = min_pair_distance(pm), dp = min_pair_distance(pp);
        os << "L=" << L << " d2=" << fmt("%.9g", dm) << "/" << fmt("%.9g", dp) << "; ";
        if (!(std::abs(dm - dp) <= 1e-9) || !(dm > 0.0)) r.passed = false;
    }
    r.detail = os.str();
    r.seconds = elapsed(t0);
    return r;
}

CheckResult check_no_isi_decoder(int frames, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r{"no-ISI decoder calibration", true, {}, 0.0};
    const Reference ref;
    const auto taps = reference_taps(0);
    const auto trellis = build_matched_trellis(ref.code, ref.punctured, ref.label, taps);
    const auto layout = make_frame_layout(ref.code, ref.punctured, ref.label, 64);
    const double grid[] = {0.0, 2.0, 4.0, 6.0, 8.0};
    long long mismatches = 0;
    for (int f = 0; f < frames; ++f) {
        const std::uint64_t words[] = {0x15017ULL, static_cast<std::uint64_t>(f)};
        CounterRng rng(CounterRng::derive(seed, words));
        const auto info = random_bits(static_cast<std::size_t>(layout.info_bits), rng);
        const auto rx = add_awgn(replay(info, ref.code, ref.punctured, ref.label, taps, layout),
                                 noise_for(grid[f % 5], layout, ref.label), rng);
        if (viterbi_time_variant(trellis, rx, layout) !=
            oracle::punctured_code_ml(rx, ref.code, ref.punctured, ref.label, layout))
            ++mismatches;
    }
    r.passed = mismatches == 0 && frames > 0;
    r.detail = std::to_string(mismatches) + " mismatches in " + std::to_string(frames) + " frames";
    r.seconds = elapsed(t0);
    return r;
}

CheckResult check_no_isi_llrs(int frames, std::uint64_t seed, double tolerance) {
    const auto t0 = Clock::now();
    CheckResult r{"no-ISI LLR calibration", true, {}, 0.0};
    const Reference ref;
    const auto taps = reference_taps(0);
    const auto layout = make_frame_layout(ref.code, ref.punctured, ref.label, 64);
    const double grid[] = {0.0, 4.0, 8.0, 12.0};
    double worst = 0.0;
    for (auto kind : {LabelKind::natural, LabelKind::gray}) {
        const Labeling label{4, kind};
        for (int f = 0; f < frames; ++f) {
            const std::uint64_t words[] = {0x11a5ULL, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(f)};
            CounterRng rng(CounterRng::derive(seed, words));
            const auto info = random_bits(static_cast<std::size_t>(layout.info_bits), rng);
            const auto noise = noise_for(grid[f % 4], layout, label);
            const auto rx = add_awgn(replay(info, ref.code, ref.punctured, label, taps, layout), noise, rng);
            const auto eq = bcjr_equalize(rx, taps, label, noise.variance());
            for (std::size_t k = 0; k < rx.size(); ++k) {
                const auto want = oracle::ask_bit_llrs(rx[k], label, noise.variance());
                for (std::size_t i = 0; i < want.size(); ++i)
                    worst = std::max(worst, std::abs(eq.llrs[k * want.size() + i] - want[i]));
            }
        }
    }
    r.passed = worst <= tolerance && frames > 0;
    r.detail = "max |LLR difference| " + fmt("%.3g", worst);
    r.seconds = elapsed(t0);
    return r;
}

CheckResult check_determinism(long long max_frames) {
    const auto t0 = Clock::now();
    CheckResult r{"determinism", true, {}, 0.0};
    SimConfig c;
    c.channel_memory = 2;
    c.receivers = parse_receiver_list("matched,matched-rsse:8,dfse-va:4,bcjr-va");
    c.ebn0_db = {4.0, 8.0};
    c.frame_bits = 64;
    c.min_errors = 40;
    c.max_frames = max_frames;
    c.seed = 20260415;

    auto run = [&](int threads) {
        SimConfig cc = c;
        cc.threads = threads;
        return Simulator(cc).run_sweep();
    };
    const auto serial = run(1);
    const auto again = run(1);
    const auto parallel = run(4);
    std::vector<BerRecord> left, right;
    {
        std::jthread a([&] { left = run(2); });
        std::jthread b([&] { right = run(3); });
    }
    const bool same = serial == again && serial == parallel && serial == left && serial == right;
    long long bits = 0;
    for (const auto& rec : serial) bits += rec.bits;
    r.passed = same && bits > 0;
    r.detail = std::to_string(serial.size()) + " records, " + (same ? "identical" : "differ") + " across 5 runs";
    r.seconds = elapsed(t0);
    return r;
}

bool run_selftest(std::ostream& out) {
    const std::uint64_t seed = 7;
    const CheckResult results[] = {
        check_state_counts(),
        check_oracle_equivalence(60, seed),
        check_distance_preservation(6),
        check_no_isi_decoder(200, seed),
        check_no_isi_llrs(20, seed, 1e-6),
        check_determinism(400),
    };
    bool all = true;
    for (const auto& r : results) {
        char head[96];
        std::snprintf(head, sizeof head, "%-4s %-28s %7.2fs  ", r.passed ? "ok" : "FAIL", r.name.c_str(), r.seconds);
        out << head << r.detail << "\n";
        all = all && r.passed;
    }
    out << (all ? "selftest passed" : "selftest FAILED") << "\n";
    return all;
}

}  // namespace pmd
