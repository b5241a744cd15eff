#include "pmd/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pmd {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty() || !std::isfinite(v))
        throw std::invalid_argument(what + ": not a number: '" + text + "'");
    return v;
}

long long parse_integer(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty()) throw std::invalid_argument(what + ": not an integer: '" + text + "'");
    return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw std::invalid_argument(what + ": expected a boolean, got '" + text + "'");
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t count_bit_errors(const BitStream& a, std::span<const std::uint8_t> b) {
    std::size_t e = 0;
    for (std::size_t i = 0; i < b.size(); ++i) e += (i >= a.size() || a[i] != b[i]) ? 1 : 0;
    return e;
}

class TrellisReceiver final : public FrameReceiver {
public:
    explicit TrellisReceiver(TimeVariantTrellis trellis) : trellis_(std::move(trellis)) {}
    BitStream decode(std::span<const double> received, double, const FrameLayout& layout) const override {
        return viterbi_time_variant(trellis_, received, layout);
    }

private:
    TimeVariantTrellis trellis_;
};

class RsseReceiver final : public FrameReceiver {
public:
    RsseReceiver(TimeVariantTrellis trellis, std::size_t states)
        : trellis_(std::move(trellis)), partition_(trellis_, states) {}
    BitStream decode(std::span<const double> received, double, const FrameLayout& layout) const override {
        return rsse_decode(trellis_, partition_, received, layout).info;
    }

private:
    TimeVariantTrellis trellis_;
    RssePartition partition_;
};

class SeparatedFrameReceiver final : public FrameReceiver {
public:
    explicit SeparatedFrameReceiver(SeparatedReceiver rx) : rx_(std::move(rx)) {}
    BitStream decode(std::span<const double> received, double noise_variance,
                     const FrameLayout& layout) const override {
        return rx_.decode(received, noise_variance, layout);
    }

private:
    SeparatedReceiver rx_;
};

}  // namespace

ReceiverSpec ReceiverSpec::parse(const std::string& raw) {
    const std::string text = trim(raw);
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    ReceiverSpec spec;
    auto states = [&]() -> std::size_t {
        if (colon == std::string::npos) throw std::invalid_argument("receiver '" + text + "' needs a state count");
        const long long s = parse_integer(text.substr(colon + 1), "receiver " + name);
        if (s <= 0) throw std::invalid_argument("receiver '" + text + "': state count must be positive");
        return static_cast<std::size_t>(s);
    };
    auto no_states = [&]() {
        if (colon != std::string::npos) throw std::invalid_argument("receiver '" + name + "' takes no state count");
    };
    if (name == "matched") {
        no_states();
        spec.kind = ReceiverKind::matched;
    } else if (name == "matched-rsse") {
        spec.kind = ReceiverKind::matched_rsse;
        spec.states = states();
    } else if (name == "dfse-va") {
        spec.kind = ReceiverKind::dfse_va;
        spec.states = states();
    } else if (name == "bcjr-va") {
        no_states();
        spec.kind = ReceiverKind::bcjr_va;
    } else if (name == "product") {
        no_states();
        spec.kind = ReceiverKind::product;
    } else {
        throw std::invalid_argument("unknown receiver '" + text + "'");
    }
    return spec;
}

std::string ReceiverSpec::id() const {
    switch (kind) {
        case ReceiverKind::matched: return "matched";
        case ReceiverKind::matched_rsse: return "matched-rsse:" + std::to_string(states);
        case ReceiverKind::dfse_va: return "dfse-va:" + std::to_string(states);
        case ReceiverKind::bcjr_va: return "bcjr-va";
        case ReceiverKind::product: return "product";
    }
    return "?";
}

std::vector<ReceiverSpec> parse_receiver_list(const std::string& text) {
    std::vector<ReceiverSpec> out;
    for (const auto& item : split_list(text)) out.push_back(ReceiverSpec::parse(item));
    if (out.empty()) throw std::invalid_argument("receiver list is empty");
    return out;
}

std::vector<double> parse_ebn0_grid(const std::string& raw) {
    const std::string text = trim(raw);
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(trim(part));
        if (parts.size() != 3) throw std::invalid_argument("ebn0 range must be a:b:step, got '" + text + "'");
        const double a = parse_double(parts[0], "ebn0"), b = parse_double(parts[1], "ebn0"),
                     step = parse_double(parts[2], "ebn0");
        if (!(step > 0.0) || b < a) throw std::invalid_argument("ebn0 range needs a <= b and step > 0");
        const auto count = static_cast<long long>(std::floor((b - a) / step + 1e-9)) + 1;
        if (count > 100000) throw std::invalid_argument("ebn0 range has too many points");
        for (long long i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
    } else {
        for (const auto& item : split_list(text)) out.push_back(parse_double(item, "ebn0"));
    }
    if (out.empty()) throw std::invalid_argument("ebn0 grid is empty");
    return out;
}

SimConfig SimConfig::parse(std::istream& in) {
    SimConfig c;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
        try {
            c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(number) + ": " + e.what());
        }
    }
    return c;
}

SimConfig SimConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    return parse(in);
}

void SimConfig::set(const std::string& key, const std::string& value) {
    if (key == "generators") {
        generators.clear();
        for (const auto& item : split_list(value)) {
            std::size_t used = 0;
            unsigned long g = 0;
            try {
                g = std::stoul(item, &used, 8);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != item.size()) throw std::invalid_argument("generators: not an octal number: '" + item + "'");
            generators.push_back(static_cast<unsigned>(g));
        }
    } else if (key == "puncturing") {
        puncturing = split_list(value);
    } else if (key == "labeling") {
        labeling = parse_label_kind(value);
    } else if (key == "channel_memory") {
        channel_memory = static_cast<int>(parse_integer(value, key));
        taps.clear();
    } else if (key == "taps") {
        taps.clear();
        for (const auto& item : split_list(value)) taps.push_back(parse_double(item, key));
    } else if (key == "receivers") {
        receivers = parse_receiver_list(value);
    } else if (key == "ebn0") {
        ebn0_db = parse_ebn0_grid(value);
    } else if (key == "frame_bits") {
        frame_bits = static_cast<int>(parse_integer(value, key));
    } else if (key == "max_frames") {
        max_frames = parse_integer(value, key);
    } else if (key == "min_errors") {
        min_errors = parse_integer(value, key);
    } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(parse_integer(value, key));
    } else if (key == "noiseless") {
        noiseless = parse_bool(value, key);
    } else if (key == "threads") {
        threads = static_cast<int>(parse_integer(value, key));
    } else if (key == "state_cap") {
        state_cap = static_cast<std::size_t>(parse_integer(value, key));
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

CodeSpec SimConfig::code() const { return CodeSpec::from_octal(generators); }

PuncturingScheme SimConfig::scheme() const {
    if (puncturing.empty()) return PuncturingScheme::all_keep(static_cast<int>(generators.size()));
    return PuncturingScheme::from_rows(puncturing);
}

Labeling SimConfig::label() const { return Labeling{1 << static_cast<int>(generators.size()), labeling}; }

ChannelTaps SimConfig::channel() const { return taps.empty() ? reference_taps(channel_memory) : custom_taps(taps); }

double SimConfig::rate() const {
    const auto s = scheme();
    const auto lab = label();
    const int steps = symbol_cycle_steps(s, lab.bits_per_symbol());
    const double symbols = static_cast<double>(s.kept_in(steps)) / lab.bits_per_symbol();
    return steps / symbols;
}

FrameLayout SimConfig::layout() const { return make_frame_layout(code(), scheme(), label(), frame_bits); }

void SimConfig::validate() const {
    const auto c = code();
    c.validate();
    const auto s = scheme();
    if (s.rows() != c.n_out) throw std::invalid_argument("config: puncturing needs one row per generator");
    label().validate();
    if (taps.empty() && channel_memory < 0) throw std::invalid_argument("config: channel_memory must be >= 0");
    (void)channel();
    if (receivers.empty()) throw std::invalid_argument("config: no receivers");
    if (ebn0_db.empty()) throw std::invalid_argument("config: empty Eb/N0 grid");
    if (frame_bits <= 0) throw std::invalid_argument("config: frame_bits must be positive");
    if (frame_bits % s.period() != 0)
        throw std::invalid_argument("config: frame_bits must be a multiple of the puncturing period");
    if (min_errors < 1) throw std::invalid_argument("config: min_errors must be >= 1");
    if (max_frames < 1) throw std::invalid_argument("config: max_frames must be >= 1");
    if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
}

std::string SimConfig::canonical() const {
    std::ostringstream os;
    os << "generators=";
    for (std::size_t i = 0; i < generators.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%o", generators[i]);
        os << (i ? "," : "") << buf;
    }
    os << ";puncturing=";
    for (std::size_t i = 0; i < puncturing.size(); ++i) os << (i ? "," : "") << puncturing[i];
    os << ";labeling=" << to_string(labeling);
    if (taps.empty()) {
        os << ";channel_memory=" << channel_memory;
    } else {
        os << ";taps=";
        for (std::size_t i = 0; i < taps.size(); ++i) os << (i ? "," : "") << format_double(taps[i]);
    }
    os << ";receivers=";
    for (std::size_t i = 0; i < receivers.size(); ++i) os << (i ? "," : "") << receivers[i].id();
    os << ";ebn0=";
    for (std::size_t i = 0; i < ebn0_db.size(); ++i) os << (i ? "," : "") << format_double(ebn0_db[i]);
    os << ";frame_bits=" << frame_bits << ";max_frames=" << max_frames << ";min_errors=" << min_errors
       << ";seed=" << seed << ";noiseless=" << (noiseless ? 1 : 0) << ";state_cap=" << state_cap;
    return os.str();
}

std::uint64_t SimConfig::hash() const { return fnv1a(canonical()); }

std::pair<double, double> wilson_interval(long long errors, long long trials) {
    if (trials <= 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    const double lo = errors == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = errors == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

std::shared_ptr<const FrameReceiver> make_receiver(const SimConfig& config, const ReceiverSpec& spec) {
    const auto code = config.code();
    const auto scheme = config.scheme();
    const auto label = config.label();
    const auto taps = config.channel();
    TrellisOptions opts;
    opts.state_cap = config.state_cap;
    switch (spec.kind) {
        case ReceiverKind::matched:
            return std::make_shared<TrellisReceiver>(build_matched_trellis(code, scheme, label, taps, opts));
        case ReceiverKind::product:
            return std::make_shared<TrellisReceiver>(build_product_trellis(code, scheme, label, taps, opts).trellis);
        case ReceiverKind::matched_rsse:
            return std::make_shared<RsseReceiver>(build_matched_trellis(code, scheme, label, taps, opts), spec.states);
        case ReceiverKind::dfse_va:
        case ReceiverKind::bcjr_va: {
            SeparatedReceiver rx{code, scheme, label, taps,
                                 spec.kind == ReceiverKind::dfse_va ? SeparatedMode::hard : SeparatedMode::soft,
                                 spec.states};
            // reject a bad DFSE state count now rather than per frame
            if (rx.mode == SeparatedMode::hard) (void)dfse_equalize({}, taps, label, spec.states);
            return std::make_shared<SeparatedFrameReceiver>(std::move(rx));
        }
    }
    throw std::invalid_argument("unknown receiver kind");
}

Simulator::Simulator(SimConfig config) : config_(std::move(config)) { config_.validate(); }

std::shared_ptr<const FrameReceiver> Simulator::receiver(const ReceiverSpec& spec) const {
    const std::string id = spec.id();
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    }
    auto rx = make_receiver(config_, spec);
    std::lock_guard lock(mutex_);
    return cache_.emplace(id, std::move(rx)).first->second;
}

BerRecord Simulator::run_point(std::size_t point_index, const ReceiverSpec& spec) const {
    return simulate(point_index, config_.ebn0_db.at(point_index), spec);
}

BerRecord Simulator::run_point(double ebn0_db, const ReceiverSpec& spec) const {
    for (std::size_t i = 0; i < config_.ebn0_db.size(); ++i)
        if (std::abs(config_.ebn0_db[i] - ebn0_db) < 1e-9) return simulate(i, ebn0_db, spec);
    // off-grid points get a substream keyed by the value itself
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof ebn0_db);
    std::memcpy(&bits, &ebn0_db, sizeof bits);
    return simulate(static_cast<std::size_t>(mix64(bits) | (std::uint64_t{1} << 63)), ebn0_db, spec);
}

BerRecord Simulator::simulate(std::size_t point_index, double ebn0_db, const ReceiverSpec& spec) const {
    BerRecord rec;
    rec.ebn0_db = ebn0_db;
    rec.receiver = spec.id();
    std::shared_ptr<const FrameReceiver> rx;
    try {
        rx = receiver(spec);
    } catch (const std::exception& e) {
        rec.error = e.what();
        rec.wilson_high = 1.0;
        return rec;
    }

    const auto code = config_.code();
    const auto scheme = config_.scheme();
    const auto label = config_.label();
    const auto taps = config_.channel();
    const auto layout = config_.layout();
    NoiseSpec noise{ebn0_db, config_.rate(), label.average_energy(), config_.noiseless};
    const double variance = noise.variance();
    const std::uint64_t receiver_word = fnv1a(rec.receiver);

    auto run_frame = [&](long long frame) -> std::size_t {
        const std::uint64_t words[] = {receiver_word, static_cast<std::uint64_t>(point_index),
                                       static_cast<std::uint64_t>(frame)};
        CounterRng rng(CounterRng::derive(config_.seed, words));
        BitStream info(static_cast<std::size_t>(layout.info_bits));
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < info.size(); ++i) {
            if (i % 64 == 0) word = rng();
            info[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
        }
        const auto clean = replay(info, code, scheme, label, taps, layout);
        const auto received = add_awgn(clean, noise, rng);
        return count_bit_errors(rx->decode(received, variance, layout), info);
    };

    const unsigned workers =
        config_.threads > 0 ? static_cast<unsigned>(config_.threads) : std::max(1U, std::thread::hardware_concurrency());
    const long long batch = static_cast<long long>(workers) * 8;
    std::vector<std::size_t> errors;
    std::string failure;
    std::mutex failure_mutex;

    long long next = 0;
    bool done = false;
    while (!done && next < config_.max_frames) {
        const long long count = std::min(batch, config_.max_frames - next);
        errors.assign(static_cast<std::size_t>(count), 0);
        std::atomic<long long> cursor{0};
        auto work = [&]() {
            for (long long i; (i = cursor.fetch_add(1)) < count;) {
                try {
                    errors[static_cast<std::size_t>(i)] = run_frame(next + i);
                } catch (const std::exception& e) {
                    std::lock_guard lock(failure_mutex);
                    if (failure.empty()) failure = e.what();
                }
            }
        };
        if (workers == 1 || count == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < std::min<unsigned>(workers, static_cast<unsigned>(count)); ++t)
                pool.emplace_back(work);
        }
        if (!failure.empty()) {
            rec.error = failure;
            break;
        }
        // consume in frame order so the stopping point is schedule independent
        for (long long i = 0; i < count; ++i) {
            const auto e = errors[static_cast<std::size_t>(i)];
            ++rec.frames;
            rec.bits += layout.info_bits;
            rec.errors += static_cast<long long>(e);
            rec.frame_errors += e > 0 ? 1 : 0;
            if (rec.errors >= config_.min_errors) {
                done = true;
                break;
            }
        }
        next += count;
    }
    rec.ber = rec.bits > 0 ? static_cast<double>(rec.errors) / static_cast<double>(rec.bits) : 0.0;
    std::tie(rec.wilson_low, rec.wilson_high) = wilson_interval(rec.errors, rec.bits);
    return rec;
}

std::vector<BerRecord> Simulator::run_sweep() const {
    std::vector<BerRecord> out;
    for (std::size_t i = 0; i < config_.ebn0_db.size(); ++i)
        for (const auto& r : config_.receivers) out.push_back(run_point(i, r));
    return out;
}

BerRecord run_point(const SimConfig& config, double ebn0_db, const ReceiverSpec& receiver) {
    return Simulator(config).run_point(ebn0_db, receiver);
}

std::vector<BerRecord> run_sweep(const SimConfig& config) { return Simulator(config).run_sweep(); }

void write_data_file(std::ostream& out, const SimConfig& config, const std::vector<BerRecord>& records) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config.hash()));
    out << "# config_hash " << buf << "\n";
    out << "# columns: ebn0_db";
    for (const auto& r : config.receivers) out << ' ' << r.id();
    out << "\n";
    for (double ebn0 : config.ebn0_db) {
        std::snprintf(buf, sizeof buf, "%g", ebn0);
        out << buf;
        for (const auto& r : config.receivers) {
            const std::string id = r.id();
            const auto it = std::find_if(records.begin(), records.end(), [&](const BerRecord& rec) {
                return rec.receiver == id && std::abs(rec.ebn0_db - ebn0) < 1e-9;
            });
            if (it == records.end() || !it->error.empty())
                std::snprintf(buf, sizeof buf, "nan");
            else
                std::snprintf(buf, sizeof buf, "%.6e", it->ber);
            out << ' ' << buf;
        }
        out << "\n";
    }
}

void write_data_file(const std::string& path, const SimConfig& config, const std::vector<BerRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write data file '" + path + "'");
    write_data_file(out, config, records);
    out.flush();
    if (!out) throw std::runtime_error("error while writing data file '" + path + "'");
}

std::string emit_plot_script(const std::string& data_path) {
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open data file '" + data_path + "'");
    std::vector<std::string> labels;
    std::size_t width = 0;
    for (std::string line; std::getline(in, line);) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const std::string body = trim(t.substr(1));
            if (body.rfind("columns:", 0) == 0) labels = split_list(body.substr(8));
            continue;
        }
        width = std::max(width, split_list(t).size());
    }
    if (width == 0) width = labels.size();
    if (width < 2) throw std::runtime_error("data file '" + data_path + "' has no BER columns");

    std::ostringstream os;
    os << "set logscale y\n"
       << "set format y \"10^{%L}\"\n"
       << "set xlabel \"10 log10(Eb/N0) in dB\"\n"
       << "set ylabel \"BER\"\n"
       << "set grid\n"
       << "set key bottom left\n"
       << "plot";
    for (std::size_t col = 2; col <= width; ++col) {
        const std::string title = col - 1 < labels.size() ? labels[col - 1] : "column " + std::to_string(col);
        os << (col > 2 ? ", \\\n    " : " ") << '"' << data_path << "\" using 1:" << col
           << " with linespoints title \"" << title << '"';
    }
    os << "\n";
    return os.str();
}

}  // namespace pmd
