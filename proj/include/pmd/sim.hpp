// Monte-Carlo BER sweeps over receiver configurations.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pmd/channel.hpp"
#include "pmd/coding.hpp"
#include "pmd/decoders.hpp"
#include "pmd/trellis.hpp"

namespace pmd {

enum class ReceiverKind { matched, matched_rsse, dfse_va, bcjr_va, product };

/// One receiver column: "matched", "matched-rsse:S", "dfse-va:S", "bcjr-va"
/// or "product".
struct ReceiverSpec {
    ReceiverKind kind = ReceiverKind::matched;
    std::size_t states = 0;

    static ReceiverSpec parse(const std::string& text);
    std::string id() const;
    bool operator==(const ReceiverSpec&) const = default;
};

std::vector<ReceiverSpec> parse_receiver_list(const std::string& text);

/// "a:b:step" (inclusive, tolerant to rounding) or a comma/space list.
std::vector<double> parse_ebn0_grid(const std::string& text);

struct SimConfig {
    std::vector<unsigned> generators{5, 7};
    std::vector<std::string> puncturing{"10", "11"};
    LabelKind labeling = LabelKind::gray;
    int channel_memory = 2;
    std::vector<double> taps;  // overrides channel_memory when non-empty
    std::vector<ReceiverSpec> receivers{{ReceiverKind::matched, 0}, {ReceiverKind::bcjr_va, 0}};
    std::vector<double> ebn0_db{2, 4, 6, 8, 10, 12};
    int frame_bits = 256;
    long long max_frames = 100000;
    long long min_errors = 100;
    std::uint64_t seed = 1;
    bool noiseless = false;
    int threads = 0;  // 0: hardware concurrency; never affects results
    std::size_t state_cap = std::size_t{1} << 20;

    /// Flat "key = value" text; '#' starts a comment. Unknown keys throw.
    static SimConfig parse(std::istream& in);
    static SimConfig from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    void validate() const;
    /// Result-relevant settings in a fixed textual form.
    std::string canonical() const;
    std::uint64_t hash() const;

    CodeSpec code() const;
    PuncturingScheme scheme() const;
    Labeling label() const;
    ChannelTaps channel() const;
    /// Info bits per transmitted symbol.
    double rate() const;
    FrameLayout layout() const;
};

struct BerRecord {
    double ebn0_db = 0.0;
    std::string receiver;
    long long bits = 0;
    long long errors = 0;
    double ber = 0.0;
    long long frames = 0;
    long long frame_errors = 0;
    double wilson_low = 0.0;   // 95% Wilson score interval
    double wilson_high = 0.0;
    std::string error;  // receiver construction failure, empty on success

    double half_width() const { return 0.5 * (wilson_high - wilson_low); }
    bool operator==(const BerRecord&) const = default;
};

/// 95% Wilson score interval for `errors` out of `trials`.
std::pair<double, double> wilson_interval(long long errors, long long trials);

/// Frame decoder shared read-only across worker threads.
class FrameReceiver {
public:
    virtual ~FrameReceiver() = default;
    virtual BitStream decode(std::span<const double> received, double noise_variance,
                             const FrameLayout& layout) const = 0;
};

std::shared_ptr<const FrameReceiver> make_receiver(const SimConfig& config, const ReceiverSpec& spec);

/// Owns a config and the receivers built for it; trellises are built once
/// and reused across points.
class Simulator {
public:
    explicit Simulator(SimConfig config);

    const SimConfig& config() const { return config_; }

    /// Frames for grid point `point_index` until min_errors bit errors or
    /// max_frames. Frame f draws from the substream (seed, receiver id,
    /// point index, f), so results do not depend on the thread count.
    BerRecord run_point(std::size_t point_index, const ReceiverSpec& receiver) const;
    BerRecord run_point(double ebn0_db, const ReceiverSpec& receiver) const;

    /// Grid-major sweep over all configured receivers.
    std::vector<BerRecord> run_sweep() const;

private:
    std::shared_ptr<const FrameReceiver> receiver(const ReceiverSpec& spec) const;
    BerRecord simulate(std::size_t point_index, double ebn0_db, const ReceiverSpec& spec) const;

    SimConfig config_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const FrameReceiver>> cache_;
};

BerRecord run_point(const SimConfig& config, double ebn0_db, const ReceiverSpec& receiver);
std::vector<BerRecord> run_sweep(const SimConfig& config);

/// Column data: '#' header lines with the config hash and column names, then
/// one row per grid point: Eb/N0 followed by one BER per receiver.
void write_data_file(std::ostream& out, const SimConfig& config, const std::vector<BerRecord>& records);
void write_data_file(const std::string& path, const SimConfig& config, const std::vector<BerRecord>& records);

/// gnuplot script (log-y BER over Eb/N0) for a data file written above.
std::string emit_plot_script(const std::string& data_path);

}  // namespace pmd
