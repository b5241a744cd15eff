// Self-checks shared by the `selftest` command and the acceptance suite.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pmd/channel.hpp"
#include "pmd/coding.hpp"

namespace pmd {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Matched and product state counts of the (5,7) 4-ASK reference setup.
CheckResult check_state_counts();

/// Matched Viterbi against exhaustive search, L in {0,1,2}, Eb/N0 in
/// {2,6,10} dB, 8/10/12 info bits per frame.
CheckResult check_oracle_equivalence(int frames_per_config, std::uint64_t seed);

/// Minimum squared Euclidean distance between distinct paths of `info_bits`
/// free bits, matched against product trellis, L in {0,1,2}.
CheckResult check_distance_preservation(int info_bits);

/// L = 0: matched decoder against a bit-buffer code trellis, frame by frame.
CheckResult check_no_isi_decoder(int frames, std::uint64_t seed);

/// L = 0: BCJR bit LLRs against the closed-form AWGN demapper.
CheckResult check_no_isi_llrs(int frames, std::uint64_t seed, double tolerance);

/// Same-seed sweeps agree across reruns, thread counts and concurrent runs.
CheckResult check_determinism(long long max_frames);

/// Runs the quick variants of all checks; prints one line per check.
bool run_selftest(std::ostream& out);

namespace oracle {

/// ML decoding of the punctured code over a memoryless channel using the
/// mother-code trellis extended by the not yet transmitted kept bits of the
/// current symbol. Ties keep the lower state, then input 0.
BitStream punctured_code_ml(std::span<const double> received, const CodeSpec& code, const PuncturingScheme& scheme,
                            const Labeling& label, const FrameLayout& layout);

/// Per-bit LLRs of one received sample for M-ASK in AWGN, MSB first,
/// computed by direct summation.
std::vector<double> ask_bit_llrs(double received, const Labeling& label, double noise_variance);

}  // namespace oracle

}  // namespace pmd
