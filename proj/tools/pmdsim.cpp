// Command-line front end: BER sweeps, self-test, trellis dumps, plot scripts.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pmd/selftest.hpp"
#include "pmd/sim.hpp"
#include "pmd/trellis.hpp"

namespace {

void print_records(std::ostream& out, const std::vector<pmd::BerRecord>& records) {
    char line[256];
    std::snprintf(line, sizeof line, "%8s  %-18s %12s %10s %12s %9s  %s\n", "ebn0_db", "receiver", "bits", "errors",
                  "ber", "+/-95%", "frames");
    out << line;
    for (const auto& r : records) {
        if (!r.error.empty()) {
            std::snprintf(line, sizeof line, "%8g  %-18s  error: ", r.ebn0_db, r.receiver.c_str());
            out << line << r.error << "\n";
            continue;
        }
        std::snprintf(line, sizeof line, "%8g  %-18s %12lld %10lld %12.4e %9.2e  %lld\n", r.ebn0_db,
                      r.receiver.c_str(), r.bits, r.errors, r.ber, r.half_width(), r.frames);
        out << line;
    }
}

pmd::SimConfig load_config(const std::string& path) {
    return path.empty() ? pmd::SimConfig{} : pmd::SimConfig::from_file(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint equalization and decoding of punctured codes on ISI channels"};
    app.require_subcommand(1);

    std::string config_path, ebn0, receivers, out_path, plot_path;
    std::uint64_t seed = 0;
    int threads = -1;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo BER sweep");
    simulate->add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--ebn0", ebn0, "Eb/N0 grid in dB, a:b:step");
    simulate->add_option("--seed", seed, "base seed");
    simulate->add_option("--out", out_path, "data file (default: standard output)");
    simulate->add_option("--receivers", receivers, "comma separated receiver list");
    simulate->add_option("--threads", threads, "worker threads, 0 for all cores");
    simulate->add_option("--plot", plot_path, "also write a gnuplot script for the data file");

    auto* selftest = app.add_subcommand("selftest", "state counts, oracle equivalence and calibration checks");

    std::string data_path, script_path;
    auto* plot = app.add_subcommand("plot", "emit a gnuplot script for a data file");
    plot->add_option("data", data_path, "data file written by simulate")->required();
    plot->add_option("--out", script_path, "script file (default: standard output)");

    std::string dump_config;
    int phase = -1;
    bool product = false;
    auto* dump = app.add_subcommand("dump", "print trellis sections, one transition per line");
    dump->add_option("--config", dump_config, "configuration file (default: reference setup)");
    dump->add_option("--phase", phase, "single phase to print");
    dump->add_flag("--product", product, "dump the straightforward product trellis");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            auto config = load_config(config_path);
            if (!ebn0.empty()) config.set("ebn0", ebn0);
            if (simulate->count("--seed")) config.seed = seed;
            if (!receivers.empty()) config.set("receivers", receivers);
            if (threads >= 0) config.threads = threads;
            const auto records = pmd::Simulator(config).run_sweep();
            if (out_path.empty()) {
                pmd::write_data_file(std::cout, config, records);
                print_records(std::cerr, records);
            } else {
                pmd::write_data_file(out_path, config, records);
                print_records(std::cout, records);
                if (!plot_path.empty()) {
                    std::ofstream script(plot_path);
                    if (!script) throw std::runtime_error("cannot write '" + plot_path + "'");
                    script << pmd::emit_plot_script(out_path);
                }
            }
            for (const auto& r : records)
                if (!r.error.empty()) return 1;
            return 0;
        }
        if (selftest->parsed()) return pmd::run_selftest(std::cout) ? 0 : 1;
        if (plot->parsed()) {
            const auto script = pmd::emit_plot_script(data_path);
            if (script_path.empty()) {
                std::cout << script;
            } else {
                std::ofstream out(script_path);
                if (!out) throw std::runtime_error("cannot write '" + script_path + "'");
                out << script;
            }
            return 0;
        }
        if (dump->parsed()) {
            const auto config = load_config(dump_config);
            config.validate();
            pmd::TrellisOptions opts;
            opts.state_cap = config.state_cap;
            const auto trellis =
                product ? pmd::build_product_trellis(config.code(), config.scheme(), config.label(), config.channel(), opts)
                              .trellis
                        : pmd::build_matched_trellis(config.code(), config.scheme(), config.label(), config.channel(), opts);
            if (phase >= static_cast<int>(trellis.period()))
                throw std::invalid_argument("phase out of range, period is " + std::to_string(trellis.period()));
            for (std::size_t p = 0; p < trellis.period(); ++p)
                if (phase < 0 || static_cast<std::size_t>(phase) == p) std::cout << pmd::dump_section(trellis, p);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
