#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "pmd/sim.hpp"

using namespace pmd;

namespace {

SimConfig quick_config() {
    SimConfig c;
    c.channel_memory = 2;
    c.receivers = parse_receiver_list("matched,bcjr-va");
    c.ebn0_db = {4.0, 6.0, 8.0};
    c.frame_bits = 32;
    c.min_errors = 30;
    c.max_frames = 300;
    c.seed = 5;
    c.threads = 2;
    return c;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("pmd_test_" + name)).string();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("receiver ids round-trip") {
    for (const char* id : {"matched", "matched-rsse:16", "dfse-va:4", "bcjr-va", "product"})
        CHECK(ReceiverSpec::parse(id).id() == id);
    CHECK(ReceiverSpec::parse(" dfse-va:64 ").states == 64);
    CHECK_THROWS_AS(ReceiverSpec::parse("matched-rsse"), std::invalid_argument);
    CHECK_THROWS_AS(ReceiverSpec::parse("matched:4"), std::invalid_argument);
    CHECK_THROWS_AS(ReceiverSpec::parse("dfse-va:0"), std::invalid_argument);
    CHECK_THROWS_AS(ReceiverSpec::parse("sova"), std::invalid_argument);
    CHECK(parse_receiver_list("matched, bcjr-va").size() == 2);
}

TEST_CASE("Eb/N0 grids") {
    CHECK(parse_ebn0_grid("2:12:2") == std::vector<double>{2, 4, 6, 8, 10, 12});
    CHECK(parse_ebn0_grid("0:1:0.1").size() == 11);
    CHECK(parse_ebn0_grid("5") == std::vector<double>{5});
    CHECK(parse_ebn0_grid("1, 3 7") == std::vector<double>{1, 3, 7});
    CHECK_THROWS(parse_ebn0_grid("3:1:1"));
    CHECK_THROWS(parse_ebn0_grid("1:2:0"));
    CHECK_THROWS(parse_ebn0_grid("1:2"));
    CHECK_THROWS(parse_ebn0_grid(""));
}

TEST_CASE("config file parsing") {
    std::istringstream in(
        "# comment\n"
        "generators = 5, 7\n"
        "puncturing = 10 11   # rows\n"
        "labeling = natural\n"
        "channel_memory = 3\n"
        "receivers = matched, dfse-va:16\n"
        "ebn0 = 0:10:5\n"
        "frame_bits = 64\n"
        "max_frames = 10\n"
        "min_errors = 7\n"
        "seed = 42\n"
        "noiseless = true\n");
    const auto c = SimConfig::parse(in);
    CHECK(c.generators == std::vector<unsigned>{5, 7});
    CHECK(c.puncturing == std::vector<std::string>{"10", "11"});
    CHECK(c.labeling == LabelKind::natural);
    CHECK(c.channel_memory == 3);
    CHECK(c.receivers.size() == 2);
    CHECK(c.ebn0_db == std::vector<double>{0, 5, 10});
    CHECK(c.frame_bits == 64);
    CHECK(c.max_frames == 10);
    CHECK(c.min_errors == 7);
    CHECK(c.seed == 42);
    CHECK(c.noiseless);
    CHECK_NOTHROW(c.validate());
    CHECK(c.rate() == doctest::Approx(4.0 / 3.0));
    CHECK(c.label().m_ary == 4);
}

TEST_CASE("config errors") {
    std::istringstream unknown("colour = blue\n");
    CHECK_THROWS_AS(SimConfig::parse(unknown), std::invalid_argument);
    std::istringstream no_eq("seed 3\n");
    CHECK_THROWS_AS(SimConfig::parse(no_eq), std::invalid_argument);
    std::istringstream bad_octal("generators = 5 9\n");
    CHECK_THROWS_AS(SimConfig::parse(bad_octal), std::invalid_argument);
    SimConfig c;
    c.frame_bits = 33;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SimConfig{};
    c.min_errors = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS(SimConfig::from_file("/nonexistent/pmd.cfg"));
}

TEST_CASE("config hash ignores the thread count only") {
    auto a = quick_config(), b = quick_config();
    b.threads = 7;
    CHECK(a.hash() == b.hash());
    b.seed = 6;
    CHECK(a.hash() != b.hash());
    b = a;
    b.labeling = LabelKind::natural;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("Wilson interval") {
    const auto [lo, hi] = wilson_interval(0, 100);
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(0.037).epsilon(0.01));
    const auto [l2, h2] = wilson_interval(50, 100);
    CHECK(l2 < 0.5);
    CHECK(h2 > 0.5);
    CHECK((l2 + h2) / 2 == doctest::Approx(0.5));
}

TEST_CASE("noiseless runs have no errors") {
    auto c = quick_config();
    c.noiseless = true;
    c.max_frames = 5;
    c.receivers = parse_receiver_list("matched,matched-rsse:4,product,dfse-va:4,bcjr-va");
    for (const auto& rec : run_sweep(c)) {
        CHECK(rec.error.empty());
        CHECK(rec.errors == 0);
        CHECK(rec.ber == 0.0);
        CHECK(rec.frames == 5);
    }
}

TEST_CASE("records are reproducible and conserve bits") {
    const auto c = quick_config();
    const Simulator sim(c);
    const auto a = sim.run_point(std::size_t{0}, c.receivers[0]);
    const auto b = Simulator(c).run_point(std::size_t{0}, c.receivers[0]);
    CHECK(a == b);
    CHECK(a.bits == a.frames * c.frame_bits);
    CHECK(a.ber == doctest::Approx(static_cast<double>(a.errors) / static_cast<double>(a.bits)));
    CHECK(a.frame_errors <= a.frames);
    CHECK(a.ber >= 0.0);
    CHECK(a.ber <= 1.0);
    CHECK((a.errors >= c.min_errors || a.frames == c.max_frames));
    CHECK(a.wilson_low <= a.ber);
    CHECK(a.wilson_high >= a.ber);
    CHECK(run_point(c, 4.0, c.receivers[0]) == a);

    auto other = c;
    other.seed = 6;
    CHECK_FALSE(Simulator(other).run_point(std::size_t{0}, c.receivers[0]) == a);
}

TEST_CASE("thread count does not change results") {
    auto c = quick_config();
    c.threads = 1;
    const auto serial = run_sweep(c);
    c.threads = 5;
    CHECK(run_sweep(c) == serial);
}

TEST_CASE("stopping rule stops at the first frame reaching the error target") {
    auto c = quick_config();
    c.ebn0_db = {0.0};
    c.min_errors = 1;
    c.max_frames = 1000;
    const auto rec = Simulator(c).run_point(std::size_t{0}, c.receivers[0]);
    CHECK(rec.frame_errors == 1);
    CHECK(rec.errors >= 1);
}

TEST_CASE("receiver construction failures land in the record") {
    auto c = quick_config();
    c.state_cap = 8;
    c.receivers = parse_receiver_list("matched,dfse-va:8");
    const Simulator sim(c);
    const auto a = sim.run_point(std::size_t{0}, c.receivers[0]);
    CHECK_FALSE(a.error.empty());
    CHECK(a.bits == 0);
    const auto b = sim.run_point(std::size_t{0}, c.receivers[1]);
    CHECK_FALSE(b.error.empty());
}

TEST_CASE("matched decoding beats BCJR-VA at 10 dB on the memory-2 channel") {
    SimConfig c;
    c.channel_memory = 2;
    c.receivers = parse_receiver_list("matched,bcjr-va");
    c.ebn0_db = {10.0};
    c.min_errors = 100;
    c.seed = 11;
    const Simulator sim(c);
    const auto md = sim.run_point(std::size_t{0}, c.receivers[0]);
    const auto sep = sim.run_point(std::size_t{0}, c.receivers[1]);
    CHECK(md.errors >= 100);
    CHECK(sep.errors >= 100);
    CHECK(md.wilson_high < sep.wilson_low);
}

TEST_CASE("data file layout") {
    const auto c = quick_config();
    const auto records = run_sweep(c);
    std::ostringstream os;
    write_data_file(os, c, records);
    const auto lines = lines_of(os.str());
    REQUIRE(lines.size() == 5);
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.hash()));
    CHECK(lines[0] == std::string("# config_hash ") + hash);
    CHECK(lines[1] == "# columns: ebn0_db matched bcjr-va");
    for (std::size_t i = 0; i < 3; ++i) {
        std::istringstream row(lines[2 + i]);
        double x = 0, b1 = 0, b2 = 0;
        row >> x >> b1 >> b2;
        REQUIRE_FALSE(row.fail());
        std::string extra;
        CHECK_FALSE(static_cast<bool>(row >> extra));
        CHECK(x == c.ebn0_db[i]);
        CHECK(b1 == doctest::Approx(records[2 * i].ber).epsilon(1e-5));
        CHECK(b2 == doctest::Approx(records[2 * i + 1].ber).epsilon(1e-5));
    }
}

TEST_CASE("column order follows the receiver order") {
    auto c = quick_config();
    c.noiseless = true;
    c.max_frames = 1;
    c.receivers = parse_receiver_list("bcjr-va,dfse-va:4,matched");
    std::ostringstream os;
    write_data_file(os, c, run_sweep(c));
    CHECK(lines_of(os.str())[1] == "# columns: ebn0_db bcjr-va dfse-va:4 matched");
}

TEST_CASE("data file writing errors") {
    const auto c = quick_config();
    CHECK_THROWS(write_data_file("/nonexistent-dir/x.dat", c, {}));
}

TEST_CASE("plot script") {
    const auto path = temp_path("plot.dat");
    {
        std::ofstream out(path);
        out << "# config_hash 0000000000000001\n# columns: ebn0_db matched bcjr-va\n2 1e-1 2e-1\n4 1e-2 5e-2\n";
    }
    const auto script = emit_plot_script(path);
    CHECK(script == emit_plot_script(path));
    CHECK(script.find("set logscale y") != std::string::npos);
    CHECK(script.find("using 1:2") != std::string::npos);
    CHECK(script.find("using 1:3") != std::string::npos);
    CHECK(script.find("using 1:4") == std::string::npos);
    CHECK(script.find("title \"matched\"") != std::string::npos);
    CHECK(script.find("title \"bcjr-va\"") != std::string::npos);
    std::filesystem::remove(path);
    CHECK_THROWS(emit_plot_script(path));
}
