#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "avs/errors.hpp"
#include "avs/traces.hpp"
#include "test_support.hpp"

using namespace avs;
using namespace avs::testing;

namespace {

TraceSet sample_traces(bool with_full) {
    CounterRng rng(21);
    TraceSet set;
    set.model_id = "m0123";
    set.num_layers = 3;
    set.hidden_dim = 5;
    for (int i = 0; i < 4; ++i) {
        TraceRecord r;
        r.instance_id = "inst-" + std::to_string(i);
        r.correctness = i % 2 ? Correctness::incorrect : Correctness::correct;
        r.states = Matrix(3, 5);
        r.states.data = random_vector(rng, 15, 1e3);
        if (with_full) {
            std::vector<Matrix> full;
            for (int l = 0; l < 3; ++l) {
                Matrix m(2, 5);
                m.data = random_vector(rng, 10);
                full.push_back(m);
            }
            r.full = full;
        }
        set.records.push_back(std::move(r));
    }
    set.records[0].states.data[0] = 0.1;
    set.records[0].states.data[1] = -0.0;
    set.records[0].states.data[2] = std::numeric_limits<double>::denorm_min();
    set.records[0].states.data[3] = 1e300;
    return set;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

std::string ingestion_message(const std::filesystem::path& p) {
    try {
        load_traces(p);
    } catch (const IngestionError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("format_double round-trips") {
    CounterRng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-300, 300));
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("trace files round-trip bit for bit") {
    const auto dir = scratch_dir("traces_rt");
    for (bool full : {false, true}) {
        const auto set = sample_traces(full);
        save_traces(set, dir / "t.txt");
        const auto back = load_traces(dir / "t.txt");
        CHECK(back == set);
        CHECK(std::signbit(back.records[0].states.data[1]));
        save_traces(back, dir / "t2.txt");
        CHECK(slurp(dir / "t.txt") == slurp(dir / "t2.txt"));
    }
}

TEST_CASE("channel tag is preserved and flagged") {
    const auto dir = scratch_dir("traces_channel");
    auto set = sample_traces(false);
    set.channel = "altup-aux";
    save_traces(set, dir / "aux.txt");
    const auto back = load_traces(dir / "aux.txt");
    CHECK(back.channel == "altup-aux");
    CHECK_FALSE(back.is_main_channel());
}

TEST_CASE("malformed trace files name the line and field") {
    const auto dir = scratch_dir("traces_bad");
    save_traces(sample_traces(false), dir / "good.txt");
    const std::string good = slurp(dir / "good.txt");

    // Layer count mismatch: header says 4 but records carry 3 rows.
    std::string bad = good;
    bad.replace(bad.find("num_layers 3"), 12, "num_layers 4");
    spit(dir / "layers.txt", bad);
    const std::string msg = ingestion_message(dir / "layers.txt");
    CHECK(msg.find("layers.txt:") != std::string::npos);
    CHECK_FALSE(msg.empty());

    // Truncated file.
    spit(dir / "short.txt", good.substr(0, good.size() / 2));
    const std::string trunc = ingestion_message(dir / "short.txt");
    CHECK(trunc.find("short.txt:") != std::string::npos);

    // A non-numeric value is reported with its line number.
    bad = good;
    const auto pos = bad.find("\n1 ", bad.find("record inst-1"));
    bad.replace(pos + 3, 1, "x");
    spit(dir / "nan.txt", bad);
    std::size_t line = 1;
    for (std::size_t i = 0; i <= pos; ++i) line += bad[i] == '\n';
    CHECK(ingestion_message(dir / "nan.txt").find(":" + std::to_string(line) + ":") !=
          std::string::npos);

    // Unknown correctness label.
    bad = good;
    bad.replace(bad.find("record inst-0 correct"), 21, "record inst-0 perhaps");
    spit(dir / "label.txt", bad);
    CHECK_FALSE(ingestion_message(dir / "label.txt").empty());

    // Wrong magic.
    spit(dir / "magic.txt", "something else\n");
    CHECK_FALSE(ingestion_message(dir / "magic.txt").empty());

    CHECK_THROWS_AS(load_traces(dir / "absent.txt"), IoError);
}

TEST_CASE("steering vector files round-trip bit for bit") {
    const auto dir = scratch_dir("vector_rt");
    CounterRng rng(5);
    SteeringVector v{"m-abc", Matrix(6, 7)};
    v.rows.data = random_vector(rng, 42, 1e-3);
    save_steering_vector(v, dir / "v.txt");
    const auto back = load_steering_vector(dir / "v.txt");
    CHECK(back == v);

    std::string text = slurp(dir / "v.txt");
    text.replace(text.find("hidden_dim 7"), 12, "hidden_dim 8");
    spit(dir / "bad.txt", text);
    CHECK_THROWS_AS(load_steering_vector(dir / "bad.txt"), IngestionError);
}
