#include "avs/traces.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "avs/errors.hpp"

namespace avs {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void TraceSet::add(const std::string& instance_id, const ResidualTrace& trace, bool keep_full) {
    if (trace.num_layers() != num_layers || trace.hidden_dim() != hidden_dim) {
        throw ShapeError("trace for '" + instance_id + "' does not match the trace set header");
    }
    TraceRecord rec;
    rec.instance_id = instance_id;
    rec.correctness = trace.correctness;
    rec.states = trace.extraction_states();
    if (keep_full) rec.full = trace.states;
    records.push_back(std::move(rec));
}

namespace {

constexpr std::string_view kTraceMagic = "avs-traces";
constexpr std::string_view kVectorMagic = "avs-steering-vector";
constexpr int kFormatVersion = 1;

void write_row(std::ostream& os, std::span<const double> row) {
    for (double v : row) os << ' ' << format_double(v);
    os << '\n';
}

// Line-oriented reader that reports the file and line of every failure.
class LineReader {
public:
    LineReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path.string() + "'");
    }

    std::vector<std::string> next(const std::string& expecting) {
        std::string line;
        if (!std::getline(in_, line)) fail(expecting, "unexpected end of file");
        ++line_;
        std::istringstream is(line);
        std::vector<std::string> words;
        for (std::string w; is >> w;) words.push_back(std::move(w));
        if (words.empty()) fail(expecting, "empty line");
        return words;
    }

    std::string keyed(const std::string& key) {
        auto words = next(key);
        if (words.size() != 2 || words[0] != key) fail(key, "expected '" + key + " <value>'");
        return words[1];
    }

    std::size_t keyed_count(const std::string& key) { return to_count(keyed(key), key); }

    std::size_t to_count(const std::string& s, const std::string& field) {
        std::size_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(field, "not a count: " + s);
        return v;
    }

    double to_double(const std::string& s, const std::string& field) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(field, "not a number: " + s);
        return v;
    }

    void read_row(std::span<double> dst, const std::vector<std::string>& words, std::size_t skip,
                  const std::string& field) {
        if (words.size() != skip + dst.size()) {
            fail(field, "expected " + std::to_string(dst.size()) + " values, found " +
                            std::to_string(words.size() - std::min(words.size(), skip)));
        }
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = to_double(words[skip + i], field);
    }

    void expect_layer(const std::vector<std::string>& words, std::size_t layer, const std::string& field) {
        if (to_count(words[0], field) != layer) {
            fail(field, "expected layer " + std::to_string(layer) + ", found " + words[0]);
        }
    }

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw IngestionError(path_.filename().string() + ":" + std::to_string(line_) + ": field '" +
                             field + "': " + what);
    }

    bool at_end() {
        std::string rest;
        while (std::getline(in_, rest)) {
            ++line_;
            if (rest.find_first_not_of(" \t\r") != std::string::npos) return false;
        }
        return true;
    }

    void header(std::string_view magic) {
        auto words = next("format");
        if (words.size() != 2 || words[0] != magic) fail("format", "expected '" + std::string(magic) + " <version>'");
        if (to_count(words[1], "version") != kFormatVersion) {
            fail("version", "unsupported version " + words[1]);
        }
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t line_ = 0;
};

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

void save_traces(const TraceSet& traces, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << kTraceMagic << ' ' << kFormatVersion << '\n'
        << "model_id " << traces.model_id << '\n'
        << "num_layers " << traces.num_layers << '\n'
        << "hidden_dim " << traces.hidden_dim << '\n'
        << "layer_index_base " << traces.layer_index_base << '\n'
        << "channel " << traces.channel << '\n'
        << "records " << traces.records.size() << '\n';
    for (const auto& r : traces.records) {
        if (r.states.rows != traces.num_layers || r.states.cols != traces.hidden_dim) {
            throw ShapeError("trace '" + r.instance_id + "' does not match the header dimensions");
        }
        const std::size_t positions = r.full ? r.full->front().rows : 0;
        out << "record " << r.instance_id << ' ' << to_string(r.correctness) << ' ' << positions
            << '\n';
        for (std::size_t l = 0; l < traces.num_layers; ++l) {
            out << (l + 1);
            write_row(out, r.states.row(l));
        }
        for (std::size_t l = 0; r.full && l < traces.num_layers; ++l) {
            for (std::size_t t = 0; t < positions; ++t) {
                out << (l + 1) << ' ' << t;
                write_row(out, (*r.full)[l].row(t));
            }
        }
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

TraceSet load_traces(const std::filesystem::path& path) {
    LineReader in(path);
    in.header(kTraceMagic);
    TraceSet set;
    set.model_id = in.keyed("model_id");
    set.num_layers = in.keyed_count("num_layers");
    set.hidden_dim = in.keyed_count("hidden_dim");
    const auto base = in.keyed_count("layer_index_base");
    if (base != 1) in.fail("layer_index_base", "only 1-based layer indices are supported");
    set.channel = in.keyed("channel");
    const auto count = in.keyed_count("records");
    if (set.num_layers == 0 || set.hidden_dim == 0) in.fail("num_layers", "dimensions must be positive");

    for (std::size_t i = 0; i < count; ++i) {
        auto words = in.next("record");
        if (words.size() != 4 || words[0] != "record") {
            in.fail("record", "expected 'record <instance_id> <correctness> <positions>'");
        }
        TraceRecord r;
        r.instance_id = words[1];
        try {
            r.correctness = parse_correctness(words[2]);
        } catch (const IngestionError& e) {
            in.fail("correctness", e.what());
        }
        const std::size_t positions = in.to_count(words[3], "positions");
        r.states = Matrix(set.num_layers, set.hidden_dim);
        for (std::size_t l = 0; l < set.num_layers; ++l) {
            auto row = in.next("states");
            in.expect_layer(row, l + 1, "states");
            in.read_row(r.states.row(l), row, 1, "states");
        }
        if (positions > 0) {
            r.full.emplace(set.num_layers, Matrix(positions, set.hidden_dim));
            for (std::size_t l = 0; l < set.num_layers; ++l) {
                for (std::size_t t = 0; t < positions; ++t) {
                    auto row = in.next("full_states");
                    in.expect_layer(row, l + 1, "full_states");
                    if (row.size() < 2 || in.to_count(row[1], "full_states") != t) {
                        in.fail("full_states", "expected position " + std::to_string(t));
                    }
                    in.read_row((*r.full)[l].row(t), row, 2, "full_states");
                }
            }
        }
        set.records.push_back(std::move(r));
    }
    if (!in.at_end()) in.fail("records", "more data than the declared record count");
    return set;
}

void save_steering_vector(const SteeringVector& vector, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << kVectorMagic << ' ' << kFormatVersion << '\n'
        << "model_id " << vector.model_id << '\n'
        << "num_layers " << vector.num_layers() << '\n'
        << "hidden_dim " << vector.hidden_dim() << '\n'
        << "layer_index_base 1\n";
    for (std::size_t l = 0; l < vector.num_layers(); ++l) {
        out << (l + 1);
        write_row(out, vector.rows.row(l));
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SteeringVector load_steering_vector(const std::filesystem::path& path) {
    LineReader in(path);
    in.header(kVectorMagic);
    SteeringVector v;
    v.model_id = in.keyed("model_id");
    const auto layers = in.keyed_count("num_layers");
    const auto dim = in.keyed_count("hidden_dim");
    if (in.keyed_count("layer_index_base") != 1) {
        in.fail("layer_index_base", "only 1-based layer indices are supported");
    }
    if (layers == 0 || dim == 0) in.fail("num_layers", "dimensions must be positive");
    v.rows = Matrix(layers, dim);
    for (std::size_t l = 0; l < layers; ++l) {
        auto row = in.next("values");
        in.expect_layer(row, l + 1, "values");
        in.read_row(v.rows.row(l), row, 1, "values");
    }
    if (!in.at_end()) in.fail("num_layers", "more rows than declared");
    return v;
}

}  // namespace avs
