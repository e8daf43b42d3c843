#include "avs/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "avs/errors.hpp"
#include "avs/hash.hpp"
#include "avs/rng.hpp"
#include "avs/tokenizer.hpp"

namespace avs {

using nlohmann::ordered_json;

const char* to_string(TaskKind kind) {
    return kind == TaskKind::binary ? "binary" : "multiple_choice";
}

TaskKind parse_task_kind(std::string_view s) {
    if (s == "binary") return TaskKind::binary;
    if (s == "multiple_choice") return TaskKind::multiple_choice;
    throw IngestionError("unknown task_kind '" + std::string(s) + "'");
}

bool is_binary_division(std::string_view division) {
    return std::find(kBinaryDivisions.begin(), kBinaryDivisions.end(), division) !=
           kBinaryDivisions.end();
}

namespace {

std::string option_letter(std::size_t index) {
    return std::string(1, static_cast<char>('A' + index));
}

bool is_option_letter(std::string_view s, std::size_t option_count) {
    const std::size_t limit = option_count == 0 ? tokens::kMaxOptions : option_count;
    return s.size() == 1 && s[0] >= 'A' && static_cast<std::size_t>(s[0] - 'A') < limit;
}

}  // namespace

void QaInstance::validate() const {
    if (task_kind == TaskKind::binary) {
        if (gold != "yes" && gold != "no") {
            throw ArgumentError(instance_id + ": binary gold must be yes or no");
        }
        if (!is_binary_division(division)) {
            throw ArgumentError(instance_id + ": binary division '" + division + "' is not one of "
                                "adversarial, popular, random");
        }
    } else {
        if (option_count != 4 && option_count != 5) {
            throw ArgumentError(instance_id + ": option_count must be 4 or 5");
        }
        if (!is_option_letter(gold, option_count)) {
            throw ArgumentError(instance_id + ": gold must be an option letter");
        }
    }
}

// ---------------------------------------------------------------------------
// Synthetic dataset

void GeneratorSpec::validate() const {
    auto fail = [](const std::string& field, const std::string& rule) {
        throw ConfigError("generator." + field + ": " + rule);
    };
    const std::pair<const char*, std::size_t> divisions[] = {
        {"adversarial", adversarial}, {"popular", popular}, {"random", random}};
    for (const auto& [name, count] : divisions) {
        if (count % 2 != 0) fail(name, "must be even so yes/no answers balance");
    }
    if (adversarial + popular + random + multiple_choice == 0) {
        fail("adversarial", "dataset would be empty");
    }
    if (event_count < 4 || event_count % 2 != 0) {
        fail("event_count", "must be even and >= 4 (events form co-occurring pairs)");
    }
    if (option_count != 4 && option_count != 5) fail("option_count", "must be 4 or 5");
    if (multiple_choice > 0 && event_count < option_count) {
        fail("event_count", "must be >= option_count for multiple-choice items");
    }
    if (feature_dim < 1) fail("feature_dim", "must be >= 1");
    if (event_span < 1) fail("event_span", "must be >= 1");
    if (frame_count < 2 * event_span) fail("frame_count", "must hold two event spans");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) fail("noise_std", "must be >= 0");
    if (!(event_amplitude > 0.0) || !std::isfinite(event_amplitude)) {
        fail("event_amplitude", "must be > 0");
    }
}

Matrix event_prototypes(const GeneratorSpec& spec, std::uint64_t seed) {
    CounterRng rng(seed, fnv1a64("event-prototypes"));
    Matrix protos(spec.event_count, spec.feature_dim);
    const double target = std::sqrt(static_cast<double>(spec.feature_dim));
    for (std::size_t e = 0; e < spec.event_count; ++e) {
        auto row = protos.row(e);
        for (double& v : row) v = rng.normal();
        const double n = l2_norm(row);
        for (double& v : row) v *= target / n;
    }
    return protos;
}

namespace {

class InstanceBuilder {
public:
    InstanceBuilder(const GeneratorSpec& spec, const Matrix& protos, std::uint64_t seed,
                    const std::string& instance_id)
        : spec_(spec), protos_(protos), rng_(seed, fnv1a64(instance_id)) {}

    // Frequency-weighted draw: event k has weight 1 / (k + 1).
    std::size_t popular_event() {
        double total = 0.0;
        for (std::size_t k = 0; k < spec_.event_count; ++k) total += 1.0 / static_cast<double>(k + 1);
        double u = rng_.next_unit() * total;
        for (std::size_t k = 0; k < spec_.event_count; ++k) {
            u -= 1.0 / static_cast<double>(k + 1);
            if (u < 0.0) return k;
        }
        return spec_.event_count - 1;
    }

    std::size_t uniform_other(const std::vector<std::size_t>& exclude) {
        std::vector<std::size_t> pool;
        for (std::size_t k = 0; k < spec_.event_count; ++k) {
            if (std::find(exclude.begin(), exclude.end(), k) == exclude.end()) pool.push_back(k);
        }
        return pool[rng_.below(pool.size())];
    }

    bool coin() { return rng_.next_unit() < 0.5; }
    std::size_t below(std::size_t n) { return rng_.below(n); }

    AudioFeatureSequence render(const std::vector<std::size_t>& present,
                                std::vector<PlantedEvent>& planted) {
        const std::size_t slots = spec_.frame_count / spec_.event_span;
        std::vector<std::size_t> order(slots);
        for (std::size_t i = 0; i < slots; ++i) order[i] = i;
        for (std::size_t i = 0; i + 1 < slots; ++i) {
            std::swap(order[i], order[i + rng_.below(slots - i)]);
        }

        AudioFeatureSequence audio{Matrix(spec_.frame_count, spec_.feature_dim)};
        for (double& v : audio.frames.data) v = spec_.noise_std * rng_.normal();
        for (std::size_t i = 0; i < present.size(); ++i) {
            PlantedEvent ev{present[i], order[i] * spec_.event_span, spec_.event_span};
            for (std::size_t f = ev.first_frame; f < ev.first_frame + ev.frame_span; ++f) {
                auto frame = audio.frames.row(f);
                const auto proto = protos_.row(ev.event);
                for (std::size_t j = 0; j < frame.size(); ++j) {
                    frame[j] += spec_.event_amplitude * proto[j];
                }
            }
            planted.push_back(ev);
        }
        return audio;
    }

private:
    const GeneratorSpec& spec_;
    const Matrix& protos_;
    CounterRng rng_;
};

std::string index_suffix(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return buf;
}

std::string event_word(std::size_t k) { return "event" + std::to_string(k); }

QaInstance make_binary(const GeneratorSpec& spec, const Matrix& protos, std::uint64_t seed,
                       std::string_view division, std::size_t index) {
    QaInstance inst;
    inst.instance_id = std::string(division) + "-" + index_suffix(index);
    inst.task_kind = TaskKind::binary;
    inst.division = std::string(division);
    const bool yes = index % 2 == 0;
    inst.gold = yes ? "yes" : "no";

    InstanceBuilder b(spec, protos, seed, inst.instance_id);
    const std::size_t primary = b.popular_event();
    std::vector<std::size_t> present{primary};
    std::size_t query = 0;

    if (division == "adversarial") {
        const std::size_t partner = primary ^ 1u;
        if (yes) present.push_back(partner);
        query = partner;
    } else {
        if (yes && b.coin()) present.push_back(b.uniform_other(present));
        auto absent_lowest = [&] {
            for (std::size_t k = 0;; ++k) {
                if (std::find(present.begin(), present.end(), k) == present.end()) return k;
            }
        };
        if (division == "popular") {
            query = yes ? *std::min_element(present.begin(), present.end()) : absent_lowest();
        } else {
            query = yes ? present[b.below(present.size())] : b.uniform_other(present);
        }
    }

    inst.queried_event = query;
    inst.question = "Is there a sound of " + event_word(query) + " in the audio?";
    inst.audio = b.render(present, inst.events);
    return inst;
}

QaInstance make_multiple_choice(const GeneratorSpec& spec, const Matrix& protos,
                                std::uint64_t seed, std::size_t index) {
    QaInstance inst;
    inst.instance_id = "mc-" + index_suffix(index);
    inst.task_kind = TaskKind::multiple_choice;
    inst.division = "test";
    inst.option_count = spec.option_count;

    InstanceBuilder b(spec, protos, seed, inst.instance_id);
    const std::size_t primary = b.popular_event();
    std::vector<std::size_t> options{primary};
    while (options.size() < spec.option_count) options.push_back(b.uniform_other(options));
    const std::size_t gold = b.below(spec.option_count);
    std::swap(options[0], options[gold]);

    inst.gold = option_letter(gold);
    inst.queried_event = primary;
    std::ostringstream q;
    q << "Which sound event occurs in the audio?";
    for (std::size_t i = 0; i < options.size(); ++i) {
        q << " (" << option_letter(i) << ") " << event_word(options[i]);
    }
    inst.question = q.str();
    inst.audio = b.render({primary}, inst.events);
    return inst;
}

}  // namespace

std::vector<QaInstance> generate_synthetic_dataset(const GeneratorSpec& spec, std::uint64_t seed) {
    spec.validate();
    const Matrix protos = event_prototypes(spec, seed);
    const std::size_t counts[] = {spec.adversarial, spec.popular, spec.random};

    std::vector<QaInstance> out;
    for (std::size_t d = 0; d < kBinaryDivisions.size(); ++d) {
        for (std::size_t i = 0; i < counts[d]; ++i) {
            out.push_back(make_binary(spec, protos, seed, kBinaryDivisions[d], i));
        }
    }
    for (std::size_t i = 0; i < spec.multiple_choice; ++i) {
        out.push_back(make_multiple_choice(spec, protos, seed, i));
    }
    return out;
}

QaInstance build_negative_instance(const QaInstance& instance) {
    QaInstance neg = instance;
    neg.audio = instance.audio.silent_copy();
    return neg;
}

// ---------------------------------------------------------------------------
// Prompt protocol and answer normalization

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string wrap(std::string_view question, std::string_view postfix) {
    const std::string_view q = trim(question);
    if (q.empty()) throw ArgumentError("question must not be empty");
    if (q.starts_with(kPromptPrefix) && q.ends_with(postfix)) return std::string(q);
    std::string out;
    out.reserve(kPromptPrefix.size() + q.size() + postfix.size() + 2);
    out.append(kPromptPrefix).append(" ").append(q).append(" ").append(postfix);
    return out;
}

// Lowercased leading word with surrounding punctuation removed.
std::string leading_word(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) ||
                               std::ispunct(static_cast<unsigned char>(text[i])))) {
        ++i;
    }
    std::string word;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
        ++i;
    }
    return word;
}

}  // namespace

std::string apply_prompt_protocol(std::string_view question) {
    return wrap(question, kYesNoPostfix);
}

std::string apply_option_protocol(std::string_view question) {
    return wrap(question, kOptionPostfix);
}

PromptTokens prompt_tokens(const QaInstance& instance, std::size_t vocab_size) {
    const std::string text = instance.task_kind == TaskKind::binary
                                 ? apply_prompt_protocol(instance.question)
                                 : apply_option_protocol(instance.question);
    return tokenize(text, vocab_size);
}

const char* to_string(Answer a) {
    switch (a) {
        case Answer::yes: return "yes";
        case Answer::no: return "no";
        case Answer::invalid: break;
    }
    return "invalid";
}

Answer normalize_answer(std::string_view generated_text) {
    const std::string word = leading_word(generated_text);
    if (word == "yes") return Answer::yes;
    if (word == "no") return Answer::no;
    return Answer::invalid;
}

std::optional<std::size_t> normalize_option(std::string_view generated_text,
                                            std::size_t option_count) {
    const std::string word = leading_word(generated_text);
    const std::size_t limit = option_count == 0 ? tokens::kMaxOptions : option_count;
    if (word.size() == 1 && word[0] >= 'a' && static_cast<std::size_t>(word[0] - 'a') < limit) {
        return static_cast<std::size_t>(word[0] - 'a');
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Metrics

EvalMetrics compute_metrics(const ConfusionCounts& c) {
    const auto total = c.total();
    if (total == 0) throw ArgumentError("compute_metrics: no scored instances");
    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    EvalMetrics m;
    m.accuracy = ratio(c.tp + c.tn, total);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    if (m.precision && m.recall) m.f1 = f1_score(*m.precision, *m.recall);
    return m;
}

std::optional<double> f1_score(double precision, double recall) {
    if (precision + recall == 0.0) return std::nullopt;
    return 2.0 * precision * recall / (precision + recall);
}

std::string PredictionRecord::normalized() const {
    if (task_kind == TaskKind::binary) return to_string(normalize_answer(predicted_text));
    const auto opt = normalize_option(predicted_text, option_count);
    return opt ? option_letter(*opt) : std::string("invalid");
}

const DivisionScore* ScoreReport::find(TaskKind kind, std::string_view division) const {
    for (const auto& r : rows) {
        if (r.task_kind == kind && r.division == division) return &r;
    }
    return nullptr;
}

ScoreReport score_predictions(const std::vector<PredictionRecord>& records) {
    std::set<std::string> seen;
    std::map<std::string, ConfusionCounts> binary;
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> choice;  // count, correct

    for (const auto& r : records) {
        if (!seen.insert(r.instance_id).second) {
            throw IngestionError("duplicate instance_id '" + r.instance_id + "'");
        }
        const std::string pred = r.normalized();
        if (r.task_kind == TaskKind::binary) {
            if (r.gold != "yes" && r.gold != "no") {
                throw IngestionError(r.instance_id + ": binary gold must be yes or no");
            }
            if (!is_binary_division(r.division)) {
                throw IngestionError(r.instance_id + ": unknown binary division '" + r.division + "'");
            }
            ConfusionCounts& c = binary[r.division];
            if (r.gold == "yes") (pred == "yes" ? c.tp : c.fn) += 1;
            else (pred == "no" ? c.tn : c.fp) += 1;
        } else {
            if (!is_option_letter(r.gold, r.option_count)) {
                throw IngestionError(r.instance_id + ": multiple-choice gold must be an option letter");
            }
            if (r.division.empty()) throw IngestionError(r.instance_id + ": empty division");
            auto& [count, correct] = choice[r.division];
            ++count;
            if (pred == r.gold) ++correct;
        }
    }

    ScoreReport report;
    if (!binary.empty()) {
        ConfusionCounts total;
        for (std::string_view div : kBinaryDivisions) {
            auto it = binary.find(std::string(div));
            if (it == binary.end()) {
                report.warnings.push_back("division '" + std::string(div) +
                                          "' has no records and is omitted; Total covers the rest");
                continue;
            }
            DivisionScore row;
            row.division = std::string(div);
            row.confusion = it->second;
            row.count = it->second.total();
            row.correct = it->second.tp + it->second.tn;
            row.metrics = compute_metrics(it->second);
            report.rows.push_back(row);
            total += it->second;
        }
        DivisionScore row;
        row.division = "total";
        row.confusion = total;
        row.count = total.total();
        row.correct = total.tp + total.tn;
        row.metrics = compute_metrics(total);
        report.rows.push_back(row);
    }
    for (const auto& [division, tally] : choice) {
        DivisionScore row;
        row.task_kind = TaskKind::multiple_choice;
        row.division = division;
        row.count = tally.first;
        row.correct = tally.second;
        row.metrics.accuracy = static_cast<double>(tally.second) / static_cast<double>(tally.first);
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate(const Model& model, const std::vector<QaInstance>& dataset,
                    const EvalOptions& options) {
    if (dataset.empty()) throw ArgumentError("evaluate: empty dataset");
    const std::size_t n = dataset.size();
    const std::size_t vocab = model.config.vocab_size;

    std::vector<PredictionRecord> records(n);
    std::vector<ResidualTrace> traces(n);
    std::vector<char> truncated(n, 0);
    std::vector<std::exception_ptr> failures(n);

    auto run_one = [&](std::size_t i) {
        const QaInstance& inst = dataset[i];
        try {
            inst.validate();
            const PromptTokens prompt = prompt_tokens(inst, vocab);
            std::optional<InterventionPlan> own;
            const InterventionPlan* plan = options.plan ? &*options.plan : nullptr;
            if (options.per_instance_schedule) {
                own = make_intervention(
                    extract_steering_vector(model, ContrastivePair::from(inst.audio, prompt)),
                    *options.per_instance_schedule, options.renormalize);
                plan = &*own;
            }
            DecodeResult dec = greedy_decode(model, inst.audio, prompt, plan, options.max_new_tokens);

            PredictionRecord& rec = records[i];
            rec.instance_id = inst.instance_id;
            rec.task_kind = inst.task_kind;
            rec.division = inst.division;
            rec.gold = inst.gold;
            rec.option_count = inst.option_count;
            rec.predicted_text = detokenize(dec.tokens, vocab);
            dec.first_step_trace.correctness =
                rec.is_correct() ? Correctness::correct : Correctness::incorrect;
            traces[i] = std::move(dec.first_step_trace);
            truncated[i] = dec.truncated;
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };

    if (options.parallel) {
        const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < count; ++i) run_one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!failures[i]) continue;
        try {
            std::rethrow_exception(failures[i]);
        } catch (const Error& e) {
            throw_error(e.kind(), "instance '" + dataset[i].instance_id + "': " + e.what());
        }
    }

    EvalResult result;
    result.traces.model_id = model.model_id();
    result.traces.num_layers = model.config.num_layers;
    result.traces.hidden_dim = model.config.hidden_dim;
    for (std::size_t i = 0; i < n; ++i) {
        result.traces.add(dataset[i].instance_id, traces[i], options.keep_full_traces);
        result.truncated += truncated[i] ? 1 : 0;
    }
    result.report = score_predictions(records);
    result.records = std::move(records);
    return result;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        try {
            fn(ordered_json::parse(line), where);
        } catch (const ordered_json::exception& e) {
            throw IngestionError(where + ": " + e.what());
        } catch (const ArgumentError& e) {
            throw IngestionError(where + ": " + e.what());
        }
    }
}

template <typename T>
T field(const ordered_json& j, const char* name, const std::string& where) {
    if (!j.contains(name)) throw IngestionError(where + ": missing field '" + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const ordered_json::exception&) {
        throw IngestionError(where + ": field '" + name + "' has the wrong type");
    }
}

}  // namespace

void save_dataset(const std::vector<QaInstance>& dataset, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    for (const auto& inst : dataset) {
        ordered_json j;
        j["instance_id"] = inst.instance_id;
        j["task_kind"] = to_string(inst.task_kind);
        j["division"] = inst.division;
        j["question"] = inst.question;
        j["gold"] = inst.gold;
        j["option_count"] = inst.option_count;
        j["queried_event"] = inst.queried_event;
        ordered_json events = ordered_json::array();
        for (const auto& e : inst.events) {
            events.push_back({{"event", e.event}, {"first_frame", e.first_frame},
                              {"frame_span", e.frame_span}});
        }
        j["events"] = events;
        j["feature_dim"] = inst.audio.feature_dim();
        ordered_json frames = ordered_json::array();
        for (std::size_t f = 0; f < inst.audio.frame_count(); ++f) {
            const auto row = inst.audio.frames.row(f);
            frames.push_back(std::vector<double>(row.begin(), row.end()));
        }
        j["frames"] = frames;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<QaInstance> load_dataset(const std::filesystem::path& path) {
    std::vector<QaInstance> out;
    std::set<std::string> ids;
    for_each_json_line(path, [&](const ordered_json& j, const std::string& where) {
        QaInstance inst;
        inst.instance_id = field<std::string>(j, "instance_id", where);
        if (!ids.insert(inst.instance_id).second) {
            throw IngestionError(where + ": duplicate instance_id '" + inst.instance_id + "'");
        }
        inst.task_kind = parse_task_kind(field<std::string>(j, "task_kind", where));
        inst.division = field<std::string>(j, "division", where);
        inst.question = field<std::string>(j, "question", where);
        inst.gold = field<std::string>(j, "gold", where);
        inst.option_count = field<std::size_t>(j, "option_count", where);
        inst.queried_event = field<std::size_t>(j, "queried_event", where);
        for (const auto& e : field<ordered_json>(j, "events", where)) {
            inst.events.push_back({field<std::size_t>(e, "event", where),
                                   field<std::size_t>(e, "first_frame", where),
                                   field<std::size_t>(e, "frame_span", where)});
        }
        const auto dim = field<std::size_t>(j, "feature_dim", where);
        const auto frames = field<std::vector<std::vector<double>>>(j, "frames", where);
        inst.audio.frames = Matrix(frames.size(), dim);
        for (std::size_t f = 0; f < frames.size(); ++f) {
            if (frames[f].size() != dim) {
                throw IngestionError(where + ": frame " + std::to_string(f) + " has " +
                                     std::to_string(frames[f].size()) + " features, expected " +
                                     std::to_string(dim));
            }
            std::copy(frames[f].begin(), frames[f].end(), inst.audio.frames.row(f).begin());
        }
        inst.validate();
        out.push_back(std::move(inst));
    });
    return out;
}

void save_predictions(const std::vector<PredictionRecord>& records,
                      const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    for (const auto& r : records) {
        ordered_json j;
        j["instance_id"] = r.instance_id;
        j["division"] = r.division;
        j["task_kind"] = to_string(r.task_kind);
        j["gold"] = r.gold;
        j["predicted_text"] = r.predicted_text;
        if (r.task_kind == TaskKind::multiple_choice) j["option_count"] = r.option_count;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::vector<PredictionRecord> out;
    for_each_json_line(path, [&](const ordered_json& j, const std::string& where) {
        PredictionRecord r;
        r.instance_id = field<std::string>(j, "instance_id", where);
        r.division = field<std::string>(j, "division", where);
        r.task_kind = parse_task_kind(field<std::string>(j, "task_kind", where));
        r.gold = field<std::string>(j, "gold", where);
        r.predicted_text = field<std::string>(j, "predicted_text", where);
        if (j.contains("option_count")) r.option_count = field<std::size_t>(j, "option_count", where);
        if (r.task_kind == TaskKind::binary) {
            const Answer g = normalize_answer(r.gold);
            if (g == Answer::invalid) throw IngestionError(where + ": gold must be yes or no");
            r.gold = to_string(g);
        } else if (const auto opt = normalize_option(r.gold, r.option_count)) {
            r.gold = option_letter(*opt);
        } else {
            throw IngestionError(where + ": gold must be an option letter");
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::string render_metrics_csv(const ScoreReport& report) {
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("--");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", *v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "task,division,count,accuracy,precision,recall,f1,tp,fp,fn,tn\n";
    for (const auto& r : report.rows) {
        os << to_string(r.task_kind) << ',' << r.division << ',' << r.count << ','
           << fmt(r.metrics.accuracy) << ',' << fmt(r.metrics.precision) << ','
           << fmt(r.metrics.recall) << ',' << fmt(r.metrics.f1);
        if (r.task_kind == TaskKind::binary) {
            os << ',' << r.confusion.tp << ',' << r.confusion.fp << ',' << r.confusion.fn << ','
               << r.confusion.tn << '\n';
        } else {
            os << ",,,,\n";
        }
    }
    return os.str();
}

std::string render_summary_json(const ScoreReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); };
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        ordered_json row;
        row["task"] = to_string(r.task_kind);
        row["division"] = r.division;
        row["count"] = r.count;
        row["correct"] = r.correct;
        row["accuracy"] = opt(r.metrics.accuracy);
        row["precision"] = opt(r.metrics.precision);
        row["recall"] = opt(r.metrics.recall);
        row["f1"] = opt(r.metrics.f1);
        if (r.task_kind == TaskKind::binary) {
            row["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp},
                                {"fn", r.confusion.fn}, {"tn", r.confusion.tn}};
        }
        rows.push_back(row);
    }
    ordered_json doc;
    doc["format"] = "avs-score-report";
    doc["version"] = 1;
    doc["rows"] = rows;
    doc["warnings"] = report.warnings;
    return doc.dump(2) + "\n";
}

}  // namespace avs
