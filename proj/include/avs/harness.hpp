#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avs/model.hpp"
#include "avs/steering.hpp"
#include "avs/traces.hpp"

namespace avs {

enum class TaskKind { binary, multiple_choice };

const char* to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view s);

/// Binary divisions in report order.
inline constexpr std::array<std::string_view, 3> kBinaryDivisions = {"adversarial", "popular",
                                                                     "random"};
bool is_binary_division(std::string_view division);

struct PlantedEvent {
    std::size_t event = 0;
    std::size_t first_frame = 0;
    std::size_t frame_span = 0;

    bool operator==(const PlantedEvent&) const = default;
};

struct QaInstance {
    std::string instance_id;
    TaskKind task_kind = TaskKind::binary;
    std::string division;
    AudioFeatureSequence audio;
    /// Raw question before the prompt protocol is applied.
    std::string question;
    /// "yes"/"no" for binary tasks, an option letter for multiple choice.
    std::string gold;
    std::size_t option_count = 0;
    std::vector<PlantedEvent> events;
    std::size_t queried_event = 0;

    void validate() const;
    bool operator==(const QaInstance&) const = default;
};

/// Synthetic object-presence benchmark. Each event has a fixed random
/// feature prototype; an instance's frames are Gaussian noise with the
/// prototypes of its present events added over disjoint frame spans.
struct GeneratorSpec {
    std::size_t adversarial = 40;
    std::size_t popular = 40;
    std::size_t random = 40;
    std::size_t multiple_choice = 0;
    std::size_t option_count = 4;
    std::size_t event_count = 8;
    std::size_t frame_count = 12;
    std::size_t feature_dim = 16;
    std::size_t event_span = 4;
    double noise_std = 0.1;
    double event_amplitude = 1.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    bool operator==(const GeneratorSpec&) const = default;
};

/// Event prototypes (event_count x feature_dim) used by the generator.
Matrix event_prototypes(const GeneratorSpec& spec, std::uint64_t seed);

/// Instances in division order (adversarial, popular, random, then multiple
/// choice). Within each binary division even indices are gold-yes.
///
/// Division semantics for gold-no questions:
///   adversarial - the absent partner of a present co-occurring pair is asked
///   popular     - the most frequent absent event is asked
///   random      - a uniformly drawn absent event is asked
std::vector<QaInstance> generate_synthetic_dataset(const GeneratorSpec& spec, std::uint64_t seed);

/// Same question and metadata with all-zero audio of identical shape.
QaInstance build_negative_instance(const QaInstance& instance);

inline constexpr std::string_view kPromptPrefix =
    "Focus on the given audio and answer the following question.";
inline constexpr std::string_view kYesNoPostfix = "Answer with only yes or no.";
inline constexpr std::string_view kOptionPostfix = "Answer with only the option letter.";

/// Wraps a yes/no question in the fixed prefix and postfix. Already wrapped
/// input is returned unchanged.
std::string apply_prompt_protocol(std::string_view question);

/// Multiple-choice variant: same prefix, option-letter postfix.
std::string apply_option_protocol(std::string_view question);

/// Protocol-wrapped, tokenized prompt for an instance.
PromptTokens prompt_tokens(const QaInstance& instance, std::size_t vocab_size);

enum class Answer { yes, no, invalid };

const char* to_string(Answer a);

/// Leading word of the generated text, case-insensitive, punctuation
/// stripped: "yes" / "no", anything else invalid.
Answer normalize_answer(std::string_view generated_text);

/// Leading option letter (A..option_count) or nullopt.
std::optional<std::size_t> normalize_option(std::string_view generated_text,
                                            std::size_t option_count);

/// Yes is the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

/// Empty optionals mark metrics whose denominator is zero.
struct EvalMetrics {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    bool operator==(const EvalMetrics&) const = default;
};

EvalMetrics compute_metrics(const ConfusionCounts& counts);

/// Harmonic mean; undefined when p + r == 0.
std::optional<double> f1_score(double precision, double recall);

struct PredictionRecord {
    std::string instance_id;
    TaskKind task_kind = TaskKind::binary;
    std::string division;
    std::string gold;
    std::string predicted_text;
    std::size_t option_count = 0;  // 0: accept any of A..E

    /// Normalized prediction: "yes", "no", an option letter, or "invalid".
    std::string normalized() const;
    bool is_correct() const { return normalized() == gold; }

    bool operator==(const PredictionRecord&) const = default;
};

struct DivisionScore {
    TaskKind task_kind = TaskKind::binary;
    std::string division;  // "total" for the binary aggregate
    std::uint64_t count = 0;
    std::uint64_t correct = 0;
    ConfusionCounts confusion;  // binary only
    EvalMetrics metrics;        // multiple choice: accuracy only

    bool operator==(const DivisionScore&) const = default;
};

struct ScoreReport {
    std::vector<DivisionScore> rows;
    std::vector<std::string> warnings;

    const DivisionScore* find(TaskKind kind, std::string_view division) const;
    bool operator==(const ScoreReport&) const = default;
};

/// Aggregates per division and a binary Total. Invalid binary answers count
/// against the gold class (gold yes -> fn, gold no -> fp). Throws
/// IngestionError on duplicate instance ids.
ScoreReport score_predictions(const std::vector<PredictionRecord>& records);

struct EvalOptions {
    std::optional<InterventionPlan> plan;
    /// When set, each instance is steered by its own contrastive vector under
    /// this schedule instead of `plan`.
    std::optional<SteeringSchedule> per_instance_schedule;
    bool renormalize = true;
    std::size_t max_new_tokens = 2;
    bool parallel = true;
    bool keep_full_traces = false;
};

struct EvalResult {
    std::vector<PredictionRecord> records;
    ScoreReport report;
    TraceSet traces;
    std::size_t truncated = 0;
};

/// Decodes every instance under the prompt protocol, scores it, and labels
/// its trace. Instances run in parallel; results are gathered in dataset
/// order, so the output is independent of the thread count.
EvalResult evaluate(const Model& model, const std::vector<QaInstance>& dataset,
                    const EvalOptions& options = {});

// Line-delimited JSON files.
void save_dataset(const std::vector<QaInstance>& dataset, const std::filesystem::path& path);
std::vector<QaInstance> load_dataset(const std::filesystem::path& path);

void save_predictions(const std::vector<PredictionRecord>& records,
                      const std::filesystem::path& path);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

/// CSV: task,division,count,accuracy,precision,recall,f1,tp,fp,fn,tn; metrics rounded to 3 decimals, undefined
/// values rendered as "--".
std::string render_metrics_csv(const ScoreReport& report);

/// Full-precision structured summary (JSON text).
std::string render_summary_json(const ScoreReport& report);

}  // namespace avs
