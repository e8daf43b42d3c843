#include "avs/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "avs/errors.hpp"
#include "avs/hash.hpp"
#include "avs/traces.hpp"

namespace avs {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw IoError("cannot write '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string generator_json(const GeneratorSpec& g) {
    return ordered_json{{"adversarial", g.adversarial},   {"popular", g.popular},
                        {"random", g.random},             {"multiple_choice", g.multiple_choice},
                        {"option_count", g.option_count}, {"event_count", g.event_count},
                        {"frame_count", g.frame_count},   {"feature_dim", g.feature_dim},
                        {"event_span", g.event_span},     {"noise_std", g.noise_std},
                        {"event_amplitude", g.event_amplitude}}
        .dump();
}

}  // namespace

std::vector<QaInstance> resolve_dataset(const RunConfig& config) {
    if (config.dataset_path) return load_dataset(*config.dataset_path);
    return generate_synthetic_dataset(config.generator, config.seed);
}

CommandResult cmd_gen_data(const RunConfig& config) {
    config.generator.validate();
    const auto dataset = generate_synthetic_dataset(config.generator, config.seed);
    ensure_dir(config.output_dir);

    CommandResult res;
    const fs::path data_path = config.output_dir / files::kDataset;
    save_dataset(dataset, data_path);
    res.written.push_back(data_path);

    std::size_t yes = 0;
    for (const auto& inst : dataset) yes += inst.gold == "yes" ? 1 : 0;
    const std::string spec = generator_json(config.generator);
    ordered_json manifest;
    manifest["format"] = "avs-dataset-manifest";
    manifest["version"] = 1;
    manifest["seed"] = config.seed;
    manifest["generator"] = ordered_json::parse(spec);
    manifest["spec_hash"] = hex64(fnv1a64(spec + "#" + std::to_string(config.seed)));
    manifest["dataset_file"] = files::kDataset;
    manifest["dataset_hash"] = hex64(fnv1a64(read_text(data_path)));
    manifest["instances"] = dataset.size();
    manifest["gold_yes"] = yes;

    const fs::path manifest_path = config.output_dir / files::kManifest;
    write_text(manifest_path, manifest.dump(2) + "\n");
    res.written.push_back(manifest_path);
    return res;
}

CommandResult cmd_extract(const RunConfig& config, const std::optional<std::string>& instance_id,
                          const std::optional<fs::path>& output) {
    const Model model = init_model(config.model);
    const auto dataset = resolve_dataset(config);
    if (dataset.empty()) throw LookupError("dataset is empty");

    const QaInstance* inst = &dataset.front();
    if (instance_id) {
        inst = nullptr;
        for (const auto& d : dataset) {
            if (d.instance_id == *instance_id) inst = &d;
        }
        if (!inst) throw LookupError("unknown instance_id '" + *instance_id + "'");
    }

    const QaInstance negative = build_negative_instance(*inst);
    const PromptTokens prompt = prompt_tokens(*inst, model.config.vocab_size);
    const ContrastivePair pair{ModelInput{inst->audio, prompt}, ModelInput{negative.audio, prompt}};
    const SteeringVector vector = extract_steering_vector(model, pair);

    CommandResult res;
    if (vector.is_zero()) {
        res.warnings.push_back("instance '" + inst->instance_id +
                               "' has silent audio; steering vector is all zero");
    }
    const fs::path path = output.value_or(config.output_dir / files::kVector);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    save_steering_vector(vector, path);
    res.written.push_back(path);
    return res;
}

CommandResult cmd_eval(const RunConfig& config, SteeringMode mode,
                       const std::optional<fs::path>& vector_path) {
    const Model model = init_model(config.model);
    const auto dataset = resolve_dataset(config);

    CommandResult res;
    EvalOptions opts;
    opts.max_new_tokens = config.max_new_tokens;
    opts.renormalize = config.schedule.renormalize;
    std::optional<SteeringSchedule> schedule;
    if (mode != SteeringMode::none) {
        schedule = config.build_schedule(mode);
        if (config.schedule.per_instance) {
            opts.per_instance_schedule = schedule;
        } else {
            const fs::path vp = vector_path.value_or(config.output_dir / files::kVector);
            if (!fs::exists(vp)) {
                throw ConfigError("steered mode '" + std::string(to_string(mode)) +
                                  "' needs a steering vector file; '" + vp.string() +
                                  "' does not exist (run extract or pass --vector)");
            }
            SteeringVector v = load_steering_vector(vp);
            if (v.model_id != model.model_id()) {
                res.warnings.push_back("steering vector was extracted from model '" + v.model_id +
                                       "', evaluating '" + model.model_id() + "'");
            }
            opts.plan = make_intervention(std::move(v), *schedule, config.schedule.renormalize);
        }
    }

    const EvalResult result = evaluate(model, dataset, opts);
    if (result.truncated > 0) {
        res.warnings.push_back(std::to_string(result.truncated) +
                               " generations were truncated at max_seq_len");
    }
    for (const auto& w : result.report.warnings) res.warnings.push_back(w);

    ensure_dir(config.output_dir);
    const std::string tag = to_string(mode);
    const fs::path csv = config.output_dir / ("metrics_" + tag + ".csv");
    write_text(csv, render_metrics_csv(result.report));

    ordered_json settings;
    settings["mode"] = tag;
    settings["model_id"] = model.model_id();
    if (schedule) {
        settings["lambda"] = schedule->base_lambda;
        settings["beta"] = schedule->beta;
        settings["increase_set"] = schedule->partition.increase;
        settings["decrease_set"] = schedule->partition.decrease;
        settings["per_layer"] = schedule->per_layer;
        settings["renormalize"] = config.schedule.renormalize;
        settings["per_instance"] = config.schedule.per_instance;
    }
    ordered_json summary = ordered_json::parse(render_summary_json(result.report));
    summary["settings"] = settings;
    const fs::path summary_path = config.output_dir / ("summary_" + tag + ".json");
    write_text(summary_path, summary.dump(2) + "\n");

    const fs::path preds = config.output_dir / ("predictions_" + tag + ".jsonl");
    save_predictions(result.records, preds);
    const fs::path traces = config.output_dir / ("traces_" + tag + ".txt");
    save_traces(result.traces, traces);

    res.written = {csv, summary_path, preds, traces};
    return res;
}

std::string render_layer_influence_csv(const LayerInfluenceReport& report) {
    auto fmt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::ostringstream os;
    os << "layer,mean_cos_correct,mean_cos_incorrect,cohens_d,n_correct,n_incorrect\n";
    for (const auto& r : report.rows) {
        os << r.layer << ',' << fmt(r.mean_cos_correct) << ',' << fmt(r.mean_cos_incorrect) << ','
           << fmt(r.cohens_d) << ',' << r.n_correct << ',' << r.n_incorrect << '\n';
    }
    return os.str();
}

CommandResult cmd_analyze(const RunConfig& config, const fs::path& traces_path,
                          const fs::path& vector_path, bool propose) {
    const TraceSet traces = load_traces(traces_path);
    const SteeringVector vector = load_steering_vector(vector_path);
    if (traces.num_layers != vector.num_layers() || traces.hidden_dim != vector.hidden_dim()) {
        throw ShapeError("traces are " + std::to_string(traces.num_layers) + "x" +
                         std::to_string(traces.hidden_dim) + " but the steering vector is " +
                         std::to_string(vector.num_layers()) + "x" +
                         std::to_string(vector.hidden_dim()));
    }

    CommandResult res;
    if (!traces.is_main_channel()) {
        res.warnings.push_back("traces come from channel '" + traces.channel +
                               "', not the main residual channel");
    }
    const LayerInfluenceReport report = layer_influence_report(traces, vector);

    ensure_dir(config.output_dir);
    const fs::path csv = config.output_dir / files::kLayerInfluence;
    write_text(csv, render_layer_influence_csv(report));
    res.written.push_back(csv);

    if (propose) {
        const PartitionProposal p = propose_partition(report);
        if (p.fell_back) res.warnings.push_back("partition fallback to default rule: " + p.reason);
        ordered_json j;
        j["increase_set"] = p.partition.increase;
        j["decrease_set"] = p.partition.decrease;
        j["fell_back"] = p.fell_back;
        j["reason"] = p.reason;
        const fs::path path = config.output_dir / files::kPartition;
        write_text(path, j.dump(2) + "\n");
        res.written.push_back(path);
    }
    return res;
}

CommandResult cmd_report(const RunConfig& config, const fs::path& predictions_path) {
    const auto records = load_predictions(predictions_path);
    const ScoreReport report = score_predictions(records);

    ensure_dir(config.output_dir);
    CommandResult res;
    res.warnings = report.warnings;
    const fs::path csv = config.output_dir / "report_metrics.csv";
    write_text(csv, render_metrics_csv(report));
    const fs::path summary = config.output_dir / "report_summary.json";
    write_text(summary, render_summary_json(report));
    res.written = {csv, summary};
    return res;
}

}  // namespace avs
