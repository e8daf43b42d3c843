// avs: command-line driver for steering-vector extraction, steered
// evaluation and layer-influence analysis on the tiny testbed model.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "avs/errors.hpp"
#include "avs/pipeline.hpp"
#include "avs/run_config.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kOther = 1,
    kConfig = 2,
    kIngestion = 3,
    kNumeric = 4,
    kIo = 5,
};

int exit_code_for(avs::ErrorKind kind) {
    using avs::ErrorKind;
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::argument:
        case ErrorKind::partition:
        case ErrorKind::lookup: return kConfig;
        case ErrorKind::ingestion:
        case ErrorKind::labeling: return kIngestion;
        case ErrorKind::shape:
        case ErrorKind::capacity:
        case ErrorKind::undefined: return kNumeric;
        case ErrorKind::io: return kIo;
    }
    return kOther;
}

void report(const avs::CommandResult& res) {
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& p : res.written) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive vector steering toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    app.add_option("--config", config_path, "JSON run config (defaults apply when omitted)");
    app.add_option("--seed", seed, "Override the config seed");
    app.add_option("--output-dir", output_dir, "Override the config output directory");

    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic yes/no benchmark");

    auto* extract = app.add_subcommand("extract", "Extract a contrastive steering vector");
    std::optional<std::string> instance;
    std::optional<std::string> vector_out;
    extract->add_option("--instance", instance, "Instance id (default: first instance)");
    extract->add_option("--vector", vector_out, "Output vector file");

    auto* eval = app.add_subcommand("eval", "Evaluate default, uniform or adaptive steering");
    std::optional<std::string> mode;
    std::optional<std::string> vector_in;
    eval->add_option("--mode", mode, "default | uniform | adaptive (default: config)");
    eval->add_option("--vector", vector_in, "Steering vector file");

    auto* analyze = app.add_subcommand("analyze", "Per-layer cosine and Cohen's d report");
    std::string traces_path;
    std::string analyze_vector;
    bool propose = false;
    analyze->add_option("--traces", traces_path, "Labeled trace file")->required();
    analyze->add_option("--vector", analyze_vector, "Steering vector file")->required();
    analyze->add_flag("--propose-partition", propose, "Also propose an increase/decrease split");

    auto* report_cmd = app.add_subcommand("report", "Score an external prediction file");
    std::string predictions;
    report_cmd->add_option("--predictions", predictions, "Line-delimited prediction records")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        avs::RunConfig cfg = config_path.empty() ? avs::parse_run_config("{}")
                                                 : avs::load_run_config(config_path);
        if (seed) {
            if (cfg.model.rng_seed == cfg.seed) cfg.model.rng_seed = *seed;
            cfg.seed = *seed;
        }
        if (output_dir) cfg.output_dir = *output_dir;

        if (gen->parsed()) {
            report(avs::cmd_gen_data(cfg));
        } else if (extract->parsed()) {
            std::optional<std::filesystem::path> out;
            if (vector_out) out = *vector_out;
            report(avs::cmd_extract(cfg, instance, out));
        } else if (eval->parsed()) {
            const auto m = mode ? avs::parse_steering_mode(*mode) : cfg.schedule.mode;
            std::optional<std::filesystem::path> vp;
            if (vector_in) vp = *vector_in;
            report(avs::cmd_eval(cfg, m, vp));
        } else if (analyze->parsed()) {
            report(avs::cmd_analyze(cfg, traces_path, analyze_vector, propose));
        } else if (report_cmd->parsed()) {
            report(avs::cmd_report(cfg, predictions));
        }
    } catch (const avs::Error& e) {
        std::cerr << "error kind=" << avs::to_string(e.kind()) << " message=" << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error kind=internal message=" << e.what() << '\n';
        return kOther;
    }
    return kOk;
}
