#include "avs/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "avs/errors.hpp"

namespace avs {

using nlohmann::ordered_json;

const char* to_string(SteeringMode mode) {
    switch (mode) {
        case SteeringMode::none: return "default";
        case SteeringMode::uniform: return "uniform";
        case SteeringMode::adaptive: return "adaptive";
    }
    return "default";
}

SteeringMode parse_steering_mode(std::string_view s) {
    if (s == "default" || s == "none") return SteeringMode::none;
    if (s == "uniform") return SteeringMode::uniform;
    if (s == "adaptive") return SteeringMode::adaptive;
    throw ConfigError("schedule.mode: unknown mode '" + std::string(s) +
                      "' (expected default, uniform or adaptive)");
}

SteeringSchedule RunConfig::build_schedule(SteeringMode mode) const {
    const std::size_t L = model.num_layers;
    if (mode == SteeringMode::uniform) return uniform_schedule(schedule.lambda, L);
    if (mode == SteeringMode::adaptive) {
        LayerPartition p;
        if (schedule.increase_set) {
            p.increase = *schedule.increase_set;
            const std::set<int> inc(p.increase.begin(), p.increase.end());
            for (int l = 1; l <= static_cast<int>(L); ++l) {
                if (!inc.count(l)) p.decrease.push_back(l);
            }
        } else {
            p = default_layer_partition(L);
        }
        return adaptive_schedule(schedule.lambda, schedule.beta, p, L);
    }
    return uniform_schedule(0.0, L);
}

namespace {

class Section {
public:
    Section(const ordered_json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError(label("") + "must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const ordered_json::exception&) {
            throw ConfigError(label(key) + ": wrong type");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const ordered_json& at(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError(label(key) + ": unknown key");
        }
    }

    std::string label(const std::string& key) const {
        if (name_.empty()) return key;
        return key.empty() ? name_ + " " : name_ + "." + key;
    }

private:
    const ordered_json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
    ordered_json root;
    try {
        root = ordered_json::parse(json_text);
    } catch (const ordered_json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    Section top(root, "");
    top.get("version", cfg.version);
    if (cfg.version != 1) throw ConfigError("version: unsupported config version " + std::to_string(cfg.version));
    top.get("seed", cfg.seed);
    cfg.model.rng_seed = cfg.seed;

    if (top.has("model")) {
        Section m(top.at("model"), "model");
        m.get("num_layers", cfg.model.num_layers);
        m.get("hidden_dim", cfg.model.hidden_dim);
        m.get("num_heads", cfg.model.num_heads);
        m.get("head_dim", cfg.model.head_dim);
        m.get("vocab_size", cfg.model.vocab_size);
        m.get("audio_feature_dim", cfg.model.audio_feature_dim);
        m.get("max_seq_len", cfg.model.max_seq_len);
        m.get("norm_epsilon", cfg.model.norm_epsilon);
        m.get("rng_seed", cfg.model.rng_seed);
        m.finish();
    }
    if (top.has("schedule")) {
        Section s(top.at("schedule"), "schedule");
        std::string mode = to_string(cfg.schedule.mode);
        s.get("mode", mode);
        cfg.schedule.mode = parse_steering_mode(mode);
        s.get("lambda", cfg.schedule.lambda);
        s.get("beta", cfg.schedule.beta);
        if (s.has("increase_set")) {
            const auto& inc = s.at("increase_set");
            if (inc.is_string()) {
                if (inc.get<std::string>() != "auto") {
                    throw ConfigError("schedule.increase_set: expected \"auto\" or a list of layers");
                }
            } else {
                try {
                    cfg.schedule.increase_set = inc.get<LayerSet>();
                } catch (const ordered_json::exception&) {
                    throw ConfigError("schedule.increase_set: expected \"auto\" or a list of layers");
                }
            }
        }
        s.get("renormalize", cfg.schedule.renormalize);
        s.get("per_instance", cfg.schedule.per_instance);
        s.finish();
    }
    if (top.has("dataset")) {
        Section d(top.at("dataset"), "dataset");
        if (d.has("path")) {
            std::string p;
            d.get("path", p);
            cfg.dataset_path = p;
        }
        if (d.has("generator")) {
            Section g(d.at("generator"), "dataset.generator");
            auto& gs = cfg.generator;
            g.get("adversarial", gs.adversarial);
            g.get("popular", gs.popular);
            g.get("random", gs.random);
            g.get("multiple_choice", gs.multiple_choice);
            g.get("option_count", gs.option_count);
            g.get("event_count", gs.event_count);
            g.get("frame_count", gs.frame_count);
            g.get("feature_dim", gs.feature_dim);
            g.get("event_span", gs.event_span);
            g.get("noise_std", gs.noise_std);
            g.get("event_amplitude", gs.event_amplitude);
            g.finish();
        }
        d.finish();
    }
    if (top.has("decode")) {
        Section d(top.at("decode"), "decode");
        d.get("max_new_tokens", cfg.max_new_tokens);
        d.finish();
    }
    std::string out_dir = cfg.output_dir.string();
    top.get("output_dir", out_dir);
    cfg.output_dir = out_dir;
    top.finish();

    cfg.model.validate();
    try {
        cfg.generator.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("dataset.") + e.what());
    }
    if (cfg.max_new_tokens < 1) throw ConfigError("decode.max_new_tokens: must be >= 1");
    if (!(cfg.schedule.lambda >= 0.0)) throw ConfigError("schedule.lambda: must be >= 0");
    if (!(cfg.schedule.beta >= 0.0 && cfg.schedule.beta <= 1.0)) {
        throw ConfigError("schedule.beta: must lie in [0, 1]");
    }
    try {
        (void)cfg.build_schedule(cfg.schedule.mode);
    } catch (const Error& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
    ordered_json j;
    j["version"] = c.version;
    j["seed"] = c.seed;
    j["model"] = {{"num_layers", c.model.num_layers},
                  {"hidden_dim", c.model.hidden_dim},
                  {"num_heads", c.model.num_heads},
                  {"head_dim", c.model.head_dim},
                  {"vocab_size", c.model.vocab_size},
                  {"audio_feature_dim", c.model.audio_feature_dim},
                  {"max_seq_len", c.model.max_seq_len},
                  {"norm_epsilon", c.model.norm_epsilon},
                  {"rng_seed", c.model.rng_seed}};
    ordered_json sched = {{"mode", to_string(c.schedule.mode)},
                          {"lambda", c.schedule.lambda},
                          {"beta", c.schedule.beta}};
    if (c.schedule.increase_set) sched["increase_set"] = *c.schedule.increase_set;
    else sched["increase_set"] = "auto";
    sched["renormalize"] = c.schedule.renormalize;
    sched["per_instance"] = c.schedule.per_instance;
    j["schedule"] = sched;
    const auto& g = c.generator;
    ordered_json ds;
    if (c.dataset_path) ds["path"] = c.dataset_path->string();
    ds["generator"] = {{"adversarial", g.adversarial},   {"popular", g.popular},
                       {"random", g.random},             {"multiple_choice", g.multiple_choice},
                       {"option_count", g.option_count}, {"event_count", g.event_count},
                       {"frame_count", g.frame_count},   {"feature_dim", g.feature_dim},
                       {"event_span", g.event_span},     {"noise_std", g.noise_std},
                       {"event_amplitude", g.event_amplitude}};
    j["dataset"] = ds;
    j["decode"] = {{"max_new_tokens", c.max_new_tokens}};
    j["output_dir"] = c.output_dir.string();
    return j.dump(2) + "\n";
}

}  // namespace avs
