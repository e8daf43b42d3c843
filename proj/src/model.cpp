#include "avs/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "avs/errors.hpp"
#include "avs/hash.hpp"
#include "avs/kernels.hpp"
#include "avs/rng.hpp"

namespace avs {

namespace {

constexpr double kInitRange = 0.05;

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid model config: " + what);
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                      std::uint64_t stream) {
    CounterRng rng(seed, stream);
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-kInitRange, kInitRange);
    return m;
}

}  // namespace

void ModelConfig::validate() const {
    require(num_layers >= 1, "num_layers >= 1");
    require(num_heads >= 1, "num_heads >= 1");
    require(head_dim >= 1, "head_dim >= 1");
    require(hidden_dim == num_heads * head_dim, "hidden_dim == num_heads * head_dim");
    require(vocab_size >= 4, "vocab_size >= 4");
    require(audio_feature_dim >= 1, "audio_feature_dim >= 1");
    require(max_seq_len >= 2, "max_seq_len >= 2");
    require(norm_epsilon > 0.0 && std::isfinite(norm_epsilon), "norm_epsilon > 0");
}

AudioFeatureSequence AudioFeatureSequence::silence(std::size_t frame_count,
                                                   std::size_t feature_dim) {
    return AudioFeatureSequence{Matrix(frame_count, feature_dim, 0.0)};
}

bool AudioFeatureSequence::is_silent() const {
    return std::all_of(frames.data.begin(), frames.data.end(), [](double v) { return v == 0.0; });
}

ContrastivePair ContrastivePair::from(const AudioFeatureSequence& audio,
                                      const PromptTokens& prompt) {
    return ContrastivePair{ModelInput{audio, prompt}, ModelInput{audio.silent_copy(), prompt}};
}

void ContrastivePair::validate() const {
    if (positive.prompt != negative.prompt) {
        throw ArgumentError("contrastive pair: prompts differ");
    }
    if (positive.audio.frame_count() != negative.audio.frame_count() ||
        positive.audio.feature_dim() != negative.audio.feature_dim()) {
        throw ShapeError("contrastive pair: audio shapes differ");
    }
    if (!negative.audio.is_silent()) {
        throw ArgumentError("contrastive pair: negative audio must be all-zero");
    }
}

const char* to_string(Correctness c) {
    switch (c) {
        case Correctness::correct: return "correct";
        case Correctness::incorrect: return "incorrect";
        case Correctness::unknown: break;
    }
    return "unknown";
}

Correctness parse_correctness(std::string_view s) {
    if (s == "correct") return Correctness::correct;
    if (s == "incorrect") return Correctness::incorrect;
    if (s == "unknown") return Correctness::unknown;
    throw IngestionError("unknown correctness label '" + std::string(s) + "'");
}

Matrix ResidualTrace::at_position(std::size_t t) const {
    if (t >= positions()) throw ShapeError("trace position out of range");
    Matrix out(num_layers(), hidden_dim());
    for (std::size_t l = 0; l < num_layers(); ++l) {
        std::copy_n(states[l].row(t).begin(), hidden_dim(), out.row(l).begin());
    }
    return out;
}

std::string Model::model_id() const {
    std::ostringstream os;
    os << config.num_layers << ',' << config.hidden_dim << ',' << config.num_heads << ','
       << config.head_dim << ',' << config.vocab_size << ',' << config.audio_feature_dim << ','
       << config.max_seq_len << ',' << config.rng_seed << ',' << apply_final_norm;
    return "tiny-L" + std::to_string(config.num_layers) + "-d" +
           std::to_string(config.hidden_dim) + "-" + hex64(fnv1a64(os.str()));
}

Model init_model(const ModelConfig& config) {
    config.validate();
    const std::size_t d = config.hidden_dim;
    const std::uint64_t seed = config.rng_seed;
    std::uint64_t stream = 0;

    Model m;
    m.config = config;
    m.token_embedding = uniform_matrix(config.vocab_size, d, seed, stream++);
    m.audio_projection = uniform_matrix(d, config.audio_feature_dim, seed, stream++);
    m.position_embedding = uniform_matrix(config.max_seq_len, d, seed, stream++);
    m.layers.reserve(config.num_layers);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        LayerWeights w;
        w.attn_norm.assign(d, 1.0);
        w.wq = uniform_matrix(d, d, seed, stream++);
        w.wk = uniform_matrix(d, d, seed, stream++);
        w.wv = uniform_matrix(d, d, seed, stream++);
        w.wo = uniform_matrix(d, d, seed, stream++);
        w.mlp_norm.assign(d, 1.0);
        w.w_up = uniform_matrix(config.mlp_dim(), d, seed, stream++);
        w.w_down = uniform_matrix(d, config.mlp_dim(), seed, stream++);
        m.layers.push_back(std::move(w));
    }
    m.final_norm.assign(d, 1.0);
    m.unembedding = uniform_matrix(config.vocab_size, d, seed, stream++);
    return m;
}

Model build_planted_model(const ModelConfig& config, std::span<const double> direction,
                          double logit_scale) {
    Model m = init_model(config);
    if (direction.size() != config.hidden_dim) {
        throw ShapeError("planted direction must have hidden_dim entries");
    }
    if (l2_norm(direction) == 0.0) throw ArgumentError("planted direction must be non-zero");
    if (!(logit_scale > 0.0)) throw ArgumentError("planted logit scale must be positive");

    // Zero output projections make every block add exactly 0 to the stream.
    for (auto& layer : m.layers) {
        std::fill(layer.wo.data.begin(), layer.wo.data.end(), 0.0);
        std::fill(layer.w_down.data.begin(), layer.w_down.data.end(), 0.0);
    }
    m.apply_final_norm = false;
    std::fill(m.unembedding.data.begin(), m.unembedding.data.end(), 0.0);
    for (std::size_t i = 0; i < direction.size(); ++i) {
        m.unembedding(tokens::kYes, i) = 0.5 * logit_scale * direction[i];
        m.unembedding(tokens::kNo, i) = -0.5 * logit_scale * direction[i];
    }
    return m;
}

namespace {

void check_plan(const Model& model, const InterventionPlan& plan) {
    const auto& c = model.config;
    if (plan.num_layers() != c.num_layers || plan.vector.num_layers() != c.num_layers) {
        throw ShapeError("intervention plan has " + std::to_string(plan.num_layers()) +
                         " layers, model has " + std::to_string(c.num_layers));
    }
    if (plan.vector.hidden_dim() != c.hidden_dim) {
        throw ShapeError("intervention vector width " + std::to_string(plan.vector.hidden_dim()) +
                         " != hidden_dim " + std::to_string(c.hidden_dim));
    }
}

void check_inputs(const Model& model, const AudioFeatureSequence& audio,
                  const PromptTokens& prompt) {
    const auto& c = model.config;
    if (prompt.ids.empty()) throw ArgumentError("prompt must be non-empty");
    if (audio.frame_count() > 0 && audio.feature_dim() != c.audio_feature_dim) {
        throw ShapeError("audio feature dim " + std::to_string(audio.feature_dim()) +
                         " != model audio_feature_dim " + std::to_string(c.audio_feature_dim));
    }
    for (TokenId id : prompt.ids) {
        if (id >= c.vocab_size) {
            throw ArgumentError("token id " + std::to_string(id) + " >= vocab_size");
        }
    }
    const std::size_t total = audio.frame_count() + prompt.ids.size();
    if (total > c.max_seq_len) {
        throw CapacityError("sequence length " + std::to_string(total) + " exceeds max_seq_len " +
                            std::to_string(c.max_seq_len));
    }
}

}  // namespace

ForwardResult forward(const Model& model, const AudioFeatureSequence& audio,
                      const PromptTokens& prompt, const InterventionPlan* plan,
                      std::optional<std::size_t> steer_from) {
    check_inputs(model, audio, prompt);
    if (plan) check_plan(model, *plan);

    const auto& c = model.config;
    const std::size_t d = c.hidden_dim;
    const std::size_t frames = audio.frame_count();
    const std::size_t T = frames + prompt.ids.size();
    const std::size_t first_steered = steer_from.value_or(T - 1);

    Matrix x(T, d);
    if (frames > 0) kernels::linear(model.audio_projection, audio.frames, x);
    for (std::size_t i = 0; i < prompt.ids.size(); ++i) {
        const auto emb = model.token_embedding.row(prompt.ids[i]);
        std::copy(emb.begin(), emb.end(), x.row(frames + i).begin());
    }
    for (std::size_t t = 0; t < T; ++t) {
        const auto pos = model.position_embedding.row(t);
        auto xr = x.row(t);
        for (std::size_t i = 0; i < d; ++i) xr[i] += pos[i];
    }

    ResidualTrace trace;
    trace.frame_count = frames;
    trace.prompt_len = prompt.ids.size();
    trace.states.reserve(c.num_layers);

    Matrix normed(T, d), q(T, d), k(T, d), v(T, d), attn(T, d), proj(T, d);
    Matrix hidden(T, c.mlp_dim());
    for (std::size_t l = 0; l < c.num_layers; ++l) {
        const LayerWeights& w = model.layers[l];

        kernels::rms_norm(x, w.attn_norm, c.norm_epsilon, normed);
        kernels::linear(w.wq, normed, q);
        kernels::linear(w.wk, normed, k);
        kernels::linear(w.wv, normed, v);
        kernels::causal_attention(q, k, v, c.num_heads, c.head_dim, attn);
        kernels::linear(w.wo, attn, proj);
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += proj.data[i];

        kernels::rms_norm(x, w.mlp_norm, c.norm_epsilon, normed);
        kernels::linear(w.w_up, normed, hidden);
        kernels::gelu(hidden);
        kernels::linear(w.w_down, hidden, proj);
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += proj.data[i];

        if (plan && plan->per_layer[l] != 0.0) {
            const auto dir = plan->vector.rows.row(l);
            for (std::size_t t = first_steered; t < T; ++t) {
                inject_in_place(x.row(t), dir, plan->per_layer[l], plan->renormalize);
            }
        }
        trace.states.push_back(x);
    }

    Matrix last(1, d);
    std::copy_n(x.row(T - 1).begin(), d, last.row(0).begin());
    Matrix final_in = last;
    if (model.apply_final_norm) kernels::rms_norm(last, model.final_norm, c.norm_epsilon, final_in);

    std::vector<double> logits(c.vocab_size);
    kernels::matvec(model.unembedding, final_in.row(0), logits);
    return ForwardResult{std::move(logits), std::move(trace)};
}

Matrix last_token_states(const Model& model, const AudioFeatureSequence& audio,
                         const PromptTokens& prompt) {
    auto result = forward(model, audio, prompt);
    return result.trace.at_position(result.trace.positions() - 1);
}

DecodeResult greedy_decode(const Model& model, const AudioFeatureSequence& audio,
                           const PromptTokens& prompt, const InterventionPlan* plan,
                           std::size_t max_new_tokens) {
    if (max_new_tokens < 1) throw ArgumentError("max_new_tokens must be >= 1");

    DecodeResult out;
    PromptTokens seq = prompt;
    const std::size_t steer_from = audio.frame_count() + prompt.ids.size() - 1;
    while (out.tokens.size() < max_new_tokens) {
        if (!out.tokens.empty() && audio.frame_count() + seq.ids.size() > model.config.max_seq_len) {
            out.truncated = true;
            break;
        }
        auto step = forward(model, audio, seq, plan, steer_from);
        const TokenId next = argmax_token(step.logits);
        if (out.tokens.empty()) {
            out.first_step_trace = std::move(step.trace);
            out.first_step_logits = std::move(step.logits);
        }
        out.tokens.push_back(next);
        if (next == tokens::kEos) {
            out.stopped_at_eos = true;
            break;
        }
        seq.ids.push_back(next);
    }
    out.first_step_trace.generated_ids = out.tokens;
    return out;
}

TokenId argmax_token(std::span<const double> logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return static_cast<TokenId>(best);
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace avs
