#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avs/linalg.hpp"
#include "avs/steering.hpp"

namespace avs {

using TokenId = std::uint32_t;

/// Reserved vocabulary ids. Option letters A..E follow `no` when the
/// vocabulary is large enough to hold them.
namespace tokens {
inline constexpr TokenId kEos = 0;
inline constexpr TokenId kYes = 1;
inline constexpr TokenId kNo = 2;
inline constexpr TokenId kOptionA = 3;
inline constexpr std::size_t kMaxOptions = 5;
inline constexpr TokenId kFirstWord = kOptionA + kMaxOptions;
}  // namespace tokens

struct ModelConfig {
    std::size_t num_layers = 4;
    std::size_t hidden_dim = 32;
    std::size_t num_heads = 4;
    std::size_t head_dim = 8;
    std::size_t vocab_size = 64;
    std::size_t audio_feature_dim = 16;
    std::size_t max_seq_len = 128;
    double norm_epsilon = 1e-6;
    std::uint64_t rng_seed = 0;

    /// MLP expansion is fixed at 4x.
    std::size_t mlp_dim() const { return 4 * hidden_dim; }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct AudioFeatureSequence {
    Matrix frames;  // frame_count x audio_feature_dim

    std::size_t frame_count() const { return frames.rows; }
    std::size_t feature_dim() const { return frames.cols; }

    /// All-zero frames of the given shape.
    static AudioFeatureSequence silence(std::size_t frame_count, std::size_t feature_dim);
    AudioFeatureSequence silent_copy() const { return silence(frame_count(), feature_dim()); }
    bool is_silent() const;

    bool operator==(const AudioFeatureSequence&) const = default;
};

struct PromptTokens {
    std::vector<TokenId> ids;

    bool operator==(const PromptTokens&) const = default;
};

struct ModelInput {
    AudioFeatureSequence audio;
    PromptTokens prompt;
};

/// Real-audio input and its silent counterpart over the same prompt.
struct ContrastivePair {
    ModelInput positive;
    ModelInput negative;

    static ContrastivePair from(const AudioFeatureSequence& audio, const PromptTokens& prompt);
    void validate() const;
};

enum class Correctness { unknown, correct, incorrect };

const char* to_string(Correctness c);
Correctness parse_correctness(std::string_view s);

/// Post-block residual stream, one (positions x hidden_dim) matrix per layer.
struct ResidualTrace {
    std::vector<Matrix> states;
    std::size_t frame_count = 0;
    std::size_t prompt_len = 0;
    std::vector<TokenId> generated_ids;
    Correctness correctness = Correctness::unknown;
    std::string channel = "main";

    std::size_t num_layers() const { return states.size(); }
    std::size_t positions() const { return states.empty() ? 0 : states.front().rows; }
    std::size_t hidden_dim() const { return states.empty() ? 0 : states.front().cols; }

    /// num_layers x hidden_dim slice at one position.
    Matrix at_position(std::size_t t) const;
    /// Slice at the last prompt position, where steering vectors are read.
    Matrix extraction_states() const { return at_position(frame_count + prompt_len - 1); }
};

struct LayerWeights {
    std::vector<double> attn_norm;
    Matrix wq, wk, wv, wo;  // d x d
    std::vector<double> mlp_norm;
    Matrix w_up;    // mlp_dim x d
    Matrix w_down;  // d x mlp_dim
};

/// Immutable parameter set of the decoder. Pre-norm blocks with RMS norm,
/// causal multi-head attention and a GELU MLP; audio frames enter through a
/// linear projection and precede the prompt tokens.
struct Model {
    ModelConfig config;
    Matrix token_embedding;     // vocab x d
    Matrix audio_projection;    // d x audio_feature_dim
    Matrix position_embedding;  // max_seq_len x d
    std::vector<LayerWeights> layers;
    std::vector<double> final_norm;
    bool apply_final_norm = true;
    Matrix unembedding;  // vocab x d

    std::string model_id() const;
};

/// Uniform [-0.05, 0.05] weights from the counter-based generator seeded by
/// config.rng_seed; norm gains start at 1.
Model init_model(const ModelConfig& config);

/// Model whose blocks are exact identities on the residual stream, with no
/// final norm, and whose unembedding gives
/// logit(yes) - logit(no) = logit_scale * <direction, h_T>. Every other
/// unembedding row is zero and hence orthogonal to `direction`.
Model build_planted_model(const ModelConfig& config, std::span<const double> direction,
                          double logit_scale = 1.0);

struct ForwardResult {
    std::vector<double> logits;  // next-token logits at the last position
    ResidualTrace trace;
};

/// Causal pass over [projected audio ; embedded prompt]. With a plan, every
/// position >= steer_from (default: the last position) is steered after each
/// block's residual addition, before the next block reads it.
ForwardResult forward(const Model& model, const AudioFeatureSequence& audio,
                      const PromptTokens& prompt, const InterventionPlan* plan = nullptr,
                      std::optional<std::size_t> steer_from = std::nullopt);

/// Final-position residual state per layer (num_layers x hidden_dim).
Matrix last_token_states(const Model& model, const AudioFeatureSequence& audio,
                         const PromptTokens& prompt);

struct DecodeResult {
    std::vector<TokenId> tokens;
    bool truncated = false;
    bool stopped_at_eos = false;
    /// Trace and logits of the first step, whose final position is the
    /// extraction position.
    ResidualTrace first_step_trace;
    std::vector<double> first_step_logits;
};

/// Greedy decoding. Steering (if any) is applied at every generation step:
/// to the last prompt position and to every generated position.
DecodeResult greedy_decode(const Model& model, const AudioFeatureSequence& audio,
                           const PromptTokens& prompt, const InterventionPlan* plan,
                           std::size_t max_new_tokens);

/// Index of the largest logit; ties go to the lowest id.
TokenId argmax_token(std::span<const double> logits);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace avs
