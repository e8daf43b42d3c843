#include "test_support.hpp"

namespace avs::testing {

Model make_hand_model() {
    ModelConfig c;
    c.num_layers = 1;
    c.hidden_dim = 2;
    c.num_heads = 1;
    c.head_dim = 2;
    c.vocab_size = 4;
    c.audio_feature_dim = 2;
    c.max_seq_len = 4;
    c.norm_epsilon = 1e-6;
    c.rng_seed = 0;

    auto mat = [](std::size_t r, std::size_t cols, std::vector<double> v) {
        Matrix m(r, cols);
        m.data = std::move(v);
        return m;
    };

    Model m;
    m.config = c;
    m.token_embedding = mat(4, 2, {0.5, -0.2, 0.1, 0.3, -0.4, 0.2, 0.3, 0.3});
    m.audio_projection = mat(2, 2, {1.0, 0.5, -0.5, 1.0});
    m.position_embedding = mat(4, 2, {0.1, 0.0, 0.0, 0.1, -0.1, 0.0, 0.0, -0.1});

    LayerWeights w;
    w.attn_norm = {1.0, 0.8};
    w.wq = mat(2, 2, {1.0, 0.2, 0.1, 0.9});
    w.wk = mat(2, 2, {0.8, -0.1, 0.3, 1.1});
    w.wv = mat(2, 2, {0.5, 0.5, -0.3, 0.7});
    w.wo = mat(2, 2, {0.9, 0.1, 0.2, 0.6});
    w.mlp_norm = {1.2, 0.9};
    w.w_up = Matrix(8, 2);
    for (std::size_t i = 0; i < 8; ++i) {
        w.w_up(i, 0) = 0.1 * static_cast<double>(i + 1) - 0.4;
        w.w_up(i, 1) = 0.3 - 0.05 * static_cast<double>(i);
    }
    w.w_down = Matrix(2, 8);
    for (std::size_t j = 0; j < 8; ++j) {
        w.w_down(0, j) = 0.05 * static_cast<double>(j) - 0.1;
        w.w_down(1, j) = 0.2 - 0.03 * static_cast<double>(j);
    }
    m.layers.push_back(w);
    m.final_norm = {1.1, 0.7};
    m.unembedding = mat(4, 2, {0.2, 0.1, 1.0, -1.0, -1.0, 1.0, 0.3, 0.4});
    return m;
}

AudioFeatureSequence hand_audio() {
    AudioFeatureSequence a{Matrix(2, 2)};
    a.frames.data = {0.3, -0.7, 1.2, 0.4};
    return a;
}

PromptTokens hand_prompt() { return PromptTokens{{1, 3}}; }

namespace {

using Vec = std::vector<double>;

Vec mat_apply(const Matrix& w, const Vec& x) {
    Vec y(w.rows, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) y[r] += w(r, c) * x[c];
    }
    return y;
}

Vec rms(const Vec& x, const Vec& gain, double eps) {
    double ms = 0.0;
    for (double v : x) ms += v * v;
    ms /= static_cast<double>(x.size());
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = gain[i] * x[i] / std::sqrt(ms + eps);
    return y;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * std::pow(x, 3))));
}

}  // namespace

OracleOutput reference_forward(const Model& model, const AudioFeatureSequence& audio,
                               const PromptTokens& prompt) {
    const auto& c = model.config;
    const std::size_t d = c.hidden_dim;
    std::vector<Vec> xs;
    for (std::size_t f = 0; f < audio.frame_count(); ++f) {
        Vec frame(audio.frames.row(f).begin(), audio.frames.row(f).end());
        xs.push_back(mat_apply(model.audio_projection, frame));
    }
    for (TokenId id : prompt.ids) {
        xs.emplace_back(model.token_embedding.row(id).begin(), model.token_embedding.row(id).end());
    }
    for (std::size_t t = 0; t < xs.size(); ++t) {
        for (std::size_t i = 0; i < d; ++i) xs[t][i] += model.position_embedding(t, i);
    }

    OracleOutput out;
    const std::size_t T = xs.size();
    for (const auto& w : model.layers) {
        std::vector<Vec> q(T), k(T), v(T);
        for (std::size_t t = 0; t < T; ++t) {
            const Vec a = rms(xs[t], w.attn_norm, c.norm_epsilon);
            q[t] = mat_apply(w.wq, a);
            k[t] = mat_apply(w.wk, a);
            v[t] = mat_apply(w.wv, a);
        }
        std::vector<Vec> attended(T, Vec(d, 0.0));
        for (std::size_t h = 0; h < c.num_heads; ++h) {
            const std::size_t o = h * c.head_dim;
            for (std::size_t t = 0; t < T; ++t) {
                Vec weights(t + 1);
                double total = 0.0;
                for (std::size_t s = 0; s <= t; ++s) {
                    double sc = 0.0;
                    for (std::size_t i = 0; i < c.head_dim; ++i) sc += q[t][o + i] * k[s][o + i];
                    weights[s] = std::exp(sc / std::sqrt(static_cast<double>(c.head_dim)));
                    total += weights[s];
                }
                for (std::size_t s = 0; s <= t; ++s) {
                    for (std::size_t i = 0; i < c.head_dim; ++i) {
                        attended[t][o + i] += weights[s] / total * v[s][o + i];
                    }
                }
            }
        }
        std::vector<Vec> layer_states;
        for (std::size_t t = 0; t < T; ++t) {
            const Vec proj = mat_apply(w.wo, attended[t]);
            for (std::size_t i = 0; i < d; ++i) xs[t][i] += proj[i];
            Vec hidden = mat_apply(w.w_up, rms(xs[t], w.mlp_norm, c.norm_epsilon));
            for (double& x : hidden) x = gelu(x);
            const Vec down = mat_apply(w.w_down, hidden);
            for (std::size_t i = 0; i < d; ++i) xs[t][i] += down[i];
            layer_states.push_back(xs[t]);
        }
        out.states.push_back(layer_states);
    }
    const Vec last = model.apply_final_norm ? rms(xs.back(), model.final_norm, c.norm_epsilon)
                                            : xs.back();
    out.logits = mat_apply(model.unembedding, last);
    return out;
}

}  // namespace avs::testing
