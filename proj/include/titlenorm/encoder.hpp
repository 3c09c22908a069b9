#pragma once

#include "titlenorm/corpus.hpp"
#include "titlenorm/error.hpp"
#include "titlenorm/tokenizer.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace titlenorm::enc {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kMaskBias = -1e9;

struct EncoderConfig {
    std::uint32_t vocab_size = 0;
    std::uint32_t hidden_dim = 64;
    std::uint32_t num_layers = 2;
    std::uint32_t num_heads = 4;
    std::uint32_t ffn_dim = 256;
    std::uint32_t max_positions = 128;
    std::uint32_t pooled_dim = 32;
    float dropout_rate = 0.0f;
    std::uint64_t init_seed = 0;

    void validate() const {
        if (vocab_size < tok::kNumSpecials)
            raise(ErrorCode::invalid_argument, "encoder config: vocab_size below special-token count");
        if (hidden_dim == 0 || num_heads == 0 || hidden_dim % num_heads != 0)
            raise(ErrorCode::invalid_argument, "encoder config: hidden_dim must be a positive multiple of num_heads");
        if (pooled_dim == 0 || pooled_dim > hidden_dim)
            raise(ErrorCode::invalid_argument, "encoder config: pooled_dim must be in [1, hidden_dim]");
        if (max_positions < tok::kSkillsMaxLen)
            raise(ErrorCode::invalid_argument, "encoder config: max_positions below the skills length budget");
        if (num_layers == 0 || ffn_dim == 0)
            raise(ErrorCode::invalid_argument, "encoder config: num_layers and ffn_dim must be positive");
        if (dropout_rate < 0.0f || dropout_rate >= 1.0f)
            raise(ErrorCode::invalid_argument, "encoder config: dropout_rate must be in [0, 1)");
    }
};

enum class TensorKind { weight, bias, layer_norm, token_embedding };

// One Siamese parameter set: both the title branch and the skills branch run
// through these exact tensors, pooling head included.
template <typename S>
struct ParamsT {
    MatX<S> tok_emb; // vocab_size x d
    MatX<S> pos_emb; // max_positions x d
    VecX<S> ln_emb_gain, ln_emb_bias;

    struct Layer {
        MatX<S> wq, wk, wv, wo; // d x d, applied as X * W + b
        VecX<S> bq, bk, bv, bo;
        VecX<S> ln1_gain, ln1_bias;
        MatX<S> w1; // d x ffn
        VecX<S> b1;
        MatX<S> w2; // ffn x d
        VecX<S> b2;
        VecX<S> ln2_gain, ln2_bias;
    };
    std::vector<Layer> layers;

    MatX<S> pool_w; // pooled_dim x d (shared linear pooling layer)
    VecX<S> pool_b; // pooled_dim
};

// Fixed tensor enumeration order; checkpoints, the optimizer and the
// finite-difference oracle all walk parameters through here.
template <typename S, typename Fn>
void visit_params(ParamsT<S>& p, Fn&& fn) {
    fn("tok_emb", TensorKind::token_embedding, p.tok_emb);
    fn("pos_emb", TensorKind::weight, p.pos_emb);
    fn("ln_emb.gain", TensorKind::layer_norm, p.ln_emb_gain);
    fn("ln_emb.bias", TensorKind::layer_norm, p.ln_emb_bias);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        fn(prefix + "attn.wq", TensorKind::weight, layer.wq);
        fn(prefix + "attn.bq", TensorKind::bias, layer.bq);
        fn(prefix + "attn.wk", TensorKind::weight, layer.wk);
        fn(prefix + "attn.bk", TensorKind::bias, layer.bk);
        fn(prefix + "attn.wv", TensorKind::weight, layer.wv);
        fn(prefix + "attn.bv", TensorKind::bias, layer.bv);
        fn(prefix + "attn.wo", TensorKind::weight, layer.wo);
        fn(prefix + "attn.bo", TensorKind::bias, layer.bo);
        fn(prefix + "ln1.gain", TensorKind::layer_norm, layer.ln1_gain);
        fn(prefix + "ln1.bias", TensorKind::layer_norm, layer.ln1_bias);
        fn(prefix + "ffn.w1", TensorKind::weight, layer.w1);
        fn(prefix + "ffn.b1", TensorKind::bias, layer.b1);
        fn(prefix + "ffn.w2", TensorKind::weight, layer.w2);
        fn(prefix + "ffn.b2", TensorKind::bias, layer.b2);
        fn(prefix + "ln2.gain", TensorKind::layer_norm, layer.ln2_gain);
        fn(prefix + "ln2.bias", TensorKind::layer_norm, layer.ln2_bias);
    }
    fn("pool.w", TensorKind::weight, p.pool_w);
    fn("pool.b", TensorKind::bias, p.pool_b);
}

template <typename S, typename Fn>
void visit_params(const ParamsT<S>& p, Fn&& fn) {
    visit_params(const_cast<ParamsT<S>&>(p), [&](const std::string& name, TensorKind kind, auto& tensor) {
        fn(name, kind, static_cast<const std::remove_reference_t<decltype(tensor)>&>(tensor));
    });
}

template <typename S>
ParamsT<S> allocate_params(const EncoderConfig& c) {
    const auto d = static_cast<Eigen::Index>(c.hidden_dim);
    const auto ffn = static_cast<Eigen::Index>(c.ffn_dim);
    ParamsT<S> p;
    p.tok_emb.resize(static_cast<Eigen::Index>(c.vocab_size), d);
    p.pos_emb.resize(static_cast<Eigen::Index>(c.max_positions), d);
    p.ln_emb_gain.resize(d);
    p.ln_emb_bias.resize(d);
    p.layers.resize(c.num_layers);
    for (auto& layer : p.layers) {
        layer.wq.resize(d, d);
        layer.wk.resize(d, d);
        layer.wv.resize(d, d);
        layer.wo.resize(d, d);
        layer.bq.resize(d);
        layer.bk.resize(d);
        layer.bv.resize(d);
        layer.bo.resize(d);
        layer.ln1_gain.resize(d);
        layer.ln1_bias.resize(d);
        layer.w1.resize(d, ffn);
        layer.b1.resize(ffn);
        layer.w2.resize(ffn, d);
        layer.b2.resize(d);
        layer.ln2_gain.resize(d);
        layer.ln2_bias.resize(d);
    }
    p.pool_w.resize(static_cast<Eigen::Index>(c.pooled_dim), d);
    p.pool_b.resize(static_cast<Eigen::Index>(c.pooled_dim));
    return p;
}

template <typename S>
ParamsT<S> zeros_like(const ParamsT<S>& other) {
    ParamsT<S> p = other;
    visit_params(p, [](const std::string&, TensorKind, auto& tensor) { tensor.setZero(); });
    return p;
}

// Deterministic normal sampler (Box-Muller over raw mt19937_64 words), so
// init does not depend on libstdc++ distribution internals.
class InitRng {
public:
    explicit InitRng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>((gen_() >> 11) + 1) * (1.0 / 9007199254740992.0); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        spare_ = radius * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return radius * std::cos(2.0 * M_PI * u2);
    }

    // Standard truncated-normal init: resample outside two standard deviations.
    double truncated_normal(double stddev) {
        double z = normal();
        while (std::abs(z) > 2.0) z = normal();
        return z * stddev;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

template <typename S>
ParamsT<S> init_params(const EncoderConfig& config) {
    config.validate();
    ParamsT<S> p = allocate_params<S>(config);
    InitRng rng(config.init_seed);
    visit_params(p, [&](const std::string&, TensorKind kind, auto& tensor) {
        switch (kind) {
            case TensorKind::weight:
            case TensorKind::token_embedding:
                for (Eigen::Index c = 0; c < tensor.cols(); ++c)
                    for (Eigen::Index r = 0; r < tensor.rows(); ++r)
                        tensor(r, c) = static_cast<S>(rng.truncated_normal(0.02));
                break;
            case TensorKind::bias:
                tensor.setZero();
                break;
            case TensorKind::layer_norm:
                break; // handled below per gain/bias name
        }
    });
    p.ln_emb_gain.setOnes();
    p.ln_emb_bias.setZero();
    for (auto& layer : p.layers) {
        layer.ln1_gain.setOnes();
        layer.ln1_bias.setZero();
        layer.ln2_gain.setOnes();
        layer.ln2_bias.setZero();
    }
    return p;
}

std::size_t parameter_count(const EncoderConfig& config);

template <typename S>
std::size_t parameter_count(const ParamsT<S>& params) {
    std::size_t total = 0;
    visit_params(params, [&](const std::string&, TensorKind, const auto& tensor) {
        total += static_cast<std::size_t>(tensor.size());
    });
    return total;
}

template <typename S>
bool all_finite(const ParamsT<S>& params) {
    bool ok = true;
    visit_params(params, [&](const std::string&, TensorKind, const auto& tensor) {
        if (!tensor.allFinite()) ok = false;
    });
    return ok;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

template <typename S>
struct LayerNormCache {
    MatX<S> normalized; // x-hat rows
    VecX<S> inv_std;    // per row
};

template <typename S>
struct LayerCache {
    MatX<S> input;
    MatX<S> q, k, v;              // all heads, n x d
    std::vector<MatX<S>> probs;   // per head, n x n
    MatX<S> attn_concat;          // n x d before the output projection
    MatX<S> attn_drop_mask;       // empty when dropout off
    MatX<S> residual1;            // input + attention
    LayerNormCache<S> ln1;
    MatX<S> ln1_out;
    MatX<S> ffn_pre;              // n x ffn
    MatX<S> ffn_act;              // gelu(ffn_pre)
    MatX<S> ffn_drop_mask;
    MatX<S> residual2;
    LayerNormCache<S> ln2;
};

template <typename S>
struct ForwardCache {
    MatX<S> emb_sum;
    LayerNormCache<S> ln_emb;
    MatX<S> emb_out;
    std::vector<LayerCache<S>> layers;
    MatX<S> hidden;
    tok::EncodedInput input;
};

// Seeded inverted-dropout mask source; only the training loop supplies one.
class DropoutRng {
public:
    explicit DropoutRng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0); }

private:
    std::mt19937_64 gen_;
};

namespace detail {

template <typename S>
void layer_norm(const MatX<S>& x, const VecX<S>& gain, const VecX<S>& bias, MatX<S>& out,
                LayerNormCache<S>* cache) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    out.resize(n, d);
    if (cache) {
        cache->normalized.resize(n, d);
        cache->inv_std.resize(n);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const S mean = x.row(i).mean();
        const S var = (x.row(i).array() - mean).square().mean();
        const S inv_std = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
        Eigen::Array<S, 1, Eigen::Dynamic> normalized = (x.row(i).array() - mean) * inv_std;
        out.row(i) = normalized * gain.transpose().array() + bias.transpose().array();
        if (cache) {
            cache->normalized.row(i) = normalized.matrix();
            cache->inv_std(i) = inv_std;
        }
    }
}

// dL/dx for y = gain * xhat + bias given cached xhat and 1/std.
template <typename S>
MatX<S> layer_norm_backward(const MatX<S>& dy, const VecX<S>& gain, const LayerNormCache<S>& cache,
                            VecX<S>& dgain, VecX<S>& dbias) {
    const Eigen::Index n = dy.rows();
    const Eigen::Index d = dy.cols();
    MatX<S> dx(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Array<S, 1, Eigen::Dynamic> dxhat = dy.row(i).array() * gain.transpose().array();
        const Eigen::Array<S, 1, Eigen::Dynamic> xhat = cache.normalized.row(i).array();
        const S mean_dxhat = dxhat.mean();
        const S mean_dxhat_xhat = (dxhat * xhat).mean();
        dx.row(i) = (cache.inv_std(i) * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)).matrix();
        dgain.array() += (dy.row(i).array() * xhat).transpose();
        dbias.array() += dy.row(i).array().transpose();
    }
    return dx;
}

template <typename S>
S gelu(S x) {
    return S(0.5) * x * (S(1) + std::erf(x * static_cast<S>(M_SQRT1_2)));
}

template <typename S>
S gelu_grad(S x) {
    const S cdf = S(0.5) * (S(1) + std::erf(x * static_cast<S>(M_SQRT1_2)));
    const S pdf = std::exp(S(-0.5) * x * x) * static_cast<S>(0.3989422804014327);
    return cdf + x * pdf;
}

template <typename S>
MatX<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, float rate, DropoutRng& rng) {
    MatX<S> mask(rows, cols);
    const S keep_scale = S(1) / static_cast<S>(1.0f - rate);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            mask(i, j) = rng.uniform() < rate ? S(0) : keep_scale;
    return mask;
}

} // namespace detail

// Per-position hidden states for one encoded sequence. Padding positions are
// excluded from attention through an additive bias on the key axis, so real
// positions are unaffected by how much padding follows them.
template <typename S>
MatX<S> encoder_forward(const EncoderConfig& config, const ParamsT<S>& params,
                        const tok::EncodedInput& input, ForwardCache<S>* cache = nullptr,
                        DropoutRng* dropout = nullptr) {
    const Eigen::Index n = static_cast<Eigen::Index>(input.ids.size());
    if (n == 0) raise(ErrorCode::invalid_argument, "encoder_forward: empty input");
    if (input.ids.size() > config.max_positions)
        raise(ErrorCode::invalid_argument, "encoder_forward: sequence longer than max_positions");
    for (tok::TokenId id : input.ids) {
        if (id >= config.vocab_size)
            raise(ErrorCode::invalid_argument, "encoder_forward: token id out of range");
    }
    const Eigen::Index d = static_cast<Eigen::Index>(config.hidden_dim);
    const Eigen::Index heads = static_cast<Eigen::Index>(config.num_heads);
    const Eigen::Index dk = d / heads;
    const bool apply_dropout = dropout != nullptr && config.dropout_rate > 0.0f;

    MatX<S> emb_sum(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        emb_sum.row(i) = params.tok_emb.row(static_cast<Eigen::Index>(input.ids[static_cast<std::size_t>(i)])) +
                         params.pos_emb.row(i);
    }

    // Additive attention bias: masked-out keys get a large negative score.
    VecX<S> key_bias(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool masked_in = static_cast<std::size_t>(j) < input.mask.size() && input.mask[static_cast<std::size_t>(j)];
        key_bias(j) = masked_in ? S(0) : static_cast<S>(kMaskBias);
    }

    MatX<S> x;
    LayerNormCache<S> ln_emb_cache;
    detail::layer_norm(emb_sum, params.ln_emb_gain, params.ln_emb_bias, x,
                       cache ? &ln_emb_cache : nullptr);
    if (cache) {
        cache->emb_sum = emb_sum;
        cache->ln_emb = std::move(ln_emb_cache);
        cache->emb_out = x;
        cache->layers.clear();
        cache->layers.reserve(params.layers.size());
        cache->input = input;
    }

    const S scale = S(1) / std::sqrt(static_cast<S>(dk));
    for (const auto& layer : params.layers) {
        LayerCache<S> lc;
        lc.input = x;

        MatX<S> q = (x * layer.wq).rowwise() + layer.bq.transpose();
        MatX<S> k = (x * layer.wk).rowwise() + layer.bk.transpose();
        MatX<S> v = (x * layer.wv).rowwise() + layer.bv.transpose();

        MatX<S> attn_concat(n, d);
        lc.probs.reserve(static_cast<std::size_t>(heads));
        for (Eigen::Index h = 0; h < heads; ++h) {
            const auto qh = q.middleCols(h * dk, dk);
            const auto kh = k.middleCols(h * dk, dk);
            const auto vh = v.middleCols(h * dk, dk);
            MatX<S> scores = (qh * kh.transpose()) * scale;
            scores.rowwise() += key_bias.transpose();
            MatX<S> probs(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const S row_max = scores.row(i).maxCoeff();
                Eigen::Array<S, 1, Eigen::Dynamic> e = (scores.row(i).array() - row_max).exp();
                probs.row(i) = (e / e.sum()).matrix();
            }
            attn_concat.middleCols(h * dk, dk) = probs * vh;
            lc.probs.push_back(std::move(probs));
        }

        MatX<S> attn_out = (attn_concat * layer.wo).rowwise() + layer.bo.transpose();
        if (apply_dropout) {
            lc.attn_drop_mask = detail::dropout_mask<S>(n, d, config.dropout_rate, *dropout);
            attn_out.array() *= lc.attn_drop_mask.array();
        }

        MatX<S> residual1 = x + attn_out;
        MatX<S> ln1_out;
        detail::layer_norm(residual1, layer.ln1_gain, layer.ln1_bias, ln1_out,
                           cache ? &lc.ln1 : nullptr);

        MatX<S> ffn_pre = (ln1_out * layer.w1).rowwise() + layer.b1.transpose();
        MatX<S> ffn_act = ffn_pre.unaryExpr([](S v) { return detail::gelu(v); });
        MatX<S> ffn_out = (ffn_act * layer.w2).rowwise() + layer.b2.transpose();
        if (apply_dropout) {
            lc.ffn_drop_mask = detail::dropout_mask<S>(n, d, config.dropout_rate, *dropout);
            ffn_out.array() *= lc.ffn_drop_mask.array();
        }

        MatX<S> residual2 = ln1_out + ffn_out;
        MatX<S> ln2_out;
        detail::layer_norm(residual2, layer.ln2_gain, layer.ln2_bias, ln2_out,
                           cache ? &lc.ln2 : nullptr);

        if (cache) {
            lc.q = std::move(q);
            lc.k = std::move(k);
            lc.v = std::move(v);
            lc.attn_concat = std::move(attn_concat);
            lc.residual1 = std::move(residual1);
            lc.ln1_out = ln1_out;
            lc.ffn_pre = std::move(ffn_pre);
            lc.ffn_act = std::move(ffn_act);
            lc.residual2 = std::move(residual2);
            cache->layers.push_back(std::move(lc));
        }
        x = std::move(ln2_out);
    }

    if (!x.allFinite()) raise(ErrorCode::numeric_failure, "encoder_forward: non-finite hidden states");
    if (cache) cache->hidden = x;
    return x;
}

// Accumulates parameter gradients for one sequence given dL/d(hidden).
template <typename S>
void encoder_backward(const EncoderConfig& config, const ParamsT<S>& params,
                      const ForwardCache<S>& cache, const MatX<S>& dhidden, ParamsT<S>& grads) {
    const Eigen::Index n = dhidden.rows();
    const Eigen::Index d = static_cast<Eigen::Index>(config.hidden_dim);
    const Eigen::Index heads = static_cast<Eigen::Index>(config.num_heads);
    const Eigen::Index dk = d / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dk));

    MatX<S> dx = dhidden;
    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const auto& layer = params.layers[li];
        auto& glayer = grads.layers[li];
        const LayerCache<S>& lc = cache.layers[li];

        // ln2
        MatX<S> dresidual2 = detail::layer_norm_backward(dx, layer.ln2_gain, lc.ln2,
                                                         glayer.ln2_gain, glayer.ln2_bias);

        // ffn branch
        MatX<S> dffn_out = dresidual2;
        if (lc.ffn_drop_mask.size() > 0) dffn_out.array() *= lc.ffn_drop_mask.array();
        glayer.b2 += dffn_out.colwise().sum().transpose();
        glayer.w2 += lc.ffn_act.transpose() * dffn_out;
        MatX<S> dffn_act = dffn_out * layer.w2.transpose();
        MatX<S> dffn_pre =
            dffn_act.array() * lc.ffn_pre.unaryExpr([](S v) { return detail::gelu_grad(v); }).array();
        glayer.b1 += dffn_pre.colwise().sum().transpose();
        glayer.w1 += lc.ln1_out.transpose() * dffn_pre;
        MatX<S> dln1_out = dresidual2 + dffn_pre * layer.w1.transpose();

        // ln1
        MatX<S> dresidual1 = detail::layer_norm_backward(dln1_out, layer.ln1_gain, lc.ln1,
                                                         glayer.ln1_gain, glayer.ln1_bias);

        // attention branch
        MatX<S> dattn_out = dresidual1;
        if (lc.attn_drop_mask.size() > 0) dattn_out.array() *= lc.attn_drop_mask.array();
        glayer.bo += dattn_out.colwise().sum().transpose();
        glayer.wo += lc.attn_concat.transpose() * dattn_out;
        MatX<S> dattn_concat = dattn_out * layer.wo.transpose();

        MatX<S> dq(n, d), dk_mat(n, d), dv(n, d);
        for (Eigen::Index h = 0; h < heads; ++h) {
            const auto qh = lc.q.middleCols(h * dk, dk);
            const auto kh = lc.k.middleCols(h * dk, dk);
            const auto vh = lc.v.middleCols(h * dk, dk);
            const MatX<S>& probs = lc.probs[static_cast<std::size_t>(h)];
            const auto dctx = dattn_concat.middleCols(h * dk, dk);

            MatX<S> dprobs = dctx * vh.transpose();
            dv.middleCols(h * dk, dk) = probs.transpose() * dctx;

            MatX<S> dscores(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const S dot = dprobs.row(i).dot(probs.row(i));
                dscores.row(i) =
                    (probs.row(i).array() * (dprobs.row(i).array() - dot)).matrix() * scale;
            }
            dq.middleCols(h * dk, dk) = dscores * kh;
            dk_mat.middleCols(h * dk, dk) = dscores.transpose() * qh;
        }

        glayer.bq += dq.colwise().sum().transpose();
        glayer.bk += dk_mat.colwise().sum().transpose();
        glayer.bv += dv.colwise().sum().transpose();
        glayer.wq += lc.input.transpose() * dq;
        glayer.wk += lc.input.transpose() * dk_mat;
        glayer.wv += lc.input.transpose() * dv;

        dx = dresidual1 + dq * layer.wq.transpose() + dk_mat * layer.wk.transpose() +
             dv * layer.wv.transpose();
    }

    MatX<S> demb_sum =
        detail::layer_norm_backward(dx, params.ln_emb_gain, cache.ln_emb, grads.ln_emb_gain, grads.ln_emb_bias);
    for (Eigen::Index i = 0; i < n; ++i) {
        grads.tok_emb.row(static_cast<Eigen::Index>(cache.input.ids[static_cast<std::size_t>(i)])) +=
            demb_sum.row(i);
        grads.pos_emb.row(i) += demb_sum.row(i);
    }
}

// ---------------------------------------------------------------------------
// Pooling heads
// ---------------------------------------------------------------------------

enum class EmbedMode { title, skills, combined };

std::string embed_mode_name(EmbedMode mode);
EmbedMode embed_mode_from_name(const std::string& name);

struct Embedding {
    std::vector<float> values;
    EmbedMode mode = EmbedMode::title;
    bool normalized = false;
};

template <typename S>
struct PoolCache {
    std::vector<std::size_t> positions;
    VecX<S> mean;     // gathered mean of hidden rows
    VecX<S> pre_norm; // pool_w * mean + pool_b
    VecX<S> unit;     // pre_norm / |pre_norm|
};

// Positions pooled in title mode: masked-in, non-special tokens; falls back
// to the CLS position for inputs with no real words.
inline std::vector<std::size_t> title_pool_positions(const tok::EncodedInput& input) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < input.ids.size(); ++i) {
        if (i < input.mask.size() && input.mask[i] && input.ids[i] >= tok::kNumSpecials) {
            positions.push_back(i);
        }
    }
    if (positions.empty()) {
        bool any_masked = false;
        for (std::size_t i = 0; i < input.mask.size(); ++i) {
            if (input.mask[i]) {
                any_masked = true;
                break;
            }
        }
        if (!any_masked) raise(ErrorCode::invalid_argument, "pool_title: empty attention mask");
        positions.push_back(0); // CLS
    }
    return positions;
}

template <typename S>
VecX<S> pool_over_positions(const ParamsT<S>& params, const MatX<S>& hidden,
                            const std::vector<std::size_t>& positions, PoolCache<S>* cache = nullptr) {
    if (positions.empty()) raise(ErrorCode::invalid_argument, "pooling: no positions to aggregate");
    VecX<S> mean = VecX<S>::Zero(hidden.cols());
    for (std::size_t pos : positions) {
        if (pos >= static_cast<std::size_t>(hidden.rows()))
            raise(ErrorCode::invalid_argument, "pooling: position out of range");
        mean += hidden.row(static_cast<Eigen::Index>(pos)).transpose();
    }
    mean /= static_cast<S>(positions.size());

    VecX<S> pre_norm = params.pool_w * mean + params.pool_b;
    const S norm = pre_norm.norm();
    if (!(norm > S(0)))
        raise(ErrorCode::numeric_failure, "pooling: zero-norm embedding");
    VecX<S> unit = pre_norm / norm;
    if (cache) {
        cache->positions = positions;
        cache->mean = std::move(mean);
        cache->pre_norm = std::move(pre_norm);
        cache->unit = unit;
    }
    return unit;
}

template <typename S>
VecX<S> pool_title(const ParamsT<S>& params, const MatX<S>& hidden, const tok::EncodedInput& input,
                   PoolCache<S>* cache = nullptr) {
    return pool_over_positions(params, hidden, title_pool_positions(input), cache);
}

template <typename S>
VecX<S> pool_skills(const ParamsT<S>& params, const MatX<S>& hidden, const tok::EncodedInput& input,
                    PoolCache<S>* cache = nullptr) {
    if (input.skill_positions.empty())
        raise(ErrorCode::invalid_argument, "pool_skills: no [SKILL] positions");
    for (std::size_t pos : input.skill_positions) {
        if (pos >= input.ids.size() || input.ids[pos] != tok::kSkill ||
            pos >= input.mask.size() || !input.mask[pos])
            raise(ErrorCode::invalid_argument, "pool_skills: invalid [SKILL] position");
    }
    return pool_over_positions(params, hidden, input.skill_positions, cache);
}

// Backward through normalize(pool_w * mean + pool_b) and the gather-mean;
// accumulates into grads and returns dL/d(hidden).
template <typename S>
MatX<S> pool_backward(const ParamsT<S>& params, const PoolCache<S>& cache, Eigen::Index seq_len,
                      const VecX<S>& dunit, ParamsT<S>& grads) {
    const S norm = cache.pre_norm.norm();
    VecX<S> dpre = (dunit - cache.unit * cache.unit.dot(dunit)) / norm;
    grads.pool_b += dpre;
    grads.pool_w += dpre * cache.mean.transpose();
    VecX<S> dmean = params.pool_w.transpose() * dpre;

    MatX<S> dhidden = MatX<S>::Zero(seq_len, dmean.size());
    const S inv_count = S(1) / static_cast<S>(cache.positions.size());
    for (std::size_t pos : cache.positions) {
        dhidden.row(static_cast<Eigen::Index>(pos)) += (dmean * inv_count).transpose();
    }
    return dhidden;
}

// ---------------------------------------------------------------------------
// Record-level embedding (float production path)
// ---------------------------------------------------------------------------

struct Model {
    EncoderConfig config;
    ParamsT<float> params;
};

Model make_model(const EncoderConfig& config);

// Renormalized mean of the two unit branch embeddings (combined-mode fusion).
Embedding combine_embeddings(const Embedding& title, const Embedding& skills);

Embedding embed_title(const Model& model, const tok::Vocabulary& vocab, const std::string& title);
Embedding embed_skills(const Model& model, const tok::Vocabulary& vocab,
                       const std::vector<std::string>& skills);
Embedding embed_record(const Model& model, const tok::Vocabulary& vocab,
                       const corpus::JobRecord& record, EmbedMode mode);

// Mean-of-word-vectors baseline over a fixed random table. Word vectors are
// summed in sorted-id order, which makes the mean exactly order-invariant.
struct StaticTable {
    Eigen::MatrixXf rows; // vocab_size x dim
};

StaticTable make_static_table(std::size_t vocab_size, std::uint32_t dim, std::uint64_t seed);
Embedding static_embed(const StaticTable& table, const tok::Vocabulary& vocab,
                       const corpus::JobRecord& record, EmbedMode mode);

} // namespace titlenorm::enc
