#pragma once

#include "titlenorm/corpus.hpp"
#include "titlenorm/encoder.hpp"
#include "titlenorm/error.hpp"
#include "titlenorm/tokenizer.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace titlenorm::train {

struct TrainConfig {
    int batch_size = 32;
    int epochs = 1;
    double learning_rate = 1e-3;
    double scale = 20.0; // similarity temperature multiplier
    double weight_decay = 0.01;
    std::uint64_t shuffle_seed = 0;
    double validation_fraction = 0.05;
    int checkpoint_every = 0; // steps between validation probes; 0 = end of epoch only
    bool bidirectional = false;

    void validate() const {
        if (batch_size < 1) raise(ErrorCode::invalid_argument, "train config: batch_size must be >= 1");
        if (epochs < 1) raise(ErrorCode::invalid_argument, "train config: epochs must be >= 1");
        if (learning_rate < 0.0) raise(ErrorCode::invalid_argument, "train config: negative learning_rate");
        if (scale <= 0.0) raise(ErrorCode::invalid_argument, "train config: scale must be positive");
        if (weight_decay < 0.0) raise(ErrorCode::invalid_argument, "train config: negative weight_decay");
        if (validation_fraction <= 0.0 || validation_fraction >= 0.5)
            raise(ErrorCode::invalid_argument, "train config: validation_fraction must be in (0, 0.5)");
        if (checkpoint_every < 0) raise(ErrorCode::invalid_argument, "train config: negative checkpoint_every");
    }
};

// ---------------------------------------------------------------------------
// Similarity and Multiple Negatives Ranking loss
// ---------------------------------------------------------------------------

// M[i][j] = cosine(title_i, skills_j); rows must hold unit vectors.
template <typename S>
enc::MatX<S> similarity_matrix(const enc::MatX<S>& titles, const enc::MatX<S>& skills) {
    if (titles.rows() != skills.rows() || titles.cols() != skills.cols())
        raise(ErrorCode::invalid_argument, "similarity_matrix: dimension mismatch");
    if (titles.rows() == 0) raise(ErrorCode::invalid_argument, "similarity_matrix: empty batch");
    for (Eigen::Index i = 0; i < titles.rows(); ++i) {
        if (std::abs(titles.row(i).norm() - S(1)) > S(1e-4) ||
            std::abs(skills.row(i).norm() - S(1)) > S(1e-4))
            raise(ErrorCode::numeric_failure, "similarity_matrix: embeddings not unit-norm");
    }
    return titles * skills.transpose();
}

// Row-wise softmax cross-entropy against the diagonal:
//   loss = -(1/B) sum_i [ s*M[i][i] - log sum_j exp(s*M[i][j]) ].
// Evaluated as (1/B) sum_i log1p(sum_{j != i} exp(s*(M[i][j] - M[i][i]))),
// which keeps the degenerate cases exact: B = 1 gives 0, constant matrices
// give ln B, and near-diagonal matrices keep full precision in the tail.
template <typename S>
double mnr_loss(const enc::MatX<S>& m, double scale) {
    if (scale <= 0.0) raise(ErrorCode::invalid_argument, "mnr_loss: scale must be positive");
    if (m.rows() != m.cols() || m.rows() == 0)
        raise(ErrorCode::invalid_argument, "mnr_loss: matrix must be square and non-empty");
    const Eigen::Index b = m.rows();
    double total = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        const double diag = static_cast<double>(m(i, i));
        double off_sum = 0.0;
        for (Eigen::Index j = 0; j < b; ++j) {
            if (j == i) continue;
            off_sum += std::exp(scale * (static_cast<double>(m(i, j)) - diag));
        }
        total += std::log1p(off_sum);
    }
    return total / static_cast<double>(b);
}

// dL/dM = (s/B) (P - I) with P the row-wise softmax of s*M; the transposed
// term is averaged in for the bidirectional variant (columns as queries).
template <typename S>
enc::MatX<S> mnr_loss_grad(const enc::MatX<S>& m, double scale, bool bidirectional) {
    const Eigen::Index b = m.rows();
    enc::MatX<double> grad = enc::MatX<double>::Zero(b, b);
    auto add_direction = [&](bool transposed) {
        for (Eigen::Index i = 0; i < b; ++i) {
            const double diag = static_cast<double>(m(i, i));
            double denom = 1.0;
            for (Eigen::Index j = 0; j < b; ++j) {
                if (j == i) continue;
                denom += std::exp(scale * (static_cast<double>(transposed ? m(j, i) : m(i, j)) - diag));
            }
            for (Eigen::Index j = 0; j < b; ++j) {
                const double numer =
                    j == i ? 1.0 : std::exp(scale * (static_cast<double>(transposed ? m(j, i) : m(i, j)) - diag));
                const double p = numer / denom;
                const double g = scale / static_cast<double>(b) * (p - (i == j ? 1.0 : 0.0));
                if (transposed) {
                    grad(j, i) += g;
                } else {
                    grad(i, j) += g;
                }
            }
        }
    };
    add_direction(false);
    if (bidirectional) {
        add_direction(true);
        grad *= 0.5;
    }
    return grad.template cast<S>();
}

// ---------------------------------------------------------------------------
// Full-pipeline backward
// ---------------------------------------------------------------------------

struct BatchPair {
    tok::EncodedInput title;
    tok::EncodedInput skills;
};

template <typename S>
struct BackwardResult {
    double loss = 0.0;
    enc::ParamsT<S> grads;
};

// Loss and gradients of mnr_loss over a batch run through both Siamese
// branches. Gradient flows through the similarity matrix, both L2
// normalizations, the shared pooling layer and the full encoder stack.
template <typename S>
BackwardResult<S> backward_batch(const enc::EncoderConfig& config, const enc::ParamsT<S>& params,
                                 const std::vector<BatchPair>& batch, const TrainConfig& tc,
                                 enc::DropoutRng* dropout = nullptr) {
    tc.validate();
    if (batch.empty()) raise(ErrorCode::invalid_argument, "backward: empty batch");
    const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index p = static_cast<Eigen::Index>(config.pooled_dim);

    std::vector<enc::ForwardCache<S>> title_caches(batch.size());
    std::vector<enc::ForwardCache<S>> skills_caches(batch.size());
    std::vector<enc::PoolCache<S>> title_pools(batch.size());
    std::vector<enc::PoolCache<S>> skills_pools(batch.size());

    enc::MatX<S> titles(b, p);
    enc::MatX<S> skills(b, p);
    for (Eigen::Index i = 0; i < b; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i);
        const auto& pair = batch[idx];
        const enc::MatX<S> th = enc::encoder_forward(config, params, pair.title, &title_caches[idx], dropout);
        titles.row(i) = enc::pool_title(params, th, pair.title, &title_pools[idx]).transpose();
        const enc::MatX<S> sh = enc::encoder_forward(config, params, pair.skills, &skills_caches[idx], dropout);
        skills.row(i) = enc::pool_skills(params, sh, pair.skills, &skills_pools[idx]).transpose();
    }

    const enc::MatX<S> m = titles * skills.transpose();
    BackwardResult<S> result;
    result.loss = mnr_loss(m, tc.scale);
    const enc::MatX<S> dm = mnr_loss_grad(m, tc.scale, tc.bidirectional);

    const enc::MatX<S> dtitles = dm * skills;
    const enc::MatX<S> dskills = dm.transpose() * titles;

    result.grads = enc::zeros_like(params);
    for (Eigen::Index i = 0; i < b; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i);
        const auto& pair = batch[idx];
        const enc::MatX<S> dth =
            enc::pool_backward(params, title_pools[idx], static_cast<Eigen::Index>(pair.title.ids.size()),
                               enc::VecX<S>(dtitles.row(i).transpose()), result.grads);
        enc::encoder_backward(config, params, title_caches[idx], dth, result.grads);
        const enc::MatX<S> dsh =
            enc::pool_backward(params, skills_pools[idx], static_cast<Eigen::Index>(pair.skills.ids.size()),
                               enc::VecX<S>(dskills.row(i).transpose()), result.grads);
        enc::encoder_backward(config, params, skills_caches[idx], dsh, result.grads);
    }

    if (!std::isfinite(result.loss) || !enc::all_finite(result.grads)) {
        raise(ErrorCode::numeric_failure, "backward: non-finite gradient");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Optimizer: Adam with decoupled weight decay
// ---------------------------------------------------------------------------

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

template <typename S>
struct AdamState {
    enc::ParamsT<S> m;
    enc::ParamsT<S> v;
    std::int64_t step = 0;
};

template <typename S>
AdamState<S> make_adam_state(const enc::ParamsT<S>& params) {
    return AdamState<S>{enc::zeros_like(params), enc::zeros_like(params), 0};
}

namespace detail {

template <typename S>
struct TensorRef {
    enc::TensorKind kind;
    S* data;
    std::size_t size;
    Eigen::Index rows;
};

template <typename S>
std::vector<TensorRef<S>> tensor_refs(enc::ParamsT<S>& p) {
    std::vector<TensorRef<S>> refs;
    enc::visit_params(p, [&](const std::string&, enc::TensorKind kind, auto& tensor) {
        refs.push_back(TensorRef<S>{kind, tensor.data(), static_cast<std::size_t>(tensor.size()), tensor.rows()});
    });
    return refs;
}

} // namespace detail

// Decoupled-weight-decay Adam. Decay skips biases, layer norms and the
// embedding rows of the reserved special tokens.
template <typename S>
void optimizer_step(enc::ParamsT<S>& params, const enc::ParamsT<S>& grads, AdamState<S>& state,
                    const TrainConfig& tc) {
    auto param_refs = detail::tensor_refs(params);
    auto grad_refs = detail::tensor_refs(const_cast<enc::ParamsT<S>&>(grads));
    auto m_refs = detail::tensor_refs(state.m);
    auto v_refs = detail::tensor_refs(state.v);
    if (param_refs.size() != grad_refs.size() || param_refs.size() != m_refs.size() ||
        param_refs.size() != v_refs.size())
        raise(ErrorCode::invalid_argument, "optimizer: tensor count mismatch");

    state.step += 1;
    const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    const double lr = tc.learning_rate;

    for (std::size_t t = 0; t < param_refs.size(); ++t) {
        auto& pr = param_refs[t];
        const auto& gr = grad_refs[t];
        auto& mr = m_refs[t];
        auto& vr = v_refs[t];
        if (pr.size != gr.size || pr.size != mr.size || pr.size != vr.size)
            raise(ErrorCode::invalid_argument, "optimizer: shape mismatch");
        const bool decay_kind =
            pr.kind == enc::TensorKind::weight || pr.kind == enc::TensorKind::token_embedding;
        for (std::size_t e = 0; e < pr.size; ++e) {
            const double g = static_cast<double>(gr.data[e]);
            const double m = kAdamBeta1 * static_cast<double>(mr.data[e]) + (1.0 - kAdamBeta1) * g;
            const double v = kAdamBeta2 * static_cast<double>(vr.data[e]) + (1.0 - kAdamBeta2) * g * g;
            mr.data[e] = static_cast<S>(m);
            vr.data[e] = static_cast<S>(v);
            double value = static_cast<double>(pr.data[e]);
            value -= lr * (m / bias1) / (std::sqrt(v / bias2) + kAdamEps);
            if (decay_kind && tc.weight_decay > 0.0) {
                // Column-major storage: element e sits in row e % rows.
                const bool special_row = pr.kind == enc::TensorKind::token_embedding &&
                                         (e % static_cast<std::size_t>(pr.rows)) < tok::kNumSpecials;
                if (!special_row) value -= lr * tc.weight_decay * static_cast<double>(pr.data[e]);
            }
            pr.data[e] = static_cast<S>(value);
        }
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct StepLogEntry {
    std::int64_t step = 0;
    double loss = 0.0;
    double wall_ms = 0.0;
    std::size_t batch_size = 0;
};

struct ValidationEntry {
    std::int64_t step = 0;
    double loss = 0.0;
    double recall1 = 0.0;
    std::uint64_t probe_size = 0;
};

struct TrainLog {
    std::vector<StepLogEntry> steps;
    std::vector<ValidationEntry> validations;
};

std::string train_log_to_jsonl(const TrainLog& log);

// One-epoch-by-default contrastive training over (title, skills) pairs.
// Shuffles with shuffle_seed, forms batches of batch_size, dedupes positives
// within a batch by normalized-title key (duplicates spill to later batches)
// and drops the final short batch. Deterministic given seeds.
TrainLog train(enc::Model& model, const std::vector<corpus::JobRecord>& dataset,
               const TrainConfig& config, const tok::Vocabulary& vocab,
               const std::function<void(std::int64_t)>& checkpoint_hook = nullptr);

} // namespace titlenorm::train
