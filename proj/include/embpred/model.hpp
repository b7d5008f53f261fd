#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "embpred/nn.hpp"
#include "embpred/preprocess.hpp"
#include "embpred/rng.hpp"
#include "embpred/types.hpp"

namespace embpred {

struct ModelConfig {
  std::vector<Index> hidden_sizes{512, 512};
  double emb_dropout = 0.05;
  double hidden_dropout = 0.15;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  Index epochs = 70;
  Index batch_size = 256;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

// round(1.6 * n^0.56), half away from zero, floor of 1.
inline Index embedding_dim(Index cardinality) {
  const double raw = 1.6 * std::pow(static_cast<double>(cardinality), 0.56);
  const Index dim = static_cast<Index>(std::llround(raw));
  return dim < 1 ? 1 : dim;
}

// Embedding classifier: one embedding table per categorical column (sized by
// embedding_dim), dropout over the concatenated embeddings, batch-normalized
// continuous block, then Linear/ReLU/BatchNorm/Dropout stacks ending in a
// 2-logit head.
template <typename S>
class EmbNet {
 public:
  struct Block {
    nn::Linear<S> linear;
    nn::ReLU<S> relu;
    nn::BatchNorm1d<S> bn;
    nn::Dropout<S> dropout;
  };

  EmbNet() = default;

  EmbNet(const std::vector<std::pair<std::string, Index>>& cat_specs, Index n_cont,
         const ModelConfig& config)
      : config_(config), n_cont_(n_cont), rng_(Rng(config.seed).stream("dropout")) {
    if (cat_specs.empty() && n_cont == 0) {
      throw ValidationError("model needs at least one categorical or continuous column");
    }
    Rng init = Rng(config.seed).stream("init");
    Index width = 0;
    for (const auto& [name, cardinality] : cat_specs) {
      if (cardinality < 1) throw ValidationError("column " + name + ": cardinality must be >= 1");
      embeddings_.emplace_back(cardinality, embedding_dim(cardinality));
      embeddings_.back().init_weights(init);
      width += embedding_dim(cardinality);
    }
    emb_dropout_ = nn::Dropout<S>(static_cast<S>(config.emb_dropout));
    if (n_cont_ > 0) {
      bn_cont_ = nn::BatchNorm1d<S>(n_cont_, static_cast<S>(config.bn_momentum),
                                    static_cast<S>(config.bn_eps));
    }
    width += n_cont_;

    Index in = width;
    for (Index h : config.hidden_sizes) {
      Block b;
      b.linear = nn::Linear<S>(in, h);
      b.linear.init_weights(init);
      b.bn = nn::BatchNorm1d<S>(h, static_cast<S>(config.bn_momentum),
                                static_cast<S>(config.bn_eps));
      b.dropout = nn::Dropout<S>(static_cast<S>(config.hidden_dropout));
      blocks_.push_back(std::move(b));
      in = h;
    }
    head_ = nn::Linear<S>(in, 2);
    head_.init_weights(init);
  }

  void set_mode(nn::Mode mode) { mode_ = mode; }
  nn::Mode mode() const { return mode_; }

  Index input_width() const {
    Index w = n_cont_;
    for (const auto& e : embeddings_) w += e.dim();
    return w;
  }

  MatX<S> forward(const MatXi& cat, const MatX<S>& cont) {
    if (cat.cols() != static_cast<Index>(embeddings_.size()) || cont.cols() != n_cont_) {
      throw ValidationError("layout mismatch: batch has " + std::to_string(cat.cols()) +
                            " categorical and " + std::to_string(cont.cols()) +
                            " continuous columns; model expects " +
                            std::to_string(embeddings_.size()) + " and " +
                            std::to_string(n_cont_));
    }
    const Index batch = cat.rows() > 0 ? cat.rows() : cont.rows();
    MatX<S> x(batch, input_width());
    Index offset = 0;
    for (std::size_t e = 0; e < embeddings_.size(); ++e) {
      const VecXi idx = cat.col(static_cast<Index>(e));
      MatX<S> emb = embeddings_[e].forward(idx);
      x.middleCols(offset, emb.cols()) = emb;
      offset += emb.cols();
    }
    if (offset > 0) {
      MatX<S> emb_block = emb_dropout_.forward(x.leftCols(offset), mode_, rng_);
      x.leftCols(offset) = emb_block;
    }
    if (n_cont_ > 0) {
      x.middleCols(offset, n_cont_) = bn_cont_.forward(cont.template cast<S>(), mode_);
    }

    MatX<S> h = x;
    for (auto& b : blocks_) {
      h = b.linear.forward(h);
      h = b.relu.forward(h);
      h = b.bn.forward(h, mode_);
      h = b.dropout.forward(h, mode_, rng_);
    }
    return head_.forward(h);
  }

  void backward(const MatX<S>& dlogits) {
    MatX<S> g = head_.backward(dlogits);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      g = it->dropout.backward(g);
      g = it->bn.backward(g);
      g = it->relu.backward(g);
      g = it->linear.backward(g);
    }
    Index offset = 0;
    Index emb_width = 0;
    for (const auto& e : embeddings_) emb_width += e.dim();
    if (emb_width > 0) {
      MatX<S> demb = emb_dropout_.backward(g.leftCols(emb_width));
      for (auto& e : embeddings_) {
        e.backward(demb.middleCols(offset, e.dim()));
        offset += e.dim();
      }
    }
    if (n_cont_ > 0) {
      bn_cont_.backward(g.middleCols(emb_width, n_cont_));  // gamma/beta only; dx unused
    }
  }

  std::vector<nn::Param<S>*> parameters() {
    std::vector<nn::Param<S>*> out;
    for (auto& e : embeddings_) out.push_back(&e.table());
    if (n_cont_ > 0) {
      out.push_back(&bn_cont_.gamma());
      out.push_back(&bn_cont_.beta());
    }
    for (auto& b : blocks_) {
      out.push_back(&b.linear.weight());
      out.push_back(&b.linear.bias());
      out.push_back(&b.bn.gamma());
      out.push_back(&b.bn.beta());
    }
    out.push_back(&head_.weight());
    out.push_back(&head_.bias());
    return out;
  }

  void zero_grad() {
    for (nn::Param<S>* p : parameters()) p->zero_grad();
  }

  Index count_parameters() const {
    Index total = 0;
    for (const auto& e : embeddings_) total += e.rows() * e.dim();
    if (n_cont_ > 0) total += 2 * n_cont_;
    for (const auto& b : blocks_) {
      total += b.linear.in_features() * b.linear.out_features() + b.linear.out_features();
      total += 2 * b.bn.features();
    }
    total += head_.in_features() * head_.out_features() + head_.out_features();
    return total;
  }

  const ModelConfig& config() const { return config_; }
  Index n_cont() const { return n_cont_; }
  std::vector<nn::Embedding<S>>& embeddings() { return embeddings_; }
  const std::vector<nn::Embedding<S>>& embeddings() const { return embeddings_; }
  nn::BatchNorm1d<S>& bn_cont() { return bn_cont_; }
  const nn::BatchNorm1d<S>& bn_cont() const { return bn_cont_; }
  std::vector<Block>& blocks() { return blocks_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  nn::Linear<S>& head() { return head_; }
  const nn::Linear<S>& head() const { return head_; }

 private:
  ModelConfig config_;
  Index n_cont_ = 0;
  std::vector<nn::Embedding<S>> embeddings_;
  nn::Dropout<S> emb_dropout_;
  nn::BatchNorm1d<S> bn_cont_;
  std::vector<Block> blocks_;
  nn::Linear<S> head_;
  nn::Mode mode_ = nn::Mode::train;
  Rng rng_{0};
};

template <typename S>
EmbNet<S> build_model(const std::vector<std::pair<std::string, Index>>& cat_specs, Index n_cont,
                      const ModelConfig& config) {
  return EmbNet<S>(cat_specs, n_cont, config);
}

struct TrainResult {
  std::vector<double> epoch_loss;
};

using ProgressSink = std::function<void(Index epoch, double mean_loss)>;

// Shuffled mini-batch optimization of the cross-entropy objective. A trailing
// batch of one row is folded into the previous batch (batch norm needs >= 2
// rows). Leaves the model in eval mode.
template <typename S>
TrainResult train(EmbNet<S>& model, const EncodedMatrix& data, const ModelConfig& config,
                  const ProgressSink& progress = {}) {
  const Index n = data.rows();
  if (n == 0) throw ValidationError("train: empty dataset");
  bool has_pos = false, has_neg = false;
  for (Index i = 0; i < n; ++i) {
    (data.target[i] == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw ValidationError("train: both classes must be present");
  if (n < 2) throw ValidationError("train: need at least 2 rows");

  nn::Adam<S> optimizer(static_cast<S>(config.lr));
  optimizer.attach(model.parameters());
  Rng shuffle_rng = Rng(config.seed).stream("shuffle");

  std::vector<Index> order(static_cast<std::size_t>(n));
  TrainResult result;
  model.set_mode(nn::Mode::train);

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle_rng.shuffle(order);

    // batch extents; a remainder of one row joins the final full batch
    std::vector<std::pair<Index, Index>> batches;
    Index start = 0;
    while (start < n) {
      Index len = std::min<Index>(config.batch_size, n - start);
      if (n - (start + len) == 1) ++len;
      batches.emplace_back(start, len);
      start += len;
    }

    double loss_sum = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto [begin, len] = batches[bi];
      MatXi cat(len, data.cat.cols());
      MatX<S> cont(len, data.cont.cols());
      VecXi targets(len);
      for (Index b = 0; b < len; ++b) {
        const Index r = order[static_cast<std::size_t>(begin + b)];
        if (data.cat.cols() > 0) cat.row(b) = data.cat.row(r);
        if (data.cont.cols() > 0) cont.row(b) = data.cont.row(r).template cast<S>();
        targets[b] = data.target[r];
      }
      model.zero_grad();
      MatX<S> logits = model.forward(cat, cont);
      auto [loss, dlogits] = nn::softmax_cross_entropy(logits, targets);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(bi + 1));
      }
      model.backward(dlogits);
      optimizer.step();
      loss_sum += static_cast<double>(loss) * static_cast<double>(len);
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    result.epoch_loss.push_back(mean_loss);
    if (progress) progress(epoch + 1, mean_loss);
  }
  model.set_mode(nn::Mode::eval);
  return result;
}

// Positive-class probabilities in eval mode.
template <typename S>
VecXd predict_scores(EmbNet<S>& model, const EncodedMatrix& data, Index batch_size = 1024) {
  const nn::Mode saved = model.mode();
  model.set_mode(nn::Mode::eval);
  const Index n = data.rows();
  VecXd scores(n);
  for (Index start = 0; start < n; start += batch_size) {
    const Index len = std::min<Index>(batch_size, n - start);
    MatXi cat(len, data.cat.cols());
    MatX<S> cont(len, data.cont.cols());
    for (Index b = 0; b < len; ++b) {
      if (data.cat.cols() > 0) cat.row(b) = data.cat.row(start + b);
      if (data.cont.cols() > 0) cont.row(b) = data.cont.row(start + b).template cast<S>();
    }
    MatX<S> probs = nn::softmax(model.forward(cat, cont));
    for (Index b = 0; b < len; ++b) scores[start + b] = static_cast<double>(probs(b, 1));
  }
  model.set_mode(saved);
  return scores;
}

}  // namespace embpred
