#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudlab/layers.hpp"
#include "fraudlab/losses.hpp"
#include "fraudlab/matrix.hpp"
#include "fraudlab/metrics.hpp"
#include "fraudlab/optimizer.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

enum class LossKind { kBce, kFocal };

inline double classification_loss(LossKind kind, const FocalConfig& fc, const Matrix& y,
                                  const Matrix& yhat) {
  return kind == LossKind::kFocal ? focal_loss(fc, y, yhat) : bce_loss(y, yhat);
}

inline Matrix classification_grad(LossKind kind, const FocalConfig& fc, const Matrix& y,
                                  const Matrix& yhat) {
  return kind == LossKind::kFocal ? focal_grad(fc, y, yhat) : bce_grad(y, yhat);
}

inline Matrix labels_column(const std::vector<int>& y) {
  Matrix m(y.size(), 1);
  for (std::size_t i = 0; i < y.size(); ++i) m(i, 0) = static_cast<double>(y[i]);
  return m;
}

struct HeadStep {
  double loss = 0.0;
  Matrix dx;  // d(loss)/d(input), so a host model can keep backpropagating
};

// A probabilistic binary classifier that can sit on top of raw features or
// on a host model's latent codes. backward_only leaves gradients in place
// (and reports dx) without touching the weights; train_step is
// backward_only followed by one optimizer step.
class IClassifierHead {
 public:
  virtual ~IClassifierHead() = default;
  virtual std::string kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::vector<double> predict(const Matrix& x) = 0;
  virtual HeadStep backward_only(const Matrix& x, const std::vector<int>& y) = 0;
  virtual void apply_step() = 0;
  virtual std::vector<ParamRef> params() = 0;
  virtual std::vector<BufferRef> buffers() { return {}; }

  HeadStep train_step(const Matrix& x, const std::vector<int>& y) {
    HeadStep s = backward_only(x, y);
    apply_step();
    return s;
  }

  std::vector<std::vector<double>> snapshot() {
    auto p = params();
    auto b = buffers();
    return snapshot_values(p, b);
  }
  void restore(const std::vector<std::vector<double>>& snap) {
    auto p = params();
    auto b = buffers();
    restore_values(p, b, snap);
  }
};

enum class MlpArch { kV1, kV2, kV3 };

inline const char* mlp_arch_name(MlpArch a) {
  switch (a) {
    case MlpArch::kV1: return "mlp1";
    case MlpArch::kV2: return "mlp2";
    case MlpArch::kV3: return "mlp3";
  }
  return "mlp?";
}

struct MlpHeadConfig {
  MlpArch arch = MlpArch::kV1;
  std::size_t input_dim = 2;
  LossKind loss = LossKind::kBce;
  FocalConfig focal{};
  double lr = 1e-3;
  uint64_t seed = 1;
};

// Three fixed architectures, all ending in a sigmoid:
//   v1: input -> 32 relu -> 1
//   v2: input -> 64 batchnorm relu dropout(0.2) -> 1
//   v3: input -> 128 relu -> 64 relu -> 1
class MlpHead : public IClassifierHead {
 public:
  explicit MlpHead(MlpHeadConfig cfg) : cfg_(cfg), opt_(AdamConfig{cfg.lr}) {
    Rng rng(cfg.seed);
    switch (cfg.arch) {
      case MlpArch::kV1:
        net_.add(std::make_unique<Dense>(cfg.input_dim, 32, rng));
        net_.add(std::make_unique<Relu>());
        net_.add(std::make_unique<Dense>(32, 1, rng));
        break;
      case MlpArch::kV2: {
        net_.add(std::make_unique<Dense>(cfg.input_dim, 64, rng));
        net_.add(std::make_unique<BatchNorm>(64));
        net_.add(std::make_unique<Relu>());
        auto drop = std::make_unique<Dropout>(0.2, derive_seed(cfg.seed, 0xd0));
        dropout_ = drop.get();
        net_.add(std::move(drop));
        net_.add(std::make_unique<Dense>(64, 1, rng));
        break;
      }
      case MlpArch::kV3:
        net_.add(std::make_unique<Dense>(cfg.input_dim, 128, rng));
        net_.add(std::make_unique<Relu>());
        net_.add(std::make_unique<Dense>(128, 64, rng));
        net_.add(std::make_unique<Relu>());
        net_.add(std::make_unique<Dense>(64, 1, rng));
        break;
    }
    net_.add(std::make_unique<SigmoidLayer>());
  }

  std::string kind() const override { return mlp_arch_name(cfg_.arch); }
  std::size_t input_dim() const override { return cfg_.input_dim; }
  const MlpHeadConfig& config() const { return cfg_; }

  std::vector<double> predict(const Matrix& x) override {
    Matrix p = net_.forward(x, Mode::kInfer);
    return p.data;
  }

  HeadStep backward_only(const Matrix& x, const std::vector<int>& y) override {
    if (x.rows != y.size()) throw std::invalid_argument("MlpHead: batch size mismatch");
    auto ps = params();
    zero_grads(ps);
    Matrix yhat = net_.forward(x, Mode::kTrain);
    Matrix ym = labels_column(y);
    HeadStep step;
    step.loss = classification_loss(cfg_.loss, cfg_.focal, ym, yhat);
    step.dx = net_.backward(classification_grad(cfg_.loss, cfg_.focal, ym, yhat));
    return step;
  }

  void apply_step() override {
    auto ps = params();
    opt_.step(ps);
  }

  std::vector<ParamRef> params() override {
    std::vector<ParamRef> out;
    net_.collect_params(kind(), out);
    return out;
  }
  std::vector<BufferRef> buffers() override {
    std::vector<BufferRef> out;
    net_.collect_buffers(kind(), out);
    return out;
  }

  // Gradient checking needs a repeatable forward; this pins the dropout mask
  // of the v2 architecture to whatever the next training forward draws.
  void set_dropout_frozen(bool frozen) {
    if (dropout_) dropout_->freeze(frozen);
  }

 private:
  MlpHeadConfig cfg_;
  Mlp net_;
  Dropout* dropout_ = nullptr;
  Adam opt_;
};

// Plain logistic regression fitted by full-batch gradient descent with L2.
// Deterministic zero init (the objective is convex, so no random restarts);
// the seed parameter is accepted for interface uniformity.
struct LogRegConfig {
  double lr = 0.1;
  std::size_t epochs = 500;
  double l2 = 1e-4;
  uint64_t seed = 0;
};

struct LogRegModel {
  Matrix w;  // 1 x d
  double b = 0.0;
};

inline std::vector<double> logreg_predict(const LogRegModel& m, const Matrix& x) {
  if (x.cols != m.w.cols) throw std::invalid_argument("logreg_predict: dim mismatch");
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double s = m.b;
    for (std::size_t j = 0; j < x.cols; ++j) s += m.w(0, j) * x(i, j);
    out[i] = sigmoid(s);
  }
  return out;
}

inline LogRegModel logreg_fit(const Matrix& x, const std::vector<int>& y,
                              const LogRegConfig& cfg = {}) {
  if (x.rows != y.size()) throw std::invalid_argument("logreg_fit: size mismatch");
  std::size_t pos = 0;
  for (int v : y) pos += v == 1;
  if (pos == 0 || pos == y.size())
    throw std::invalid_argument("logreg_fit: both classes must be present");
  LogRegModel m;
  m.w = Matrix(1, x.cols);
  double n = static_cast<double>(x.rows);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<double> p = logreg_predict(m, x);
    Matrix gw(1, x.cols);
    double gb = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      double err = (p[i] - static_cast<double>(y[i])) / n;
      gb += err;
      for (std::size_t j = 0; j < x.cols; ++j) gw(0, j) += err * x(i, j);
    }
    for (std::size_t j = 0; j < x.cols; ++j)
      m.w(0, j) -= cfg.lr * (gw(0, j) + cfg.l2 * m.w(0, j));
    m.b -= cfg.lr * gb;
  }
  return m;
}

struct StandaloneTrainConfig {
  std::size_t epochs = 80;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  double val_threshold = 0.5;
  uint64_t seed = 1;
};

struct StandaloneEpoch {
  double train_loss = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
  double val_composite = 0.0;
};

struct StandaloneTrainLog {
  std::vector<StandaloneEpoch> epochs;
  std::size_t best_epoch = 0;
};

// Builds shuffled mini-batches; a trailing single row is folded into the
// previous batch so batch-norm never sees a batch of one.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n,
                                                          std::size_t batch_size,
                                                          Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(idx.begin() + start, idx.begin() + end);
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

// Mini-batch training of a head directly on feature vectors. Model
// selection: composite score (mean of precision and recall) on the
// validation set; the checkpoint refreshes on ties so late-epoch regularizer
// effects survive, while patience counts epochs without strict improvement.
inline StandaloneTrainLog train_standalone(IClassifierHead& head, const Matrix& x,
                                           const std::vector<int>& y, const Matrix& xval,
                                           const std::vector<int>& yval,
                                           const StandaloneTrainConfig& cfg = {}) {
  if (x.rows != y.size() || xval.rows != yval.size())
    throw std::invalid_argument("train_standalone: size mismatch");
  std::size_t pos = 0;
  for (int v : y) pos += v == 1;
  if (pos == 0 || pos == y.size())
    throw std::invalid_argument("train_standalone: both classes must be present");

  Rng rng(derive_seed(cfg.seed, 0x57a));
  StandaloneTrainLog log;
  double best_score = -1.0;
  std::vector<std::vector<double>> best_snap;
  std::size_t since_improvement = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto batches = make_batches(x.rows, cfg.batch_size, rng);
    double loss_sum = 0.0;
    std::size_t nb = 0;
    for (const auto& batch : batches) {
      Matrix bx = take_rows(x, batch);
      std::vector<int> by(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) by[i] = y[batch[i]];
      HeadStep s = head.train_step(bx, by);
      if (!std::isfinite(s.loss))
        throw std::runtime_error("train_standalone: loss diverged at epoch " +
                                 std::to_string(epoch));
      loss_sum += s.loss;
      ++nb;
    }
    std::vector<double> probs = head.predict(xval);
    Prf m = prf_from_confusion(confusion_counts(yval, probs, cfg.val_threshold));
    StandaloneEpoch e;
    e.train_loss = loss_sum / static_cast<double>(nb);
    e.val_precision = m.precision;
    e.val_recall = m.recall;
    e.val_composite = composite_score(m.precision, m.recall);
    log.epochs.push_back(e);

    if (e.val_composite >= best_score) {
      if (e.val_composite > best_score)
        since_improvement = 0;
      else
        ++since_improvement;
      best_score = e.val_composite;
      best_snap = head.snapshot();
      log.best_epoch = epoch;
    } else {
      ++since_improvement;
    }
    if (since_improvement > cfg.patience) break;
  }
  if (!best_snap.empty()) head.restore(best_snap);
  return log;
}

}  // namespace fraudlab
