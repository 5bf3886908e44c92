#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudlab/heads.hpp"
#include "fraudlab/layers.hpp"
#include "fraudlab/losses.hpp"
#include "fraudlab/matrix.hpp"
#include "fraudlab/optimizer.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

// Ablation switches. kNoAttention pins every attention weight to 1;
// kNoPrototypes drops the distance geometry entirely and classifies from a
// linear readout of the attention-gated features.
enum class CpacVariant { kFull, kNoAttention, kNoPrototypes };

struct CpacConfig {
  std::size_t input_dim = 2;
  std::size_t attention_hidden = 0;  // 0 -> max(8, input_dim)
  CpacVariant variant = CpacVariant::kFull;
  bool penalties = true;             // scale + anchor regularizers
  double lambda_scale = 1e-3;
  double lambda_anchor = 1e-2;
  LossKind loss = LossKind::kFocal;
  FocalConfig focal{};
  double lr = 1e-3;
  uint64_t seed = 1;

  std::size_t attention_dim() const {
    return attention_hidden ? attention_hidden : std::max<std::size_t>(8, input_dim);
  }
};

struct CpacExplain {
  std::vector<double> attention;  // per-feature weight in (0,1)
  double d0 = 0.0;                // weighted distance to the normal prototype
  double d1 = 0.0;                // weighted distance to the fraud prototype
  double prob = 0.0;              // sigmoid(d0 - d1)
};

// Classifier built from two class prototypes, a feature-attention network
// and a shared distance scale alpha. A sample is scored by its
// attention-weighted squared distance to each prototype; being closer to the
// fraud prototype than to the normal one raises the fraud probability:
//   d_c = alpha * sum_j w_j (x_j - p_cj)^2,  prob = sigmoid(d0 - d1),
// which is exactly the two-class softmax over (-d0, -d1).
//
// Two regularizers keep the geometry honest: lambda_scale * alpha^2 stops
// the scale from exploding, and an anchor penalty pulls each prototype
// toward the batch mean of its class (skipped for a class absent from the
// batch). The anchor term depends on the batch inputs, so in joint training
// its gradient also flows back into the host encoder through dx.
class CpacHead : public IClassifierHead {
 public:
  explicit CpacHead(CpacConfig cfg)
      : cfg_(cfg),
        p0_(1, cfg.input_dim),
        p1_(1, cfg.input_dim),
        gp0_(1, cfg.input_dim),
        gp1_(1, cfg.input_dim),
        alpha_(1, 1, 1.0),
        galpha_(1, 1),
        init_rng_(derive_seed(cfg.seed, 0xa11)),
        opt_(AdamConfig{cfg.lr}) {
    Rng rng(cfg.seed);
    if (cfg_.variant != CpacVariant::kNoAttention) {
      std::size_t h = cfg_.attention_dim();
      attention_ = std::make_unique<Mlp>();
      attention_->add(std::make_unique<Dense>(cfg.input_dim, h, rng));
      attention_->add(std::make_unique<Relu>());
      attention_->add(std::make_unique<Dense>(h, cfg.input_dim, rng));
      attention_->add(std::make_unique<SigmoidLayer>());
    }
    if (cfg_.variant == CpacVariant::kNoPrototypes)
      readout_ = std::make_unique<Dense>(cfg.input_dim, 1, rng);
  }

  std::string kind() const override { return "cpac"; }
  std::size_t input_dim() const override { return cfg_.input_dim; }
  const CpacConfig& config() const { return cfg_; }

  const Matrix& prototype(int cls) const { return cls == 1 ? p1_ : p0_; }
  double alpha() const { return alpha_(0, 0); }
  bool prototypes_initialized() const { return initialized_; }

  Matrix attention_weights(const Matrix& x, Mode mode) {
    if (cfg_.variant == CpacVariant::kNoAttention) return Matrix(x.rows, x.cols, 1.0);
    return attention_->forward(x, mode);
  }

  std::vector<double> predict(const Matrix& x) override {
    if (x.cols != cfg_.input_dim) throw std::invalid_argument("CpacHead: dim mismatch");
    Matrix w = attention_weights(x, Mode::kInfer);
    std::vector<double> out(x.rows);
    if (cfg_.variant == CpacVariant::kNoPrototypes) {
      Matrix p = sigmoid(readout_->forward(hadamard(x, w), Mode::kInfer));
      return p.data;
    }
    double a = alpha_(0, 0);
    for (std::size_t i = 0; i < x.rows; ++i) {
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t j = 0; j < x.cols; ++j) {
        double d0 = x(i, j) - p0_(0, j), d1 = x(i, j) - p1_(0, j);
        s0 += w(i, j) * d0 * d0;
        s1 += w(i, j) * d1 * d1;
      }
      out[i] = sigmoid(a * s0 - a * s1);
    }
    return out;
  }

  CpacExplain explain(const Matrix& x, std::size_t row) {
    if (row >= x.rows) throw std::out_of_range("CpacHead::explain: row out of range");
    Matrix xr = take_rows(x, {row});
    Matrix w = attention_weights(xr, Mode::kInfer);
    CpacExplain ex;
    ex.attention = w.data;
    if (cfg_.variant == CpacVariant::kNoPrototypes) {
      ex.prob = sigmoid(readout_->forward(hadamard(xr, w), Mode::kInfer))(0, 0);
      return ex;
    }
    double a = alpha_(0, 0);
    for (std::size_t j = 0; j < xr.cols; ++j) {
      double d0 = xr(0, j) - p0_(0, j), d1 = xr(0, j) - p1_(0, j);
      ex.d0 += a * w(0, j) * d0 * d0;
      ex.d1 += a * w(0, j) * d1 * d1;
    }
    ex.prob = sigmoid(ex.d0 - ex.d1);
    return ex;
  }

  HeadStep backward_only(const Matrix& x, const std::vector<int>& y) override {
    if (x.rows != y.size()) throw std::invalid_argument("CpacHead: batch size mismatch");
    if (x.cols != cfg_.input_dim) throw std::invalid_argument("CpacHead: dim mismatch");
    maybe_init_prototypes(x, y);
    auto ps = params();
    zero_grads(ps);

    std::size_t B = x.rows, d = x.cols;
    Matrix w = attention_weights(x, Mode::kTrain);
    Matrix ym = labels_column(y);
    HeadStep step;
    step.dx = Matrix(B, d);

    if (cfg_.variant == CpacVariant::kNoPrototypes) {
      Matrix gated = hadamard(x, w);
      Matrix yhat = sigmoid(readout_->forward(gated, Mode::kTrain));
      step.loss = classification_loss(cfg_.loss, cfg_.focal, ym, yhat);
      Matrix dyhat = classification_grad(cfg_.loss, cfg_.focal, ym, yhat);
      Matrix ds = dyhat;
      for (std::size_t i = 0; i < ds.size(); ++i)
        ds.data[i] *= yhat.data[i] * (1.0 - yhat.data[i]);
      Matrix dgated = readout_->backward(ds);
      step.dx = hadamard(dgated, w);
      Matrix dw = hadamard(dgated, x);
      add_inplace(step.dx, attention_->backward(dw));
      return step;
    }

    double a = alpha_(0, 0);
    // s_c[i] = sum_j w_ij (x_ij - p_cj)^2, the distance before scaling
    Matrix s0(B, 1), s1(B, 1);
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double e0 = x(i, j) - p0_(0, j), e1 = x(i, j) - p1_(0, j);
        s0(i, 0) += w(i, j) * e0 * e0;
        s1(i, 0) += w(i, j) * e1 * e1;
      }
    Matrix yhat(B, 1);
    for (std::size_t i = 0; i < B; ++i) yhat(i, 0) = sigmoid(a * (s0(i, 0) - s1(i, 0)));

    double clf = classification_loss(cfg_.loss, cfg_.focal, ym, yhat);

    // class means for the anchor penalty
    std::size_t n0 = 0, n1 = 0;
    Matrix mean0(1, d), mean1(1, d);
    for (std::size_t i = 0; i < B; ++i) {
      if (y[i] == 1) {
        ++n1;
        for (std::size_t j = 0; j < d; ++j) mean1(0, j) += x(i, j);
      } else {
        ++n0;
        for (std::size_t j = 0; j < d; ++j) mean0(0, j) += x(i, j);
      }
    }
    if (n0) for (double& v : mean0.data) v /= static_cast<double>(n0);
    if (n1) for (double& v : mean1.data) v /= static_cast<double>(n1);

    double pen = 0.0;
    if (cfg_.penalties) {
      pen += cfg_.lambda_scale * a * a;
      if (n0)
        for (std::size_t j = 0; j < d; ++j) {
          double e = p0_(0, j) - mean0(0, j);
          pen += cfg_.lambda_anchor * e * e;
        }
      if (n1)
        for (std::size_t j = 0; j < d; ++j) {
          double e = p1_(0, j) - mean1(0, j);
          pen += cfg_.lambda_anchor * e * e;
        }
    }
    step.loss = clf + pen;

    // backward: dyhat -> ds (logit) -> alpha, w, x, prototypes
    Matrix dyhat = classification_grad(cfg_.loss, cfg_.focal, ym, yhat);
    Matrix dlogit(B, 1);
    for (std::size_t i = 0; i < B; ++i)
      dlogit(i, 0) = dyhat(i, 0) * yhat(i, 0) * (1.0 - yhat(i, 0));

    Matrix dw(B, d);
    double da = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
      double dl = dlogit(i, 0);
      da += dl * (s0(i, 0) - s1(i, 0));
      for (std::size_t j = 0; j < d; ++j) {
        double e0 = x(i, j) - p0_(0, j), e1 = x(i, j) - p1_(0, j);
        dw(i, j) = dl * a * (e0 * e0 - e1 * e1);
        step.dx(i, j) = dl * a * 2.0 * w(i, j) * (e0 - e1);
        gp0_(0, j) += dl * a * w(i, j) * (-2.0) * e0;
        gp1_(0, j) += dl * a * w(i, j) * 2.0 * e1;
      }
    }
    if (cfg_.penalties) {
      da += 2.0 * cfg_.lambda_scale * a;
      if (n0)
        for (std::size_t j = 0; j < d; ++j) {
          double e = p0_(0, j) - mean0(0, j);
          gp0_(0, j) += 2.0 * cfg_.lambda_anchor * e;
          for (std::size_t i = 0; i < B; ++i)
            if (y[i] != 1)
              step.dx(i, j) -= 2.0 * cfg_.lambda_anchor * e / static_cast<double>(n0);
        }
      if (n1)
        for (std::size_t j = 0; j < d; ++j) {
          double e = p1_(0, j) - mean1(0, j);
          gp1_(0, j) += 2.0 * cfg_.lambda_anchor * e;
          for (std::size_t i = 0; i < B; ++i)
            if (y[i] == 1)
              step.dx(i, j) -= 2.0 * cfg_.lambda_anchor * e / static_cast<double>(n1);
        }
    }
    galpha_(0, 0) += da;
    if (cfg_.variant != CpacVariant::kNoAttention)
      add_inplace(step.dx, attention_->backward(dw));
    return step;
  }

  void apply_step() override {
    auto ps = params();
    opt_.step(ps);
    // alpha is a scale; keep it positive
    if (alpha_(0, 0) < 1e-6) alpha_(0, 0) = 1e-6;
  }

  std::vector<ParamRef> params() override {
    std::vector<ParamRef> out;
    if (cfg_.variant != CpacVariant::kNoPrototypes) {
      out.push_back({"cpac.p0", &p0_, &gp0_});
      out.push_back({"cpac.p1", &p1_, &gp1_});
      out.push_back({"cpac.alpha", &alpha_, &galpha_});
    }
    if (attention_) attention_->collect_params("cpac.attention", out);
    if (readout_) readout_->collect_params("cpac.readout", out);
    return out;
  }

  // Prototypes start at the class means of the first training batch; a class
  // missing from that batch falls back to small uniform noise around the
  // origin.
  void maybe_init_prototypes(const Matrix& x, const std::vector<int>& y) {
    if (initialized_ || cfg_.variant == CpacVariant::kNoPrototypes) return;
    std::size_t n0 = 0, n1 = 0;
    Matrix acc0(1, x.cols), acc1(1, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (y[i] == 1) {
        ++n1;
        for (std::size_t j = 0; j < x.cols; ++j) acc1(0, j) += x(i, j);
      } else {
        ++n0;
        for (std::size_t j = 0; j < x.cols; ++j) acc0(0, j) += x(i, j);
      }
    }
    for (std::size_t j = 0; j < x.cols; ++j) {
      p0_(0, j) = n0 ? acc0(0, j) / static_cast<double>(n0) : init_rng_.uniform(-0.1, 0.1);
      p1_(0, j) = n1 ? acc1(0, j) / static_cast<double>(n1) : init_rng_.uniform(-0.1, 0.1);
    }
    initialized_ = true;
  }

  void mark_initialized() { initialized_ = true; }  // checkpoint load path

 private:
  CpacConfig cfg_;
  Matrix p0_, p1_, gp0_, gp1_;
  Matrix alpha_, galpha_;
  std::unique_ptr<Mlp> attention_;
  std::unique_ptr<Dense> readout_;
  Rng init_rng_;
  Adam opt_;
  bool initialized_ = false;
};

}  // namespace fraudlab
