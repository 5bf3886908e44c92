#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "fraudlab/matrix.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

enum class Mode { kTrain, kInfer };

// Handle onto one trainable tensor: the optimizer reads grad and writes
// value. Names are stable and used as checkpoint keys, so keep them unique
// within a model.
struct ParamRef {
  std::string name;
  Matrix* value;
  Matrix* grad;
};

// Non-trainable state that still has to survive a checkpoint round trip
// (batch-norm running statistics).
struct BufferRef {
  std::string name;
  Matrix* value;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Matrix forward(const Matrix& x, Mode mode) = 0;
  // Consumes d(loss)/d(output), accumulates parameter grads, returns
  // d(loss)/d(input). Must be called right after the matching forward; each
  // layer keeps only one cached activation.
  virtual Matrix backward(const Matrix& dy) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {}
  virtual void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {}
};

// Xavier / Glorot uniform init, zero bias.
inline Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::size_t r,
                             std::size_t c, Rng& rng) {
  double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(r, c);
  for (double& v : w.data) v = rng.uniform(-a, a);
  return w;
}

class Dense : public Layer {
 public:
  Dense(std::size_t in, std::size_t out, Rng& rng)
      : w_(xavier_uniform(in, out, out, in, rng)),
        b_(1, out),
        gw_(out, in),
        gb_(1, out) {}

  Matrix forward(const Matrix& x, Mode) override {
    x_ = x;
    Matrix y = matmul_abt(x, w_);
    add_row_inplace(y, b_);
    return y;
  }

  Matrix backward(const Matrix& dy) override {
    add_inplace(gw_, matmul_atb(dy, x_));
    add_inplace(gb_, col_sums(dy));
    return matmul(dy, w_);
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override {
    out.push_back({prefix + ".w", &w_, &gw_});
    out.push_back({prefix + ".b", &b_, &gb_});
  }

  std::size_t in_dim() const { return w_.cols; }
  std::size_t out_dim() const { return w_.rows; }

 private:
  Matrix w_, b_, gw_, gb_;  // w is out x in, y = x w^T + b
  Matrix x_;
};

class Relu : public Layer {
 public:
  Matrix forward(const Matrix& x, Mode) override {
    mask_ = x;
    for (double& v : mask_.data) v = v > 0.0 ? 1.0 : 0.0;
    return relu(x);
  }
  Matrix backward(const Matrix& dy) override { return hadamard(dy, mask_); }

 private:
  Matrix mask_;
};

class SigmoidLayer : public Layer {
 public:
  Matrix forward(const Matrix& x, Mode) override {
    y_ = sigmoid(x);
    return y_;
  }
  Matrix backward(const Matrix& dy) override {
    Matrix dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
      dx.data[i] *= y_.data[i] * (1.0 - y_.data[i]);
    return dx;
  }

 private:
  Matrix y_;
};

// Batch normalization over the batch dimension. Batch statistics (biased
// variance) in training; running statistics at inference, updated with
// momentum from the unbiased batch variance. Training batches must have at
// least two rows or the normalization is degenerate.
class BatchNorm : public Layer {
 public:
  BatchNorm(std::size_t dim, double momentum = 0.1, double eps = 1e-5)
      : gamma_(1, dim, 1.0),
        beta_(1, dim),
        ggamma_(1, dim),
        gbeta_(1, dim),
        running_mean_(1, dim),
        running_var_(1, dim, 1.0),
        momentum_(momentum),
        eps_(eps) {}

  Matrix forward(const Matrix& x, Mode mode) override {
    mode_ = mode;
    if (mode == Mode::kInfer) {
      Matrix y(x.rows, x.cols);
      for (std::size_t j = 0; j < x.cols; ++j) {
        double inv = 1.0 / std::sqrt(running_var_(0, j) + eps_);
        for (std::size_t i = 0; i < x.rows; ++i)
          y(i, j) = gamma_(0, j) * (x(i, j) - running_mean_(0, j)) * inv + beta_(0, j);
      }
      infer_inv_std_ = Matrix(1, x.cols);
      for (std::size_t j = 0; j < x.cols; ++j)
        infer_inv_std_(0, j) = 1.0 / std::sqrt(running_var_(0, j) + eps_);
      return y;
    }
    if (x.rows < 2)
      throw std::invalid_argument("BatchNorm: training batch needs >= 2 rows");
    std::size_t n = x.rows;
    Matrix mean = col_means(x);
    Matrix var(1, x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double d = x(i, j) - mean(0, j);
        s += d * d;
      }
      var(0, j) = s / static_cast<double>(n);
    }
    inv_std_ = Matrix(1, x.cols);
    for (std::size_t j = 0; j < x.cols; ++j)
      inv_std_(0, j) = 1.0 / std::sqrt(var(0, j) + eps_);
    xhat_ = Matrix(x.rows, x.cols);
    Matrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < x.cols; ++j) {
        xhat_(i, j) = (x(i, j) - mean(0, j)) * inv_std_(0, j);
        y(i, j) = gamma_(0, j) * xhat_(i, j) + beta_(0, j);
      }
    double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < x.cols; ++j) {
      running_mean_(0, j) = (1.0 - momentum_) * running_mean_(0, j) + momentum_ * mean(0, j);
      running_var_(0, j) =
          (1.0 - momentum_) * running_var_(0, j) + momentum_ * var(0, j) * unbias;
    }
    return y;
  }

  Matrix backward(const Matrix& dy) override {
    if (mode_ == Mode::kInfer) {
      Matrix dx = dy;
      for (std::size_t i = 0; i < dx.rows; ++i)
        for (std::size_t j = 0; j < dx.cols; ++j)
          dx(i, j) *= gamma_(0, j) * infer_inv_std_(0, j);
      return dx;
    }
    std::size_t n = dy.rows;
    Matrix dx(dy.rows, dy.cols);
    for (std::size_t j = 0; j < dy.cols; ++j) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum_dy += dy(i, j);
        sum_dy_xhat += dy(i, j) * xhat_(i, j);
      }
      ggamma_(0, j) += sum_dy_xhat;
      gbeta_(0, j) += sum_dy;
      double g = gamma_(0, j) * inv_std_(0, j) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        dx(i, j) = g * (static_cast<double>(n) * dy(i, j) - sum_dy -
                        xhat_(i, j) * sum_dy_xhat);
    }
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override {
    out.push_back({prefix + ".gamma", &gamma_, &ggamma_});
    out.push_back({prefix + ".beta", &beta_, &gbeta_});
  }
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) override {
    out.push_back({prefix + ".running_mean", &running_mean_});
    out.push_back({prefix + ".running_var", &running_var_});
  }

 private:
  Matrix gamma_, beta_, ggamma_, gbeta_;
  Matrix running_mean_, running_var_;
  Matrix xhat_, inv_std_, infer_inv_std_;
  double momentum_, eps_;
  Mode mode_ = Mode::kTrain;
};

// Inverted dropout: active only in training, scales kept units by 1/(1-p) so
// inference is the identity.
class Dropout : public Layer {
 public:
  Dropout(double p, uint64_t seed) : p_(p), rng_(seed) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("Dropout: p must be in [0,1)");
  }

  Matrix forward(const Matrix& x, Mode mode) override {
    if (mode == Mode::kInfer || p_ == 0.0) {
      identity_ = true;
      return x;
    }
    identity_ = false;
    if (!(frozen_ && mask_.rows == x.rows && mask_.cols == x.cols)) {
      mask_ = Matrix(x.rows, x.cols);
      double keep_scale = 1.0 / (1.0 - p_);
      for (double& v : mask_.data) v = rng_.uniform() < p_ ? 0.0 : keep_scale;
    }
    return hadamard(x, mask_);
  }

  Matrix backward(const Matrix& dy) override {
    if (identity_) return dy;
    return hadamard(dy, mask_);
  }

  // While frozen, repeated forwards of the same batch shape reuse the last
  // mask instead of redrawing; gradient checks need that repeatability.
  void freeze(bool frozen) { frozen_ = frozen; }

 private:
  double p_;
  Rng rng_;
  Matrix mask_;
  bool identity_ = true;
  bool frozen_ = false;
};

// A plain layer stack.
class Mlp {
 public:
  Mlp() = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Matrix forward(const Matrix& x, Mode mode) {
    Matrix h = x;
    for (auto& l : layers_) h = l->forward(h, mode);
    return h;
  }

  Matrix backward(const Matrix& dy) {
    Matrix d = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
    return d;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect_params(prefix + ".l" + std::to_string(i), out);
  }
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect_buffers(prefix + ".l" + std::to_string(i), out);
  }

  std::size_t layer_count() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

inline void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->fill(0.0);
}

// Snapshot / restore of all values (params + buffers), used for
// best-epoch checkpointing inside training loops.
inline std::vector<std::vector<double>> snapshot_values(
    const std::vector<ParamRef>& params, const std::vector<BufferRef>& buffers) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size() + buffers.size());
  for (const auto& p : params) out.push_back(p.value->data);
  for (const auto& b : buffers) out.push_back(b.value->data);
  return out;
}

inline void restore_values(const std::vector<ParamRef>& params,
                           const std::vector<BufferRef>& buffers,
                           const std::vector<std::vector<double>>& snap) {
  if (snap.size() != params.size() + buffers.size())
    throw std::invalid_argument("restore_values: snapshot size mismatch");
  std::size_t k = 0;
  for (const auto& p : params) p.value->data = snap[k++];
  for (const auto& b : buffers) b.value->data = snap[k++];
}

}  // namespace fraudlab
