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
#include "fraudlab/metrics.hpp"
#include "fraudlab/optimizer.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

// Which rows feed the generative (reconstruction / KL / adversarial) phase
// of joint training. kMinority trains the generator purely on fraud rows, so
// the latent space is organized around what fraud looks like; kAll uses the
// whole batch.
enum class GenerativeScope { kMinority, kAll };

struct VaeGanConfig {
  std::size_t input_dim = 30;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> encoder_hidden = {16, 8};
  std::vector<std::size_t> decoder_hidden = {8, 16};
  std::vector<std::size_t> disc_hidden = {16, 8};
  double recon_weight = 1.0;
  double kl_weight = 0.1;
  double adv_weight = 0.1;
  double logvar_clamp = 10.0;
  double lr = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  // joint training only: an epoch counts as viable when validation precision
  // reaches this gate; among viable epochs, recall picks the checkpoint
  double min_precision = 0.85;
  double val_threshold = 0.5;
  GenerativeScope scope = GenerativeScope::kMinority;
  bool restore_best = true;
  uint64_t seed = 1;
};

struct EncoderOutput {
  Matrix mu, logvar, z, eps;
};

struct OversamplerEpoch {
  double recon = 0.0, kl = 0.0, disc = 0.0, adv = 0.0;
  double val_recon = 0.0;
};

struct OversamplerTrainLog {
  std::vector<OversamplerEpoch> epochs;
  std::size_t best_epoch = 0;
};

struct JointEpoch {
  double recon = 0.0, kl = 0.0, disc = 0.0, adv = 0.0;
  double head_loss = 0.0;
  double val_precision = 0.0, val_recall = 0.0;
  bool gate_met = false;
  double val_generative = 0.0;  // headless score
};

struct JointTrainLog {
  std::vector<JointEpoch> epochs;
  std::size_t best_epoch = 0;
};

// Debug / verification hook: flattened analytic gradients of one
// generative-phase pass.
struct Phase1Grads {
  std::vector<double> encoder, decoder, discriminator;
};

// Variational autoencoder with an adversarial critic on reconstructions.
// Every gradient is computed by hand, layer by layer; see the *_backward
// members. Forward caches live inside the layers, so each forward must be
// consumed by its backward before the same submodule runs forward again.
class VaeGan {
 public:
  explicit VaeGan(VaeGanConfig cfg)
      : cfg_(cfg),
        rng_(derive_seed(cfg.seed, 0x7ae)),
        opt_gen_(AdamConfig{cfg.lr}),
        opt_disc_(AdamConfig{cfg.lr}),
        opt_enc_head_(AdamConfig{cfg.lr}) {
    Rng init(cfg.seed);
    std::size_t in = cfg.input_dim;
    for (std::size_t h : cfg.encoder_hidden) {
      trunk_.add(std::make_unique<Dense>(in, h, init));
      trunk_.add(std::make_unique<Relu>());
      in = h;
    }
    enc_out_ = std::make_unique<Dense>(in, 2 * cfg.latent_dim, init);

    in = cfg.latent_dim;
    for (std::size_t h : cfg.decoder_hidden) {
      dec_.add(std::make_unique<Dense>(in, h, init));
      dec_.add(std::make_unique<Relu>());
      in = h;
    }
    dec_.add(std::make_unique<Dense>(in, cfg.input_dim, init));

    in = cfg.input_dim;
    for (std::size_t h : cfg.disc_hidden) {
      disc_.add(std::make_unique<Dense>(in, h, init));
      disc_.add(std::make_unique<Relu>());
      in = h;
    }
    disc_.add(std::make_unique<Dense>(in, 1, init));
    disc_.add(std::make_unique<SigmoidLayer>());
  }

  const VaeGanConfig& config() const { return cfg_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }  // checkpoint load path

  // --- forward ---

  // mu and logvar from the encoder; z = mu + exp(logvar/2) * eps. logvar is
  // clamped to +-logvar_clamp before exponentiation, and the clamp gates the
  // gradient in the backward pass.
  EncoderOutput encode_with_eps(const Matrix& x, const Matrix& eps) {
    Matrix h = trunk_.forward(x, Mode::kTrain);
    Matrix out = enc_out_->forward(h, Mode::kTrain);
    std::size_t L = cfg_.latent_dim;
    EncoderOutput e;
    e.mu = Matrix(x.rows, L);
    e.logvar = Matrix(x.rows, L);
    clamp_mask_ = Matrix(x.rows, L, 1.0);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < L; ++j) {
        e.mu(i, j) = out(i, j);
        double lv = out(i, j + L);
        if (lv > cfg_.logvar_clamp) {
          lv = cfg_.logvar_clamp;
          clamp_mask_(i, j) = 0.0;
        } else if (lv < -cfg_.logvar_clamp) {
          lv = -cfg_.logvar_clamp;
          clamp_mask_(i, j) = 0.0;
        }
        e.logvar(i, j) = lv;
      }
    if (!eps.empty()) {
      if (eps.rows != x.rows || eps.cols != L)
        throw std::invalid_argument("encode_with_eps: eps shape mismatch");
      e.eps = eps;
      e.z = Matrix(x.rows, L);
      sigma_ = Matrix(x.rows, L);
      for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < L; ++j) {
          sigma_(i, j) = std::exp(0.5 * e.logvar(i, j));
          e.z(i, j) = e.mu(i, j) + sigma_(i, j) * eps(i, j);
        }
      eps_ = e.eps;
    } else {
      eps_ = Matrix();
      sigma_ = Matrix();
    }
    return e;
  }

  EncoderOutput encode(const Matrix& x) {
    Matrix eps(x.rows, cfg_.latent_dim);
    for (double& v : eps.data) v = rng_.normal();
    return encode_with_eps(x, eps);
  }

  // Deterministic code: just mu (no sampling draw).
  Matrix encode_mean(const Matrix& x) { return encode_with_eps(x, Matrix()).mu; }

  Matrix decode(const Matrix& z) { return dec_.forward(z, Mode::kTrain); }

  Matrix discriminate(const Matrix& x) { return disc_.forward(x, Mode::kTrain); }

  // --- backward (each consumes the cache of the matching forward) ---

  // dz flows through the reparameterization: dz/dmu = 1 and
  // dz/dlogvar = eps * sigma / 2 elementwise.
  Matrix encoder_backward(const Matrix& dmu, const Matrix& dlogvar, const Matrix& dz) {
    Matrix dmu_total = dmu;
    Matrix dlv_total = dlogvar.empty() ? Matrix(dmu.rows, dmu.cols) : dlogvar;
    if (!dz.empty()) {
      if (eps_.empty())
        throw std::logic_error("encoder_backward: dz given but last encode drew no eps");
      add_inplace(dmu_total, dz);
      for (std::size_t i = 0; i < dz.size(); ++i)
        dlv_total.data[i] += dz.data[i] * eps_.data[i] * sigma_.data[i] * 0.5;
    }
    for (std::size_t i = 0; i < dlv_total.size(); ++i)
      dlv_total.data[i] *= clamp_mask_.data[i];
    std::size_t L = cfg_.latent_dim;
    Matrix dout(dmu_total.rows, 2 * L);
    for (std::size_t i = 0; i < dmu_total.rows; ++i)
      for (std::size_t j = 0; j < L; ++j) {
        dout(i, j) = dmu_total(i, j);
        dout(i, j + L) = dlv_total(i, j);
      }
    return trunk_.backward(enc_out_->backward(dout));
  }

  Matrix decoder_backward(const Matrix& dx_rec) { return dec_.backward(dx_rec); }

  Matrix discriminator_backward(const Matrix& dprob) { return disc_.backward(dprob); }

  // --- parameter access ---

  std::vector<ParamRef> encoder_params() {
    std::vector<ParamRef> out;
    trunk_.collect_params("encoder.trunk", out);
    enc_out_->collect_params("encoder.out", out);
    return out;
  }
  std::vector<ParamRef> decoder_params() {
    std::vector<ParamRef> out;
    dec_.collect_params("decoder", out);
    return out;
  }
  std::vector<ParamRef> discriminator_params() {
    std::vector<ParamRef> out;
    disc_.collect_params("discriminator", out);
    return out;
  }
  std::vector<ParamRef> generator_params() {
    auto out = encoder_params();
    auto d = decoder_params();
    out.insert(out.end(), d.begin(), d.end());
    return out;
  }
  std::vector<ParamRef> all_params() {
    auto out = generator_params();
    auto d = discriminator_params();
    out.insert(out.end(), d.begin(), d.end());
    return out;
  }

  // --- training ---

  struct BatchLosses {
    double recon = 0.0, kl = 0.0, disc = 0.0, adv = 0.0;
  };

  // Critic half of a generative update: one concatenated forward over real
  // and reconstructed rows, backward of the discriminator objective, and
  // optionally an optimizer step. Leaves d(disc loss)/d(disc params) in the
  // discriminator grads.
  double disc_pass(const Matrix& bx, bool apply_update, const Matrix* eps = nullptr) {
    std::size_t B = bx.rows;
    EncoderOutput e = eps ? encode_with_eps(bx, *eps) : encode(bx);
    Matrix x_fake = decode(e.z);
    Matrix probs = discriminate(vcat(bx, x_fake));
    Matrix p_real(B, 1), p_fake(B, 1);
    for (std::size_t i = 0; i < B; ++i) {
      p_real(i, 0) = probs(i, 0);
      p_fake(i, 0) = probs(B + i, 0);
    }
    double loss = discriminator_loss(p_real, p_fake);
    Matrix dp = vcat(discriminator_grad_real(p_real), discriminator_grad_fake(p_fake));
    zero_grads_of(discriminator_params());
    discriminator_backward(dp);
    if (apply_update) opt_disc_.step(discriminator_params());
    return loss;
  }

  // Generator half: fresh sampling pass, reconstruction + KL + adversarial
  // objective, backward into encoder and decoder. The adversarial term
  // passes through the discriminator, which dirties the critic grads; the
  // next disc_pass zeroes them before use.
  BatchLosses gen_pass(const Matrix& bx, bool apply_update, const Matrix* eps = nullptr) {
    BatchLosses losses;
    EncoderOutput e = eps ? encode_with_eps(bx, *eps) : encode(bx);
    Matrix x_rec = decode(e.z);
    Matrix p = discriminate(x_rec);
    losses.recon = mse_loss(bx, x_rec);
    losses.kl = kl_divergence(e.mu, e.logvar);
    losses.adv = generator_adv_loss(p);

    zero_grads_of(generator_params());
    Matrix dx_rec = scale(mse_grad(bx, x_rec), cfg_.recon_weight);
    add_inplace(dx_rec, discriminator_backward(scale(generator_adv_grad(p), cfg_.adv_weight)));
    Matrix dz = decoder_backward(dx_rec);
    auto [dmu, dlv] = kl_grad(e.mu, e.logvar);
    encoder_backward(scale(dmu, cfg_.kl_weight), scale(dlv, cfg_.kl_weight), dz);
    if (apply_update) opt_gen_.step(generator_params());
    return losses;
  }

  // One adversarial + generative update on a batch of in-scope rows.
  BatchLosses phase1_step(const Matrix& bx) {
    BatchLosses losses;
    losses.disc = disc_pass(bx, true);
    BatchLosses g = gen_pass(bx, true);
    losses.recon = g.recon;
    losses.kl = g.kl;
    losses.adv = g.adv;
    if (!std::isfinite(losses.recon) || !std::isfinite(losses.kl) ||
        !std::isfinite(losses.disc) || !std::isfinite(losses.adv))
      throw std::runtime_error("vae-gan training diverged (non-finite loss)");
    return losses;
  }

  // Trains encoder/decoder/discriminator on minority rows only; model
  // selection on validation reconstruction error of the deterministic code.
  OversamplerTrainLog train_minority_oversampler(const Matrix& x_minority,
                                                 const Matrix& x_val_minority) {
    if (x_minority.rows < 2)
      throw std::invalid_argument("train_minority_oversampler: need >= 2 rows");
    if (x_minority.cols != cfg_.input_dim)
      throw std::invalid_argument("train_minority_oversampler: dim mismatch");
    Rng order_rng(derive_seed(cfg_.seed, 0x0d8));
    OversamplerTrainLog log;
    double best = 0.0;
    bool have_best = false;
    std::vector<std::vector<double>> best_snap;
    std::size_t since_improvement = 0;

    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      auto batches = make_batches(x_minority.rows, cfg_.batch_size, order_rng);
      OversamplerEpoch e;
      for (const auto& batch : batches) {
        BatchLosses l = phase1_step(take_rows(x_minority, batch));
        e.recon += l.recon;
        e.kl += l.kl;
        e.disc += l.disc;
        e.adv += l.adv;
      }
      double nb = static_cast<double>(batches.size());
      e.recon /= nb;
      e.kl /= nb;
      e.disc /= nb;
      e.adv /= nb;
      e.val_recon =
          x_val_minority.rows
              ? mse_loss(x_val_minority, decode(encode_mean(x_val_minority)))
              : e.recon;
      log.epochs.push_back(e);

      if (!have_best || e.val_recon <= best) {
        if (!have_best || e.val_recon < best)
          since_improvement = 0;
        else
          ++since_improvement;
        best = e.val_recon;
        have_best = true;
        best_snap = snapshot();
        log.best_epoch = epoch;
      } else {
        ++since_improvement;
      }
      if (since_improvement > cfg_.patience) break;
    }
    if (cfg_.restore_best && !best_snap.empty()) restore(best_snap);
    trained_ = true;
    return log;
  }

  // Joint loop: per batch, phase 1 updates the generative triplet on
  // in-scope rows, then phase 2 pushes the classifier head's gradient back
  // into the encoder through the deterministic code, so the latent geometry
  // is shaped by what the classifier needs, not only by reconstruction.
  // Checkpointing with a head: an epoch is viable once validation precision
  // meets the gate; viable epochs rank by recall, then precision, and ties
  // refresh the checkpoint so late regularizer effects (prototype anchoring)
  // survive. Patience counts epochs without a strictly better rank.
  JointTrainLog train_joint(IClassifierHead* head, const Matrix& x,
                            const std::vector<int>& y, const Matrix& xval,
                            const std::vector<int>& yval) {
    if (x.rows != y.size() || xval.rows != yval.size())
      throw std::invalid_argument("train_joint: size mismatch");
    if (head && head->input_dim() != cfg_.latent_dim)
      throw std::invalid_argument("train_joint: head input dim != latent dim");
    std::size_t pos = 0;
    for (int v : y) pos += v == 1;
    if (pos == 0 || pos == y.size())
      throw std::invalid_argument("train_joint: both classes must be present");

    Rng order_rng(derive_seed(cfg_.seed, 0x301));
    JointTrainLog log;
    JointEpoch best;
    bool have_best = false;
    std::vector<std::vector<double>> best_snap, best_head_snap;
    std::size_t since_improvement = 0;

    std::vector<std::size_t> val_minority;
    for (std::size_t i = 0; i < yval.size(); ++i)
      if (yval[i] == 1) val_minority.push_back(i);
    Matrix xval_scope = cfg_.scope == GenerativeScope::kMinority
                            ? take_rows(xval, val_minority)
                            : xval;

    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      auto batches = make_batches(x.rows, cfg_.batch_size, order_rng);
      JointEpoch e;
      std::size_t phase1_batches = 0, phase2_batches = 0;
      for (const auto& batch : batches) {
        Matrix bx = take_rows(x, batch);
        std::vector<int> by(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) by[i] = y[batch[i]];

        std::vector<std::size_t> scope_rows;
        for (std::size_t i = 0; i < by.size(); ++i)
          if (cfg_.scope == GenerativeScope::kAll || by[i] == 1) scope_rows.push_back(i);
        if (!scope_rows.empty()) {
          BatchLosses l = phase1_step(take_rows(bx, scope_rows));
          e.recon += l.recon;
          e.kl += l.kl;
          e.disc += l.disc;
          e.adv += l.adv;
          ++phase1_batches;
        }

        if (head) {
          Matrix mu = encode_mean(bx);
          HeadStep hs = head->backward_only(mu, by);
          if (!std::isfinite(hs.loss))
            throw std::runtime_error("train_joint: head loss diverged");
          head->apply_step();
          zero_grads_of(encoder_params());
          encoder_backward(hs.dx, Matrix(), Matrix());
          opt_enc_head_.step(encoder_params());
          e.head_loss += hs.loss;
          ++phase2_batches;
        }
      }
      if (phase1_batches) {
        e.recon /= static_cast<double>(phase1_batches);
        e.kl /= static_cast<double>(phase1_batches);
        e.disc /= static_cast<double>(phase1_batches);
        e.adv /= static_cast<double>(phase1_batches);
      }
      if (phase2_batches) e.head_loss /= static_cast<double>(phase2_batches);

      bool better = false, tie = false;
      if (head) {
        std::vector<double> probs = head->predict(encode_mean(xval));
        Prf m = prf_from_confusion(confusion_counts(yval, probs, cfg_.val_threshold));
        e.val_precision = m.precision;
        e.val_recall = m.recall;
        e.gate_met = m.precision >= cfg_.min_precision;
        if (!have_best) {
          better = true;
        } else {
          auto rank = [](const JointEpoch& je) {
            return std::tuple<int, double, double>(je.gate_met ? 1 : 0, je.val_recall,
                                                   je.val_precision);
          };
          better = rank(e) > rank(best);
          tie = rank(e) == rank(best);
        }
      } else {
        if (xval_scope.rows) {
          EncoderOutput ev = encode_with_eps(xval_scope, Matrix());
          double recon = mse_loss(xval_scope, decode(ev.mu));
          double kl = kl_divergence(ev.mu, ev.logvar);
          e.val_generative = cfg_.recon_weight * recon + cfg_.kl_weight * kl;
        }
        better = !have_best || e.val_generative < best.val_generative;
        tie = have_best && e.val_generative == best.val_generative;
      }
      log.epochs.push_back(e);

      if (better || tie) {
        best = e;
        have_best = true;
        best_snap = snapshot();
        if (head) best_head_snap = head->snapshot();
        log.best_epoch = epoch;
        if (better)
          since_improvement = 0;
        else
          ++since_improvement;
      } else {
        ++since_improvement;
      }
      if (since_improvement > cfg_.patience) break;
    }
    if (cfg_.restore_best && !best_snap.empty()) {
      restore(best_snap);
      if (head && !best_head_snap.empty()) head->restore(best_head_snap);
    }
    trained_ = true;
    return log;
  }

  // Draws n latent codes from the prior and decodes them.
  Matrix sample_frauds(std::size_t n, uint64_t seed) {
    if (!trained_)
      throw std::logic_error("sample_frauds: model has not been trained");
    if (n == 0) return Matrix(0, cfg_.input_dim);
    Matrix z(n, cfg_.latent_dim);
    Rng rng(seed);
    for (double& v : z.data) v = rng.normal();
    return decode(z);
  }

  // Verification hook: analytic gradients of one generative pass with a
  // pinned noise stream and no parameter updates. Scope selection matches
  // the training loop, so dropping out-of-scope rows from the batch must not
  // change a single gradient value.
  Phase1Grads debug_phase1_grads(const Matrix& x, const std::vector<int>& y,
                                 uint64_t eps_seed) {
    std::vector<std::size_t> scope_rows;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (cfg_.scope == GenerativeScope::kAll || y[i] == 1) scope_rows.push_back(i);
    if (scope_rows.empty())
      throw std::invalid_argument("debug_phase1_grads: no in-scope rows");
    Matrix bx = take_rows(x, scope_rows);

    Rng saved = rng_;
    rng_ = Rng(eps_seed);
    Phase1Grads g;
    disc_pass(bx, /*apply_update=*/false);
    for (const auto& p : discriminator_params())
      g.discriminator.insert(g.discriminator.end(), p.grad->data.begin(),
                             p.grad->data.end());
    gen_pass(bx, /*apply_update=*/false);
    for (const auto& p : encoder_params())
      g.encoder.insert(g.encoder.end(), p.grad->data.begin(), p.grad->data.end());
    for (const auto& p : decoder_params())
      g.decoder.insert(g.decoder.end(), p.grad->data.begin(), p.grad->data.end());
    rng_ = saved;
    return g;
  }

  std::vector<std::vector<double>> snapshot() {
    auto p = all_params();
    return snapshot_values(p, {});
  }
  void restore(const std::vector<std::vector<double>>& snap) {
    auto p = all_params();
    restore_values(p, {}, snap);
  }

 private:
  static void zero_grads_of(const std::vector<ParamRef>& params) { zero_grads(params); }

  VaeGanConfig cfg_;
  Mlp trunk_;
  std::unique_ptr<Dense> enc_out_;
  Mlp dec_;
  Mlp disc_;
  Matrix clamp_mask_, sigma_, eps_;
  Rng rng_;
  Adam opt_gen_, opt_disc_, opt_enc_head_;
  bool trained_ = false;
};

}  // namespace fraudlab
