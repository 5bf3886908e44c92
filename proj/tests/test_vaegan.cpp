#include <gtest/gtest.h>

#include <cmath>

#include "fraudlab/grad_check.hpp"
#include "fraudlab/heads.hpp"
#include "fraudlab/rng.hpp"
#include "fraudlab/vaegan.hpp"

using namespace fraudlab;

namespace {

VaeGanConfig small_config() {
  VaeGanConfig cfg;
  cfg.input_dim = 7;
  cfg.latent_dim = 2;
  cfg.encoder_hidden = {5, 4};
  cfg.decoder_hidden = {4, 5};
  cfg.disc_hidden = {6};
  cfg.seed = 3;
  return cfg;
}

Matrix random_matrix(std::size_t r, std::size_t c, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

}  // namespace

TEST(VaeGan, ReparameterizationIsExact) {
  VaeGan model(small_config());
  Matrix x = random_matrix(4, 7, 11);
  Matrix eps = random_matrix(4, 2, 12);
  EncoderOutput e = model.encode_with_eps(x, eps);
  for (std::size_t i = 0; i < e.z.size(); ++i)
    EXPECT_NEAR(e.z.data[i],
                e.mu.data[i] + std::exp(0.5 * e.logvar.data[i]) * eps.data[i], 1e-15);
  // same eps, same code; zero eps collapses to mu
  EncoderOutput e2 = model.encode_with_eps(x, eps);
  EXPECT_EQ(e.z.data, e2.z.data);
  Matrix mu = model.encode_mean(x);
  EXPECT_EQ(mu.data, e.mu.data);
}

TEST(VaeGan, DiscriminatorOutputsProbabilities) {
  VaeGan model(small_config());
  Matrix x = random_matrix(9, 7, 13, 3.0);
  Matrix p = model.discriminate(x);
  ASSERT_EQ(p.rows, 9u);
  ASSERT_EQ(p.cols, 1u);
  for (double v : p.data) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(VaeGan, GeneratorLossGradCheck) {
  VaeGanConfig cfg = small_config();
  VaeGan model(cfg);
  Matrix x = random_matrix(6, 7, 17);
  Matrix eps = random_matrix(6, 2, 18);

  auto loss_fn = [&] {
    EncoderOutput e = model.encode_with_eps(x, eps);
    Matrix xr = model.decode(e.z);
    Matrix p = model.discriminate(xr);
    return cfg.recon_weight * mse_loss(x, xr) +
           cfg.kl_weight * kl_divergence(e.mu, e.logvar) +
           cfg.adv_weight * generator_adv_loss(p);
  };
  auto analytic = [&] { model.gen_pass(x, /*apply_update=*/false, &eps); };
  auto res = grad_check(model.generator_params(), loss_fn, analytic);
  EXPECT_LT(res.max_rel_err, 1e-4) << res.worst_param << "[" << res.worst_index << "]";
}

TEST(VaeGan, DiscriminatorLossGradCheck) {
  VaeGanConfig cfg = small_config();
  VaeGan model(cfg);
  Matrix x = random_matrix(5, 7, 19);
  Matrix eps = random_matrix(5, 2, 20);

  auto loss_fn = [&] {
    EncoderOutput e = model.encode_with_eps(x, eps);
    Matrix x_fake = model.decode(e.z);
    Matrix probs = model.discriminate(vcat(x, x_fake));
    Matrix p_real(x.rows, 1), p_fake(x.rows, 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
      p_real(i, 0) = probs(i, 0);
      p_fake(i, 0) = probs(x.rows + i, 0);
    }
    return discriminator_loss(p_real, p_fake);
  };
  auto analytic = [&] { model.disc_pass(x, /*apply_update=*/false, &eps); };
  auto res = grad_check(model.discriminator_params(), loss_fn, analytic);
  EXPECT_LT(res.max_rel_err, 1e-4) << res.worst_param << "[" << res.worst_index << "]";
}

TEST(VaeGan, OversamplerTrainingReducesReconstruction) {
  VaeGanConfig cfg = small_config();
  cfg.epochs = 60;
  cfg.batch_size = 16;
  cfg.patience = 60;  // no early stop; we want the trend
  VaeGan model(cfg);
  // one tight non-origin blob
  Matrix x = random_matrix(64, 7, 21, 0.3);
  for (std::size_t i = 0; i < x.rows; ++i) x(i, 0) += 2.0;
  Matrix xv = random_matrix(32, 7, 22, 0.3);
  for (std::size_t i = 0; i < xv.rows; ++i) xv(i, 0) += 2.0;

  OversamplerTrainLog log = model.train_minority_oversampler(x, xv);
  ASSERT_GE(log.epochs.size(), 10u);
  EXPECT_LT(log.epochs.back().recon, log.epochs.front().recon);
  EXPECT_TRUE(model.trained());
}

TEST(VaeGan, TrainingIsDeterministic) {
  Matrix x = random_matrix(40, 7, 23, 0.5);
  Matrix xv = random_matrix(16, 7, 24, 0.5);
  auto run = [&] {
    VaeGanConfig cfg = small_config();
    cfg.epochs = 8;
    VaeGan model(cfg);
    model.train_minority_oversampler(x, xv);
    return model.snapshot();
  };
  auto a = run();
  auto b = run();
  EXPECT_EQ(a, b);
}

TEST(VaeGan, SampleFraudsIsSeededAndGated) {
  VaeGanConfig cfg = small_config();
  VaeGan model(cfg);
  EXPECT_THROW(model.sample_frauds(3, 1), std::logic_error);

  Matrix x = random_matrix(32, 7, 25, 0.5);
  cfg.epochs = 5;
  VaeGan trained(cfg);
  trained.train_minority_oversampler(x, Matrix(0, 7));
  Matrix a = trained.sample_frauds(10, 77);
  Matrix b = trained.sample_frauds(10, 77);
  Matrix c = trained.sample_frauds(10, 78);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(a.data, c.data);
  ASSERT_EQ(a.rows, 10u);
  ASSERT_EQ(a.cols, 7u);
  Matrix empty = trained.sample_frauds(0, 1);
  EXPECT_EQ(empty.rows, 0u);
  EXPECT_EQ(empty.cols, 7u);
}

TEST(VaeGan, MinorityScopeIgnoresNormalRows) {
  VaeGanConfig cfg = small_config();
  cfg.scope = GenerativeScope::kMinority;
  Matrix x = random_matrix(12, 7, 27);
  std::vector<int> y{0, 1, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0};
  std::vector<std::size_t> fraud_rows;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == 1) fraud_rows.push_back(i);
  Matrix x_fraud = take_rows(x, fraud_rows);
  std::vector<int> y_fraud(fraud_rows.size(), 1);

  VaeGan m1(cfg), m2(cfg);
  Phase1Grads g1 = m1.debug_phase1_grads(x, y, 99);
  Phase1Grads g2 = m2.debug_phase1_grads(x_fraud, y_fraud, 99);
  EXPECT_EQ(g1.encoder, g2.encoder);
  EXPECT_EQ(g1.decoder, g2.decoder);
  EXPECT_EQ(g1.discriminator, g2.discriminator);

  // sanity: the gradients themselves are not all zero
  double norm = 0.0;
  for (double v : g1.encoder) norm += v * v;
  EXPECT_GT(norm, 0.0);

  // with scope=all, normal rows do contribute
  cfg.scope = GenerativeScope::kAll;
  VaeGan m3(cfg), m4(cfg);
  Phase1Grads g3 = m3.debug_phase1_grads(x, y, 99);
  Phase1Grads g4 = m4.debug_phase1_grads(x_fraud, y_fraud, 99);
  EXPECT_NE(g3.encoder, g4.encoder);
}

TEST(VaeGan, JointTrainingMovesEncoderThroughHead) {
  VaeGanConfig cfg = small_config();
  cfg.epochs = 1;
  cfg.batch_size = 8;
  VaeGan model(cfg);

  Matrix x = random_matrix(48, 7, 29);
  std::vector<int> y(48);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = i % 6 == 0;
    if (y[i]) x(i, 0) += 4.0;
  }
  MlpHeadConfig hc;
  hc.input_dim = 2;
  MlpHead head(hc);

  // isolate phase 2: freeze phase 1 by training with an empty scope epoch?
  // no; compare against a headless run with the same seed instead
  auto encoder_values = [](VaeGan& m) {
    std::vector<double> out;
    for (auto& p : m.encoder_params())
      out.insert(out.end(), p.value->data.begin(), p.value->data.end());
    return out;
  };
  VaeGan headless(cfg);
  std::vector<double> before = encoder_values(model);
  EXPECT_EQ(before, encoder_values(headless));  // same init

  model.train_joint(&head, x, y, x, y);
  headless.train_joint(nullptr, x, y, x, y);
  std::vector<double> with_head = encoder_values(model);
  std::vector<double> without = encoder_values(headless);
  EXPECT_NE(with_head, before);
  EXPECT_NE(with_head, without);  // the head's gradient reached the encoder
}

TEST(VaeGan, JointTrainingRequiresBothClasses) {
  VaeGanConfig cfg = small_config();
  VaeGan model(cfg);
  Matrix x = random_matrix(10, 7, 31);
  std::vector<int> y(10, 1);
  EXPECT_THROW(model.train_joint(nullptr, x, y, x, y), std::invalid_argument);
}

TEST(VaeGan, JointHeadMismatchRejected) {
  VaeGanConfig cfg = small_config();  // latent 2
  VaeGan model(cfg);
  MlpHeadConfig hc;
  hc.input_dim = 5;
  MlpHead head(hc);
  Matrix x = random_matrix(10, 7, 33);
  std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  EXPECT_THROW(model.train_joint(&head, x, y, x, y), std::invalid_argument);
}

TEST(VaeGan, KlNonNegativeDuringTraining) {
  VaeGanConfig cfg = small_config();
  cfg.epochs = 10;
  VaeGan model(cfg);
  Matrix x = random_matrix(32, 7, 35, 0.7);
  OversamplerTrainLog log = model.train_minority_oversampler(x, Matrix(0, 7));
  for (const auto& e : log.epochs) EXPECT_GE(e.kl, 0.0);
}
