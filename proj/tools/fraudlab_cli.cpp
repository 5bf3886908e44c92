#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fraudlab/grad_check.hpp"
#include "fraudlab/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fraudlab;

namespace {

// The config file must be loaded before flag callbacks fire, so it is pulled
// out of argv ahead of the real parse.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

// Every override funnels through apply_config_kv so flags and file keys
// cannot drift apart.
void add_override(CLI::App& app, ExperimentConfig& cfg, const std::string& flag,
                  const std::string& key, const std::string& help) {
  app.add_option_function<std::string>(
      flag, [&cfg, key](const std::string& v) { apply_config_kv(cfg, key, v); }, help);
}

void add_flag_override(CLI::App& app, ExperimentConfig& cfg, const std::string& flag,
                       const std::string& key, const std::string& help) {
  app.add_flag_function(
      flag, [&cfg, key](int64_t) { apply_config_kv(cfg, key, "true"); }, help);
}

void finalize(ExperimentConfig& cfg) {
  if (const char* dir = std::getenv("FRAUDLAB_OUT_DIR"); dir && *dir) cfg.out_dir = dir;
  validate_config(cfg);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

std::string default_oversampler_path(const ExperimentConfig& cfg) {
  return (fs::path(cfg.out_dir) / "oversampler.json").string();
}

OversamplerBundle load_bundle(const ExperimentConfig& cfg, const PreparedData& prep,
                              const std::string& model_file) {
  OversamplerBundle b;
  b.method = cfg.method;
  b.smote_k = cfg.smote_k;
  if (cfg.method == Method::kNone) return b;
  if (cfg.method == Method::kSmote) {
    b.smote_pool = prep.train_minority_x;
    return b;
  }
  std::string file = model_file.empty() ? default_oversampler_path(cfg) : model_file;
  LoadedVaeGan lv = load_vaegan(file);
  if (lv.model.config().input_dim != prep.train_x.cols)
    throw std::runtime_error("oversampler checkpoint was trained on " +
                             std::to_string(lv.model.config().input_dim) +
                             "-dim data, current data has " +
                             std::to_string(prep.train_x.cols) + " columns");
  b.model = std::make_unique<VaeGan>(std::move(lv.model));
  b.head = std::move(lv.head);
  return b;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

// --- subcommand bodies ---

void cmd_prep(ExperimentConfig& cfg) {
  finalize(cfg);
  PreparedData p = prepare_data(cfg);
  std::string norm_file = out_path(cfg, "normalizer.json");
  save_normalizer(p.norm, norm_file);
  json split;
  split["seed"] = cfg.seed;
  split["train_ratio"] = cfg.train_ratio;
  split["train_idx"] = p.split.train;
  split["val_idx"] = p.split.val;
  std::string split_file = out_path(cfg, "split.json");
  write_json_file(split_file, split);
  json j;
  j["rows"] = p.raw.features.rows;
  j["columns"] = p.raw.columns.size();
  j["frauds"] = count_class(p.raw.labels, 1);
  j["train_rows"] = p.split.train.size();
  j["train_frauds"] = count_class(p.train_y, 1);
  j["val_rows"] = p.split.val.size();
  j["val_frauds"] = count_class(p.val_y, 1);
  j["normalizer"] = norm_file;
  j["split"] = split_file;
  emit(j);
}

void cmd_train_oversampler(ExperimentConfig& cfg) {
  finalize(cfg);
  if (!is_vaegan_method(cfg.method))
    throw std::runtime_error("stage train-oversampler: method " +
                             std::string(method_name(cfg.method)) +
                             " has no trainable oversampler");
  PreparedData p = prepare_data(cfg);
  OversamplerBundle b = train_oversampler(cfg, p);
  std::string file = out_path(cfg, "oversampler.json");
  write_json_file(file, vaegan_to_json(*b.model, b.head.get()));
  json j;
  j["method"] = method_name(cfg.method);
  j["checkpoint"] = file;
  j["latent_silhouette"] = b.latent_silhouette ? json(*b.latent_silhouette) : json(nullptr);
  emit(j);
}

void cmd_oversample(ExperimentConfig& cfg, std::size_t count, const std::string& model_file,
                    std::string out_file) {
  finalize(cfg);
  if (cfg.method == Method::kNone)
    throw std::runtime_error("stage generate: pick an oversample method first");
  PreparedData p = prepare_data(cfg);
  OversamplerBundle b = load_bundle(cfg, p, model_file);
  if (out_file.empty())
    out_file = out_path(cfg, "augmented_train_" + std::to_string(count) + ".csv");
  export_augmented_csv(cfg, p, b, count, out_file);
  json j;
  j["file"] = out_file;
  j["train_rows"] = p.split.train.size();
  j["synthetic_rows"] = count;
  emit(j);
}

MetricsReport eval_on_validation(const ExperimentConfig& cfg, TrainedClassifier& tc,
                                 const PreparedData& p) {
  std::vector<double> probs = tc.predict(p.val_x);
  double tau = cfg.fixed_threshold;
  if (cfg.threshold_mode == ThresholdMode::kAgent) tau = fit_threshold(probs, p.val_y).tau;
  return evaluate_probs(p.val_y, probs, tau);
}

void cmd_train_clf(ExperimentConfig& cfg, std::size_t count, const std::string& model_file,
                   std::string out_file) {
  finalize(cfg);
  if (count > 0 && cfg.method == Method::kNone)
    throw std::runtime_error("stage generate: count > 0 needs an oversample method");
  PreparedData p = prepare_data(cfg);
  Matrix aug_x = p.train_x;
  std::vector<int> aug_y = p.train_y;
  if (count > 0) {
    OversamplerBundle b = load_bundle(cfg, p, model_file);
    Matrix synth = run_stage("generate", [&] { return generate_synthetic(cfg, b, count); });
    if (synth.rows) {
      aug_x = vcat(aug_x, synth);
      aug_y.insert(aug_y.end(), synth.rows, 1);
    }
  }
  TrainedClassifier tc = run_stage("train-classifier", [&] {
    return train_classifier(cfg, aug_x, aug_y, p.val_x, p.val_y,
                            derive_seed(cfg.seed, 0xc1f00 + count));
  });
  if (out_file.empty())
    out_file = out_path(cfg, "clf_" + std::string(classifier_name(cfg.classifier)) + "_" +
                                 std::to_string(count) + ".json");
  write_json_file(out_file, classifier_to_json(tc));
  MetricsReport m = run_stage("evaluate", [&] { return eval_on_validation(cfg, tc, p); });
  json j;
  j["checkpoint"] = out_file;
  j["count"] = count;
  j["metrics"] = metrics_to_json(m);
  emit(j);
}

void cmd_eval(ExperimentConfig& cfg, const std::string& model_file) {
  finalize(cfg);
  PreparedData p = prepare_data(cfg);
  TrainedClassifier tc = run_stage("evaluate", [&] { return load_classifier(model_file); });
  MetricsReport m = run_stage("evaluate", [&] { return eval_on_validation(cfg, tc, p); });
  json j;
  j["model"] = model_file;
  j["metrics"] = metrics_to_json(m);
  emit(j);
}

void cmd_explain(ExperimentConfig& cfg, const std::string& model_file, std::size_t row) {
  finalize(cfg);
  PreparedData p = prepare_data(cfg);
  if (row >= p.val_x.rows)
    throw std::runtime_error("stage explain: row index " + std::to_string(row) +
                             " out of range (validation has " +
                             std::to_string(p.val_x.rows) + " rows)");
  json ck = read_json_file(model_file);
  std::string kind = checkpoint_kind(ck);
  CpacExplain ex;
  if (kind == "cpac") {
    auto head = head_from_json(ck);
    auto* c = dynamic_cast<CpacHead*>(head.get());
    if (c->input_dim() != p.val_x.cols)
      throw std::runtime_error("stage explain: model expects " +
                               std::to_string(c->input_dim()) + "-dim rows, data has " +
                               std::to_string(p.val_x.cols));
    ex = c->explain(p.val_x, row);
  } else if (kind == "vaegan") {
    LoadedVaeGan lv = vaegan_from_json(ck);
    auto* c = dynamic_cast<CpacHead*>(lv.head.get());
    if (!c)
      throw std::runtime_error("stage explain: checkpoint has no cpac head to explain");
    Matrix mu = lv.model.encode_mean(take_rows(p.val_x, {row}));
    ex = c->explain(mu, 0);
  } else {
    throw std::runtime_error("stage explain: kind " + kind + " has no attention to explain");
  }
  json j;
  j["attention"] = ex.attention;
  j["d0"] = ex.d0;
  j["d1"] = ex.d1;
  j["prob"] = ex.prob;
  emit(j);
}

void cmd_export_latent(ExperimentConfig& cfg, std::size_t dims, std::size_t include_synthetic,
                       const std::string& model_file, std::string out_file) {
  finalize(cfg);
  PreparedData p = prepare_data(cfg);
  OversamplerBundle b = load_bundle(cfg, p, model_file);
  if (out_file.empty())
    out_file = out_path(cfg, "latent_" + std::to_string(dims) + "d.csv");
  export_latent_csv(cfg, p, b, dims, include_synthetic, out_file);
  json j;
  j["file"] = out_file;
  j["rows"] = p.split.val.size() + include_synthetic;
  emit(j);
}

void cmd_export_augmented(ExperimentConfig& cfg, std::size_t count,
                          const std::string& model_file, std::string out_file) {
  finalize(cfg);
  PreparedData p = prepare_data(cfg);
  OversamplerBundle b = load_bundle(cfg, p, model_file);
  if (out_file.empty())
    out_file = out_path(cfg, "augmented_train_" + std::to_string(count) + ".csv");
  export_augmented_csv(cfg, p, b, count, out_file);
  json j;
  j["file"] = out_file;
  j["train_rows"] = p.split.train.size();
  j["synthetic_rows"] = count;
  emit(j);
}

void cmd_run(ExperimentConfig& cfg) {
  finalize(cfg);
  RunReport r = run_experiment(cfg);
  std::cout << "dataset: " << r.rows << " rows, " << r.frauds << " frauds (train "
            << r.train_rows << "/" << r.train_frauds << ", val " << r.val_rows << "/"
            << r.val_frauds << ")\n";
  if (r.latent_silhouette)
    std::cout << "latent silhouette: " << *r.latent_silhouette << "\n";
  std::cout << std::left << std::setw(8) << "count" << std::setw(12) << "classifier"
            << std::right << std::setw(11) << "precision" << std::setw(9) << "recall"
            << std::setw(9) << "f1" << std::setw(9) << "auc" << std::setw(11)
            << "composite" << std::setw(11) << "threshold" << "\n";
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& c : r.cells)
    std::cout << std::left << std::setw(8) << c.count << std::setw(12) << c.classifier
              << std::right << std::setw(11) << c.metrics.precision << std::setw(9)
              << c.metrics.recall << std::setw(9) << c.metrics.f1 << std::setw(9)
              << c.metrics.auc << std::setw(11) << c.metrics.composite << std::setw(11)
              << c.metrics.threshold << "\n";
  std::cout.unsetf(std::ios::fixed);
  std::cout << "report: " << (fs::path(cfg.out_dir) / "run_report.json").string() << "\n";
}

// --- developer gradient suite ---

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

struct CheckLine {
  std::string name;
  GradCheckResult res;
};

void check_head(std::vector<CheckLine>& lines, const std::string& name, IClassifierHead& head,
                const Matrix& x, const std::vector<int>& y) {
  auto params = head.params();
  GradCheckResult res = grad_check(
      params, [&] { return head.backward_only(x, y).loss; },
      [&] { head.backward_only(x, y); });
  lines.push_back({name, res});
}

void cmd_grad_check() {
  Rng rng(20240817);
  std::vector<CheckLine> lines;

  Matrix x = random_matrix(6, 4, rng);
  std::vector<int> y = {0, 1, 0, 0, 1, 0};

  for (MlpArch arch : {MlpArch::kV1, MlpArch::kV2, MlpArch::kV3})
    for (LossKind loss : {LossKind::kBce, LossKind::kFocal}) {
      MlpHeadConfig hc;
      hc.arch = arch;
      hc.input_dim = 4;
      hc.loss = loss;
      hc.seed = 11;
      MlpHead head(hc);
      head.set_dropout_frozen(true);
      check_head(lines, std::string(mlp_arch_name(arch)) + "+" + loss_kind_name(loss), head,
                 x, y);
    }

  for (CpacVariant variant :
       {CpacVariant::kFull, CpacVariant::kNoAttention, CpacVariant::kNoPrototypes})
    for (LossKind loss : {LossKind::kBce, LossKind::kFocal}) {
      CpacConfig hc;
      hc.input_dim = 4;
      hc.variant = variant;
      hc.loss = loss;
      hc.seed = 13;
      CpacHead head(hc);
      check_head(lines,
                 std::string("cpac-") + cpac_variant_name(variant) + "+" + loss_kind_name(loss),
                 head, x, y);
    }

  {
    VaeGanConfig vc;
    vc.input_dim = 4;
    vc.latent_dim = 2;
    vc.encoder_hidden = {5};
    vc.decoder_hidden = {5};
    vc.disc_hidden = {5};
    vc.seed = 17;
    VaeGan model(vc);
    Matrix bx = random_matrix(3, 4, rng);
    Matrix eps = random_matrix(3, 2, rng);
    auto gen_loss = [&] {
      EncoderOutput e = model.encode_with_eps(bx, eps);
      Matrix xr = model.decode(e.z);
      Matrix p = model.discriminate(xr);
      return vc.recon_weight * mse_loss(bx, xr) +
             vc.kl_weight * kl_divergence(e.mu, e.logvar) +
             vc.adv_weight * generator_adv_loss(p);
    };
    lines.push_back({"vaegan-generator",
                     grad_check(model.generator_params(), gen_loss,
                                [&] { model.gen_pass(bx, false, &eps); })});
    auto disc_loss = [&] {
      EncoderOutput e = model.encode_with_eps(bx, eps);
      Matrix x_fake = model.decode(e.z);
      Matrix probs = model.discriminate(vcat(bx, x_fake));
      Matrix p_real(bx.rows, 1), p_fake(bx.rows, 1);
      for (std::size_t i = 0; i < bx.rows; ++i) {
        p_real(i, 0) = probs(i, 0);
        p_fake(i, 0) = probs(bx.rows + i, 0);
      }
      return discriminator_loss(p_real, p_fake);
    };
    lines.push_back({"vaegan-discriminator",
                     grad_check(model.discriminator_params(), disc_loss,
                                [&] { model.disc_pass(bx, false, &eps); })});
  }

  bool ok = true;
  for (const auto& l : lines) {
    bool pass = l.res.max_rel_err < 1e-4;
    ok = ok && pass;
    std::cout << std::left << std::setw(28) << l.name << " max_rel_err="
              << std::scientific << std::setprecision(3) << l.res.max_rel_err
              << std::defaultfloat << " (" << l.res.checked << " entries) "
              << (pass ? "ok" : "FAIL") << "\n";
  }
  if (!ok) throw std::runtime_error("stage grad-check: a gradient check failed");
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  std::string config_path = find_config_arg(argc, argv);
  if (!config_path.empty()) {
    try {
      load_config_file(cfg, config_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{"imbalanced fraud detection pipeline"};
  app.require_subcommand(1);
  std::string config_dummy;
  app.add_option("--config", config_dummy, "flat key = value config file (flags override it)");

  add_override(app, cfg, "--data", "data", "transactions CSV; omit to use the bundled generator");
  add_override(app, cfg, "--out-dir", "out_dir", "artifact directory (env FRAUDLAB_OUT_DIR wins)");
  add_override(app, cfg, "--seed", "seed", "master seed");
  add_override(app, cfg, "--train-ratio", "train_ratio", "training fraction of the split");
  add_flag_override(app, cfg, "--drop-time", "drop_time", "drop the Time column after ingest");
  add_override(app, cfg, "--method", "method",
               "none|smote|vaegan|vaegan-mlp1|vaegan-mlp2|vaegan-mlp3|vaegan-cpac");
  add_override(app, cfg, "--pretrain-smote", "pretrain_smote",
               "SMOTE rows added before generative training (0 disables, 75 is the studied value)");
  add_override(app, cfg, "--smote-k,--k", "smote_k", "SMOTE neighbor count");
  add_override(app, cfg, "--counts", "counts", "comma-separated synthetic sample grid");
  add_override(app, cfg, "--classifier", "classifier", "logreg|cpac|mlp1|mlp2|mlp3");
  add_override(app, cfg, "--loss", "loss", "default|bce|focal");
  add_override(app, cfg, "--focal-alpha", "focal_alpha", "focal loss class weight");
  add_override(app, cfg, "--focal-gamma", "focal_gamma", "focal loss focusing exponent");
  add_override(app, cfg, "--threshold-mode", "threshold_mode", "fixed|agent");
  add_override(app, cfg, "--threshold", "fixed_threshold", "decision threshold for fixed mode");
  add_flag_override(app, cfg, "--no-head", "no_head", "ablation: train the oversampler headless");
  add_flag_override(app, cfg, "--no-attention", "no_attention",
                    "ablation: pin every attention weight to 1");
  add_flag_override(app, cfg, "--no-prototypes", "no_prototypes",
                    "ablation: linear readout instead of prototype distances");
  add_flag_override(app, cfg, "--no-penalties", "no_penalties",
                    "ablation: drop scale and anchor regularizers");
  add_override(app, cfg, "--scope", "scope", "rows feeding the generative losses: minority|all");
  add_override(app, cfg, "--latent-dim", "latent_dim", "encoder code width");
  add_override(app, cfg, "--vaegan-epochs", "vaegan_epochs", "oversampler epoch budget");
  add_override(app, cfg, "--vaegan-lr", "vaegan_lr", "oversampler learning rate");
  add_override(app, cfg, "--batch-size", "batch_size", "minibatch size");
  add_override(app, cfg, "--patience", "patience", "early-stop patience in epochs");
  add_override(app, cfg, "--min-precision", "min_precision",
               "validation precision gate for joint checkpoints");
  add_override(app, cfg, "--clf-epochs", "clf_epochs", "classifier epoch budget");
  add_override(app, cfg, "--clf-lr", "clf_lr", "classifier learning rate");
  add_override(app, cfg, "--logreg-lr", "logreg_lr", "logistic regression learning rate");
  add_override(app, cfg, "--logreg-epochs", "logreg_epochs", "logistic regression epochs");
  add_override(app, cfg, "--logreg-l2", "logreg_l2", "logistic regression L2 strength");
  add_override(app, cfg, "--synth-rows", "synth_rows", "bundled generator: row count");
  add_override(app, cfg, "--synth-dim", "synth_dim", "bundled generator: feature count");
  add_override(app, cfg, "--synth-minority-fraction", "synth_minority_fraction",
               "bundled generator: fraud fraction");
  add_override(app, cfg, "--synth-separation", "synth_separation",
               "bundled generator: class center distance");
  add_override(app, cfg, "--synth-separated-dims", "synth_separated_dims",
               "bundled generator: how many leading coordinates separate");
  add_override(app, cfg, "--synth-seed", "synth_seed", "bundled generator: seed");

  auto* prep_cmd = app.add_subcommand("prep", "parse, split and fit the normalizer");
  prep_cmd->fallthrough();
  prep_cmd->callback([&] { cmd_prep(cfg); });

  auto* tov = app.add_subcommand("train-oversampler", "train the generative oversampler once");
  tov->fallthrough();
  tov->callback([&] { cmd_train_oversampler(cfg); });

  auto* ovs = app.add_subcommand("oversample", "write an augmented training CSV");
  ovs->fallthrough();
  std::size_t ovs_count = 0;
  std::string ovs_model, ovs_out;
  ovs->add_option("--count", ovs_count, "synthetic fraud rows to add")->required();
  ovs->add_option("--oversampler-file", ovs_model,
                  "vaegan checkpoint (default <out-dir>/oversampler.json)");
  ovs->add_option("--out", ovs_out, "output CSV path");
  ovs->callback([&] { cmd_oversample(cfg, ovs_count, ovs_model, ovs_out); });

  auto* tclf = app.add_subcommand("train-clf", "train a classifier on (augmented) training data");
  tclf->fallthrough();
  std::size_t tclf_count = 0;
  std::string tclf_model, tclf_out;
  tclf->add_option_function<std::string>(
      "--model", [&cfg](const std::string& v) { apply_config_kv(cfg, "classifier", v); },
      "logreg|cpac|mlp1|mlp2|mlp3");
  tclf->add_option("--count", tclf_count, "synthetic rows to add before training (default 0)");
  tclf->add_option("--oversampler-file", tclf_model, "vaegan checkpoint for --count > 0");
  tclf->add_option("--out", tclf_out, "classifier checkpoint path");
  tclf->callback([&] { cmd_train_clf(cfg, tclf_count, tclf_model, tclf_out); });

  auto* ev = app.add_subcommand("eval", "evaluate a saved classifier on the validation split");
  ev->fallthrough();
  std::string ev_model;
  ev->add_option("--model-file", ev_model, "classifier checkpoint")->required();
  ev->callback([&] { cmd_eval(cfg, ev_model); });

  auto* ex = app.add_subcommand("explain", "attention and prototype distances for one row");
  ex->fallthrough();
  std::string ex_model;
  std::size_t ex_row = 0;
  ex->add_option("--model-file", ex_model, "cpac classifier or vaegan+cpac checkpoint")
      ->required();
  ex->add_option("--row-index", ex_row, "validation row to explain")->required();
  ex->callback([&] { cmd_explain(cfg, ex_model, ex_row); });

  auto* el = app.add_subcommand("export-latent", "PCA-projected validation latents as CSV");
  el->fallthrough();
  std::size_t el_dims = 2, el_synth = 0;
  std::string el_model, el_out;
  el->add_option("--dims", el_dims, "projection dimensions, 2 or 3");
  el->add_option("--include-synthetic", el_synth,
                 "also project this many generated rows (adds an is_synthetic column)");
  el->add_option("--oversampler-file", el_model, "vaegan checkpoint");
  el->add_option("--out", el_out, "output CSV path");
  el->callback([&] { cmd_export_latent(cfg, el_dims, el_synth, el_model, el_out); });

  auto* ea = app.add_subcommand("export-augmented", "training split plus synthetic rows as CSV");
  ea->fallthrough();
  std::size_t ea_count = 0;
  std::string ea_model, ea_out;
  ea->add_option("--count", ea_count, "synthetic fraud rows to add")->required();
  ea->add_option("--oversampler-file", ea_model, "vaegan checkpoint");
  ea->add_option("--out", ea_out, "output CSV path");
  ea->callback([&] { cmd_export_augmented(cfg, ea_count, ea_model, ea_out); });

  auto* run = app.add_subcommand("run", "full experiment grid: one oversampler, all counts");
  run->fallthrough();
  run->callback([&] { cmd_run(cfg); });

  auto* gc = app.add_subcommand("grad-check", "developer suite: analytic vs numeric gradients");
  gc->fallthrough();
  gc->callback([] { cmd_grad_check(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
