#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudlab/checkpoint.hpp"
#include "fraudlab/cpac.hpp"
#include "fraudlab/dataset.hpp"
#include "fraudlab/heads.hpp"
#include "fraudlab/metrics.hpp"
#include "fraudlab/normalizer.hpp"
#include "fraudlab/pca.hpp"
#include "fraudlab/silhouette.hpp"
#include "fraudlab/smote.hpp"
#include "fraudlab/split.hpp"
#include "fraudlab/synthetic.hpp"
#include "fraudlab/threshold.hpp"
#include "fraudlab/vaegan.hpp"

namespace fraudlab {

// --- experiment vocabulary ---

enum class Method {
  kNone,
  kSmote,
  kVaeGan,
  kVaeGanMlp1,
  kVaeGanMlp2,
  kVaeGanMlp3,
  kVaeGanCpac,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kNone: return "none";
    case Method::kSmote: return "smote";
    case Method::kVaeGan: return "vaegan";
    case Method::kVaeGanMlp1: return "vaegan-mlp1";
    case Method::kVaeGanMlp2: return "vaegan-mlp2";
    case Method::kVaeGanMlp3: return "vaegan-mlp3";
    case Method::kVaeGanCpac: return "vaegan-cpac";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::kNone, Method::kSmote, Method::kVaeGan, Method::kVaeGanMlp1,
                   Method::kVaeGanMlp2, Method::kVaeGanMlp3, Method::kVaeGanCpac})
    if (s == method_name(m)) return m;
  throw std::runtime_error("unknown oversample method: " + s);
}

inline bool is_vaegan_method(Method m) {
  return m != Method::kNone && m != Method::kSmote;
}

inline bool is_joint_method(Method m) {
  return is_vaegan_method(m) && m != Method::kVaeGan;
}

enum class ClassifierKind { kLogReg, kCpac, kMlp1, kMlp2, kMlp3 };

inline const char* classifier_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kLogReg: return "logreg";
    case ClassifierKind::kCpac: return "cpac";
    case ClassifierKind::kMlp1: return "mlp1";
    case ClassifierKind::kMlp2: return "mlp2";
    case ClassifierKind::kMlp3: return "mlp3";
  }
  return "?";
}

inline ClassifierKind parse_classifier(const std::string& s) {
  for (ClassifierKind k : {ClassifierKind::kLogReg, ClassifierKind::kCpac, ClassifierKind::kMlp1,
                           ClassifierKind::kMlp2, ClassifierKind::kMlp3})
    if (s == classifier_name(k)) return k;
  throw std::runtime_error("unknown classifier: " + s);
}

enum class ThresholdMode { kFixed, kAgent };

inline const char* threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::kAgent ? "agent" : "fixed";
}

inline ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "fixed") return ThresholdMode::kFixed;
  if (s == "agent") return ThresholdMode::kAgent;
  throw std::runtime_error("unknown threshold mode: " + s + " (want fixed or agent)");
}

// --- configuration ---

struct ExperimentConfig {
  std::string data_csv;        // empty -> bundled two-Gaussian generator
  SyntheticConfig synthetic{};
  bool drop_time = false;
  double train_ratio = 0.7;
  uint64_t seed = 7;

  Method method = Method::kNone;
  std::size_t pretrain_smote = 0;  // 0 disables; 75 is the studied setting
  std::size_t smote_k = 5;
  std::vector<std::size_t> counts = {50, 75, 100};

  ClassifierKind classifier = ClassifierKind::kLogReg;
  std::string loss = "default";  // default | bce | focal
  double focal_alpha = 0.95;
  double focal_gamma = 2.0;

  ThresholdMode threshold_mode = ThresholdMode::kFixed;
  double fixed_threshold = 0.5;

  // ablations; only meaningful with method vaegan-cpac
  bool no_head = false;
  bool no_attention = false;
  bool no_prototypes = false;
  bool no_penalties = false;

  GenerativeScope scope = GenerativeScope::kMinority;
  std::string out_dir = "runs/exp";

  // trainer knobs
  std::size_t latent_dim = 2;
  std::size_t vaegan_epochs = 200;
  double vaegan_lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  double min_precision = 0.85;
  std::size_t clf_epochs = 80;
  double clf_lr = 1e-3;
  double logreg_lr = 0.1;
  std::size_t logreg_epochs = 500;
  double logreg_l2 = 1e-4;
};

namespace detail {

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::runtime_error("not a boolean: " + v);
}

inline double parse_double(const std::string& v) {
  std::size_t used = 0;
  double d = std::stod(v, &used);
  if (used != v.size()) throw std::runtime_error("not a number: " + v);
  return d;
}

inline uint64_t parse_u64(const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = std::stoull(v, &used);
  if (used != v.size() || v[0] == '-') throw std::runtime_error("not a non-negative integer: " + v);
  return static_cast<uint64_t>(x);
}

inline std::vector<std::size_t> parse_count_list(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw std::runtime_error("empty entry in count list: " + v);
    out.push_back(static_cast<std::size_t>(parse_u64(tok)));
  }
  if (out.empty()) throw std::runtime_error("empty count list");
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// One key of the flat config format. Shared by the file loader and the CLI
// override path so both spell options identically.
inline void apply_config_kv(ExperimentConfig& cfg, const std::string& key,
                            const std::string& value) {
  using namespace detail;
  if (key == "data") cfg.data_csv = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "seed") cfg.seed = parse_u64(value);
  else if (key == "train_ratio") cfg.train_ratio = parse_double(value);
  else if (key == "drop_time") cfg.drop_time = parse_bool(value);
  else if (key == "method") cfg.method = parse_method(value);
  else if (key == "pretrain_smote") cfg.pretrain_smote = parse_u64(value);
  else if (key == "smote_k") cfg.smote_k = parse_u64(value);
  else if (key == "counts") cfg.counts = parse_count_list(value);
  else if (key == "classifier") cfg.classifier = parse_classifier(value);
  else if (key == "loss") cfg.loss = value;
  else if (key == "focal_alpha") cfg.focal_alpha = parse_double(value);
  else if (key == "focal_gamma") cfg.focal_gamma = parse_double(value);
  else if (key == "threshold_mode") cfg.threshold_mode = parse_threshold_mode(value);
  else if (key == "fixed_threshold") cfg.fixed_threshold = parse_double(value);
  else if (key == "no_head") cfg.no_head = parse_bool(value);
  else if (key == "no_attention") cfg.no_attention = parse_bool(value);
  else if (key == "no_prototypes") cfg.no_prototypes = parse_bool(value);
  else if (key == "no_penalties") cfg.no_penalties = parse_bool(value);
  else if (key == "scope") cfg.scope = parse_scope(value);
  else if (key == "latent_dim") cfg.latent_dim = parse_u64(value);
  else if (key == "vaegan_epochs") cfg.vaegan_epochs = parse_u64(value);
  else if (key == "vaegan_lr") cfg.vaegan_lr = parse_double(value);
  else if (key == "batch_size") cfg.batch_size = parse_u64(value);
  else if (key == "patience") cfg.patience = parse_u64(value);
  else if (key == "min_precision") cfg.min_precision = parse_double(value);
  else if (key == "clf_epochs") cfg.clf_epochs = parse_u64(value);
  else if (key == "clf_lr") cfg.clf_lr = parse_double(value);
  else if (key == "logreg_lr") cfg.logreg_lr = parse_double(value);
  else if (key == "logreg_epochs") cfg.logreg_epochs = parse_u64(value);
  else if (key == "logreg_l2") cfg.logreg_l2 = parse_double(value);
  else if (key == "synth_rows") cfg.synthetic.rows = parse_u64(value);
  else if (key == "synth_dim") cfg.synthetic.dim = parse_u64(value);
  else if (key == "synth_minority_fraction") cfg.synthetic.minority_fraction = parse_double(value);
  else if (key == "synth_separation") cfg.synthetic.separation = parse_double(value);
  else if (key == "synth_separated_dims") cfg.synthetic.separated_dims = parse_u64(value);
  else if (key == "synth_seed") cfg.synthetic.seed = parse_u64(value);
  else throw std::runtime_error("unknown config key: " + key);
}

// Flat `key = value` lines; '#' starts a comment; blank lines ignored.
inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected `key = value`");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
    try {
      apply_config_kv(cfg, key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void validate_config(const ExperimentConfig& cfg) {
  if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0))
    throw std::runtime_error("train_ratio must be in (0, 1)");
  if (cfg.loss != "default" && cfg.loss != "bce" && cfg.loss != "focal")
    throw std::runtime_error("loss must be default, bce or focal");
  if (cfg.loss != "default" && cfg.classifier == ClassifierKind::kLogReg)
    throw std::runtime_error("logreg has no configurable loss; drop the loss setting");
  if (!(cfg.fixed_threshold > 0.0 && cfg.fixed_threshold < 1.0))
    throw std::runtime_error("fixed_threshold must be in (0, 1)");
  if (cfg.smote_k == 0) throw std::runtime_error("smote_k must be >= 1");
  if (cfg.latent_dim == 0) throw std::runtime_error("latent_dim must be >= 1");
  if (cfg.batch_size == 0) throw std::runtime_error("batch_size must be >= 1");
  if (cfg.method != Method::kNone) {
    if (cfg.counts.empty()) throw std::runtime_error("counts must not be empty");
    for (std::size_t c : cfg.counts)
      if (c == 0) throw std::runtime_error("counts must all be positive");
  }
  bool any_ablation = cfg.no_head || cfg.no_attention || cfg.no_prototypes || cfg.no_penalties;
  if (any_ablation && cfg.method != Method::kVaeGanCpac)
    throw std::runtime_error("ablation flags are only valid with method vaegan-cpac");
  if (cfg.no_head && (cfg.no_attention || cfg.no_prototypes || cfg.no_penalties))
    throw std::runtime_error("no_head removes the classifier; other ablation flags conflict");
  if (cfg.no_attention && cfg.no_prototypes)
    throw std::runtime_error("no_attention and no_prototypes are mutually exclusive");
  if (cfg.pretrain_smote > 0 && !is_vaegan_method(cfg.method))
    throw std::runtime_error("pretrain_smote needs a vaegan-family method");
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["data"] = cfg.data_csv;
  if (cfg.data_csv.empty()) {
    json s;
    s["rows"] = cfg.synthetic.rows;
    s["dim"] = cfg.synthetic.dim;
    s["minority_fraction"] = cfg.synthetic.minority_fraction;
    s["separation"] = cfg.synthetic.separation;
    s["separated_dims"] = cfg.synthetic.separated_dims;
    s["seed"] = cfg.synthetic.seed;
    j["synthetic"] = s;
  }
  j["drop_time"] = cfg.drop_time;
  j["train_ratio"] = cfg.train_ratio;
  j["seed"] = cfg.seed;
  j["method"] = method_name(cfg.method);
  j["pretrain_smote"] = cfg.pretrain_smote;
  j["smote_k"] = cfg.smote_k;
  j["counts"] = cfg.counts;
  j["classifier"] = classifier_name(cfg.classifier);
  j["loss"] = cfg.loss;
  j["focal_alpha"] = cfg.focal_alpha;
  j["focal_gamma"] = cfg.focal_gamma;
  j["threshold_mode"] = threshold_mode_name(cfg.threshold_mode);
  j["fixed_threshold"] = cfg.fixed_threshold;
  j["no_head"] = cfg.no_head;
  j["no_attention"] = cfg.no_attention;
  j["no_prototypes"] = cfg.no_prototypes;
  j["no_penalties"] = cfg.no_penalties;
  j["scope"] = scope_name(cfg.scope);
  j["out_dir"] = cfg.out_dir;
  j["latent_dim"] = cfg.latent_dim;
  j["vaegan_epochs"] = cfg.vaegan_epochs;
  j["vaegan_lr"] = cfg.vaegan_lr;
  j["batch_size"] = cfg.batch_size;
  j["patience"] = cfg.patience;
  j["min_precision"] = cfg.min_precision;
  j["clf_epochs"] = cfg.clf_epochs;
  j["clf_lr"] = cfg.clf_lr;
  j["logreg_lr"] = cfg.logreg_lr;
  j["logreg_epochs"] = cfg.logreg_epochs;
  j["logreg_l2"] = cfg.logreg_l2;
  return j;
}

// --- stage wrapper: every pipeline error names the stage that raised it ---

template <typename F>
auto run_stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + name + ": " + e.what());
  }
}

// --- data preparation (ingest, split, normalize) ---

struct PreparedData {
  Dataset raw;  // after optional Time drop
  SplitIndices split;
  RobustNormalizer norm;
  Matrix train_x, val_x;  // normalized
  std::vector<int> train_y, val_y;
  Matrix train_minority_x;  // normalized fraud rows of the training split
};

inline Dataset drop_time_column(const Dataset& ds) {
  std::size_t t = ds.columns.size();
  for (std::size_t j = 0; j < ds.columns.size(); ++j)
    if (ds.columns[j] == "Time") t = j;
  if (t == ds.columns.size())
    throw std::runtime_error("drop_time requested but there is no Time column");
  Dataset out;
  out.labels = ds.labels;
  out.columns.reserve(ds.columns.size() - 1);
  for (std::size_t j = 0; j < ds.columns.size(); ++j)
    if (j != t) out.columns.push_back(ds.columns[j]);
  out.features = Matrix(ds.features.rows, ds.features.cols - 1);
  for (std::size_t i = 0; i < ds.features.rows; ++i) {
    std::size_t o = 0;
    for (std::size_t j = 0; j < ds.features.cols; ++j)
      if (j != t) out.features(i, o++) = ds.features(i, j);
  }
  return out;
}

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData p;
  p.raw = run_stage("ingest", [&] {
    Dataset ds = cfg.data_csv.empty() ? make_two_gaussians(cfg.synthetic)
                                      : parse_csv(cfg.data_csv);
    return cfg.drop_time ? drop_time_column(ds) : std::move(ds);
  });
  p.split = run_stage("split", [&] {
    return stratified_split(p.raw.labels, cfg.train_ratio, cfg.seed);
  });
  run_stage("normalize", [&] {
    Matrix train_raw = take_rows(p.raw.features, p.split.train);
    p.norm = fit_normalizer(train_raw, p.raw.columns);
    p.train_x = normalizer_apply(p.norm, train_raw);
    p.val_x = normalizer_apply(p.norm, take_rows(p.raw.features, p.split.val));
    p.train_y.reserve(p.split.train.size());
    for (std::size_t i : p.split.train) p.train_y.push_back(p.raw.labels[i]);
    p.val_y.reserve(p.split.val.size());
    for (std::size_t i : p.split.val) p.val_y.push_back(p.raw.labels[i]);
    std::vector<std::size_t> fraud_rows;
    for (std::size_t i = 0; i < p.train_y.size(); ++i)
      if (p.train_y[i] == 1) fraud_rows.push_back(i);
    p.train_minority_x = take_rows(p.train_x, fraud_rows);
    return 0;
  });
  return p;
}

// --- oversampler training ---

struct OversamplerBundle {
  Method method = Method::kNone;
  std::unique_ptr<VaeGan> model;          // vaegan family
  std::unique_ptr<IClassifierHead> head;  // joint methods, unless no_head
  Matrix smote_pool;                      // normalized train minority rows
  std::size_t smote_k = 5;
  std::optional<double> latent_silhouette;  // validation latents, true labels
};

inline LossKind resolve_head_loss(const ExperimentConfig& cfg, LossKind fallback) {
  if (cfg.loss == "bce") return LossKind::kBce;
  if (cfg.loss == "focal") return LossKind::kFocal;
  return fallback;
}

inline std::unique_ptr<IClassifierHead> make_joint_head(const ExperimentConfig& cfg) {
  FocalConfig focal{cfg.focal_alpha, cfg.focal_gamma};
  // joint training fights the same imbalance as the final classifier, so the
  // head defaults to focal loss
  LossKind loss = resolve_head_loss(cfg, LossKind::kFocal);
  switch (cfg.method) {
    case Method::kVaeGanMlp1:
    case Method::kVaeGanMlp2:
    case Method::kVaeGanMlp3: {
      MlpHeadConfig hc;
      hc.arch = cfg.method == Method::kVaeGanMlp1   ? MlpArch::kV1
                : cfg.method == Method::kVaeGanMlp2 ? MlpArch::kV2
                                                    : MlpArch::kV3;
      hc.input_dim = cfg.latent_dim;
      hc.loss = loss;
      hc.focal = focal;
      hc.lr = cfg.vaegan_lr;
      hc.seed = derive_seed(cfg.seed, 0x4ead);
      return std::make_unique<MlpHead>(hc);
    }
    case Method::kVaeGanCpac: {
      if (cfg.no_head) return nullptr;
      CpacConfig hc;
      hc.input_dim = cfg.latent_dim;
      hc.variant = cfg.no_attention    ? CpacVariant::kNoAttention
                   : cfg.no_prototypes ? CpacVariant::kNoPrototypes
                                       : CpacVariant::kFull;
      hc.penalties = !cfg.no_penalties;
      hc.loss = loss;
      hc.focal = focal;
      hc.lr = cfg.vaegan_lr;
      hc.seed = derive_seed(cfg.seed, 0x4ead);
      return std::make_unique<CpacHead>(hc);
    }
    default:
      return nullptr;
  }
}

inline VaeGanConfig make_vaegan_config(const ExperimentConfig& cfg, std::size_t input_dim) {
  VaeGanConfig vc;
  vc.input_dim = input_dim;
  vc.latent_dim = cfg.latent_dim;
  vc.lr = cfg.vaegan_lr;
  vc.epochs = cfg.vaegan_epochs;
  vc.batch_size = cfg.batch_size;
  vc.patience = cfg.patience;
  vc.min_precision = cfg.min_precision;
  vc.scope = cfg.scope;
  vc.seed = derive_seed(cfg.seed, 0x9e4);
  return vc;
}

// Trains whatever the method calls for. SMOTE has no trainable state beyond
// its neighbor pool; vaegan methods train once here and all sample counts
// reuse the result.
inline OversamplerBundle train_oversampler(const ExperimentConfig& cfg, const PreparedData& p) {
  OversamplerBundle b;
  b.method = cfg.method;
  b.smote_k = cfg.smote_k;
  if (cfg.method == Method::kNone) return b;
  if (cfg.method == Method::kSmote) {
    b.smote_pool = p.train_minority_x;
    if (b.smote_pool.rows < 2)
      throw std::runtime_error("stage oversample: smote needs at least 2 minority rows");
    return b;
  }

  // optional SMOTE pre-oversampling: widen the minority pool before the
  // generative model ever sees it
  Matrix train_x = p.train_x;
  std::vector<int> train_y = p.train_y;
  Matrix minority = p.train_minority_x;
  if (cfg.pretrain_smote > 0) {
    run_stage("pretrain-smote", [&] {
      Matrix extra = smote_sample(p.train_minority_x, cfg.pretrain_smote, cfg.smote_k,
                                  derive_seed(cfg.seed, 0x5307e));
      train_x = vcat(train_x, extra);
      train_y.insert(train_y.end(), extra.rows, 1);
      minority = vcat(minority, extra);
      return 0;
    });
  }

  run_stage("train-oversampler", [&] {
    b.model = std::make_unique<VaeGan>(make_vaegan_config(cfg, p.train_x.cols));
    b.head = make_joint_head(cfg);
    if (b.head) {
      b.model->train_joint(b.head.get(), train_x, train_y, p.val_x, p.val_y);
    } else if (cfg.scope == GenerativeScope::kAll) {
      b.model->train_minority_oversampler(train_x, p.val_x);
    } else {
      std::vector<std::size_t> val_fraud;
      for (std::size_t i = 0; i < p.val_y.size(); ++i)
        if (p.val_y[i] == 1) val_fraud.push_back(i);
      b.model->train_minority_oversampler(minority, take_rows(p.val_x, val_fraud));
    }
    return 0;
  });

  run_stage("latent-silhouette", [&] {
    Matrix mu = b.model->encode_mean(p.val_x);
    b.latent_silhouette = silhouette_score(mu, p.val_y);
    return 0;
  });
  return b;
}

// Draws `count` synthetic fraud rows in normalized feature space.
inline Matrix generate_synthetic(const ExperimentConfig& cfg, const OversamplerBundle& b,
                                 std::size_t count) {
  if (b.method == Method::kNone || count == 0)
    return Matrix(0, b.method == Method::kSmote ? b.smote_pool.cols
                  : b.model                     ? b.model->config().input_dim
                                                : 0);
  if (b.method == Method::kSmote)
    return smote_sample(b.smote_pool, count, b.smote_k, derive_seed(cfg.seed, 0xc000 + count));
  if (!b.model || !b.model->trained())
    throw std::runtime_error("oversampler has not been trained");
  return b.model->sample_frauds(count, derive_seed(cfg.seed, 0xc000 + count));
}

// --- downstream classifier (trained on augmented features) ---

struct TrainedClassifier {
  ClassifierKind kind = ClassifierKind::kLogReg;
  LogRegModel logreg;
  LogRegConfig logreg_cfg;
  std::unique_ptr<IClassifierHead> head;

  std::vector<double> predict(const Matrix& x) {
    return kind == ClassifierKind::kLogReg ? logreg_predict(logreg, x) : head->predict(x);
  }
};

inline TrainedClassifier train_classifier(const ExperimentConfig& cfg, const Matrix& x,
                                          const std::vector<int>& y, const Matrix& xval,
                                          const std::vector<int>& yval, uint64_t seed) {
  TrainedClassifier tc;
  tc.kind = cfg.classifier;
  if (cfg.classifier == ClassifierKind::kLogReg) {
    tc.logreg_cfg = LogRegConfig{cfg.logreg_lr, cfg.logreg_epochs, cfg.logreg_l2, seed};
    tc.logreg = logreg_fit(x, y, tc.logreg_cfg);
    return tc;
  }
  FocalConfig focal{cfg.focal_alpha, cfg.focal_gamma};
  if (cfg.classifier == ClassifierKind::kCpac) {
    CpacConfig hc;
    hc.input_dim = x.cols;
    hc.loss = resolve_head_loss(cfg, hc.loss);
    hc.focal = focal;
    hc.lr = cfg.clf_lr;
    hc.seed = seed;
    tc.head = std::make_unique<CpacHead>(hc);
  } else {
    MlpHeadConfig hc;
    hc.arch = cfg.classifier == ClassifierKind::kMlp1   ? MlpArch::kV1
              : cfg.classifier == ClassifierKind::kMlp2 ? MlpArch::kV2
                                                        : MlpArch::kV3;
    hc.input_dim = x.cols;
    hc.loss = resolve_head_loss(cfg, hc.loss);
    hc.focal = focal;
    hc.lr = cfg.clf_lr;
    hc.seed = seed;
    tc.head = std::make_unique<MlpHead>(hc);
  }
  StandaloneTrainConfig sc;
  sc.epochs = cfg.clf_epochs;
  sc.batch_size = cfg.batch_size;
  sc.patience = cfg.patience;
  sc.seed = derive_seed(seed, 0x57a);
  train_standalone(*tc.head, x, y, xval, yval, sc);
  return tc;
}

inline json classifier_to_json(TrainedClassifier& tc) {
  if (tc.kind == ClassifierKind::kLogReg) return logreg_to_json(tc.logreg, tc.logreg_cfg);
  return head_to_json(*tc.head);
}

inline TrainedClassifier classifier_from_json(const json& j) {
  TrainedClassifier tc;
  std::string kind = checkpoint_kind(j);
  if (kind == "logreg") {
    auto [model, cfg] = logreg_from_json(j);
    tc.kind = ClassifierKind::kLogReg;
    tc.logreg = std::move(model);
    tc.logreg_cfg = cfg;
    return tc;
  }
  tc.head = head_from_json(j);
  tc.kind = parse_classifier(kind);
  return tc;
}

inline TrainedClassifier load_classifier(const std::string& path) {
  return classifier_from_json(read_json_file(path));
}

// --- the full grid ---

struct CellReport {
  std::size_t count = 0;
  std::string classifier;
  MetricsReport metrics;
  std::string checkpoint_path;
};

struct RunReport {
  json config_echo;
  uint64_t seed = 0;
  std::size_t rows = 0, frauds = 0;
  std::size_t train_rows = 0, train_frauds = 0;
  std::size_t val_rows = 0, val_frauds = 0;
  std::string oversampler_checkpoint;  // empty when nothing was persisted
  std::optional<double> latent_silhouette;
  std::vector<CellReport> cells;
  double wall_clock_seconds = 0.0;
};

inline json metrics_to_json(const MetricsReport& m) {
  json j;
  j["tp"] = m.counts.tp;
  j["fp"] = m.counts.fp;
  j["tn"] = m.counts.tn;
  j["fn"] = m.counts.fn;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["auc_roc"] = m.auc;
  j["composite"] = m.composite;
  j["threshold"] = m.threshold;
  return j;
}

// Wall clock is the one field allowed to differ between identical runs; it
// stays last so the byte-stable prefix is easy to eyeball.
inline json run_report_to_json(const RunReport& r) {
  json j;
  j["config"] = r.config_echo;
  j["seed"] = r.seed;
  json d;
  d["rows"] = r.rows;
  d["frauds"] = r.frauds;
  d["train_rows"] = r.train_rows;
  d["train_frauds"] = r.train_frauds;
  d["val_rows"] = r.val_rows;
  d["val_frauds"] = r.val_frauds;
  j["dataset"] = d;
  json o;
  o["method"] = r.config_echo.value("method", "");
  o["checkpoint"] = r.oversampler_checkpoint.empty() ? json(nullptr)
                                                     : json(r.oversampler_checkpoint);
  o["latent_silhouette"] =
      r.latent_silhouette ? json(*r.latent_silhouette) : json(nullptr);
  j["oversampler"] = o;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cj;
    cj["count"] = c.count;
    cj["classifier"] = c.classifier;
    cj["checkpoint"] = c.checkpoint_path;
    cj["metrics"] = metrics_to_json(c.metrics);
    cells.push_back(cj);
  }
  j["cells"] = cells;
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j;
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  validate_config(cfg);

  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  auto persist = [&](const std::string& name, const json& j) {
    fs::path path = fs::path(cfg.out_dir) / name;
    write_json_file(path.string(), j);
    written.push_back(path);
    return path.string();
  };

  try {
    fs::create_directories(cfg.out_dir);

    RunReport report;
    report.config_echo = config_to_json(cfg);
    report.seed = cfg.seed;

    PreparedData prep = prepare_data(cfg);
    report.rows = prep.raw.features.rows;
    report.frauds = count_class(prep.raw.labels, 1);
    report.train_rows = prep.split.train.size();
    report.train_frauds = count_class(prep.train_y, 1);
    report.val_rows = prep.split.val.size();
    report.val_frauds = count_class(prep.val_y, 1);
    run_stage("normalize", [&] {
      persist("normalizer.json", normalizer_to_json(prep.norm));
      return 0;
    });

    OversamplerBundle bundle = train_oversampler(cfg, prep);
    report.latent_silhouette = bundle.latent_silhouette;
    if (bundle.model) {
      report.oversampler_checkpoint = run_stage("train-oversampler", [&] {
        return persist("oversampler.json", vaegan_to_json(*bundle.model, bundle.head.get()));
      });
    }

    std::vector<std::size_t> grid = cfg.method == Method::kNone
                                        ? std::vector<std::size_t>{0}
                                        : cfg.counts;
    for (std::size_t count : grid) {
      CellReport cell;
      cell.count = count;
      cell.classifier = classifier_name(cfg.classifier);

      Matrix aug_x = prep.train_x;
      std::vector<int> aug_y = prep.train_y;
      run_stage("generate", [&] {
        Matrix synth = generate_synthetic(cfg, bundle, count);
        if (synth.rows) {
          aug_x = vcat(aug_x, synth);
          aug_y.insert(aug_y.end(), synth.rows, 1);
        }
        return 0;
      });

      TrainedClassifier tc = run_stage("train-classifier", [&] {
        return train_classifier(cfg, aug_x, aug_y, prep.val_x, prep.val_y,
                                derive_seed(cfg.seed, 0xc1f00 + count));
      });
      run_stage("train-classifier", [&] {
        cell.checkpoint_path = persist(
            "clf_" + cell.classifier + "_" + std::to_string(count) + ".json",
            classifier_to_json(tc));
        return 0;
      });

      run_stage("evaluate", [&] {
        std::vector<double> probs = tc.predict(prep.val_x);
        double tau = cfg.fixed_threshold;
        if (cfg.threshold_mode == ThresholdMode::kAgent)
          tau = fit_threshold(probs, prep.val_y).tau;
        cell.metrics = evaluate_probs(prep.val_y, probs, tau);
        return 0;
      });
      report.cells.push_back(std::move(cell));
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run_stage("report", [&] {
      persist("run_report.json", run_report_to_json(report));
      return 0;
    });
    return report;
  } catch (...) {
    // a failed run leaves no partial artifacts behind
    std::error_code ec;
    for (const auto& path : written) fs::remove(path, ec);
    throw;
  }
}

// --- exports ---

// Original train rows in raw schema plus `count` synthetic frauds mapped
// back through the normalizer, flagged by an is_synthetic column.
inline void export_augmented_csv(const ExperimentConfig& cfg, const PreparedData& prep,
                                 const OversamplerBundle& bundle, std::size_t count,
                                 const std::string& path) {
  run_stage("export-augmented", [&] {
    if (cfg.method == Method::kNone && count > 0)
      throw std::runtime_error("method none cannot generate synthetic rows");
    if (is_vaegan_method(cfg.method) && (!bundle.model || !bundle.model->trained()))
      throw std::runtime_error("oversampler has not been trained");
    Matrix synth = generate_synthetic(cfg, bundle, count);
    Matrix features = take_rows(prep.raw.features, prep.split.train);
    std::vector<int> labels = prep.train_y;
    std::vector<int> flags(features.rows, 0);
    if (synth.rows) {
      features = vcat(features, normalizer_invert(prep.norm, synth));
      labels.insert(labels.end(), synth.rows, 1);
      flags.insert(flags.end(), synth.rows, 1);
    }
    write_csv(path, features, labels, prep.raw.columns, &flags);
    return 0;
  });
}

// PCA projection of validation latent means; optionally appends freshly
// generated rows (encoded like any other sample) marked is_synthetic=1.
inline void export_latent_csv(const ExperimentConfig& cfg, const PreparedData& prep,
                              OversamplerBundle& bundle, std::size_t dims,
                              std::size_t include_synthetic, const std::string& path) {
  run_stage("export-latent", [&] {
    if (dims != 2 && dims != 3) throw std::runtime_error("dims must be 2 or 3");
    if (!is_vaegan_method(cfg.method))
      throw std::runtime_error("method " + std::string(method_name(cfg.method)) +
                               " has no encoder");
    if (!bundle.model || !bundle.model->trained())
      throw std::runtime_error("oversampler has not been trained");
    Matrix mu = bundle.model->encode_mean(prep.val_x);
    Pca pca = fit_pca(mu, dims);
    Matrix proj = pca_project(pca, mu);
    std::vector<int> labels = prep.val_y;
    std::vector<int> flags(proj.rows, 0);
    if (include_synthetic > 0) {
      Matrix synth = generate_synthetic(cfg, bundle, include_synthetic);
      Matrix synth_mu = bundle.model->encode_mean(synth);
      proj = vcat(proj, pca_project(pca, synth_mu));
      labels.insert(labels.end(), synth.rows, 1);
      flags.insert(flags.end(), synth.rows, 1);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "pc1,pc2";
    if (dims == 3) out << ",pc3";
    out << ",label";
    if (include_synthetic > 0) out << ",is_synthetic";
    out << "\n";
    for (std::size_t i = 0; i < proj.rows; ++i) {
      for (std::size_t j = 0; j < dims; ++j) out << format_double(proj(i, j)) << ",";
      out << labels[i];
      if (include_synthetic > 0) out << "," << flags[i];
      out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
    return 0;
  });
}

}  // namespace fraudlab
