#pragma once

#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "fraudlab/cpac.hpp"
#include "fraudlab/heads.hpp"
#include "fraudlab/matrix.hpp"
#include "fraudlab/normalizer.hpp"
#include "fraudlab/vaegan.hpp"

namespace fraudlab {

using json = nlohmann::ordered_json;

inline constexpr int kCheckpointVersion = 1;

// --- file plumbing ---

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw std::runtime_error("corrupted JSON in " + path + ": " + e.what());
  }
}

inline void require_version(const json& j, const std::string& where) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw std::runtime_error(where + ": missing format_version");
  int v = j["format_version"].get<int>();
  if (v != kCheckpointVersion)
    throw std::runtime_error(where + ": format_version " + std::to_string(v) +
                             " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
}

inline std::string checkpoint_kind(const json& j) {
  if (!j.contains("kind") || !j["kind"].is_string())
    throw std::runtime_error("checkpoint has no kind field");
  return j["kind"].get<std::string>();
}

// --- named tensor blocks ---

inline json matrix_block(const std::string& name, const Matrix& m) {
  json b;
  b["name"] = name;
  b["shape"] = {m.rows, m.cols};
  b["data"] = m.data;
  return b;
}

inline Matrix matrix_from_block(const json& b, const std::string& where) {
  if (!b.contains("shape") || !b.contains("data"))
    throw std::runtime_error(where + ": malformed tensor block");
  auto shape = b["shape"].get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw std::runtime_error(where + ": tensor shape must be 2-d");
  Matrix m(shape[0], shape[1]);
  auto data = b["data"].get<std::vector<double>>();
  if (data.size() != m.size())
    throw std::runtime_error(where + ": tensor size does not match its shape");
  m.data = std::move(data);
  check_finite(m, where.c_str());
  return m;
}

inline json params_to_json(const std::vector<ParamRef>& params) {
  json arr = json::array();
  for (const auto& p : params) {
    check_finite(*p.value, ("checkpoint param " + p.name).c_str());
    arr.push_back(matrix_block(p.name, *p.value));
  }
  return arr;
}

inline json buffers_to_json(const std::vector<BufferRef>& buffers) {
  json arr = json::array();
  for (const auto& b : buffers) arr.push_back(matrix_block(b.name, *b.value));
  return arr;
}

// Restores by name; the stored set must match the model's set exactly.
inline void assign_named(const json& arr, const std::string& kind,
                         const std::unordered_map<std::string, Matrix*>& targets) {
  if (!arr.is_array()) throw std::runtime_error(kind + ": tensor list missing");
  if (arr.size() != targets.size())
    throw std::runtime_error(kind + ": expected " + std::to_string(targets.size()) +
                             " tensors, file has " + std::to_string(arr.size()));
  for (const auto& b : arr) {
    std::string name = b.value("name", std::string{});
    auto it = targets.find(name);
    if (it == targets.end()) throw std::runtime_error(kind + ": unexpected tensor " + name);
    Matrix m = matrix_from_block(b, kind + " tensor " + name);
    if (m.rows != it->second->rows || m.cols != it->second->cols)
      throw std::runtime_error(kind + ": shape mismatch for tensor " + name);
    *it->second = std::move(m);
  }
}

inline void params_from_json(const json& arr, const std::vector<ParamRef>& params,
                             const std::string& kind) {
  std::unordered_map<std::string, Matrix*> targets;
  for (const auto& p : params) targets[p.name] = p.value;
  assign_named(arr, kind, targets);
}

inline void buffers_from_json(const json& arr, const std::vector<BufferRef>& buffers,
                              const std::string& kind) {
  std::unordered_map<std::string, Matrix*> targets;
  for (const auto& b : buffers) targets[b.name] = b.value;
  assign_named(arr, kind, targets);
}

// --- enum spellings shared by checkpoints and the CLI ---

inline const char* loss_kind_name(LossKind k) {
  return k == LossKind::kFocal ? "focal" : "bce";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "focal") return LossKind::kFocal;
  if (s == "bce") return LossKind::kBce;
  throw std::runtime_error("unknown loss: " + s + " (want focal or bce)");
}

inline const char* scope_name(GenerativeScope s) {
  return s == GenerativeScope::kAll ? "all" : "minority";
}

inline GenerativeScope parse_scope(const std::string& s) {
  if (s == "minority") return GenerativeScope::kMinority;
  if (s == "all") return GenerativeScope::kAll;
  throw std::runtime_error("unknown scope: " + s + " (want minority or all)");
}

inline const char* cpac_variant_name(CpacVariant v) {
  switch (v) {
    case CpacVariant::kFull: return "full";
    case CpacVariant::kNoAttention: return "no_attention";
    case CpacVariant::kNoPrototypes: return "no_prototypes";
  }
  return "?";
}

inline CpacVariant parse_cpac_variant(const std::string& s) {
  if (s == "full") return CpacVariant::kFull;
  if (s == "no_attention") return CpacVariant::kNoAttention;
  if (s == "no_prototypes") return CpacVariant::kNoPrototypes;
  throw std::runtime_error("unknown cpac variant: " + s);
}

inline MlpArch parse_mlp_arch(const std::string& s) {
  if (s == "mlp1") return MlpArch::kV1;
  if (s == "mlp2") return MlpArch::kV2;
  if (s == "mlp3") return MlpArch::kV3;
  throw std::runtime_error("unknown mlp architecture: " + s);
}

// --- per-model config echoes ---

inline json focal_to_json(const FocalConfig& f) {
  return json{{"alpha", f.alpha}, {"gamma", f.gamma}};
}

inline FocalConfig focal_from_json(const json& j) {
  FocalConfig f;
  f.alpha = j.at("alpha").get<double>();
  f.gamma = j.at("gamma").get<double>();
  return f;
}

inline json cpac_config_to_json(const CpacConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["attention_hidden"] = c.attention_hidden;
  j["variant"] = cpac_variant_name(c.variant);
  j["penalties"] = c.penalties;
  j["lambda_scale"] = c.lambda_scale;
  j["lambda_anchor"] = c.lambda_anchor;
  j["loss"] = loss_kind_name(c.loss);
  j["focal"] = focal_to_json(c.focal);
  j["lr"] = c.lr;
  j["seed"] = c.seed;
  return j;
}

inline CpacConfig cpac_config_from_json(const json& j) {
  CpacConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.attention_hidden = j.at("attention_hidden").get<std::size_t>();
  c.variant = parse_cpac_variant(j.at("variant").get<std::string>());
  c.penalties = j.at("penalties").get<bool>();
  c.lambda_scale = j.at("lambda_scale").get<double>();
  c.lambda_anchor = j.at("lambda_anchor").get<double>();
  c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  c.focal = focal_from_json(j.at("focal"));
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

inline json mlp_config_to_json(const MlpHeadConfig& c) {
  json j;
  j["arch"] = mlp_arch_name(c.arch);
  j["input_dim"] = c.input_dim;
  j["loss"] = loss_kind_name(c.loss);
  j["focal"] = focal_to_json(c.focal);
  j["lr"] = c.lr;
  j["seed"] = c.seed;
  return j;
}

inline MlpHeadConfig mlp_config_from_json(const json& j) {
  MlpHeadConfig c;
  c.arch = parse_mlp_arch(j.at("arch").get<std::string>());
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  c.focal = focal_from_json(j.at("focal"));
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

inline json vaegan_config_to_json(const VaeGanConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["latent_dim"] = c.latent_dim;
  j["encoder_hidden"] = c.encoder_hidden;
  j["decoder_hidden"] = c.decoder_hidden;
  j["disc_hidden"] = c.disc_hidden;
  j["recon_weight"] = c.recon_weight;
  j["kl_weight"] = c.kl_weight;
  j["adv_weight"] = c.adv_weight;
  j["logvar_clamp"] = c.logvar_clamp;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["min_precision"] = c.min_precision;
  j["val_threshold"] = c.val_threshold;
  j["scope"] = scope_name(c.scope);
  j["restore_best"] = c.restore_best;
  j["seed"] = c.seed;
  return j;
}

inline VaeGanConfig vaegan_config_from_json(const json& j) {
  VaeGanConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
  c.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
  c.disc_hidden = j.at("disc_hidden").get<std::vector<std::size_t>>();
  c.recon_weight = j.at("recon_weight").get<double>();
  c.kl_weight = j.at("kl_weight").get<double>();
  c.adv_weight = j.at("adv_weight").get<double>();
  c.logvar_clamp = j.at("logvar_clamp").get<double>();
  c.lr = j.at("lr").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.min_precision = j.at("min_precision").get<double>();
  c.val_threshold = j.at("val_threshold").get<double>();
  c.scope = parse_scope(j.at("scope").get<std::string>());
  c.restore_best = j.at("restore_best").get<bool>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

inline json logreg_config_to_json(const LogRegConfig& c) {
  json j;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["l2"] = c.l2;
  j["seed"] = c.seed;
  return j;
}

inline LogRegConfig logreg_config_from_json(const json& j) {
  LogRegConfig c;
  c.lr = j.at("lr").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.l2 = j.at("l2").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

// --- classifier heads (cpac, mlp1..3) ---

inline json head_to_json(IClassifierHead& head) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = head.kind();
  if (auto* c = dynamic_cast<CpacHead*>(&head)) {
    j["config"] = cpac_config_to_json(c->config());
    j["prototypes_initialized"] = c->prototypes_initialized();
  } else if (auto* m = dynamic_cast<MlpHead*>(&head)) {
    j["config"] = mlp_config_to_json(m->config());
  } else {
    throw std::runtime_error("head_to_json: unsupported head kind " + head.kind());
  }
  j["params"] = params_to_json(head.params());
  j["buffers"] = buffers_to_json(head.buffers());
  return j;
}

inline std::unique_ptr<IClassifierHead> head_from_json(const json& j) {
  require_version(j, "head checkpoint");
  std::string kind = checkpoint_kind(j);
  std::unique_ptr<IClassifierHead> head;
  if (kind == "cpac") {
    auto c = std::make_unique<CpacHead>(cpac_config_from_json(j.at("config")));
    if (j.value("prototypes_initialized", false)) c->mark_initialized();
    head = std::move(c);
  } else if (kind == "mlp1" || kind == "mlp2" || kind == "mlp3") {
    head = std::make_unique<MlpHead>(mlp_config_from_json(j.at("config")));
  } else {
    throw std::runtime_error("not a classifier head checkpoint: kind " + kind);
  }
  params_from_json(j.at("params"), head->params(), kind);
  buffers_from_json(j.at("buffers"), head->buffers(), kind);
  return head;
}

inline void save_head(IClassifierHead& head, const std::string& path) {
  write_json_file(path, head_to_json(head));
}

inline std::unique_ptr<IClassifierHead> load_head(const std::string& path) {
  return head_from_json(read_json_file(path));
}

// --- logistic regression ---

inline json logreg_to_json(const LogRegModel& m, const LogRegConfig& cfg) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = "logreg";
  j["config"] = logreg_config_to_json(cfg);
  check_finite(m.w, "checkpoint param logreg.w");
  json arr = json::array();
  arr.push_back(matrix_block("logreg.w", m.w));
  arr.push_back(matrix_block("logreg.b", Matrix(1, 1, m.b)));
  j["params"] = arr;
  return j;
}

inline std::pair<LogRegModel, LogRegConfig> logreg_from_json(const json& j) {
  require_version(j, "logreg checkpoint");
  if (checkpoint_kind(j) != "logreg")
    throw std::runtime_error("not a logreg checkpoint: kind " + checkpoint_kind(j));
  LogRegModel m;
  Matrix b(1, 1);
  std::unordered_map<std::string, Matrix*> targets{{"logreg.w", &m.w}, {"logreg.b", &b}};
  if (j.at("params").size() != targets.size())
    throw std::runtime_error("logreg: wrong tensor count");
  // shapes unknown until read, so resize targets from the file
  for (const auto& blk : j.at("params")) {
    std::string name = blk.value("name", std::string{});
    auto it = targets.find(name);
    if (it == targets.end()) throw std::runtime_error("logreg: unexpected tensor " + name);
    *it->second = matrix_from_block(blk, "logreg tensor " + name);
  }
  if (m.w.rows != 1 || m.w.cols == 0) throw std::runtime_error("logreg: bad weight shape");
  if (b.rows != 1 || b.cols != 1) throw std::runtime_error("logreg: bad bias shape");
  m.b = b(0, 0);
  return {std::move(m), logreg_config_from_json(j.at("config"))};
}

// --- VAE-GAN (optionally with an embedded joint-training head) ---

inline json vaegan_to_json(VaeGan& model, IClassifierHead* head) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = "vaegan";
  j["config"] = vaegan_config_to_json(model.config());
  j["trained"] = model.trained();
  j["params"] = params_to_json(model.all_params());
  j["head"] = head ? head_to_json(*head) : json(nullptr);
  return j;
}

struct LoadedVaeGan {
  VaeGan model;
  std::unique_ptr<IClassifierHead> head;  // null when trained headless
};

inline LoadedVaeGan vaegan_from_json(const json& j) {
  require_version(j, "vaegan checkpoint");
  if (checkpoint_kind(j) != "vaegan")
    throw std::runtime_error("not a vaegan checkpoint: kind " + checkpoint_kind(j));
  VaeGan model(vaegan_config_from_json(j.at("config")));
  params_from_json(j.at("params"), model.all_params(), "vaegan");
  if (j.value("trained", false)) model.mark_trained();
  std::unique_ptr<IClassifierHead> head;
  if (j.contains("head") && !j["head"].is_null()) head = head_from_json(j["head"]);
  return {std::move(model), std::move(head)};
}

inline void save_vaegan(VaeGan& model, IClassifierHead* head, const std::string& path) {
  write_json_file(path, vaegan_to_json(model, head));
}

inline LoadedVaeGan load_vaegan(const std::string& path) {
  return vaegan_from_json(read_json_file(path));
}

// --- normalizer document: {medians, divisors, columns} ---

inline json normalizer_to_json(const RobustNormalizer& n) {
  json j;
  j["medians"] = n.medians;
  j["divisors"] = n.divisors;
  j["columns"] = n.columns;
  return j;
}

inline RobustNormalizer normalizer_from_json(const json& j) {
  RobustNormalizer n;
  n.medians = j.at("medians").get<std::vector<double>>();
  n.divisors = j.at("divisors").get<std::vector<double>>();
  n.columns = j.at("columns").get<std::vector<std::string>>();
  if (n.medians.size() != n.divisors.size() || n.medians.size() != n.columns.size())
    throw std::runtime_error("normalizer document: field lengths disagree");
  for (double d : n.divisors)
    if (!(d > 0.0)) throw std::runtime_error("normalizer document: non-positive divisor");
  return n;
}

inline void save_normalizer(const RobustNormalizer& n, const std::string& path) {
  write_json_file(path, normalizer_to_json(n));
}

inline RobustNormalizer load_normalizer(const std::string& path) {
  return normalizer_from_json(read_json_file(path));
}

}  // namespace fraudlab
