#include "tsgcl/model.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "tsgcl/error.hpp"

namespace tsgcl {

using namespace ad;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoTs: return "no-ts";
    case Variant::NoGcl: return "no-gcl";
  }
  return "full";
}

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::Full;
  if (name == "no-ts") return Variant::NoTs;
  if (name == "no-gcl") return Variant::NoGcl;
  throw ValueError("unknown variant '" + std::string(name) + "' (expected full, no-ts or no-gcl)");
}

HeadMode ModelConfig::head_mode() const {
  if (variant == Variant::NoTs) return HeadMode::SingleStage;
  return conditioned ? HeadMode::Conditioned : HeadMode::Independent;
}

void ModelConfig::validate() const {
  if (dims.text == 0 || dims.audio == 0 || dims.vision == 0)
    throw ValueError("model: feature dimensions must be positive");
  if (scheme.size() == 0) throw ValueError("model: empty label scheme");
  if (max_speakers == 0 || hidden_dim == 0 || speaker_dim == 0 || mlp_hidden == 0 || layers == 0)
    throw ValueError("model: sizes must be positive");
  if (!(omega > 0 && omega <= 1)) throw ValueError("model: omega must lie in (0, 1]");
  if (!(kappa >= 0 && kappa <= 1)) throw ValueError("model: kappa must lie in [0, 1]");
  if (!(lambda_decay > 0)) throw ValueError("model: lambda_decay must be positive");
  if (!(init_sigma >= 0)) throw ValueError("model: init_sigma must be non-negative");
  if (!(zeta >= 0)) throw ValueError("model: zeta must be non-negative");
  if (!(alpha >= 0)) throw ValueError("model: alpha must be non-negative");
  if (kernel.bandwidth == KernelConfig::Bandwidth::Fixed && !(kernel.gamma > 0))
    throw ValueError("model: fixed kernel gamma must be positive");
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const double s = config_.init_sigma;
  encoders_ = add_node_encoders(params_, config_.dims, config_.hidden_dim, config_.max_speakers,
                                config_.speaker_dim, s, rng);
  gcn_ = add_gcn_params(params_, config_.layers, config_.node_dim(), config_.kappa,
                        config_.lambda_decay, s, rng);
  head_ = add_two_stage_params(params_, config_.head_mode(), 3 * config_.node_dim(),
                               config_.scheme.size(), config_.mlp_hidden, s, rng);
}

void Model::check_dialogue(const Dialogue& d) const {
  if (d.utterances.empty()) throw DataError("dialogue '" + d.id + "' is empty");
  for (const auto& u : d.utterances) {
    if (u.feat_t.size() != config_.dims.text || u.feat_a.size() != config_.dims.audio ||
        u.feat_v.size() != config_.dims.vision)
      throw DataError("dialogue '" + d.id + "': feature sizes do not match the model");
    if (u.label >= config_.scheme.size())
      throw DataError("dialogue '" + d.id + "': label id out of range");
    if (u.speaker >= config_.max_speakers)
      throw DataError("dialogue '" + d.id + "': speaker " + std::to_string(u.speaker) +
                      " exceeds the model's speaker capacity " + std::to_string(config_.max_speakers));
  }
}

ForwardPass Model::forward(ParamBinding& bind, const Dialogue& dialogue, bool with_loss) const {
  check_dialogue(dialogue);
  ForwardPass f;
  f.node_features = make_node_features(bind, dialogue, encoders_);
  f.adjacency = angular_adjacency(f.node_features, config_.omega);
  f.propagation = normalized_adjacency(f.adjacency);
  f.reps = gcn_propagate(bind, f.propagation, f.node_features, gcn_);
  f.chi = fuse_nodes(f.reps);
  if (head_.mode != HeadMode::SingleStage) f.stage1 = stage1_polarity(bind, f.chi, head_);
  f.stage2 = stage2_emotion(bind, f.chi, f.stage1, head_);
  if (!with_loss) return f;

  const auto labels = dialogue.labels();
  f.classification = classification_loss(f.stage1, f.stage2, labels, config_.scheme, config_.alpha);
  if (config_.variant == Variant::NoGcl) {
    f.total = scale(*f.classification, config_.zeta);
    return f;
  }
  const auto cells = partition_pairs(f.reps.shape()[0], labels);
  const auto losses = cell_losses(f.reps, cells, config_.kernel);
  if (!losses.empty()) f.mmd = mean(concat(losses));
  f.total = gcl_total_loss(losses, *f.classification, config_.zeta);
  return f;
}

Prediction Model::predict(const Dialogue& dialogue) const {
  Tape tape;
  ParamBinding bind(tape, params_);
  const ForwardPass f = forward(bind, dialogue, false);
  auto argmax_rows = [](const Tensor& t) {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < t.cols(); ++c)
        if (t.at(r, c) > t.at(r, best)) best = c;
      out.push_back(best);
    }
    return out;
  };
  Prediction p;
  p.emotion = argmax_rows(f.stage2.value());
  if (f.stage1) p.polarity = argmax_rows(f.stage1->value());
  return p;
}

// ---- persistence ----------------------------------------------------------------

namespace {

std::map<std::string, std::string> config_entries(const ModelConfig& c) {
  return {
      {"d_t", std::to_string(c.dims.text)},
      {"d_a", std::to_string(c.dims.audio)},
      {"d_v", std::to_string(c.dims.vision)},
      {"labels", c.scheme.to_spec()},
      {"max_speakers", std::to_string(c.max_speakers)},
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"speaker_dim", std::to_string(c.speaker_dim)},
      {"mlp_hidden", std::to_string(c.mlp_hidden)},
      {"layers", std::to_string(c.layers)},
      {"omega", format_double(c.omega)},
      {"kappa", format_double(c.kappa)},
      {"lambda_decay", format_double(c.lambda_decay)},
      {"init_sigma", format_double(c.init_sigma)},
      {"zeta", format_double(c.zeta)},
      {"alpha", format_double(c.alpha)},
      {"variant", std::string(to_string(c.variant))},
      {"stage_coupling", c.conditioned ? "conditioned" : "independent"},
      {"kernel", c.kernel.bandwidth == KernelConfig::Bandwidth::Median ? "median" : "fixed"},
      {"kernel_gamma", format_double(c.kernel.gamma)},
  };
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw DataError("model file: bad integer for " + key);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw DataError("model file: bad number for " + key);
  return out;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model '" + path.string() + "'");
  out << "#tsgcl-model-v1\n";
  for (const auto& [k, v] : config_entries(model.config())) out << k << '=' << v << '\n';
  const auto& ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Tensor& t = ps.value(i);
    out << "param " << ps.name(i) << ' ';
    for (std::size_t d = 0; d < t.rank(); ++d) out << (d ? "x" : "") << t.shape()[d];
    out << '\n';
    for (std::size_t j = 0; j < t.size(); ++j) out << (j ? "," : "") << format_double(t[j]);
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "#tsgcl-model-v1")
    throw DataError("'" + path.string() + "' is not a tsgcl model file");

  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::string>> raw_params;  // name, values
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("param ", 0) == 0) {
      std::istringstream ls(line.substr(6));
      std::string name;
      ls >> name;
      std::string values;
      if (!std::getline(in, values)) throw DataError("model file: missing values for " + name);
      raw_params.emplace_back(name, values);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model file: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw DataError("model file: missing key " + k);
    return it->second;
  };

  ModelConfig c;
  c.dims = {to_size("d_t", get("d_t")), to_size("d_a", get("d_a")), to_size("d_v", get("d_v"))};
  c.scheme = LabelScheme::parse(get("labels"));
  c.max_speakers = to_size("max_speakers", get("max_speakers"));
  c.hidden_dim = to_size("hidden_dim", get("hidden_dim"));
  c.speaker_dim = to_size("speaker_dim", get("speaker_dim"));
  c.mlp_hidden = to_size("mlp_hidden", get("mlp_hidden"));
  c.layers = to_size("layers", get("layers"));
  c.omega = to_double("omega", get("omega"));
  c.kappa = to_double("kappa", get("kappa"));
  c.lambda_decay = to_double("lambda_decay", get("lambda_decay"));
  c.init_sigma = to_double("init_sigma", get("init_sigma"));
  c.zeta = to_double("zeta", get("zeta"));
  c.alpha = to_double("alpha", get("alpha"));
  c.variant = parse_variant(get("variant"));
  c.conditioned = get("stage_coupling") == "conditioned";
  c.kernel.bandwidth =
      get("kernel") == "fixed" ? KernelConfig::Bandwidth::Fixed : KernelConfig::Bandwidth::Median;
  c.kernel.gamma = to_double("kernel_gamma", get("kernel_gamma"));

  Model model(c, 0);
  auto& ps = model.params();
  if (raw_params.size() != ps.size())
    throw DataError("model file: expected " + std::to_string(ps.size()) + " parameters, found " +
                    std::to_string(raw_params.size()));
  for (const auto& [name, values] : raw_params) {
    const auto id = ps.find(name);
    if (!id) throw DataError("model file: unknown parameter " + name);
    Tensor& t = ps.value(*id);
    std::size_t j = 0, start = 0;
    while (start <= values.size()) {
      auto end = values.find(',', start);
      if (end == std::string::npos) end = values.size();
      if (j >= t.size()) throw DataError("model file: too many values for " + name);
      t[j++] = to_double(name, values.substr(start, end - start));
      start = end + 1;
    }
    if (j != t.size()) throw DataError("model file: too few values for " + name);
  }
  return model;
}

}  // namespace tsgcl
