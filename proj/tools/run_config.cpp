#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tsgcl/error.hpp"

namespace tsgcl::cli {

namespace {

std::string trim(std::string s) {
  const auto ws = " \t\r";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

const ConfigKey& find_key(const std::string& name) {
  for (const auto& k : RunConfig::schema())
    if (k.name == name) return k;
  throw ConfigError("unknown configuration key '" + name + "'");
}

void check_value(const ConfigKey& k, const std::string& v) {
  auto bad = [&](const std::string& what) {
    throw ConfigError("invalid value '" + v + "' for " + k.name + ": " + what);
  };
  switch (k.type) {
    case KeyType::Size: {
      std::size_t n;
      if (!parse_number(v, n)) bad("expected a non-negative integer");
      break;
    }
    case KeyType::Count: {
      std::size_t n;
      if (!parse_number(v, n) || n == 0) bad("expected a positive integer");
      break;
    }
    case KeyType::Seed: {
      std::uint64_t n;
      if (!parse_number(v, n)) bad("expected an unsigned 64-bit integer");
      break;
    }
    case KeyType::Real: {
      double d;
      if (!parse_number(v, d) || !std::isfinite(d)) bad("expected a finite number");
      break;
    }
    case KeyType::Choice:
      if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end()) {
        std::string all;
        for (const auto& c : k.choices) all += (all.empty() ? "" : ", ") + c;
        bad("expected one of " + all);
      }
      break;
    case KeyType::SeedList: {
      std::stringstream ss(v);
      std::string item;
      std::size_t count = 0;
      while (std::getline(ss, item, ',')) {
        std::uint64_t n;
        if (!parse_number(trim(item), n)) bad("expected comma-separated seeds");
        ++count;
      }
      if (count == 0) bad("expected at least one seed");
      break;
    }
    case KeyType::Text:
      if (v.find('\n') != std::string::npos) bad("newlines are not allowed");
      break;
  }
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::schema() {
  static const std::vector<ConfigKey> keys = {
      // data
      {"train_data", KeyType::Text, "", "training split (tsgcl-v1); empty = synthesize in memory", {}},
      {"val_data", KeyType::Text, "", "validation split (tsgcl-v1)", {}},
      {"test_data", KeyType::Text, "", "test split (tsgcl-v1)", {}},
      {"data", KeyType::Text, "", "dataset inspected by graph-stats", {}},
      {"model", KeyType::Text, "", "model file written by train (eval, graph-stats)", {}},
      {"predictions", KeyType::Text, "", "eval: CSV of dialogue_id,turn,label predictions", {}},
      {"out", KeyType::Text, "out", "output directory", {}},
      {"scheme", KeyType::Text, "iemocap",
       "label scheme: iemocap, meld, or inline name:+1,name:0,name:-1,...", {}},
      // synthesis
      {"dialogues", KeyType::Count, "60", "synthetic dialogues", {}},
      {"utts", KeyType::Count, "10", "utterances per synthetic dialogue", {}},
      {"d_t", KeyType::Count, "16", "synthetic text feature dimension", {}},
      {"d_a", KeyType::Count, "8", "synthetic audio feature dimension", {}},
      {"d_v", KeyType::Count, "8", "synthetic vision feature dimension", {}},
      {"speakers", KeyType::Count, "2", "synthetic speakers per dialogue", {}},
      {"separation", KeyType::Real, "1", "synthetic class separation (>= 0)", {}},
      {"sigma", KeyType::Real, "0.5", "synthetic noise standard deviation", {}},
      {"persistence", KeyType::Real, "0.6", "probability of repeating the previous label", {}},
      {"data_seed", KeyType::Seed, "7", "seed for in-memory synthesis and splitting", {}},
      // training
      {"seed", KeyType::Seed, "7", "run seed (gen-data: synthesis seed); TSGCL_SEED is the fallback", {}},
      {"epochs", KeyType::Size, "200", "maximum training epochs", {}},
      {"lr", KeyType::Real, "0.001", "Adam learning rate", {}},
      {"beta1", KeyType::Real, "0.9", "Adam first-moment decay", {}},
      {"beta2", KeyType::Real, "0.999", "Adam second-moment decay", {}},
      {"adam_eps", KeyType::Real, "1e-08", "Adam epsilon", {}},
      {"patience", KeyType::Size, "10", "early-stop patience on validation weighted F1 (0 = off)", {}},
      {"variant", KeyType::Choice, "full", "model variant", {"full", "no-ts", "no-gcl"}},
      // model
      {"hidden_dim", KeyType::Count, "64", "recurrent hidden size per direction", {}},
      {"speaker_dim", KeyType::Count, "16", "speaker embedding size", {}},
      {"mlp_hidden", KeyType::Count, "128", "hidden units of both classifier stages", {}},
      {"layers", KeyType::Count, "4", "graph propagation layers", {}},
      {"max_speakers", KeyType::Size, "0", "speaker embedding capacity (0 = from data)", {}},
      {"omega", KeyType::Real, "0.5", "cross-modal edge weight factor, (0, 1]", {}},
      {"kappa", KeyType::Real, "0.1", "initial-residual weight, [0, 1]", {}},
      {"lambda_decay", KeyType::Real, "1", "identity-mapping decay (> 0)", {}},
      {"init_sigma", KeyType::Real, "0.1", "Gaussian init standard deviation", {}},
      {"zeta", KeyType::Real, "1", "classification loss weight in the total loss", {}},
      {"alpha", KeyType::Real, "1", "fine-emotion loss weight", {}},
      {"stage_coupling", KeyType::Choice, "conditioned", "how stage 2 sees stage 1",
       {"conditioned", "independent"}},
      {"kernel", KeyType::Choice, "median", "RBF bandwidth rule", {"median", "fixed"}},
      {"kernel_gamma", KeyType::Real, "1", "RBF gamma when kernel = fixed", {}},
      // ablation
      {"seeds", KeyType::SeedList, "1,2,3,4,5", "ablate: comma-separated seeds", {}},
      {"jobs", KeyType::Count, "1", "ablate: concurrent training runs", {}},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : schema()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& k = find_key(key);
  const std::string v = trim(value);
  check_value(k, v);
  values_[key] = v;
  explicit_.insert(key);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::apply_seed_fallback(const char* env_value) {
  if (!env_value || is_set("seed")) return;
  try {
    check_value(find_key("seed"), trim(env_value));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("TSGCL_SEED: ") + e.what());
  }
  values_["seed"] = trim(env_value);
}

const std::string& RunConfig::get(const std::string& key) const {
  find_key(key);
  return values_.at(key);
}

std::size_t RunConfig::size(const std::string& key) const {
  std::size_t n = 0;
  parse_number(get(key), n);
  return n;
}

std::uint64_t RunConfig::seed(const std::string& key) const {
  std::uint64_t n = 0;
  parse_number(get(key), n);
  return n;
}

double RunConfig::real(const std::string& key) const {
  double d = 0;
  parse_number(get(key), d);
  return d;
}

std::vector<std::uint64_t> RunConfig::seed_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::uint64_t n = 0;
    parse_number(trim(item), n);
    out.push_back(n);
  }
  return out;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& k : schema()) out += k.name + " = " + values_.at(k.name) + "\n";
  return out;
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << resolved();
}

// ---- typed views ----------------------------------------------------------------

LabelScheme label_scheme(const RunConfig& cfg) {
  try {
    return LabelScheme::by_name(cfg.get("scheme"));
  } catch (const ValueError& e) {
    throw ConfigError(std::string("scheme: ") + e.what());
  }
}

SynthesisSpec synthesis_spec(const RunConfig& cfg, const std::string& seed_key) {
  SynthesisSpec s;
  s.dialogues = cfg.size("dialogues");
  s.utterances = cfg.size("utts");
  s.dims = {cfg.size("d_t"), cfg.size("d_a"), cfg.size("d_v")};
  s.speakers = cfg.size("speakers");
  s.class_separation = cfg.real("separation");
  s.noise_sigma = cfg.real("sigma");
  s.persistence = cfg.real("persistence");
  s.seed = cfg.seed(seed_key);
  if (s.class_separation < 0) throw ConfigError("separation must be >= 0");
  if (s.noise_sigma < 0) throw ConfigError("sigma must be >= 0");
  if (s.persistence < 0 || s.persistence > 1) throw ConfigError("persistence must lie in [0, 1]");
  return s;
}

ModelConfig model_config(const RunConfig& cfg, const LabelScheme& scheme, const FeatureDims& dims,
                         std::size_t speaker_bound) {
  ModelConfig m;
  m.dims = dims;
  m.scheme = scheme;
  m.max_speakers = cfg.size("max_speakers");
  if (m.max_speakers == 0) m.max_speakers = std::max<std::size_t>(1, speaker_bound);
  if (m.max_speakers < speaker_bound)
    throw ConfigError("max_speakers = " + std::to_string(m.max_speakers) + " but the data has " +
                      std::to_string(speaker_bound) + " speakers");
  m.hidden_dim = cfg.size("hidden_dim");
  m.speaker_dim = cfg.size("speaker_dim");
  m.mlp_hidden = cfg.size("mlp_hidden");
  m.layers = cfg.size("layers");
  m.omega = cfg.real("omega");
  m.kappa = cfg.real("kappa");
  m.lambda_decay = cfg.real("lambda_decay");
  m.init_sigma = cfg.real("init_sigma");
  m.zeta = cfg.real("zeta");
  m.alpha = cfg.real("alpha");
  m.variant = parse_variant(cfg.get("variant"));
  m.conditioned = cfg.get("stage_coupling") == "conditioned";
  m.kernel.bandwidth =
      cfg.get("kernel") == "fixed" ? KernelConfig::Bandwidth::Fixed : KernelConfig::Bandwidth::Median;
  m.kernel.gamma = cfg.real("kernel_gamma");
  try {
    m.validate();
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
  return m;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.epochs = cfg.size("epochs");
  t.adam.learning_rate = cfg.real("lr");
  t.adam.beta1 = cfg.real("beta1");
  t.adam.beta2 = cfg.real("beta2");
  t.adam.epsilon = cfg.real("adam_eps");
  t.seed = cfg.seed("seed");
  t.patience = cfg.size("patience");
  if (!(t.adam.learning_rate > 0)) throw ConfigError("lr must be positive");
  if (!(t.adam.beta1 >= 0 && t.adam.beta1 < 1 && t.adam.beta2 >= 0 && t.adam.beta2 < 1))
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  if (!(t.adam.epsilon > 0)) throw ConfigError("adam_eps must be positive");
  return t;
}

}  // namespace tsgcl::cli
