#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tsgcl/data.hpp"
#include "tsgcl/model.hpp"
#include "tsgcl/train.hpp"

namespace tsgcl::cli {

enum class KeyType { Size, Count, Seed, Real, Text, Choice, SeedList };

struct ConfigKey {
  std::string name;
  KeyType type;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices;  // KeyType::Choice only
};

/// Flat key = value configuration over a closed schema. Later sources
/// override earlier ones: defaults, TSGCL_SEED, config file, flags.
class RunConfig {
 public:
  static const std::vector<ConfigKey>& schema();

  RunConfig();

  /// Throws ConfigError for an unknown key or a value of the wrong type.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::filesystem::path& path);
  /// Applies TSGCL_SEED unless `seed` was already set explicitly.
  void apply_seed_fallback(const char* env_value);

  const std::string& get(const std::string& key) const;
  std::size_t size(const std::string& key) const;
  std::uint64_t seed(const std::string& key) const;
  double real(const std::string& key) const;
  std::vector<std::uint64_t> seed_list(const std::string& key) const;
  bool is_set(const std::string& key) const { return explicit_.count(key) > 0; }

  /// Every key in schema order, one "key = value" line each.
  std::string resolved() const;
  void write_resolved(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

LabelScheme label_scheme(const RunConfig& cfg);
SynthesisSpec synthesis_spec(const RunConfig& cfg, const std::string& seed_key);
ModelConfig model_config(const RunConfig& cfg, const LabelScheme& scheme, const FeatureDims& dims,
                         std::size_t speaker_bound);
TrainConfig train_config(const RunConfig& cfg);

}  // namespace tsgcl::cli
