#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsgcl {

enum class Modality : int { Text = 0, Audio = 1, Vision = 2 };
inline constexpr Modality kModalities[3] = {Modality::Text, Modality::Audio, Modality::Vision};
inline constexpr char modality_tag(Modality m) { return "tav"[static_cast<int>(m)]; }

/// Fine emotion labels plus their coarse polarity in {-1, 0, +1}.
class LabelScheme {
 public:
  LabelScheme() = default;
  LabelScheme(std::vector<std::string> names, std::vector<int> polarity);

  /// happy, sadness, neutral, angry, excitement, frustration.
  static LabelScheme iemocap();
  /// neutral, surprise, fear, sadness, joy, disgust, anger.
  static LabelScheme meld();
  /// Parses "name:+1,name:0,name:-1" (order defines label ids).
  static LabelScheme parse(std::string_view spec);
  /// "iemocap", "meld", or an inline spec accepted by parse().
  static LabelScheme by_name(std::string_view name);

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(std::size_t label) const { return names_.at(label); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  int polarity(std::size_t label) const { return polarity_.at(label); }
  /// Polarity as a class index for the 3-way stage: -1 -> 0, 0 -> 1, +1 -> 2.
  std::size_t polarity_class(std::size_t label) const { return polarity(label) + 1; }
  std::string to_spec() const;

  friend bool operator==(const LabelScheme&, const LabelScheme&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<int> polarity_;
};

/// Throws ValueError for a label the scheme does not contain.
int polarity_of(std::string_view label, const LabelScheme& scheme);

struct UtteranceRecord {
  std::string dialogue_id;
  std::size_t turn = 0;
  std::size_t speaker = 0;
  std::vector<double> feat_t;
  std::vector<double> feat_a;
  std::vector<double> feat_v;
  std::size_t label = 0;

  const std::vector<double>& features(Modality m) const {
    return m == Modality::Text ? feat_t : m == Modality::Audio ? feat_a : feat_v;
  }

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct Dialogue {
  std::string id;
  std::vector<UtteranceRecord> utterances;  // turn == position

  std::size_t size() const noexcept { return utterances.size(); }
  std::vector<std::size_t> labels() const;
  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct FeatureDims {
  std::size_t text = 0;
  std::size_t audio = 0;
  std::size_t vision = 0;
  friend bool operator==(const FeatureDims&, const FeatureDims&) = default;
};

struct Dataset {
  FeatureDims dims;
  LabelScheme scheme;
  std::vector<Dialogue> dialogues;

  std::size_t utterance_count() const;
  /// One past the largest speaker id, 0 for an empty dataset.
  std::size_t speaker_bound() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// ---- tsgcl-v1 files -----------------------------------------------------------

/// Reads a tsgcl-v1 file. Throws DataError (with the line number) on any
/// malformed content and IoError if the file cannot be opened.
Dataset load_dataset(const std::filesystem::path& path, const LabelScheme& scheme);
Dataset parse_dataset(std::istream& in, const LabelScheme& scheme,
                      const std::string& source = "<stream>");

void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
void write_dataset(const Dataset& dataset, std::ostream& out);
std::string format_dataset(const Dataset& dataset);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

// ---- synthetic data -------------------------------------------------------------

struct SynthesisSpec {
  std::size_t dialogues = 60;
  std::size_t utterances = 10;
  FeatureDims dims{16, 8, 8};
  std::size_t speakers = 2;
  double class_separation = 1.0;
  double noise_sigma = 0.5;
  double persistence = 0.6;
  std::uint64_t seed = 7;
};

/// Class-centroid features plus Gaussian noise, with labels that repeat the
/// previous turn's label with probability `persistence`.
Dataset synthesize_dataset(const SynthesisSpec& spec, const LabelScheme& scheme);

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Splits by dialogue (never inside one). Dialogues are shuffled with `seed`;
/// each split keeps the original relative order.
DatasetSplit split_dataset(const Dataset& dataset, std::uint64_t seed, double train_ratio = 0.7,
                           double val_ratio = 0.15);

}  // namespace tsgcl
