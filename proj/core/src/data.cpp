#include "tsgcl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "tsgcl/error.hpp"

namespace tsgcl {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v,
                                   std::chars_format::general);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

class LineError {
 public:
  LineError(const std::string& source, std::size_t line) : prefix_(source + ":" + std::to_string(line) + ": ") {}
  [[noreturn]] void fail(const std::string& what) const { throw DataError(prefix_ + what); }

 private:
  std::string prefix_;
};

}  // namespace

// ---- LabelScheme --------------------------------------------------------------

LabelScheme::LabelScheme(std::vector<std::string> names, std::vector<int> polarity)
    : names_(std::move(names)), polarity_(std::move(polarity)) {
  if (names_.empty()) throw ValueError("label scheme has no labels");
  if (names_.size() != polarity_.size())
    throw ValueError("label scheme: every label needs exactly one polarity");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto& n = names_[i];
    if (n.empty() || n.find_first_of(",:\t\n =#") != std::string::npos)
      throw ValueError("label scheme: invalid label name '" + n + "'");
    if (polarity_[i] < -1 || polarity_[i] > 1)
      throw ValueError("label scheme: polarity of '" + n + "' must be -1, 0 or +1");
    for (std::size_t j = 0; j < i; ++j)
      if (names_[j] == n) throw ValueError("label scheme: duplicate label '" + n + "'");
  }
}

LabelScheme LabelScheme::iemocap() {
  return LabelScheme({"happy", "sadness", "neutral", "angry", "excitement", "frustration"},
                     {+1, -1, 0, -1, +1, -1});
}

LabelScheme LabelScheme::meld() {
  return LabelScheme({"neutral", "surprise", "fear", "sadness", "joy", "disgust", "anger"},
                     {0, +1, -1, -1, +1, -1, -1});
}

LabelScheme LabelScheme::parse(std::string_view spec) {
  std::vector<std::string> names;
  std::vector<int> pol;
  for (auto item : split(trim(spec), ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw ValueError("label scheme entry '" + std::string(item) + "' lacks ':<polarity>'");
    auto value = trim(item.substr(colon + 1));
    if (!value.empty() && value.front() == '+') value.remove_prefix(1);
    const auto p = parse_int<int>(value);
    if (!p) throw ValueError("label scheme entry '" + std::string(item) + "' has a bad polarity");
    names.emplace_back(trim(item.substr(0, colon)));
    pol.push_back(*p);
  }
  return LabelScheme(std::move(names), std::move(pol));
}

LabelScheme LabelScheme::by_name(std::string_view name) {
  if (name == "iemocap") return iemocap();
  if (name == "meld") return meld();
  return parse(name);
}

std::optional<std::size_t> LabelScheme::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::string LabelScheme::to_spec() const {
  std::string out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (i) out += ",";
    out += names_[i] + ":" + (polarity_[i] > 0 ? "+1" : polarity_[i] < 0 ? "-1" : "0");
  }
  return out;
}

int polarity_of(std::string_view label, const LabelScheme& scheme) {
  const auto idx = scheme.index_of(label);
  if (!idx) throw ValueError("unknown label '" + std::string(label) + "'");
  return scheme.polarity(*idx);
}

// ---- Dataset ----------------------------------------------------------------

std::vector<std::size_t> Dialogue::labels() const {
  std::vector<std::size_t> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(u.label);
  return out;
}

std::size_t Dataset::utterance_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogues) n += d.size();
  return n;
}

std::size_t Dataset::speaker_bound() const {
  std::size_t n = 0;
  for (const auto& d : dialogues)
    for (const auto& u : d.utterances) n = std::max(n, u.speaker + 1);
  return n;
}

// ---- reading ------------------------------------------------------------------

namespace {

FeatureDims parse_header(std::string_view line, const LabelScheme& scheme, const LineError& err) {
  auto fields = split(line, ' ');
  if (fields.empty() || fields[0] != "#tsgcl-v1") err.fail("missing '#tsgcl-v1' header");
  std::optional<std::size_t> dt, da, dv;
  std::optional<std::string_view> labels;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto f = fields[i];
    if (f.empty()) continue;
    const auto eq = f.find('=');
    if (eq == std::string_view::npos) err.fail("malformed header field '" + std::string(f) + "'");
    const auto key = f.substr(0, eq);
    const auto value = f.substr(eq + 1);
    if (key == "labels") {
      labels = value;
      continue;
    }
    const auto n = parse_int<std::size_t>(value);
    if (!n || *n == 0) err.fail("header dimension '" + std::string(f) + "' is not a positive integer");
    if (key == "d_t") dt = n;
    else if (key == "d_a") da = n;
    else if (key == "d_v") dv = n;
    else err.fail("unknown header field '" + std::string(key) + "'");
  }
  if (!dt || !da || !dv || !labels) err.fail("header must declare d_t, d_a, d_v and labels");
  std::vector<std::string> names;
  for (auto n : split(*labels, ',')) names.emplace_back(n);
  if (names != scheme.names())
    err.fail("header labels '" + std::string(*labels) + "' do not match the label scheme");
  return FeatureDims{*dt, *da, *dv};
}

std::vector<double> parse_features(std::string_view field, char tag, std::size_t expected,
                                   const char* name, const LineError& err) {
  if (field.size() < 2 || field[0] != tag || field[1] != ':')
    err.fail(std::string("expected '") + tag + ":' field for " + name);
  std::vector<double> out;
  for (auto item : split(field.substr(2), ',')) {
    const auto v = parse_double(item);
    if (!v) err.fail(std::string("malformed float '") + std::string(item) + "' in " + name);
    out.push_back(*v);
  }
  if (out.size() != expected)
    err.fail(std::string(name) + " has " + std::to_string(out.size()) + " values, expected " +
             std::to_string(expected));
  return out;
}

}  // namespace

Dataset parse_dataset(std::istream& in, const LabelScheme& scheme, const std::string& source) {
  Dataset ds;
  ds.scheme = scheme;
  bool have_header = false;
  std::map<std::string, std::size_t> index;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const LineError err(source, lineno);
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (!have_header) {
      ds.dims = parse_header(trim(line), scheme, err);
      have_header = true;
      continue;
    }
    if (line.front() == '#') continue;

    const auto f = split(line, '\t');
    if (f.size() != 7) err.fail("expected 7 tab-separated fields, found " + std::to_string(f.size()));
    UtteranceRecord r;
    r.dialogue_id = std::string(f[0]);
    if (r.dialogue_id.empty()) err.fail("empty dialogue id");
    const auto turn = parse_int<std::size_t>(f[1]);
    if (!turn) err.fail("turn '" + std::string(f[1]) + "' is not a non-negative integer");
    r.turn = *turn;
    const auto speaker = parse_int<std::size_t>(f[2]);
    if (!speaker) err.fail("speaker '" + std::string(f[2]) + "' is not a non-negative integer");
    r.speaker = *speaker;
    const auto label = scheme.index_of(f[3]);
    if (!label) err.fail("unknown label '" + std::string(f[3]) + "'");
    r.label = *label;
    r.feat_t = parse_features(f[4], 't', ds.dims.text, "feat_t", err);
    r.feat_a = parse_features(f[5], 'a', ds.dims.audio, "feat_a", err);
    r.feat_v = parse_features(f[6], 'v', ds.dims.vision, "feat_v", err);

    auto [it, inserted] = index.try_emplace(r.dialogue_id, ds.dialogues.size());
    if (inserted) ds.dialogues.push_back(Dialogue{r.dialogue_id, {}});
    ds.dialogues[it->second].utterances.push_back(std::move(r));
  }
  if (!have_header) throw DataError(source + ": missing '#tsgcl-v1' header");

  for (auto& d : ds.dialogues) {
    std::stable_sort(d.utterances.begin(), d.utterances.end(),
                     [](const auto& a, const auto& b) { return a.turn < b.turn; });
    for (std::size_t i = 0; i < d.utterances.size(); ++i)
      if (d.utterances[i].turn != i)
        throw DataError(source + ": dialogue '" + d.id + "' has non-contiguous turns (expected turn " +
                        std::to_string(i) + ", found " + std::to_string(d.utterances[i].turn) + ")");
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const LabelScheme& scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, scheme, path.string());
}

// ---- writing ------------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("cannot format double");
  return std::string(buf, ptr);
}

namespace {

void write_features(std::ostream& out, char tag, const std::vector<double>& v) {
  out << tag << ':';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << format_double(v[i]);
  }
}

}  // namespace

void write_dataset(const Dataset& ds, std::ostream& out) {
  out << "#tsgcl-v1 d_t=" << ds.dims.text << " d_a=" << ds.dims.audio << " d_v=" << ds.dims.vision
      << " labels=";
  for (std::size_t i = 0; i < ds.scheme.size(); ++i) out << (i ? "," : "") << ds.scheme.name(i);
  out << '\n';
  for (const auto& d : ds.dialogues)
    for (const auto& u : d.utterances) {
      out << u.dialogue_id << '\t' << u.turn << '\t' << u.speaker << '\t' << ds.scheme.name(u.label)
          << '\t';
      write_features(out, 't', u.feat_t);
      out << '\t';
      write_features(out, 'a', u.feat_a);
      out << '\t';
      write_features(out, 'v', u.feat_v);
      out << '\n';
    }
}

std::string format_dataset(const Dataset& ds) {
  std::ostringstream out;
  write_dataset(ds, out);
  return out.str();
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
  write_dataset(ds, out);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---- synthesis ----------------------------------------------------------------

Dataset synthesize_dataset(const SynthesisSpec& spec, const LabelScheme& scheme) {
  if (spec.dialogues == 0 || spec.utterances == 0 || spec.speakers == 0 || spec.dims.text == 0 ||
      spec.dims.audio == 0 || spec.dims.vision == 0)
    throw ValueError("synthesize_dataset: all counts and dimensions must be positive");
  if (!(spec.class_separation >= 0)) throw ValueError("synthesize_dataset: class_separation must be >= 0");
  if (!(spec.noise_sigma >= 0)) throw ValueError("synthesize_dataset: noise_sigma must be >= 0");
  if (!(spec.persistence >= 0 && spec.persistence <= 1))
    throw ValueError("synthesize_dataset: persistence must lie in [0, 1]");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_label(0, scheme.size() - 1);

  const std::size_t K = scheme.size();
  const std::size_t dims[3] = {spec.dims.text, spec.dims.audio, spec.dims.vision};
  std::vector<std::vector<double>> centroids[3];
  for (std::size_t m = 0; m < 3; ++m) {
    centroids[m].resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      centroids[m][k].resize(dims[m]);
      for (auto& x : centroids[m][k]) x = normal(rng);
    }
  }

  Dataset ds;
  ds.dims = spec.dims;
  ds.scheme = scheme;
  const int width = std::max<int>(4, static_cast<int>(std::to_string(spec.dialogues - 1).size()));
  for (std::size_t d = 0; d < spec.dialogues; ++d) {
    std::string id = std::to_string(d);
    id = "dlg" + std::string(width - id.size(), '0') + id;
    Dialogue dialogue{id, {}};
    std::size_t label = 0;
    for (std::size_t t = 0; t < spec.utterances; ++t) {
      if (t == 0 || unit(rng) >= spec.persistence) label = pick_label(rng);
      UtteranceRecord u;
      u.dialogue_id = id;
      u.turn = t;
      u.speaker = t % spec.speakers;
      u.label = label;
      std::vector<double>* feats[3] = {&u.feat_t, &u.feat_a, &u.feat_v};
      for (std::size_t m = 0; m < 3; ++m) {
        feats[m]->resize(dims[m]);
        for (std::size_t j = 0; j < dims[m]; ++j)
          (*feats[m])[j] = centroids[m][label][j] * spec.class_separation + normal(rng) * spec.noise_sigma;
      }
      dialogue.utterances.push_back(std::move(u));
    }
    ds.dialogues.push_back(std::move(dialogue));
  }
  return ds;
}

DatasetSplit split_dataset(const Dataset& ds, std::uint64_t seed, double train_ratio,
                           double val_ratio) {
  if (train_ratio < 0 || val_ratio < 0 || train_ratio + val_ratio > 1)
    throw ValueError("split_dataset: ratios must be non-negative and sum to at most 1");
  const std::size_t n = ds.dialogues.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train,
                              static_cast<std::size_t>(std::llround(val_ratio * static_cast<double>(n))));

  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(order.begin() + begin, order.begin() + end);
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.dims = ds.dims;
    out.scheme = ds.scheme;
    for (auto i : idx) out.dialogues.push_back(ds.dialogues[i]);
    return out;
  };
  return DatasetSplit{take(0, n_train), take(n_train, n_train + n_val), take(n_train + n_val, n)};
}

}  // namespace tsgcl
