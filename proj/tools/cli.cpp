#include "cli.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "run_config.hpp"
#include "tsgcl/error.hpp"
#include "tsgcl/graph.hpp"
#include "tsgcl/metrics.hpp"
#include "tsgcl/model.hpp"
#include "tsgcl/train.hpp"

namespace tsgcl::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  const fs::path dir = cfg.get("out");
  if (dir.empty()) throw ConfigError("out must not be empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void check_dims(const Dataset& ds, const FeatureDims& dims, const std::string& what) {
  if (!ds.dialogues.empty() && !(ds.dims == dims))
    throw DataError(what + ": feature dimensions differ from the training split");
}

// Train/val/test from files when train_data is given, otherwise synthesized
// in memory from the synthesis keys and data_seed.
DatasetSplit load_splits(const RunConfig& cfg, const LabelScheme& scheme) {
  if (cfg.get("train_data").empty()) {
    const auto spec = synthesis_spec(cfg, "data_seed");
    return split_dataset(synthesize_dataset(spec, scheme), spec.seed);
  }
  DatasetSplit s;
  s.train = load_dataset(cfg.get("train_data"), scheme);
  auto optional_split = [&](const std::string& key) {
    if (cfg.get(key).empty()) return Dataset{s.train.dims, scheme, {}};
    Dataset d = load_dataset(cfg.get(key), scheme);
    check_dims(d, s.train.dims, key);
    return d;
  };
  s.val = optional_split("val_data");
  s.test = optional_split("test_data");
  return s;
}

std::size_t speaker_bound(const DatasetSplit& s) {
  return std::max({s.train.speaker_bound(), s.val.speaker_bound(), s.test.speaker_bound()});
}

void write_metrics(const Metrics& m, const LabelScheme& scheme, const fs::path& dir, std::ostream& out) {
  auto csv = open_output(dir / "metrics.csv");
  csv << "class,support,acc,f1\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8s %10s %10s\n", "class", "support", "acc", "f1");
  out << line;
  auto row = [&](const std::string& name, std::size_t support, double acc, double f1) {
    csv << name << ',' << support << ',' << fixed6(acc) << ',' << fixed6(f1) << '\n';
    std::snprintf(line, sizeof line, "%-14s %8zu %10s %10s\n", name.c_str(), support, fixed6(acc).c_str(),
                  fixed6(f1).c_str());
    out << line;
  };
  for (std::size_t c = 0; c < m.per_class.size(); ++c)
    row(scheme.name(c), m.per_class[c].support, m.per_class[c].accuracy, m.per_class[c].f1);
  row("weighted", m.total_support(), m.weighted_accuracy, m.weighted_f1);
  if (!csv) throw IoError("write failed for metrics.csv");
}

void write_history(const std::vector<EpochRecord>& history, const fs::path& dir) {
  auto csv = open_output(dir / "history.csv");
  csv << "epoch,train_loss,mmd_loss,cls_loss,val_wf1\n";
  for (const auto& r : history)
    csv << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.mmd_loss) << ','
        << format_double(r.cls_loss) << ',' << format_double(r.val_wf1) << '\n';
  if (!csv) throw IoError("write failed for history.csv");
}

// ---- subcommands -----------------------------------------------------------------

int cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  const auto scheme = label_scheme(cfg);
  const auto spec = synthesis_spec(cfg, "seed");
  const fs::path dir = prepare_out_dir(cfg);
  const auto split = split_dataset(synthesize_dataset(spec, scheme), spec.seed);
  write_dataset(split.train, dir / "train.tsgcl");
  write_dataset(split.val, dir / "val.tsgcl");
  write_dataset(split.test, dir / "test.tsgcl");
  cfg.write_resolved(dir / "config.resolved");
  out << "train.tsgcl  " << split.train.dialogues.size() << " dialogues\n"
      << "val.tsgcl    " << split.val.dialogues.size() << " dialogues\n"
      << "test.tsgcl   " << split.test.dialogues.size() << " dialogues\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto scheme = label_scheme(cfg);
  const auto tc = train_config(cfg);
  const auto splits = load_splits(cfg, scheme);
  const auto mc = model_config(cfg, scheme, splits.train.dims, speaker_bound(splits));
  const fs::path dir = prepare_out_dir(cfg);
  cfg.write_resolved(dir / "config.resolved");

  const auto result = train(splits.train, &splits.val, mc, tc);
  const bool has_test = !splits.test.dialogues.empty();
  const bool has_val = !splits.val.dialogues.empty();
  const Dataset& eval_set = has_test ? splits.test : has_val ? splits.val : splits.train;

  write_history(result.history, dir);
  save_model(result.model, dir / "model.txt");
  out << "variant " << to_string(mc.variant) << ", epochs run " << result.history.size() << ", best epoch "
      << result.best_epoch << ", evaluated on " << (has_test ? "test" : has_val ? "val" : "train") << "\n";
  write_metrics(evaluate(result.model, eval_set), scheme, dir, out);
  return kExitOk;
}

// Predictions fixture: header "dialogue_id,turn,label", one row per gold
// utterance, label given by name.
std::vector<std::size_t> read_predictions(const fs::path& path, const Dataset& gold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions '" + path.string() + "'");
  std::map<std::pair<std::string, std::size_t>, std::size_t> by_key;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "dialogue_id,turn,label") fail("expected header 'dialogue_id,turn,label'");
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, turn_s, label;
    if (!std::getline(ss, id, ',') || !std::getline(ss, turn_s, ',') || !std::getline(ss, label))
      fail("expected three fields");
    std::size_t turn = 0;
    auto [p, ec] = std::from_chars(turn_s.data(), turn_s.data() + turn_s.size(), turn);
    if (ec != std::errc{} || p != turn_s.data() + turn_s.size()) fail("bad turn '" + turn_s + "'");
    const auto idx = gold.scheme.index_of(label);
    if (!idx) fail("unknown label '" + label + "'");
    if (!by_key.emplace(std::make_pair(id, turn), *idx).second) fail("duplicate prediction");
  }
  if (lineno == 0) throw DataError(path.string() + ": empty file");
  std::vector<std::size_t> pred;
  for (const auto& d : gold.dialogues)
    for (const auto& u : d.utterances) {
      auto it = by_key.find({d.id, u.turn});
      if (it == by_key.end())
        throw DataError(path.string() + ": no prediction for " + d.id + " turn " + std::to_string(u.turn));
      pred.push_back(it->second);
    }
  if (pred.size() != by_key.size()) throw DataError(path.string() + ": predictions for unknown utterances");
  return pred;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const bool use_model = !cfg.get("model").empty();
  const bool use_predictions = !cfg.get("predictions").empty();
  if (use_model == use_predictions) throw ConfigError("eval needs exactly one of model or predictions");

  std::optional<Model> model;
  LabelScheme scheme = label_scheme(cfg);
  if (use_model) {
    model = load_model(cfg.get("model"));
    scheme = model->config().scheme;
  }
  Dataset gold;
  if (!cfg.get("test_data").empty()) {
    gold = load_dataset(cfg.get("test_data"), scheme);
  } else {
    const auto spec = synthesis_spec(cfg, "data_seed");
    gold = split_dataset(synthesize_dataset(spec, scheme), spec.seed).test;
  }
  const fs::path dir = prepare_out_dir(cfg);
  cfg.write_resolved(dir / "config.resolved");

  Metrics m;
  if (use_model) {
    m = evaluate(*model, gold);
  } else {
    std::vector<std::size_t> g;
    for (const auto& d : gold.dialogues)
      for (const auto& u : d.utterances) g.push_back(u.label);
    m = compute_metrics(g, read_predictions(cfg.get("predictions"), gold), scheme.size());
  }
  write_metrics(m, scheme, dir, out);
  return kExitOk;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  const auto scheme = label_scheme(cfg);
  const auto tc = train_config(cfg);
  const auto splits = load_splits(cfg, scheme);
  const auto mc = model_config(cfg, scheme, splits.train.dims, speaker_bound(splits));
  const auto seeds = cfg.seed_list("seeds");
  const fs::path dir = prepare_out_dir(cfg);
  cfg.write_resolved(dir / "config.resolved");

  const auto report = ablate(splits.train, splits.val, splits.test, mc, tc, seeds, cfg.size("jobs"));

  auto runs = open_output(dir / "ablation_runs.csv");
  runs << "variant,seed,epochs,wacc,wf1\n";
  for (const auto& r : report.runs)
    runs << to_string(r.variant) << ',' << r.seed << ',' << r.epochs_run << ','
         << fixed6(r.test.weighted_accuracy) << ',' << fixed6(r.test.weighted_f1) << '\n';

  auto summary = open_output(dir / "ablation.csv");
  summary << "variant,runs,mean_wacc,std_wacc,mean_wf1,std_wf1\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %5s %10s %10s %10s %10s\n", "variant", "runs", "mean_wacc",
                "std_wacc", "mean_wf1", "std_wf1");
  out << line;
  for (const auto& s : report.summary) {
    summary << to_string(s.variant) << ',' << s.runs << ',' << fixed6(s.mean_wacc) << ','
            << fixed6(s.std_wacc) << ',' << fixed6(s.mean_wf1) << ',' << fixed6(s.std_wf1) << '\n';
    std::snprintf(line, sizeof line, "%-8s %5zu %10s %10s %10s %10s\n", std::string(to_string(s.variant)).c_str(),
                  s.runs, fixed6(s.mean_wacc).c_str(), fixed6(s.std_wacc).c_str(), fixed6(s.mean_wf1).c_str(),
                  fixed6(s.std_wf1).c_str());
    out << line;
  }
  if (!runs || !summary) throw IoError("write failed for ablation CSVs");
  return kExitOk;
}

// Node features without a model: each modality's raw vector, zero-padded to
// the widest modality, laid out turn-major.
Tensor raw_node_features(const Dialogue& d, const FeatureDims& dims) {
  const std::size_t width = std::max({dims.text, dims.audio, dims.vision});
  Tensor x({3 * d.size(), width});
  for (std::size_t i = 0; i < d.size(); ++i)
    for (Modality m : kModalities) {
      const auto& f = d.utterances[i].features(m);
      for (std::size_t c = 0; c < f.size(); ++c) x.at(3 * i + static_cast<std::size_t>(m), c) = f[c];
    }
  return x;
}

int cmd_graph_stats(const RunConfig& cfg, std::ostream& out) {
  const std::string data = !cfg.get("data").empty() ? cfg.get("data") : cfg.get("train_data");
  if (data.empty()) throw ConfigError("graph-stats needs data (or train_data)");
  std::optional<Model> model;
  LabelScheme scheme = label_scheme(cfg);
  if (!cfg.get("model").empty()) {
    model = load_model(cfg.get("model"));
    scheme = model->config().scheme;
  }
  const double omega = model ? model->config().omega : cfg.real("omega");
  if (!(omega > 0 && omega <= 1)) throw ConfigError("omega must lie in (0, 1]");
  const Dataset ds = load_dataset(data, scheme);

  for (const auto& d : ds.dialogues) {
    Tensor x;
    if (model) {
      model->check_dialogue(d);
      ad::Tape tape;
      ParamBinding bind(tape, model->params());
      x = make_node_features(bind, d, model->encoders()).value();
    } else {
      x = raw_node_features(d, ds.dims);
    }
    const auto g = build_graph(x, omega);
    std::size_t hist[10] = {};
    for (const auto& e : g.edges) {
      const double w = g.adjacency.at(e.from, e.to);
      ++hist[std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, w) * 10.0))];
    }
    const Tensor p = normalize_adjacency(g.adjacency);
    Eigen::MatrixXd pm(p.rows(), p.cols());
    for (std::size_t r = 0; r < p.rows(); ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) pm(r, c) = p.at(r, c);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pm, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();

    out << "dialogue=" << d.id << " utterances=" << d.size() << " nodes=" << g.node_count()
        << " edges=" << g.edge_count() << " eig_min=" << fixed6(ev.minCoeff())
        << " eig_max=" << fixed6(ev.maxCoeff()) << " hist=";
    for (std::size_t b = 0; b < 10; ++b) out << (b ? "," : "") << hist[b];
    out << '\n';
  }
  return kExitOk;
}

std::string dashed(std::string name) {
  std::replace(name.begin(), name.end(), '_', '-');
  return name;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage graph contrastive learning for multimodal emotion recognition", "tsgcl"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    int (*run)(const RunConfig&, std::ostream&);
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto add = [&](const std::string& name, const std::string& help, int (*run)(const RunConfig&, std::ostream&)) {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, help);
    s->run = run;
    s->app->add_option("--config", s->config_file, "flat 'key = value' file; flags override it");
    for (const auto& k : RunConfig::schema()) {
      std::string names = "--" + k.name;
      if (k.name.find('_') != std::string::npos) names += ",--" + dashed(k.name);
      s->options[k.name] = s->app->add_option(names, s->values[k.name], k.help)->default_str(k.default_value);
    }
    subs.push_back(std::move(s));
  };
  add("gen-data", "write synthetic train/val/test tsgcl-v1 files", cmd_gen_data);
  add("train", "train one model; writes metrics.csv, history.csv, model.txt", cmd_train);
  add("eval", "evaluate a saved model or a predictions file", cmd_eval);
  add("ablate", "train full, no-ts and no-gcl over several seeds", cmd_ablate);
  add("graph-stats", "per-dialogue graph sizes, weight histogram and eigenvalue range", cmd_graph_stats);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (const auto& s : subs) {
      if (!s->app->parsed()) continue;
      RunConfig cfg;
      if (!s->config_file.empty()) cfg.load_file(s->config_file);
      for (const auto& [key, opt] : s->options)
        if (opt->count() > 0) cfg.set(key, s->values[key]);
      cfg.apply_seed_fallback(std::getenv("TSGCL_SEED"));
      return s->run(cfg, out);
    }
    err << "error: no subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValueError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tsgcl::cli
