// Copyright 2026 The fdlp-dereverb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "fdlp/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdlp/config.h"
#include "fdlp/core_dsp.h"
#include "fdlp/dereverb.h"
#include "fdlp/error.h"
#include "fdlp/eval_harness.h"
#include "fdlp/features.h"
#include "fdlp/formats.h"
#include "fdlp/joint_trainer.h"
#include "fdlp/subband_fdlp.h"
#include "fdlp/wav_io.h"

namespace fdlp {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string config;
  std::string in, out, corpus, model, early, late, out_classifier, kind;
  std::uint64_t seed = 1;
  std::size_t order = kDefaultLpOrder;
  std::size_t bands = kDefaultNumBands;
  double fmin = kDefaultFminHz;
  double fmax = kDefaultFmaxHz;
  double segment_secs = kDefaultSegmentSeconds;
  std::vector<double> t60 = {0.3, 0.6};
  double split_ms = kDefaultSplitMs;
  double mu = kDefaultMu;
  double lambda = kDefaultLambda;
  std::size_t num_utterances = 10;
  std::size_t epochs = 10;
  std::size_t pretrain_epochs = 5;
  std::size_t batch = 4;
  double lr = 1e-3;
  std::size_t channels = 16;
  std::size_t hidden = 128;
  unsigned threads = 0;
  std::size_t max_items = 8;
  std::vector<std::size_t> orders = {50, 100, 200};
  std::vector<double> lambdas = {0.0, 0.05, 0.3};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  bool context = false;
};

template <class T>
T parse_scalar(const std::string& s) {
  T v{};
  if (!CLI::detail::lexical_conversion<T, T>({s}, v))
    throw UsageError("invalid value '" + s + "'");
  return v;
}

template <class T>
void parse_into(const std::string& s, T& target) {
  target = parse_scalar<T>(s);
}

template <class T>
void parse_into(const std::string& s, std::vector<T>& target) {
  target.clear();
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (!tok.empty()) target.push_back(parse_scalar<T>(tok));
  }
}

void parse_into(const std::string& s, bool& target) {
  if (s == "1" || s == "true" || s == "yes") target = true;
  else if (s == "0" || s == "false" || s == "no") target = false;
  else throw UsageError("invalid boolean '" + s + "'");
}

// Options of one subcommand that a config file may also set.
class Registry {
 public:
  explicit Registry(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& target, const std::string& help) {
    CLI::Option* o = app_->add_option("--" + name, target, help)->capture_default_str();
    if constexpr (requires { target.push_back(target[0]); }) o->delimiter(',');
    setters_[name] = {o, [&target](const std::string& v) { parse_into(v, target); }};
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& target, const std::string& help) {
    CLI::Option* o = app_->add_flag("--" + name, target, help);
    setters_[name] = {o, [&target](const std::string& v) { parse_into(v, target); }};
    return o;
  }

  CLI::App* app() const { return app_; }

  // Fills every option not given on the command line from the config file.
  void apply(const ConfigMap& cfg) const {
    for (const auto& [key, value] : cfg) {
      const auto it = setters_.find(key);
      if (it == setters_.end() || key == "config")
        throw UsageError("unknown config key '" + key + "' for " + app_->get_name());
      if (it->second.first->count() == 0) it->second.second(value);
    }
  }

 private:
  CLI::App* app_;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const std::string&)>>>
      setters_;
};

void add_layout_options(Registry& r, Settings& s) {
  r.add("order", s.order, "LP order per band per segment");
  r.add("bands", s.bands, "number of mel bands");
  r.add("fmin", s.fmin, "lowest band edge (Hz)");
  r.add("fmax", s.fmax, "highest band edge (Hz)");
  r.add("segment-secs", s.segment_secs, "segment length (s)");
}

void add_train_options(Registry& r, Settings& s) {
  r.add("epochs", s.epochs, "training epochs");
  r.add("batch", s.batch, "segments per optimizer step");
  r.add("lr", s.lr, "Adam learning rate");
  r.add("lambda", s.lambda, "spectral correlation weight");
  r.add("channels", s.channels, "estimator hidden channels");
  r.add("seed", s.seed, "random seed");
}

MelBandLayout layout_for(const Settings& s, int sample_rate) {
  const auto len = static_cast<std::size_t>(std::llround(s.segment_secs * sample_rate));
  return mel_band_layout(s.bands, s.fmin, s.fmax, sample_rate, len);
}

EstimatorConfig model_for(const Settings& s, std::size_t bands) {
  EstimatorConfig m;
  m.num_bands = bands;
  for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) m.layers[l].out_channels = s.channels;
  return m;
}

TrainConfig train_config_for(const Settings& s) {
  TrainConfig t;
  t.adam.lr = s.lr;
  t.epochs = s.epochs;
  t.batch = s.batch;
  t.lambda = s.lambda;
  t.seed = s.seed;
  return t;
}

// Stacked segment envelopes (frames = envelope samples) back into Q x N
// matrices.
std::vector<SubbandEnvelopes> split_segments(const FeatureMatrix& f, double seconds) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * f.frame_rate));
  if (n == 0 || f.num_frames() == 0 || f.num_frames() % n != 0)
    throw InvalidInput("envelope file does not hold whole segments of " +
                       std::to_string(n) + " samples");
  std::vector<SubbandEnvelopes> out;
  for (std::size_t start = 0; start < f.num_frames(); start += n) {
    SubbandEnvelopes e;
    e.data = Matrix(f.num_bands(), n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t q = 0; q < f.num_bands(); ++q) e.data(q, i) = f.data(start + i, q);
    e.envelope_rate = f.frame_rate;
    e.segment_duration = seconds;
    out.push_back(std::move(e));
  }
  return out;
}

FeatureMatrix stack_envelopes(const std::vector<SubbandEnvelopes>& segs) {
  FeatureMatrix f;
  f.frame_rate = segs.front().envelope_rate;
  const std::size_t n = segs.front().num_samples(), q = segs.front().num_bands();
  f.data = Matrix(segs.size() * n, q);
  for (std::size_t s = 0; s < segs.size(); ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < q; ++b) f.data(s * n + i, b) = segs[s].data(b, i);
  return f;
}

FeatureMatrix stack_rows(const std::vector<Matrix>& parts, double rate) {
  std::size_t rows = 0;
  for (const Matrix& m : parts) rows += m.rows();
  FeatureMatrix f;
  f.frame_rate = rate;
  f.data = Matrix(rows, parts.front().cols());
  std::size_t r = 0;
  for (const Matrix& m : parts)
    for (std::size_t i = 0; i < m.rows(); ++i, ++r)
      std::copy(m.row(i).begin(), m.row(i).end(), f.data.row(r).begin());
  return f;
}

std::vector<SubbandEnvelopes> envelopes_from_wav(const Settings& s, const std::string& path) {
  const Signal x = read_wav(path);
  const MelBandLayout layout = layout_for(s, x.sample_rate());
  std::vector<SubbandEnvelopes> out;
  for (const Segment& seg : segment_signal(x, s.segment_secs))
    out.push_back(extract_fdlp_envelopes(seg.signal, layout, s.order));
  return out;
}

void print_report(std::ostream& out, const ExperimentReport& r) { out << r.to_csv(); }

int run_extract(const Settings& s, std::ostream& out) {
  const std::vector<SubbandEnvelopes> segs = envelopes_from_wav(s, s.in);
  if (s.context) throw UsageError("--context applies to the features subcommand");
  write_feat1(s.out, stack_envelopes(segs));
  out << "wrote " << segs.size() << " segment(s), " << segs.front().num_bands()
      << " bands x " << segs.front().num_samples() << " samples to " << s.out << "\n";
  return kExitOk;
}

CorpusConfig corpus_config_for(const Settings& s) {
  CorpusConfig c;
  c.num_utterances = s.num_utterances;
  c.t60_list = s.t60;
  c.seed = s.seed;
  c.split_ms = s.split_ms;
  c.lp_order = s.order;
  c.num_bands = s.bands;
  c.fmin_hz = s.fmin;
  c.fmax_hz = s.fmax;
  c.segment_seconds = s.segment_secs;
  c.threads = s.threads;
  return c;
}

int run_simulate(const Settings& s, std::ostream& out) {
  CorpusConfig c = corpus_config_for(s);
  std::vector<Signal> clean;
  if (!s.in.empty()) {
    const Signal x = read_wav(s.in);
    c.sample_rate = x.sample_rate();
    for (const Segment& seg : segment_signal(x, s.segment_secs)) clean.push_back(seg.signal);
    // Every utterance of a user-supplied file is held out only by index.
  }
  const Corpus corpus = build_corpus(c, s.out, s.in.empty() ? nullptr : &clean);
  double worst = 0.0;
  for (const CorpusItem& it : corpus.items) worst = std::max(worst, it.eq4_residual);
  out << "wrote " << corpus.items.size() << " items to " << s.out
      << " (max median envelope-model residual " << worst << ")\n";
  return kExitOk;
}

int run_oracle_gain(const Settings& s, std::ostream& out) {
  if (!s.corpus.empty()) {
    const Corpus corpus = load_corpus(s.corpus);
    const ExperimentReport r = evaluate_dereverb(oracle_gain_source(), corpus, "oracle", false);
    if (!s.out.empty()) write_report(s.out, r);
    print_report(out, r);
    return kExitOk;
  }
  if (s.early.empty() || s.late.empty() || s.out.empty())
    throw UsageError("oracle-gain needs --corpus, or --early, --late and --out");
  const auto early = split_segments(read_feat1(s.early), s.segment_secs);
  const auto late = split_segments(read_feat1(s.late), s.segment_secs);
  if (early.size() != late.size()) throw InvalidInput("early and late segment counts differ");
  std::vector<SubbandEnvelopes> gains;
  for (std::size_t i = 0; i < early.size(); ++i) {
    SubbandEnvelopes g = early[i];
    g.data = oracle_gain(early[i], late[i]).data;
    gains.push_back(std::move(g));
  }
  write_feat1(s.out, stack_envelopes(gains));
  out << "wrote oracle gain for " << gains.size() << " segment(s) to " << s.out << "\n";
  return kExitOk;
}

int run_train(const Settings& s, std::ostream& out) {
  const Corpus corpus = load_corpus(s.corpus);
  const std::vector<TrainingPair> data = training_pairs(corpus, false);
  if (data.empty()) throw InvalidInput("corpus has no training items");
  const TrainResult res = train_estimator(data, train_config_for(s),
                                          model_for(s, corpus.config.num_bands));
  write_estimator(s.out, res.estimator);
  for (std::size_t e = 0; e < res.history.size(); ++e)
    out << "epoch " << e << " mse " << res.history[e].mse << " spectral_corr "
        << res.history[e].spectral_corr << " total " << res.history[e].total << "\n";
  out << "wrote " << s.out << "\n";
  return kExitOk;
}

int run_dereverb(const Settings& s, std::ostream& out) {
  const GainEstimator est = read_estimator(s.model);
  std::vector<SubbandEnvelopes> segs =
      fs::path(s.in).extension() == ".wav" ? envelopes_from_wav(s, s.in)
                                           : split_segments(read_feat1(s.in), s.segment_secs);
  for (SubbandEnvelopes& e : segs)
    e = apply_log_gain(e, estimator_forward(est, log_envelope(e.data)));
  write_feat1(s.out, stack_envelopes(segs));
  out << "wrote " << segs.size() << " dereverberated segment(s) to " << s.out << "\n";
  return kExitOk;
}

int run_features(const Settings& s, std::ostream& out) {
  const auto segs = split_segments(read_feat1(s.in), s.segment_secs);
  std::vector<Matrix> parts;
  double rate = 0.0;
  for (const SubbandEnvelopes& e : segs) {
    const FeatureMatrix f = integrate_envelopes(e);
    rate = f.frame_rate;
    parts.push_back(s.context ? splice_context(f).data : f.data);
  }
  const FeatureMatrix f = stack_rows(parts, rate);
  write_feat1(s.out, f);
  out << "wrote " << f.num_frames() << " frames x " << f.num_bands() << " to " << s.out << "\n";
  return kExitOk;
}

int run_train_joint(const Settings& s, std::ostream& out) {
  const Corpus corpus = load_corpus(s.corpus);
  const std::vector<JointBatch> data = joint_batches(corpus, false);
  if (data.empty()) throw InvalidInput("corpus has no training items");
  GainEstimator est = s.model.empty()
                          ? train_estimator(training_pairs(corpus, false), train_config_for(s),
                                            model_for(s, corpus.config.num_bands))
                                .estimator
                          : read_estimator(s.model);
  JointConfig jc;
  jc.adam.lr = s.lr;
  jc.batch = s.batch;
  jc.mu = s.mu;
  jc.seed = s.seed;
  jc.epochs = s.pretrain_epochs;
  ClassifierConfig cc;
  cc.num_bands = corpus.config.num_bands;
  cc.hidden = s.hidden;
  cc.num_classes = corpus.config.num_classes;
  ToyClassifier clf = pretrain_classifier(data, est, cc, jc);
  jc.epochs = s.epochs;
  const JointResult res = train_joint(data, std::move(est), std::move(clf), jc);
  write_estimator(s.out, res.estimator);
  const std::string cls = s.out_classifier.empty()
                              ? fs::path(s.out).replace_extension(".fdcl").string()
                              : s.out_classifier;
  write_classifier(cls, res.classifier);
  for (std::size_t e = 0; e < res.history.size(); ++e)
    out << "epoch " << e << " ce " << res.history[e].ce << " mse " << res.history[e].mse
        << " total " << res.history[e].total << "\n";
  out << "wrote " << s.out << " and " << cls << "\n";
  return kExitOk;
}

int run_evaluate(const Settings& s, std::ostream& out) {
  const Corpus corpus = load_corpus(s.corpus);
  ExperimentReport r = evaluate_dereverb(identity_gain_source(), corpus, "identity");
  r.merge(evaluate_dereverb(oracle_gain_source(), corpus, "oracle"));
  if (!s.model.empty())
    r.merge(evaluate_dereverb(estimator_gain_source(read_estimator(s.model)), corpus,
                              "estimator"));
  if (!s.out.empty()) write_report(s.out, r);
  print_report(out, r);
  return kExitOk;
}

int run_sweep(const Settings& s, std::ostream& out) {
  if (s.kind != "order" && s.kind != "lambda")
    throw UsageError("--kind must be 'order' or 'lambda'");
  const Corpus corpus = load_corpus(s.corpus);
  ExperimentReport r;
  if (s.kind == "order") {
    PoleSweepOptions o;
    o.max_items = s.max_items;
    r = sweep_pole_order(s.orders, corpus, o);
  } else {
    LambdaSweepOptions o;
    o.train = train_config_for(s);
    o.model = model_for(s, corpus.config.num_bands);
    o.seeds = s.seeds;
    o.threads = s.threads == 0 ? 1 : s.threads;
    r = sweep_lambda(s.lambdas, corpus, o);
  }
  if (!s.out.empty()) write_report(s.out, r);
  print_report(out, r);
  return kExitOk;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"FDLP sub-band envelope dereverberation toolkit", "fdlp"};
  app.set_version_flag("--version", toolkit_version());
  app.require_subcommand(1);

  std::vector<std::pair<Registry, std::function<int(const Settings&, std::ostream&)>>> subs;
  auto sub = [&](const char* name, const char* help, auto run) -> Registry& {
    CLI::App* a = app.add_subcommand(name, help);
    a->add_option("--config", s.config, "key=value file; flags override it");
    subs.emplace_back(Registry(a), run);
    return subs.back().first;
  };
  subs.reserve(9);

  {
    Registry& r = sub("extract", "WAV -> FDLP envelopes (FEAT1, 400 Hz)", run_extract);
    r.add("in", s.in, "input WAV")->required();
    r.add("out", s.out, "output FEAT1")->required();
    add_layout_options(r, s);
  }
  {
    Registry& r = sub("simulate", "build a paired reverberant corpus", run_simulate);
    r.add("out", s.out, "corpus directory")->required();
    r.add("in", s.in, "clean WAV instead of synthetic utterances");
    r.add("t60", s.t60, "T60 values (s), comma separated");
    r.add("seed", s.seed, "corpus seed");
    r.add("num-utterances", s.num_utterances, "synthetic utterances");
    r.add("split-ms", s.split_ms, "early/late boundary (ms)");
    r.add("threads", s.threads, "worker threads (0 = all cores)");
    add_layout_options(r, s);
  }
  {
    Registry& r = sub("oracle-gain", "early/(early+late) envelope gain", run_oracle_gain);
    r.add("early", s.early, "early envelope FEAT1");
    r.add("late", s.late, "late envelope FEAT1");
    r.add("corpus", s.corpus, "evaluate the oracle gain on a corpus instead");
    r.add("out", s.out, "output FEAT1 (or CSV with --corpus)");
    r.add("segment-secs", s.segment_secs, "segment length (s)");
  }
  {
    Registry& r = sub("train", "train the gain estimator", run_train);
    r.add("corpus", s.corpus, "corpus directory")->required();
    r.add("out", s.out, "output FDGE")->required();
    add_train_options(r, s);
  }
  {
    Registry& r = sub("dereverb", "apply a trained estimator", run_dereverb);
    r.add("in", s.in, "reverberant WAV or envelope FEAT1")->required();
    r.add("model", s.model, "FDGE estimator")->required();
    r.add("out", s.out, "output envelope FEAT1")->required();
    add_layout_options(r, s);
  }
  {
    Registry& r = sub("features", "envelopes -> log-integrated features", run_features);
    r.add("in", s.in, "envelope FEAT1")->required();
    r.add("out", s.out, "output FEAT1")->required();
    r.add("segment-secs", s.segment_secs, "segment length (s)");
    r.flag("context", s.context, "splice 21-frame context windows");
  }
  {
    Registry& r = sub("train-joint", "joint CE + mu * MSE training", run_train_joint);
    r.add("corpus", s.corpus, "corpus directory")->required();
    r.add("model", s.model, "pre-trained FDGE (trained first when absent)");
    r.add("out", s.out, "output FDGE")->required();
    r.add("out-classifier", s.out_classifier, "output FDCL");
    r.add("mu", s.mu, "MSE weight");
    r.add("pretrain-epochs", s.pretrain_epochs, "classifier pre-training epochs");
    r.add("hidden", s.hidden, "classifier hidden units");
    add_train_options(r, s);
  }
  {
    Registry& r = sub("evaluate", "envelope-domain metrics on held-out items", run_evaluate);
    r.add("corpus", s.corpus, "corpus directory")->required();
    r.add("model", s.model, "FDGE estimator");
    r.add("out", s.out, "output CSV");
  }
  {
    Registry& r = sub("sweep", "pole-order or lambda sweep", run_sweep);
    r.add("kind", s.kind, "order | lambda")->required();
    r.add("corpus", s.corpus, "corpus directory")->required();
    r.add("out", s.out, "output CSV");
    r.add("orders", s.orders, "LP orders");
    r.add("lambdas", s.lambdas, "lambda values");
    r.add("seeds", s.seeds, "training seeds");
    r.add("max-items", s.max_items, "corpus items used by the order sweep");
    r.add("threads", s.threads, "parallel training runs");
    add_train_options(r, s);
  }

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << toolkit_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kExitUsage;
  }

  for (auto& [reg, run] : subs) {
    if (!reg.app()->parsed()) continue;
    try {
      if (!s.config.empty()) {
        ConfigMap cfg;
        try {
          cfg = read_config(s.config);
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
        reg.apply(cfg);
      }
      return run(s, out);
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n" << reg.app()->help();
      return kExitUsage;
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    }
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace fdlp
