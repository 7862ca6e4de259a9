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


#include "fdlp/eval_harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bytes.h"
#include "fdlp/config.h"
#include "fdlp/error.h"
#include "fdlp/features.h"
#include "fdlp/formats.h"
#include "fdlp/synth.h"
#include "fdlp/wav_io.h"

namespace fdlp {

const char* toolkit_version() { return FDLP_VERSION; }

namespace {

namespace fs = std::filesystem;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string t60_tag(double t60) { return fixed(t60, 2); }

std::string item_id(std::size_t utterance, double t60) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "utt%04zu_t60_%s", utterance, t60_tag(t60).c_str());
  return buf;
}

std::string utterance_id(std::size_t utterance) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt%04zu", utterance);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::size_t rir_length(double t60, int sr, double split_ms) {
  const auto tail = static_cast<std::size_t>(std::ceil(1.2 * t60 * sr));
  const auto split = static_cast<std::size_t>(std::ceil(split_ms * sr / 1000.0)) + 1;
  return std::max({tail, split, static_cast<std::size_t>(std::ceil(0.01 * sr))});
}

SubbandEnvelopes envelopes_of(const Signal& x, const MelBandLayout& layout,
                              std::size_t order) {
  return extract_fdlp_envelopes(x, layout, order);
}

void validate(const CorpusConfig& c) {
  if (c.num_utterances == 0 || c.t60_list.empty())
    throw InvalidInput("corpus: need utterances and at least one T60");
  for (double t : c.t60_list)
    if (!(t > 0.0)) throw InvalidInput("corpus: T60 values must be > 0");
  if (c.held_out_every == 0) throw InvalidInput("corpus: held_out_every must be >= 1");
  if (!(c.segment_seconds > 0.0)) throw InvalidInput("corpus: segment length must be > 0");
}

std::string config_text(const CorpusConfig& c) {
  std::ostringstream s;
  s << "num_utterances=" << c.num_utterances << "\n";
  s << "t60_list=";
  for (std::size_t i = 0; i < c.t60_list.size(); ++i)
    s << (i ? "," : "") << format_double(c.t60_list[i]);
  s << "\nseed=" << c.seed << "\n";
  s << "split_ms=" << format_double(c.split_ms) << "\n";
  s << "lp_order=" << c.lp_order << "\n";
  s << "num_bands=" << c.num_bands << "\n";
  s << "fmin_hz=" << format_double(c.fmin_hz) << "\n";
  s << "fmax_hz=" << format_double(c.fmax_hz) << "\n";
  s << "sample_rate=" << c.sample_rate << "\n";
  s << "segment_seconds=" << format_double(c.segment_seconds) << "\n";
  s << "num_classes=" << c.num_classes << "\n";
  s << "held_out_every=" << c.held_out_every << "\n";
  return s.str();
}

CorpusConfig config_from(const ConfigMap& m) {
  auto get = [&m](const std::string& k) -> const std::string& {
    const auto it = m.find(k);
    if (it == m.end()) throw FormatError("corpus.cfg: missing key " + k);
    return it->second;
  };
  CorpusConfig c;
  try {
    c.num_utterances = std::stoull(get("num_utterances"));
    c.t60_list.clear();
    std::stringstream ts(get("t60_list"));
    for (std::string tok; std::getline(ts, tok, ',');) c.t60_list.push_back(std::stod(tok));
    c.seed = std::stoull(get("seed"));
    c.split_ms = std::stod(get("split_ms"));
    c.lp_order = std::stoull(get("lp_order"));
    c.num_bands = std::stoull(get("num_bands"));
    c.fmin_hz = std::stod(get("fmin_hz"));
    c.fmax_hz = std::stod(get("fmax_hz"));
    c.sample_rate = std::stoi(get("sample_rate"));
    c.segment_seconds = std::stod(get("segment_seconds"));
    c.num_classes = std::stoull(get("num_classes"));
    c.held_out_every = std::stoull(get("held_out_every"));
  } catch (const std::logic_error&) {
    throw FormatError("corpus.cfg: malformed value");
  }
  return c;
}

struct ItemPaths {
  std::string rir, reverb, early, late, reverb_env, gain;
};

ItemPaths paths_for(const std::string& id) {
  return {"rir/" + id + ".wav",          "reverb/" + id + ".wav",
          "env/" + id + "_early.feat1",  "env/" + id + "_late.feat1",
          "env/" + id + "_reverb.feat1", "gain/" + id + ".feat1"};
}

std::string clean_wav_path(std::size_t u) { return "clean/" + utterance_id(u) + ".wav"; }
std::string clean_env_path(std::size_t u) {
  return "env/" + utterance_id(u) + "_clean.feat1";
}
std::string labels_path(std::size_t u) { return "labels/" + utterance_id(u) + ".feat1"; }

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory (" + ec.message() + ")", p.string());
}

}  // namespace

MelBandLayout corpus_layout(const CorpusConfig& c) {
  const auto len =
      static_cast<std::size_t>(std::llround(c.segment_seconds * c.sample_rate));
  return mel_band_layout(c.num_bands, c.fmin_hz, c.fmax_hz, c.sample_rate, len);
}

Corpus generate_corpus(const CorpusConfig& requested,
                       const std::vector<Signal>* clean_in) {
  CorpusConfig config = requested;
  if (clean_in != nullptr) config.num_utterances = clean_in->size();
  validate(config);
  const MelBandLayout layout = corpus_layout(config);
  const std::size_t nt = config.t60_list.size();
  Corpus corpus{config, std::vector<CorpusItem>(config.num_utterances * nt)};
  SynthOptions so;
  so.duration_seconds = config.segment_seconds;
  so.sample_rate = config.sample_rate;

  parallel_for(config.num_utterances, config.threads, [&](std::size_t u) {
    Signal clean = clean_in ? (*clean_in)[u] : synth_utterance(mix_seed(config.seed, u), so);
    if (clean.sample_rate() != config.sample_rate)
      throw InvalidInput("corpus: clean signal " + std::to_string(u) + " has sample rate " +
                         std::to_string(clean.sample_rate()));
    if (clean.size() != layout.dct_len) {
      std::vector<double> x(layout.dct_len, 0.0);
      std::copy_n(clean.samples().begin(), std::min(clean.size(), x.size()), x.begin());
      clean = Signal(std::move(x), config.sample_rate);
    }
    const SubbandEnvelopes clean_env = envelopes_of(clean, layout, config.lp_order);
    const std::vector<int> labels = centroid_labels(clean_env.data, config.num_classes);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const double t60 = config.t60_list[ti];
      CorpusItem& it = corpus.items[u * nt + ti];
      it.id = item_id(u, t60);
      it.utterance = u;
      it.t60 = t60;
      it.rir_seed = mix_seed(mix_seed(config.seed, u), ti + 1);
      it.held_out = u % config.held_out_every == config.held_out_every - 1;
      const Rir rir = synth_rir(t60, rir_length(t60, config.sample_rate, config.split_ms),
                                config.sample_rate, it.rir_seed);
      const EarlyLate el = split_early_late(rir, config.split_ms);
      it.clean = clean;
      it.rir = rir.samples;
      it.reverb = apply_reverb(clean, rir);
      it.clean_env = clean_env;
      it.early_env = envelopes_of(apply_reverb(clean, el.early), layout, config.lp_order);
      it.late_env = envelopes_of(apply_reverb(clean, el.late), layout, config.lp_order);
      it.reverb_env = envelopes_of(it.reverb, layout, config.lp_order);
      it.gain = oracle_gain(it.early_env, it.late_env);
      it.labels = labels;
      it.eq4_residual = median(envelope_convolution_residual(
          clean_env, rir_kernel_envelopes(it.rir, layout), it.reverb_env));
    }
  });
  return corpus;
}

std::string manifest_text(const Corpus& corpus) {
  std::string out;
  for (const CorpusItem& it : corpus.items) {
    const ItemPaths p = paths_for(it.id);
    nlohmann::json j;
    j["id"] = it.id;
    j["utterance"] = it.utterance;
    j["t60"] = it.t60;
    j["seed"] = it.rir_seed;
    j["held_out"] = it.held_out;
    j["eq4_residual"] = it.eq4_residual;
    j["paths"] = {{"clean", clean_wav_path(it.utterance)},
                  {"clean_env", clean_env_path(it.utterance)},
                  {"labels", labels_path(it.utterance)},
                  {"rir", p.rir},
                  {"reverb", p.reverb},
                  {"early_env", p.early},
                  {"late_env", p.late},
                  {"reverb_env", p.reverb_env},
                  {"gain", p.gain}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  for (const char* sub : {"clean", "rir", "reverb", "env", "gain", "labels"})
    ensure_dir(dir / sub);
  const std::string cfg = config_text(corpus.config);
  detail::write_file(dir / "corpus.cfg", {cfg.begin(), cfg.end()});

  std::map<std::size_t, const CorpusItem*> first;
  for (const CorpusItem& it : corpus.items) first.emplace(it.utterance, &it);
  for (const auto& [u, it] : first) {
    write_wav(dir / clean_wav_path(u), it->clean, WavEncoding::kFloat32);
    write_envelopes(dir / clean_env_path(u), it->clean_env);
    Matrix lab(it->labels.size(), 1);
    for (std::size_t m = 0; m < it->labels.size(); ++m) lab(m, 0) = it->labels[m];
    write_feat1(dir / labels_path(u),
                FeatureMatrix{lab, kDefaultEnvelopeRate / kIntegrationHop});
  }
  for (const CorpusItem& it : corpus.items) {
    const ItemPaths p = paths_for(it.id);
    write_wav(dir / p.rir, it.rir, WavEncoding::kFloat32);
    write_wav(dir / p.reverb, it.reverb, WavEncoding::kFloat32);
    write_envelopes(dir / p.early, it.early_env);
    write_envelopes(dir / p.late, it.late_env);
    write_envelopes(dir / p.reverb_env, it.reverb_env);
    SubbandEnvelopes g;
    g.data = it.gain.data;
    g.envelope_rate = it.reverb_env.envelope_rate;
    write_envelopes(dir / p.gain, g);
  }
  const std::string manifest = manifest_text(corpus);
  detail::write_file(dir / "manifest.jsonl", {manifest.begin(), manifest.end()});
}

Corpus build_corpus(const CorpusConfig& config, const fs::path& dir,
                    const std::vector<Signal>* clean) {
  Corpus c = generate_corpus(config, clean);
  write_corpus(c, dir);
  return c;
}

Corpus load_corpus(const fs::path& dir) {
  Corpus corpus{config_from(read_config(dir / "corpus.cfg")), {}};
  std::ifstream in(dir / "manifest.jsonl");
  if (!in) throw IoError("cannot open manifest", (dir / "manifest.jsonl").string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": invalid JSON");
    }
    CorpusItem it;
    try {
      it.id = j.at("id").get<std::string>();
      it.utterance = j.at("utterance").get<std::size_t>();
      it.t60 = j.at("t60").get<double>();
      it.rir_seed = j.at("seed").get<std::uint64_t>();
      it.held_out = j.at("held_out").get<bool>();
      it.eq4_residual = j.at("eq4_residual").get<double>();
      const auto& p = j.at("paths");
      auto path = [&](const char* k) { return dir / p.at(k).get<std::string>(); };
      it.clean = read_wav(path("clean"));
      it.rir = read_wav(path("rir"));
      it.reverb = read_wav(path("reverb"));
      it.clean_env = read_envelopes(path("clean_env"));
      it.early_env = read_envelopes(path("early_env"));
      it.late_env = read_envelopes(path("late_env"));
      it.reverb_env = read_envelopes(path("reverb_env"));
      it.gain.data = read_envelopes(path("gain")).data;
      const FeatureMatrix lab = read_feat1(path("labels"));
      for (std::size_t m = 0; m < lab.num_frames(); ++m)
        it.labels.push_back(static_cast<int>(lab.data(m, 0)));
    } catch (const nlohmann::json::exception&) {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": missing or mistyped field");
    }
    corpus.items.push_back(std::move(it));
  }
  return corpus;
}

std::vector<const CorpusItem*> select_items(const Corpus& corpus, bool held_out) {
  std::vector<const CorpusItem*> out;
  for (const CorpusItem& it : corpus.items)
    if (it.held_out == held_out) out.push_back(&it);
  return out;
}

std::vector<TrainingPair> training_pairs(const Corpus& corpus, bool held_out,
                                         double log_gain_limit) {
  std::vector<TrainingPair> out;
  for (const CorpusItem* it : select_items(corpus, held_out))
    out.push_back({log_envelope(it->reverb_env.data),
                   training_target(it->gain, log_gain_limit)});
  return out;
}

std::vector<JointBatch> joint_batches(const Corpus& corpus, bool held_out,
                                      double log_gain_limit) {
  std::vector<JointBatch> out;
  for (const CorpusItem* it : select_items(corpus, held_out))
    out.push_back({log_envelope(it->reverb_env.data),
                   training_target(it->gain, log_gain_limit), it->labels});
  return out;
}

void ExperimentReport::add(const std::string& config_id, const std::string& metric,
                           double value) {
  if (!std::isfinite(value))
    throw NumericalError("report: non-finite " + metric + " for " + config_id, 0);
  if (has(config_id, metric))
    throw InvalidInput("report: duplicate " + metric + " for " + config_id);
  rows.push_back({config_id, metric, value});
}

void ExperimentReport::merge(const ExperimentReport& other) {
  for (const ReportRow& r : other.rows) add(r.config_id, r.metric, r.value);
}

bool ExperimentReport::has(const std::string& config_id,
                           const std::string& metric) const {
  return std::any_of(rows.begin(), rows.end(), [&](const ReportRow& r) {
    return r.config_id == config_id && r.metric == metric;
  });
}

double ExperimentReport::value(const std::string& config_id,
                               const std::string& metric) const {
  for (const ReportRow& r : rows)
    if (r.config_id == config_id && r.metric == metric) return r.value;
  throw InvalidInput("report: no " + metric + " for " + config_id);
}

std::string ExperimentReport::to_csv() const {
  std::vector<ReportRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ReportRow& a, const ReportRow& b) {
                     return a.config_id < b.config_id;
                   });
  std::string out = "config_id,metric,value\n";
  for (const ReportRow& r : sorted)
    out += r.config_id + "," + r.metric + "," + format_double(r.value) + "\n";
  return out;
}

std::string ExperimentReport::metadata_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["toolkit_version"] = toolkit_version;
  j["timestamp"] = timestamp;
  return j.dump() + "\n";
}

ExperimentReport make_report(std::uint64_t seed) {
  ExperimentReport r;
  r.seed = seed;
  r.toolkit_version = toolkit_version();
  // Reproducible builds convention; without it the epoch keeps output stable.
  std::time_t t = 0;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(sde, &end, 10);
    if (end != sde && *end == '\0' && v >= 0) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  r.timestamp = buf;
  return r;
}

void write_report(const fs::path& path, const ExperimentReport& report) {
  const std::string csv = report.to_csv();
  detail::write_file(path, {csv.begin(), csv.end()});
  const std::string meta = report.metadata_json();
  detail::write_file(fs::path(path.string() + ".meta.json"), {meta.begin(), meta.end()});
}

GainSource identity_gain_source() {
  return [](const CorpusItem& it) {
    return Matrix(it.reverb_env.num_bands(), it.reverb_env.num_samples(), 0.0);
  };
}

GainSource oracle_gain_source() {
  return [](const CorpusItem& it) {
    Matrix lg(it.gain.data.rows(), it.gain.data.cols());
    for (std::size_t i = 0; i < lg.size(); ++i)
      lg.values()[i] = std::log(it.gain.data.values()[i]);
    return lg;
  };
}

GainSource estimator_gain_source(const GainEstimator& estimator) {
  return [estimator](const CorpusItem& it) {
    return estimator_forward(estimator, log_envelope(it.reverb_env.data));
  };
}

double log_envelope_mse(const Matrix& log_gain, const SubbandEnvelopes& reverb,
                        const SubbandEnvelopes& early) {
  if (!log_gain.same_shape(reverb.data) || !reverb.data.same_shape(early.data))
    throw InvalidInput("log_envelope_mse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < log_gain.size(); ++i) {
    const double lr = std::log(std::max(reverb.data.values()[i], kEnvelopeFloor));
    const double le = std::log(std::max(early.data.values()[i], kEnvelopeFloor));
    const double d = (log_gain.values()[i] + lr) - le;
    acc += d * d;
  }
  return acc / static_cast<double>(log_gain.size());
}

namespace {

Matrix dereverberated(const Matrix& log_gain, const SubbandEnvelopes& reverb) {
  Matrix env(log_gain.rows(), log_gain.cols());
  for (std::size_t i = 0; i < env.size(); ++i)
    env.values()[i] = std::max(
        std::exp(log_gain.values()[i] +
                 std::log(std::max(reverb.data.values()[i], kEnvelopeFloor))),
        kEnvelopeFloor);
  return env;
}

double feature_distance(const Matrix& a_env, const Matrix& b_env, double rate) {
  const FeatureMatrix a = integrate_envelopes(a_env, rate);
  const FeatureMatrix b = integrate_envelopes(b_env, rate);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data.values()[i] - b.data.values()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

}  // namespace

ExperimentReport evaluate_dereverb(const GainSource& gain, const Corpus& corpus,
                                   const std::string& config_id,
                                   bool held_out_only) {
  std::vector<const CorpusItem*> items;
  for (const CorpusItem& it : corpus.items)
    if (!held_out_only || it.held_out) items.push_back(&it);
  if (items.empty()) throw InvalidInput("evaluate_dereverb: no items to evaluate");

  struct Acc {
    double est = 0.0, id = 0.0, feat = 0.0, feat_id = 0.0;
    std::size_t n = 0;
  };
  Acc all;
  std::map<std::string, Acc> per_t60;
  for (const CorpusItem* it : items) {
    const Matrix lg = gain(*it);
    for (double v : lg.values())
      if (!(v <= 0.0)) throw InvalidInput("evaluate_dereverb: log gain above 0");
    const Matrix zero(lg.rows(), lg.cols(), 0.0);
    const double rate = it->reverb_env.envelope_rate;
    const double est = log_envelope_mse(lg, it->reverb_env, it->early_env);
    const double id = log_envelope_mse(zero, it->reverb_env, it->early_env);
    const double feat = feature_distance(dereverberated(lg, it->reverb_env),
                                         it->early_env.data, rate);
    const double feat_id = feature_distance(dereverberated(zero, it->reverb_env),
                                            it->early_env.data, rate);
    for (Acc* a : {&all, &per_t60[t60_tag(it->t60)]}) {
      a->est += est;
      a->id += id;
      a->feat += feat;
      a->feat_id += feat_id;
      ++a->n;
    }
  }
  ExperimentReport r = make_report(corpus.config.seed);
  const double n = static_cast<double>(all.n);
  r.add(config_id, "envelope_mse", all.est / n);
  r.add(config_id, "envelope_mse_identity", all.id / n);
  r.add(config_id, "mse_ratio", all.id > 0.0 ? all.est / all.id : 0.0);
  r.add(config_id, "feature_distance", all.feat / n);
  r.add(config_id, "feature_distance_identity", all.feat_id / n);
  r.add(config_id, "num_items", n);
  for (const auto& [tag, a] : per_t60) {
    const double m = static_cast<double>(a.n);
    r.add(config_id, "envelope_mse_t60_" + tag, a.est / m);
    r.add(config_id, "envelope_mse_identity_t60_" + tag, a.id / m);
  }
  return r;
}

double normalized_cross_correlation(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw InvalidInput("normalized_cross_correlation: length mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Matrix hilbert_band_envelopes(const Signal& segment, const MelBandLayout& layout,
                              double envelope_rate) {
  const std::size_t len = layout.dct_len;
  if (segment.size() != len) throw InvalidInput("hilbert_band_envelopes: length mismatch");
  const auto points = static_cast<std::size_t>(
      std::llround(envelope_rate * static_cast<double>(len) / layout.sample_rate));
  Matrix out(layout.num_bands, points);
  for (std::size_t q = 0; q < layout.num_bands; ++q) {
    const std::vector<double> e = hilbert_envelope(
        even_symmetric_extend(band_signal(segment, layout, q)).samples());
    for (std::size_t n = 0; n < points; ++n)
      out(q, n) = e[std::min(len - 1, n * len / points)];
  }
  return out;
}

std::string order_config_id(std::size_t order) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "order_%04zu", order);
  return buf;
}

std::string lambda_config_id(double lambda) { return "lambda_" + fixed(lambda, 4); }

std::string seed_config_id(double lambda, std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_seed_%04llu", static_cast<unsigned long long>(seed));
  return lambda_config_id(lambda) + buf;
}

ExperimentReport sweep_pole_order(std::span<const std::size_t> orders,
                                  const Corpus& corpus,
                                  const PoleSweepOptions& options) {
  if (orders.empty()) throw InvalidInput("sweep_pole_order: no orders");
  if (corpus.items.empty()) throw InvalidInput("sweep_pole_order: empty corpus");
  const MelBandLayout layout = corpus_layout(corpus.config);
  const std::size_t count = std::min(options.max_items, corpus.items.size());
  if (count == 0) throw InvalidInput("sweep_pole_order: max_items must be >= 1");

  std::vector<std::vector<double>> fidelity(orders.size(), std::vector<double>(count));
  std::vector<std::vector<double>> oracle(orders.size(), std::vector<double>(count));
  parallel_for(count, corpus.config.threads, [&](std::size_t i) {
    const CorpusItem& it = corpus.items[i];
    const Matrix ref = hilbert_band_envelopes(it.clean, layout);
    Rir rir{it.rir, it.t60, 0};
    const EarlyLate el = split_early_late(rir, corpus.config.split_ms);
    const Signal early = apply_reverb(it.clean, el.early);
    const Signal late = apply_reverb(it.clean, el.late);
    for (std::size_t k = 0; k < orders.size(); ++k) {
      const SubbandEnvelopes env = envelopes_of(it.clean, layout, orders[k]);
      double acc = 0.0;
      for (std::size_t q = 0; q < layout.num_bands; ++q)
        acc += normalized_cross_correlation(env.data.row(q), ref.row(q));
      fidelity[k][i] = acc / static_cast<double>(layout.num_bands);
      const SubbandEnvelopes ee = envelopes_of(early, layout, orders[k]);
      const SubbandEnvelopes le = envelopes_of(late, layout, orders[k]);
      const SubbandEnvelopes re = envelopes_of(it.reverb, layout, orders[k]);
      const GainTrajectory g = oracle_gain(ee, le);
      Matrix lg(g.data.rows(), g.data.cols());
      for (std::size_t j = 0; j < lg.size(); ++j) lg.values()[j] = std::log(g.data.values()[j]);
      oracle[k][i] = log_envelope_mse(lg, re, ee);
    }
  });
  ExperimentReport r = make_report(corpus.config.seed);
  for (std::size_t k = 0; k < orders.size(); ++k) {
    const std::string id = order_config_id(orders[k]);
    double f = 0.0, o = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      f += fidelity[k][i];
      o += oracle[k][i];
    }
    r.add(id, "fidelity", f / static_cast<double>(count));
    r.add(id, "oracle_mse", o / static_cast<double>(count));
    r.add(id, "num_items", static_cast<double>(count));
  }
  return r;
}

ExperimentReport sweep_lambda(std::span<const double> lambdas, const Corpus& corpus,
                              const LambdaSweepOptions& options) {
  if (lambdas.empty()) throw InvalidInput("sweep_lambda: no lambda values");
  if (options.seeds.empty()) throw InvalidInput("sweep_lambda: no seeds");
  const std::vector<TrainingPair> train = training_pairs(
      corpus, false, options.model.log_gain_limit);
  const std::vector<const CorpusItem*> held = select_items(corpus, true);
  if (train.empty() || held.empty())
    throw InvalidInput("sweep_lambda: corpus needs training and held-out items");

  const std::size_t jobs = lambdas.size() * options.seeds.size();
  std::vector<double> mse(jobs), corr(jobs), final_loss(jobs);
  parallel_for(jobs, options.threads, [&](std::size_t j) {
    TrainConfig tc = options.train;
    tc.lambda = lambdas[j / options.seeds.size()];
    tc.seed = options.seeds[j % options.seeds.size()];
    const TrainResult res = train_estimator(train, tc, options.model);
    double m = 0.0, c = 0.0;
    for (const CorpusItem* it : held) {
      const Matrix lr = log_envelope(it->reverb_env.data);
      const Matrix lg = estimator_forward(res.estimator, lr);
      m += log_envelope_mse(lg, it->reverb_env, it->early_env);
      Matrix d(lr.rows(), lr.cols());
      for (std::size_t i = 0; i < d.size(); ++i)
        d.values()[i] = lr.values()[i] + lg.values()[i];
      c += spectral_correlation_loss(d);
    }
    mse[j] = m / static_cast<double>(held.size());
    corr[j] = c / static_cast<double>(held.size());
    final_loss[j] = res.history.back().total;
  });

  ExperimentReport r = make_report(corpus.config.seed);
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    std::vector<double> ms, cs;
    for (std::size_t s = 0; s < options.seeds.size(); ++s) {
      const std::size_t j = l * options.seeds.size() + s;
      const std::string id = seed_config_id(lambdas[l], options.seeds[s]);
      r.add(id, "heldout_mse", mse[j]);
      r.add(id, "spectral_corr", corr[j]);
      r.add(id, "final_train_loss", final_loss[j]);
      ms.push_back(mse[j]);
      cs.push_back(corr[j]);
    }
    const std::string id = lambda_config_id(lambdas[l]);
    r.add(id, "heldout_mse", median(ms));
    r.add(id, "spectral_corr", median(cs));
  }
  return r;
}

}  // namespace fdlp
