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


#ifndef FDLP_EVAL_HARNESS_H_
#define FDLP_EVAL_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fdlp/core_dsp.h"
#include "fdlp/dereverb.h"
#include "fdlp/joint_trainer.h"
#include "fdlp/reverb_sim.h"
#include "fdlp/subband_fdlp.h"

namespace fdlp {

const char* toolkit_version();

// Median band residual of the envelope convolution model a stored corpus
// item may show. Set from the calibration runs on the default corpus.
inline constexpr double kCorpusResidualBound = 0.9;

struct CorpusConfig {
  std::size_t num_utterances = 10;
  std::vector<double> t60_list = {0.3, 0.6};
  std::uint64_t seed = 1;
  double split_ms = kDefaultSplitMs;
  std::size_t lp_order = kDefaultLpOrder;
  std::size_t num_bands = kDefaultNumBands;
  double fmin_hz = kDefaultFminHz;
  double fmax_hz = kDefaultFmaxHz;
  int sample_rate = 16000;
  double segment_seconds = kDefaultSegmentSeconds;
  std::size_t num_classes = kDefaultNumClasses;
  std::size_t held_out_every = 5;  // utterance u held out when u % k == k - 1
  unsigned threads = 0;            // 0 = hardware concurrency
};

struct CorpusItem {
  std::string id;
  std::size_t utterance = 0;
  double t60 = 0.0;
  std::uint64_t rir_seed = 0;
  bool held_out = false;
  Signal clean;
  Signal rir;
  Signal reverb;
  SubbandEnvelopes clean_env;
  SubbandEnvelopes early_env;
  SubbandEnvelopes late_env;
  SubbandEnvelopes reverb_env;
  GainTrajectory gain;
  std::vector<int> labels;
  double eq4_residual = 0.0;  // median over bands
};

struct Corpus {
  CorpusConfig config;
  std::vector<CorpusItem> items;
};

MelBandLayout corpus_layout(const CorpusConfig& config);

// Clean signals come from the synthesizer unless given; given signals are
// cut or zero-padded to one segment and num_utterances is ignored.
Corpus generate_corpus(const CorpusConfig& config,
                       const std::vector<Signal>* clean = nullptr);
// Writes WAVs, FEAT1 envelopes and manifest.jsonl under dir.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus build_corpus(const CorpusConfig& config, const std::filesystem::path& dir,
                    const std::vector<Signal>* clean = nullptr);
Corpus load_corpus(const std::filesystem::path& dir);
std::string manifest_text(const Corpus& corpus);

std::vector<const CorpusItem*> select_items(const Corpus& corpus, bool held_out);
std::vector<TrainingPair> training_pairs(const Corpus& corpus, bool held_out,
                                         double log_gain_limit =
                                             kDefaultLogGainLimit);
std::vector<JointBatch> joint_batches(const Corpus& corpus, bool held_out,
                                      double log_gain_limit =
                                          kDefaultLogGainLimit);

struct ReportRow {
  std::string config_id;
  std::string metric;
  double value = 0.0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::uint64_t seed = 0;
  std::string toolkit_version;
  std::string timestamp;

  // Rejects non-finite values and duplicate (config_id, metric) pairs.
  void add(const std::string& config_id, const std::string& metric, double value);
  void merge(const ExperimentReport& other);
  double value(const std::string& config_id, const std::string& metric) const;
  bool has(const std::string& config_id, const std::string& metric) const;
  // Header "config_id,metric,value"; rows stably sorted by config id.
  std::string to_csv() const;
  std::string metadata_json() const;
};

ExperimentReport make_report(std::uint64_t seed);
// CSV at path plus metadata in path + ".meta.json".
void write_report(const std::filesystem::path& path,
                  const ExperimentReport& report);

// Log gain (Q x N, entries <= 0) for one corpus item.
using GainSource = std::function<Matrix(const CorpusItem&)>;
GainSource identity_gain_source();
GainSource oracle_gain_source();
GainSource estimator_gain_source(const GainEstimator& estimator);

// Log-domain envelope error of dereverberated output against the early
// envelope: mean of (log g + log m_r - log m_e)^2.
double log_envelope_mse(const Matrix& log_gain, const SubbandEnvelopes& reverb,
                        const SubbandEnvelopes& early);

ExperimentReport evaluate_dereverb(const GainSource& gain, const Corpus& corpus,
                                   const std::string& config_id,
                                   bool held_out_only = true);

// Pearson correlation of two equally long sequences.
double normalized_cross_correlation(std::span<const double> a,
                                    std::span<const double> b);

// Squared Hilbert envelopes of each band signal, sampled at the envelope
// rate (reference for FDLP fidelity).
Matrix hilbert_band_envelopes(const Signal& segment, const MelBandLayout& layout,
                              double envelope_rate = kDefaultEnvelopeRate);

struct PoleSweepOptions {
  std::size_t max_items = 8;
};

// Per order: mean band correlation of clean FDLP envelopes with the Hilbert
// reference ("fidelity"), and the oracle-gain log envelope MSE.
ExperimentReport sweep_pole_order(std::span<const std::size_t> orders,
                                  const Corpus& corpus,
                                  const PoleSweepOptions& options = {});

struct LambdaSweepOptions {
  TrainConfig train;
  EstimatorConfig model;
  std::vector<std::uint64_t> seeds = {1};
  unsigned threads = 1;  // independent runs may go in parallel
};

// Per lambda and seed: held-out MSE and the mean spectral correlation of the
// dereverberated held-out log envelopes; plus medians over seeds.
ExperimentReport sweep_lambda(std::span<const double> lambdas, const Corpus& corpus,
                              const LambdaSweepOptions& options);

std::string order_config_id(std::size_t order);
std::string lambda_config_id(double lambda);
std::string seed_config_id(double lambda, std::uint64_t seed);

}  // namespace fdlp

#endif  // FDLP_EVAL_HARNESS_H_
