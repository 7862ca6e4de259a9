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


#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fdlp/dereverb.h"
#include "fdlp/error.h"
#include "fdlp/eval_harness.h"
#include "fdlp/formats.h"
#include "fdlp/joint_trainer.h"
#include "test_util.h"

using namespace fdlp;
using fdlp::testing::TempDir;

namespace {

CorpusConfig small_config() {
  CorpusConfig c;
  c.num_utterances = 5;
  c.t60_list = {0.3, 0.6};
  c.seed = 11;
  return c;
}

const Corpus& shared_corpus() {
  static const Corpus c = generate_corpus(small_config());
  return c;
}

EstimatorConfig narrow_model() {
  EstimatorConfig m;
  for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) m.layers[l].out_channels = 8;
  return m;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("corpus size and split") {
  const Corpus& c = shared_corpus();
  REQUIRE(c.items.size() == 10);
  std::size_t held = 0;
  for (const CorpusItem& it : c.items) {
    held += it.held_out;
    CHECK(it.held_out == (it.utterance == 4));
    CHECK(it.reverb_env.data.rows() == 36);
    CHECK(it.reverb_env.data.cols() == 800);
    CHECK(it.gain.data.rows() == 36);
    CHECK(it.labels.size() == 198);
    for (double g : it.gain.data.values()) {
      CHECK(g > 0.0);
      CHECK(g <= 1.0);
    }
    CHECK(it.eq4_residual <= kCorpusResidualBound);
  }
  CHECK(held == 2);
  CHECK(select_items(c, true).size() == 2);
  CHECK(training_pairs(c, false).size() == 8);
  CHECK(joint_batches(c, true).size() == 2);
}

TEST_CASE("corpus generation is deterministic") {
  CorpusConfig c;
  c.num_utterances = 2;
  c.t60_list = {0.3};
  c.seed = 7;
  TempDir a("corpus_a"), b("corpus_b");
  build_corpus(c, a.path());
  build_corpus(c, b.path());
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  CHECK(slurp(a / "manifest.jsonl").size() > 0);
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / rel.string()), rel.string());
  }
  c.seed = 8;
  const Corpus other = generate_corpus(c);
  CHECK(manifest_text(other) != slurp(a / "manifest.jsonl"));
}

TEST_CASE("corpus round trip through disk") {
  const Corpus& c = shared_corpus();
  TempDir dir("corpus_rt");
  write_corpus(c, dir.path());
  const Corpus back = load_corpus(dir.path());
  REQUIRE(back.items.size() == c.items.size());
  CHECK(back.config.num_bands == c.config.num_bands);
  CHECK(back.config.t60_list == c.config.t60_list);
  CHECK(manifest_text(back) == manifest_text(c));
  const CorpusItem& a = c.items[3];
  const CorpusItem& b = back.items[3];
  CHECK(a.id == b.id);
  CHECK(b.labels == a.labels);
  CHECK(b.reverb_env.data.rows() == 36);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.reverb_env.data.size(); ++i)
    worst = std::max(worst, std::abs(a.reverb_env.data.values()[i] - b.reverb_env.data.values()[i]) /
                                std::max(std::abs(a.reverb_env.data.values()[i]), 1e-30));
  CHECK(worst < 1e-6);
  CHECK_THROWS_AS(load_corpus(dir / "nope"), IoError);
}

TEST_CASE("identity and oracle evaluation") {
  const Corpus& c = shared_corpus();
  const ExperimentReport id = evaluate_dereverb(identity_gain_source(), c, "identity");
  const ExperimentReport oracle = evaluate_dereverb(oracle_gain_source(), c, "oracle");
  CHECK(id.value("identity", "mse_ratio") == 1.0);
  CHECK(id.value("identity", "num_items") == 2.0);
  CHECK(id.value("identity", "envelope_mse") > 0.0);
  CHECK(oracle.value("oracle", "envelope_mse") < id.value("identity", "envelope_mse"));
  CHECK(oracle.value("oracle", "mse_ratio") < 1.0);
  CHECK(oracle.has("oracle", "envelope_mse_t60_0.30"));
  CHECK(oracle.value("oracle", "envelope_mse_identity") ==
        id.value("identity", "envelope_mse"));

  // Held-out MSE equals a hand average over the held-out items.
  double acc = 0.0;
  for (const CorpusItem* it : select_items(c, true)) {
    Matrix zero(36, 800, 0.0);
    acc += log_envelope_mse(zero, it->reverb_env, it->early_env);
  }
  CHECK(id.value("identity", "envelope_mse") == doctest::Approx(acc / 2).epsilon(1e-12));
}

TEST_CASE("pole order sweep") {
  const Corpus& c = shared_corpus();
  const std::vector<std::size_t> orders = {50, 100, 200};
  PoleSweepOptions o;
  o.max_items = 3;
  const ExperimentReport r = sweep_pole_order(orders, c, o);
  const double f50 = r.value(order_config_id(50), "fidelity");
  const double f100 = r.value(order_config_id(100), "fidelity");
  const double f200 = r.value(order_config_id(200), "fidelity");
  CHECK(f50 <= f100);
  CHECK(f100 <= f200);
  CHECK(r.value(order_config_id(100), "num_items") == 3.0);
  const std::vector<std::size_t> one = {100};
  const ExperimentReport s = sweep_pole_order(one, c, o);
  CHECK(s.rows.size() == 3);
  CHECK(s.value(order_config_id(100), "fidelity") == f100);
  CHECK_THROWS_AS(sweep_pole_order(std::span<const std::size_t>{}, c, o), InvalidInput);
}

TEST_CASE("lambda sweep zero row matches a plain training run") {
  const Corpus& c = shared_corpus();
  LambdaSweepOptions o;
  o.train.epochs = 2;
  o.model = narrow_model();
  o.seeds = {3};
  const std::vector<double> lambdas = {0.0};
  const ExperimentReport r = sweep_lambda(lambdas, c, o);

  TrainConfig tc = o.train;
  tc.lambda = 0.0;
  tc.seed = 3;
  const TrainResult res = train_estimator(training_pairs(c, false), tc, o.model);
  double mse = 0.0, corr = 0.0;
  for (const CorpusItem* it : select_items(c, true)) {
    const Matrix lr = log_envelope(it->reverb_env.data);
    const Matrix lg = estimator_forward(res.estimator, lr);
    mse += log_envelope_mse(lg, it->reverb_env, it->early_env);
    Matrix d = lr;
    for (std::size_t i = 0; i < d.size(); ++i) d.values()[i] += lg.values()[i];
    corr += spectral_correlation_loss(d);
  }
  CHECK(r.value(seed_config_id(0.0, 3), "heldout_mse") == mse / 2);
  CHECK(r.value(seed_config_id(0.0, 3), "spectral_corr") == corr / 2);
  CHECK(r.value(lambda_config_id(0.0), "heldout_mse") == mse / 2);
  CHECK(r.value(seed_config_id(0.0, 3), "final_train_loss") == res.history.back().total);
}

TEST_CASE("report csv and metadata") {
  ExperimentReport r = make_report(5);
  r.add("b", "x", 1.5);
  r.add("a", "y", 2.0);
  r.add("b", "w", -0.25);
  r.add("a", "z", 3.0);
  CHECK(r.to_csv() == "config_id,metric,value\na,y,2\na,z,3\nb,x,1.5\nb,w,-0.25\n");
  CHECK(r.metadata_json().find("\"seed\":5") != std::string::npos);
  CHECK(r.metadata_json().find("\"toolkit_version\"") != std::string::npos);
  CHECK(r.timestamp.size() == 20);
  CHECK_THROWS_AS(r.value("c", "x"), InvalidInput);
  TempDir dir("report");
  write_report(dir / "r.csv", r);
  CHECK(slurp(dir / "r.csv") == r.to_csv());
  CHECK(slurp(dir / "r.csv.meta.json") == r.metadata_json());
}

TEST_CASE("joint training on the corpus keeps envelope error bounded") {
  const Corpus& c = shared_corpus();
  TrainConfig tc;
  tc.epochs = 4;
  const GainEstimator est =
      train_estimator(training_pairs(c, false), tc, narrow_model()).estimator;
  const std::vector<JointBatch> data = joint_batches(c, false);
  JointConfig jc;
  jc.epochs = 4;
  ClassifierConfig cc;
  cc.hidden = 32;
  const ToyClassifier clf = pretrain_classifier(data, est, cc, jc);
  jc.epochs = 3;
  const JointResult res = train_joint(data, est, clf, jc);
  REQUIRE(res.history.size() == 4);
  const JointLossReport& before = res.history.front();
  const JointLossReport& after = res.history.back();
  MESSAGE("ce " << before.ce << " -> " << after.ce << ", mse " << before.mse << " -> "
                << after.mse);
  CHECK(after.ce < before.ce);
  CHECK(after.mse <= 2.0 * before.mse);
  for (const JointLossReport& h : res.history)
    CHECK(h.total == doctest::Approx(h.ce + jc.mu * h.mse).epsilon(1e-12));
}
