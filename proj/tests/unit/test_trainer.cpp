// Copyright 2026 The Sticker Recommendation Authors.
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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "sr/trainer/trainer.hpp"
#include "support/finite_diff.hpp"
#include "support/fixtures.hpp"

using namespace sr;
using embedder::EncodedMessage;
using embedder::Encoder;
using embedder::EncoderKind;
using trainer::DualEncoder;

namespace {

std::vector<corpus::MessagePair> toy_pairs() {
  const std::vector<std::pair<const char*, const char*>> raw = {
      {"hi there", "hello you"}, {"good night", "gud n8"}, {"where are you", "whr r u"}, {"ab ba", "ok :)"},
      {"hello", "hi"},           {"gud n8", "good night"}, {"whr r u", "home"},          {"ok", "ab"},
  };
  std::vector<corpus::MessagePair> out;
  for (const auto& [a, b] : raw) out.push_back({corpus::make_message(a), corpus::make_message(b)});
  return out;
}

// Reference in-batch softmax loss written out directly.
double reference_loss(const Mat& s) {
  double total = 0.0;
  for (int i = 0; i < s.rows; ++i) {
    double z = 0.0;
    for (int j = 0; j < s.cols; ++j) z += std::exp(s(i, j));
    total += std::log(z) - s(i, i);
  }
  return total / s.rows;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("batch loss examples") {
    Mat s(2, 2);
    s.data = {1.0, 0.0, 0.0, 1.0};
    CHECK(trainer::batch_loss(s) == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-14));
    CHECK(trainer::batch_loss(Mat(4, 4, 0.7)) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int b = 2 + static_cast<int>(rng.below(6));
      Mat m(b, b);
      for (double& v : m.data) v = rng.uniform(-5.0, 5.0);
      CHECK(trainer::batch_loss(m) == doctest::Approx(reference_loss(m)).epsilon(1e-12));
    }
    // large diagonal margins drive the loss towards zero
    Mat big(3, 3, -50.0);
    for (int i = 0; i < 3; ++i) big(i, i) = 50.0;
    CHECK(trainer::batch_loss(big) < 1e-30);
  }

  TEST_CASE("score matrix is the pairwise dot product") {
    Mat a(2, 3), b(2, 3);
    a.data = {1, 2, 3, 0, 1, 0};
    b.data = {1, 0, 1, 2, 2, 2};
    const Mat s = trainer::batch_score_matrix(a, b);
    CHECK(s(0, 0) == 4.0);
    CHECK(s(0, 1) == 12.0);
    CHECK(s(1, 0) == 0.0);
    CHECK(s(1, 1) == 2.0);
    CHECK_THROWS_AS(trainer::batch_score_matrix(Mat(1, 3), Mat(1, 3)), ConfigError);
  }

  TEST_CASE("full loss gradients match finite differences") {
    const auto pairs = toy_pairs();
    const corpus::Vocab vocab = corpus::build_vocab(pairs, 1000);
    for (EncoderKind kind : {EncoderKind::kGru, EncoderKind::kTransformer}) {
      for (uint64_t seed : {1u, 2u, 3u}) {
        CAPTURE(seed);
        DualEncoder model(Encoder(testing::tiny_config(kind, true), vocab, seed), seed + 100);
        // zero-initialised biases put padded windows exactly on the ReLU kink
        Rng jitter(seed);
        for (nn::Parameter* p : model.parameters()) {
          if (p->name.rfind("cnn.b", 0) == 0) {
            for (double& v : p->value.data) v = jitter.uniform(0.05, 0.5);
          }
        }
        std::vector<EncodedMessage> cur, nxt;
        for (size_t i = 0; i < 4; ++i) {
          cur.push_back(model.encoder().prepare(pairs[i + seed].current.tokens));
          nxt.push_back(model.encoder().prepare(pairs[i + seed].next.tokens));
        }
        model.zero_grad();
        trainer::compute_gradients(model, cur, nxt, true, 0.2, 77);
        const auto r = testing::check_gradients(
            model.parameters(), [&] { return trainer::evaluate_loss(model, cur, nxt, true, 0.2, 77); }, 1e-5);
        INFO(r.worst);
        CHECK(r.checked > 100);
        CHECK(r.max_rel_error < 1e-4);
      }
    }
  }

  TEST_CASE("training lowers the loss and is deterministic") {
    const auto pairs = toy_pairs();
    const corpus::Vocab vocab = corpus::build_vocab(pairs, 1000);
    for (EncoderKind kind : {EncoderKind::kGru, EncoderKind::kTransformer}) {
      auto run = [&] {
        DualEncoder model(Encoder(testing::tiny_config(kind, true), vocab, 5), 6);
        trainer::TrainConfig cfg = trainer::TrainConfig::for_kind(kind);
        cfg.batch_size = 8;
        cfg.learning_rate = 1e-2;
        cfg.epochs = 300;
        cfg.fc_dropout = 0.0;
        return trainer::fit(model, pairs, cfg);
      };
      const auto a = run();
      const auto b = run();
      REQUIRE(a.loss_curve.size() == 300);
      CHECK(a.loss_curve == b.loss_curve);
      CHECK(a.loss_curve.front().second == doctest::Approx(std::log(8.0)).epsilon(0.2));
      CHECK(a.final_loss < 0.5 * a.loss_curve.front().second);
    }
  }

  TEST_CASE("max_steps, empty data and configuration checks") {
    const auto pairs = toy_pairs();
    DualEncoder model(Encoder(testing::tiny_config(EncoderKind::kGru), corpus::build_vocab(pairs, 100), 1), 2);
    trainer::TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.epochs = 10;
    cfg.max_steps = 3;
    CHECK(trainer::fit(model, pairs, cfg).steps == 3);
    CHECK_THROWS_WITH(trainer::fit(model, {}, cfg), "empty pair set");
    cfg.batch_size = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(trainer::TrainConfig::for_kind(EncoderKind::kTransformer).optimizer == nn::OptimizerKind::kRmsprop);
    CHECK(trainer::TrainConfig::for_kind(EncoderKind::kGru).optimizer == nn::OptimizerKind::kAdam);
  }

  TEST_CASE("checkpoint round trip and loss csv") {
    const auto pairs = toy_pairs();
    const corpus::Vocab vocab = corpus::build_vocab(pairs, 100);
    DualEncoder model(Encoder(testing::tiny_config(EncoderKind::kTransformer), vocab, 1), 2);
    const DualEncoder back = DualEncoder::from_checkpoint(model.to_checkpoint(), vocab);
    std::vector<EncodedMessage> cur, nxt;
    for (size_t i = 0; i < 4; ++i) {
      cur.push_back(model.encoder().prepare(pairs[i].current.tokens));
      nxt.push_back(model.encoder().prepare(pairs[i].next.tokens));
    }
    CHECK(trainer::evaluate_loss(back, cur, nxt, false, 0.0, 0) ==
          doctest::Approx(trainer::evaluate_loss(model, cur, nxt, false, 0.0, 0)).epsilon(1e-4));

    trainer::TrainResult r;
    r.loss_curve = {{1, 2.5}, {2, 1.25}};
    const auto path = std::filesystem::temp_directory_path() / "sr_loss_test.csv";
    trainer::write_loss_csv(path.string(), r);
    std::ifstream in(path);
    std::string header, l1, l2;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(header == "step,loss");
    CHECK(l1.rfind("1,2.5", 0) == 0);
    CHECK(l2.rfind("2,1.25", 0) == 0);
    std::filesystem::remove(path);
  }
}
