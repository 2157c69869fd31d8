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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "sr/corpus/corpus.hpp"
#include "sr/replynet/quantize.hpp"
#include "sr/replynet/replynet.hpp"
#include "support/fixtures.hpp"

using namespace sr;
using namespace sr::replynet;
using embedder::Encoder;
using embedder::EncoderConfig;
using embedder::EncoderKind;

namespace {

Encoder desk_encoder(uint64_t seed = 1) {
  return Encoder(EncoderConfig::desk(EncoderKind::kTransformer, true), testing::default_tiny_vocab(), seed);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double deq(const nn::TensorRecord& t, size_t i) {
  const double s = t.scale;
  return t.dtype == nn::DType::kI8 ? s * (static_cast<double>(t.i8[i]) - t.zero_point)
                                   : s * (static_cast<double>(t.i32[i]) - t.zero_point);
}

const std::vector<std::string> kTexts = {"hi there", "hello you", "good night", "gud n8", "where are you",
                                         "whr r u",  "ab ba",     "ok :)",      "hi",     "night"};

}  // namespace

TEST_SUITE("replynet") {
  TEST_CASE("top_clusters examples and monotonicity") {
    const std::vector<double> two = {0.9, 0.2};
    const auto half = top_clusters(two, 0.5);
    REQUIRE(half.size() == 1);
    CHECK(half[0] == ClusterScore{0, 0.9});
    CHECK(top_clusters(two, 0.0).size() == 2);
    CHECK(top_clusters(two, 1.0).empty());
    CHECK(top_clusters(std::vector<double>{0.5, 0.5}, 0.5).empty());
    const auto tied = top_clusters(std::vector<double>{0.3, 0.7, 0.7}, 0.1);
    CHECK(tied[0].cluster_id == 1);
    CHECK(tied[1].cluster_id == 2);
    CHECK(tied[2].cluster_id == 0);

    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> p(20);
      for (double& v : p) v = rng.uniform();
      double t1 = rng.uniform(), t2 = rng.uniform();
      if (t1 > t2) std::swap(t1, t2);
      const auto a = top_clusters(p, t1);
      const auto b = top_clusters(p, t2);
      for (const auto& c : b) CHECK(std::find(a.begin(), a.end(), c) != a.end());
      for (const auto& c : a) CHECK(c.score > t1);
      CHECK(std::is_sorted(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.score > y.score; }));
    }
  }

  TEST_CASE("head saturation examples") {
    ClusterNet net(NetKind::kReply, desk_encoder(), 4, 3);
    std::fill(net.head().at("head.w").value.data.begin(), net.head().at("head.w").value.data.end(), 0.0);
    for (double p : net.predict_reply("hi there").probs) CHECK(p == 0.5);
    net.head().at("head.b").value.data = {20.0, -20.0, -20.0, -20.0};
    const auto out = net.predict_reply("good night");
    CHECK_FALSE(out.degenerate);
    CHECK(out.probs[0] > 1.0 - 1e-8);
    for (int g = 1; g < 4; ++g) CHECK(out.probs[g] < 1e-8);
  }

  TEST_CASE("empty prev falls back to a uniform prior") {
    ClusterNet net(NetKind::kReply, desk_encoder(), 5, 3);
    const auto out = net.predict_reply("");
    CHECK(out.degenerate);
    for (double p : out.probs) CHECK(p == doctest::Approx(0.2));
    const std::vector<std::string> prev = {"", "hi"};
    const std::vector<std::string> typed = {"", ""};
    const Mat batch = net.predict_batch(prev, typed);
    CHECK(batch(0, 0) == doctest::Approx(0.2));
    const auto single = net.predict_reply("hi").probs;
    for (int g = 0; g < 5; ++g) CHECK(batch(1, g) == doctest::Approx(single[g]).epsilon(1e-12));
  }

  TEST_CASE("full net concatenates prev and typed with sentinels for an empty side") {
    ClusterNet net(NetKind::kFull, desk_encoder(), 3, 4);
    CHECK(net.input_dim() == 96);
    const auto e_prev = net.encoder().embed("hi there");
    const auto e_typed = net.encoder().embed("goo");
    const Mat& w = net.head().at("head.w").value;
    const Mat& b = net.head().at("head.b").value;
    const Mat& sentinel = net.head().at("sentinel.typed").value;
    auto manual = [&](const std::vector<double>& first, std::span<const double> second) {
      std::vector<double> out(3);
      for (int g = 0; g < 3; ++g) {
        double z = b(0, g);
        for (int i = 0; i < 48; ++i) z += first[i] * w(i, g) + second[i] * w(48 + i, g);
        out[g] = sigmoid(z);
      }
      return out;
    };
    const auto both = net.predict_full("hi there", "goo");
    const auto want_both = manual(e_prev, e_typed);
    const auto no_typed = net.predict_full("hi there", "");
    const auto want_sentinel = manual(e_prev, sentinel.data);
    for (int g = 0; g < 3; ++g) {
      CHECK(both[g] == doctest::Approx(want_both[g]).epsilon(1e-12));
      CHECK(no_typed[g] == doctest::Approx(want_sentinel[g]).epsilon(1e-12));
    }
    CHECK_THROWS_WITH(net.predict_full("", ""), "both inputs empty");
    CHECK_THROWS(net.predict_reply("hi"));
  }

  TEST_CASE("outputs stay in (0,1) and are deterministic") {
    ClusterNet net(NetKind::kFull, desk_encoder(), 6, 5);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      const std::string prev = kTexts[rng.below(kTexts.size())];
      std::string typed = kTexts[rng.below(kTexts.size())];
      typed = typed.substr(0, rng.below(typed.size() + 1));
      const auto a = net.predict_full(prev, typed);
      CHECK(a == net.predict_full(prev, typed));
      for (double p : a) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
      }
    }
  }

  TEST_CASE("head training fits a separable toy task") {
    for (NetKind kind : {NetKind::kReply, NetKind::kFull}) {
      ClusterNet net(kind, desk_encoder(2), 5, 7);
      std::vector<ClusterExample> examples;
      for (size_t i = 0; i < kTexts.size(); ++i) {
        examples.push_back({kTexts[i], "", static_cast<int>(i % 5)});
        if (kind == NetKind::kFull) examples.push_back({kTexts[i], kTexts[i].substr(0, 2), static_cast<int>(i % 5)});
      }
      HeadTrainConfig cfg;
      cfg.epochs = 300;
      cfg.batch_size = 8;
      cfg.learning_rate = 3e-2;
      const auto losses = net.fit(examples, cfg);
      REQUIRE(losses.size() == 300);
      CHECK(losses.back() < 0.3 * losses.front());
      int correct = 0;
      for (const auto& ex : examples) {
        const auto p = kind == NetKind::kReply ? net.predict_reply(ex.prev).probs : net.predict_full(ex.prev, ex.typed);
        correct += std::max_element(p.begin(), p.end()) - p.begin() == ex.cluster;
      }
      CHECK(correct == static_cast<int>(examples.size()));
      CHECK_THROWS(net.fit({}, cfg));
      CHECK_THROWS(net.fit({{"hi", "", 9}}, cfg));
    }
    HeadTrainConfig bad;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(ClusterNet(NetKind::kReply, desk_encoder(), 1, 1), ConfigError);
  }

  TEST_CASE("int8 parameter choice and error bound") {
    const QuantParams u = choose_int8_params(-1.0, 1.0);
    CHECK(u.scale == doctest::Approx(2.0 / 255.0).epsilon(1e-6));
    Rng rng(12);
    for (int trial = 0; trial < 500; ++trial) {
      Mat m(1 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(40)));
      const double a = rng.uniform(-3.0, 3.0) * std::pow(10.0, rng.uniform(-4.0, 2.0));
      const double b = rng.uniform(-3.0, 3.0) * std::pow(10.0, rng.uniform(-4.0, 2.0));
      for (double& v : m.data) v = static_cast<float>(rng.uniform(std::min(a, b), std::max(a, b)));
      const auto t = quantize_int8_tensor("w", m);
      CHECK(t.zero_point >= -128);
      CHECK(t.zero_point <= 127);
      double worst = 0.0;
      for (size_t i = 0; i < m.size(); ++i) worst = std::max(worst, std::abs(m.data[i] - deq(t, i)) - t.scale / 2.0);
      CHECK(worst <= 1e-12);
      // 0 always lands on the grid
      Mat z = m;
      z.data[0] = 0.0;
      const auto tz = quantize_int8_tensor("w", z);
      CHECK(deq(tz, 0) == 0.0);
    }
    Mat flat(3, 4);
    for (double& v : flat.data) v = rng.uniform(-1.0, 1.0);
    Mat fq = flat;
    fake_quantize(fq, choose_int8_params(flat.data));
    for (size_t i = 0; i < flat.size(); ++i) CHECK(std::abs(fq.data[i] - flat.data[i]) <= 1.0 / 255.0 + 1e-12);
  }

  TEST_CASE("degenerate tensors are represented exactly") {
    const auto zero = quantize_int8_tensor("w", Mat(2, 3));
    CHECK(zero.scale == doctest::Approx(kMinScale).epsilon(1e-6));
    for (int8_t q : zero.i8) CHECK(q == zero.zero_point);
    for (double c : {0.75, -3.5, 1e-3}) {
      const auto t = quantize_int8_tensor("w", Mat(2, 2, static_cast<float>(c)));
      for (size_t i = 0; i < 4; ++i) CHECK(deq(t, i) == static_cast<float>(c));
    }
  }

  TEST_CASE("int32 biases and checkpoint quantization") {
    Mat b(1, 5);
    b.data = {0.5, -2.0, 0.0, 1e-3, 1.75};
    const auto t = quantize_int32_tensor("head.b", b);
    CHECK(t.dtype == nn::DType::kI32);
    CHECK(t.zero_point == 0);
    for (size_t i = 0; i < 5; ++i) CHECK(std::abs(deq(t, i) - b.data[i]) <= t.scale / 2.0 + 1e-12);
    CHECK(quantize_int32_tensor("x.b", Mat(1, 2)).i32 == std::vector<int32_t>{0, 0});

    CHECK(is_bias_tensor("cnn.b0"));
    CHECK(is_bias_tensor("tf.l0.bq"));
    CHECK(is_bias_tensor("head.b"));
    CHECK_FALSE(is_bias_tensor("tf.l0.ln1.g"));
    CHECK_FALSE(is_bias_tensor("word_emb"));
    CHECK_FALSE(is_bias_tensor("head.w"));

    ClusterNet net(NetKind::kFull, desk_encoder(), 4, 2);
    const std::vector<std::string> prev(kTexts.begin(), kTexts.end());
    const std::vector<std::string> typed(kTexts.size(), "g");
    const ActivationRanges ranges = net.calibrate(prev, typed);
    CHECK(ranges.find("word_vectors").has_value());
    CHECK(ranges.find("head.logits").has_value());
    const nn::Checkpoint f = net.to_checkpoint();
    const nn::Checkpoint q = quantize_checkpoint(f, ranges);
    CHECK(q.meta.at("quantized") == true);
    CHECK(ActivationRanges::from_json(q.meta.at("activation_ranges")).ranges() == ranges.ranges());
    for (const auto& rec : q.tensors) {
      CHECK(rec.dtype == (is_bias_tensor(rec.name) ? nn::DType::kI32 : nn::DType::kI8));
      const Mat orig = f.at(rec.name).to_mat();
      for (size_t i = 0; i < rec.count(); ++i) CHECK(std::abs(orig.data[i] - deq(rec, i)) <= rec.scale / 2.0 + 1e-12);
    }
    CHECK_THROWS(quantize_checkpoint(q, ranges));
    CHECK(nn::encode_checkpoint(q).size() < nn::encode_checkpoint(f).size() / 3);
  }

  TEST_CASE("fake-quant hook leaves unknown sites alone") {
    ActivationRanges r;
    Mat seen(1, 3);
    seen.data = {-1.0, 0.25, 2.0};
    r.observe("a", seen);
    Mat more(1, 1, 5.0);
    r.observe("a", more);
    CHECK(r.find("a") == std::make_pair(-1.0, 5.0));
    const auto hook = fake_quant_hook(r);
    Mat x(1, 2);
    x.data = {0.123456789, 1.0};
    Mat y = x;
    hook("b", y);
    CHECK(y.data == x.data);
    hook("a", y);
    CHECK(y.data != x.data);
    CHECK(std::abs(y.data[0] - x.data[0]) <= choose_int8_params(-1.0, 5.0).scale / 2.0 + 1e-12);
  }

  TEST_CASE("checkpoint round trips, float and quantized") {
    const corpus::Vocab vocab = testing::default_tiny_vocab();
    ClusterNet net(NetKind::kFull, desk_encoder(), 4, 2);
    net.set_t_reply(0.25);
    const auto bytes = nn::encode_checkpoint(net.to_checkpoint());
    const ClusterNet back = ClusterNet::from_checkpoint(nn::decode_checkpoint(bytes), vocab);
    CHECK(back.kind() == NetKind::kFull);
    CHECK(back.num_classes() == 4);
    CHECK(back.t_reply() == 0.25);
    CHECK_FALSE(back.quantized());
    CHECK(nn::encode_checkpoint(back.to_checkpoint()) == bytes);
    const auto a = net.predict_full("hi", "go");
    const auto b = back.predict_full("hi", "go");
    for (int g = 0; g < 4; ++g) CHECK(b[g] == doctest::Approx(a[g]).epsilon(1e-4));

    const std::vector<std::string> prev(kTexts.begin(), kTexts.end());
    const std::vector<std::string> typed(kTexts.size(), "");
    const nn::Checkpoint q = quantize_checkpoint(net.to_checkpoint(), net.calibrate(prev, typed));
    const ClusterNet qnet = ClusterNet::from_checkpoint(q, vocab);
    CHECK(qnet.quantized());
    const Mat pf = net.predict_batch(prev, typed);
    const Mat pq = qnet.predict_batch(prev, typed);
    double max_diff = 0.0;
    for (size_t i = 0; i < pf.size(); ++i) max_diff = std::max(max_diff, std::abs(pf.data[i] - pq.data[i]));
    CHECK(max_diff > 0.0);
    CHECK(max_diff < 0.1);

    const auto dir = std::filesystem::temp_directory_path() / "sr_replynet_test";
    std::filesystem::create_directories(dir);
    net.save((dir / "net.ckpt").string());
    corpus::write_vocab((dir / "vocab.tsv").string(), vocab);
    const ClusterNet loaded = ClusterNet::load((dir / "net.ckpt").string(), (dir / "vocab.tsv").string());
    CHECK(nn::encode_checkpoint(loaded.to_checkpoint()) == bytes);
    std::filesystem::remove_all(dir);

    nn::Checkpoint wrong = net.to_checkpoint();
    wrong.meta["kind"] = "encoder";
    CHECK_THROWS_AS(ClusterNet::from_checkpoint(wrong, vocab), FormatError);
  }

  TEST_CASE("top-k overlap") {
    Mat a(2, 4), b(2, 4);
    a.data = {0.9, 0.8, 0.7, 0.1, 0.1, 0.2, 0.3, 0.4};
    b.data = {0.9, 0.8, 0.1, 0.7, 0.4, 0.3, 0.2, 0.1};
    // row 0 shares 2 of 3, row 1 shares 2 of 3
    CHECK(top_k_overlap(a, b, 3) == doctest::Approx(2.0 / 3.0));
    CHECK(top_k_overlap(a, a, 3) == 1.0);
    CHECK_THROWS(top_k_overlap(a, Mat(1, 4), 3));
  }
}
