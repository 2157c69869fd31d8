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
#include <numeric>

#include "doctest.h"
#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "sr/embedder/encoder.hpp"
#include "sr/nn/checkpoint.hpp"
#include "support/fixtures.hpp"

using namespace sr;
using embedder::EncodedMessage;
using embedder::Encoder;
using embedder::EncoderConfig;
using embedder::EncoderKind;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat features(const Encoder& enc, const EncodedMessage& m) {
  nn::Tape tape(false, nullptr, false);
  return tape.value(enc.char_features(tape, m.char_ids, m.length()));
}

Mat word_vectors(const Encoder& enc, const EncodedMessage& m) {
  nn::Tape tape(false, nullptr, false);
  return tape.value(enc.word_vectors(tape, std::span<const EncodedMessage>(&m, 1)));
}

void zero_all(Encoder& enc) {
  for (const auto& p : enc.params().all()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
}

}  // namespace

TEST_SUITE("embedder") {
  TEST_CASE("configuration dimensions") {
    const EncoderConfig large = EncoderConfig::large_gru();
    CHECK(large.d_c_out() == 250);
    CHECK(large.word_dim() == 550);
    EncoderConfig c = testing::tiny_config(EncoderKind::kGru);
    c.d_w = 4;
    c.filter_counts = {3, 3};
    CHECK(c.word_dim() == 10);
    c.charcnn = false;
    CHECK(c.word_dim() == 4);
    EncoderConfig bad = EncoderConfig::large_transformer();
    bad.d_out = 300;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    const auto back = embedder::encoder_config_from_json(embedder::to_json(EncoderConfig::desk(EncoderKind::kTransformer, true)));
    CHECK(embedder::to_json(back) == embedder::to_json(EncoderConfig::desk(EncoderKind::kTransformer, true)));
  }

  TEST_CASE("zero CharCNN weights give zero features") {
    Encoder enc(testing::tiny_config(EncoderKind::kGru), testing::default_tiny_vocab(), 3);
    for (const auto& p : enc.params().all()) {
      if (p->name.rfind("cnn.", 0) == 0) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
    }
    const Mat f = features(enc, enc.prepare("hello there"));
    CHECK(f.rows == 2);
    CHECK(f.cols == 4);
    for (double v : f.data) CHECK(v == 0.0);
  }

  TEST_CASE("width-1 filter picking coordinate 0 on a two-char word") {
    EncoderConfig c = testing::tiny_config(EncoderKind::kGru);
    c.filter_widths = {1};
    c.filter_counts = {1};
    const corpus::Vocab vocab = testing::default_tiny_vocab();
    Encoder enc(c, vocab, 9);
    nn::Parameter& w = enc.params().at("cnn.w0");
    REQUIRE(w.value.rows == 2);
    w.value.data = {1.0, 0.0};
    enc.params().at("cnn.b0").value.data = {0.0};
    const Mat& ce = enc.params().at("char_emb").value;
    const double ca = ce(vocab.char_id('a'), 0);
    const double cb = ce(vocab.char_id('b'), 0);
    const Mat f = features(enc, enc.prepare("ab"));
    CHECK(f(0, 0) == doctest::Approx(std::max(std::max(ca, 0.0), std::max(cb, 0.0))).epsilon(1e-15));
  }

  TEST_CASE("CharCNN ignores pad rows and truncates long words") {
    Encoder enc(testing::tiny_config(EncoderKind::kGru), testing::default_tiny_vocab(), 4);
    const Mat before = features(enc, enc.prepare("ab"));
    for (double& v : enc.params().at("char_emb").value.row(corpus::Vocab::kPad)) v = 100.0;
    CHECK(features(enc, enc.prepare("ab")).data == before.data);
    // max_word_chars is 4 in the tiny config
    CHECK(features(enc, enc.prepare("hellothere")).data == features(enc, enc.prepare("hellxyz")).data);
  }

  TEST_CASE("word vectors concatenate the embedding and CharCNN parts") {
    const corpus::Vocab vocab = testing::default_tiny_vocab();
    Encoder enc(testing::tiny_config(EncoderKind::kGru), vocab, 5);
    const Mat v = word_vectors(enc, enc.prepare("zzq"));
    CHECK(v.cols == 3 + 4);
    // two unknown words share the embedding part and differ in the char part
    const Mat a = word_vectors(enc, enc.prepare("abh"));
    const Mat b = word_vectors(enc, enc.prepare("hba"));
    for (int i = 0; i < 3; ++i) CHECK(a(0, i) == b(0, i));
    bool differs = false;
    for (int i = 3; i < 7; ++i) differs = differs || a(0, i) != b(0, i);
    CHECK(differs);
    // zero embedding row leaves the leading entries zero
    for (double& x : enc.params().at("word_emb").value.row(vocab.word_id("hi"))) x = 0.0;
    const Mat z = word_vectors(enc, enc.prepare("hi"));
    for (int i = 0; i < 3; ++i) CHECK(z(0, i) == 0.0);
  }

  TEST_CASE("GRU with zero parameters outputs zeros") {
    Encoder enc(testing::tiny_config(EncoderKind::kGru), testing::default_tiny_vocab(), 2);
    zero_all(enc);
    for (double v : enc.embed("where are you")) CHECK(v == 0.0);
  }

  TEST_CASE("GRU single token equals one hand-evaluated step") {
    Encoder enc(testing::tiny_config(EncoderKind::kGru), testing::default_tiny_vocab(), 8);
    Rng rng(1);
    for (const char* name : {"gru.bx", "gru.bh"}) {
      for (double& v : enc.params().at(name).value.data) v = rng.uniform(-0.5, 0.5);
    }
    const EncodedMessage m = enc.prepare("hello");
    const Mat x = word_vectors(enc, m);
    const Mat& wx = enc.params().at("gru.wx").value;
    const Mat& bx = enc.params().at("gru.bx").value;
    const Mat& bh = enc.params().at("gru.bh").value;
    const int h = 4;
    std::vector<double> expect(h);
    for (int j = 0; j < h; ++j) {
      auto gate = [&](int g) {
        double s = bx(0, g * h + j);
        for (int i = 0; i < x.cols; ++i) s += x(0, i) * wx(i, g * h + j);
        return s;
      };
      // zero previous state: only the hidden biases remain on that side
      const double r = sigmoid(gate(0) + bh(0, j));
      const double z = sigmoid(gate(1) + bh(0, h + j));
      const double n = std::tanh(gate(2) + r * bh(0, 2 * h + j));
      expect[j] = (1.0 - z) * n;
    }
    const auto got = enc.embed("hello");
    for (int j = 0; j < h; ++j) CHECK(got[j] == doctest::Approx(expect[j]).epsilon(1e-12));
  }

  TEST_CASE("empty message is rejected") {
    for (EncoderKind kind : {EncoderKind::kGru, EncoderKind::kTransformer}) {
      Encoder enc(testing::tiny_config(kind), testing::default_tiny_vocab(), 1);
      CHECK_THROWS_WITH(enc.embed(""), "empty message");
    }
  }

  TEST_CASE("transformer without positions is order invariant, with positions it is not") {
    EncoderConfig c = testing::tiny_config(EncoderKind::kTransformer);
    c.transformer.positional = false;
    Encoder plain(c, testing::default_tiny_vocab(), 6);
    const auto a = plain.embed("good night");
    const auto b = plain.embed("night good");
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

    Encoder pos(testing::tiny_config(EncoderKind::kTransformer), testing::default_tiny_vocab(), 6);
    const auto pa = pos.embed("good night");
    const auto pb = pos.embed("night good");
    double diff = 0.0;
    for (size_t i = 0; i < pa.size(); ++i) diff += std::abs(pa[i] - pb[i]);
    CHECK(diff > 1e-6);
  }

  TEST_CASE("single-token attention is one and equal logits attend uniformly") {
    Encoder enc(testing::tiny_config(EncoderKind::kTransformer), testing::default_tiny_vocab(), 2);
    const auto single = enc.attention_weights(enc.prepare("hi"), 0);
    REQUIRE(single.size() == 2);
    for (const auto& head : single) CHECK(head(0, 0) == doctest::Approx(1.0));

    for (const char* name : {"tf.l0.wq", "tf.l0.bq", "tf.l0.wk", "tf.l0.bk"}) {
      std::fill(enc.params().at(name).value.data.begin(), enc.params().at(name).value.data.end(), 0.0);
    }
    const auto uniform = enc.attention_weights(enc.prepare("where are you"), 0);
    for (const auto& head : uniform) {
      REQUIRE(head.rows == 3);
      for (double v : head.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
  }

  TEST_CASE("output shape, finiteness and determinism over fuzzed messages") {
    const char* words[] = {"hi", "gud", "n8", "zzzzzzzzzzzz", ":)", "whr", "r", "u", "acha", "\xc3\xa9t\xc3\xa9"};
    for (EncoderKind kind : {EncoderKind::kGru, EncoderKind::kTransformer}) {
      Encoder enc(EncoderConfig::desk(kind, true), testing::default_tiny_vocab(), 3);
      Rng rng(12);
      std::vector<EncodedMessage> batch;
      for (int i = 0; i < 40; ++i) {
        std::string text;
        const int n = 1 + static_cast<int>(rng.below(5));
        for (int w = 0; w < n; ++w) text += std::string(w ? " " : "") + words[rng.below(10)];
        batch.push_back(enc.prepare(text));
      }
      const Mat e1 = enc.embed_batch(batch);
      const Mat e2 = enc.embed_batch(batch);
      CHECK(e1.cols == enc.config().d_out);
      CHECK(e1.data == e2.data);
      for (double v : e1.data) CHECK(std::isfinite(v));
      // batched rows match one-at-a-time embedding
      for (size_t i = 0; i < batch.size(); i += 7) {
        const Mat one = enc.embed_batch(std::span<const EncodedMessage>(&batch[i], 1));
        for (int j = 0; j < one.cols; ++j) CHECK(one(0, j) == doctest::Approx(e1(static_cast<int>(i), j)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("checkpoint round trip and vocabulary check") {
    const corpus::Vocab vocab = testing::default_tiny_vocab();
    for (EncoderKind kind : {EncoderKind::kGru, EncoderKind::kTransformer}) {
      Encoder enc(EncoderConfig::desk(kind, true), vocab, 7);
      const std::vector<uint8_t> bytes = nn::encode_checkpoint(enc.to_checkpoint());
      const Encoder back = Encoder::from_checkpoint(nn::decode_checkpoint(bytes), vocab);
      CHECK(nn::encode_checkpoint(back.to_checkpoint()) == bytes);
      const auto a = enc.embed("good night");
      const auto b = back.embed("good night");
      for (size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-4));

      const corpus::Vocab other = testing::tiny_vocab({"x y", "z w"});
      try {
        Encoder::from_checkpoint(nn::decode_checkpoint(bytes), other);
        FAIL("vocabulary mismatch accepted");
      } catch (const FormatError& e) {
        CHECK(e.code() == FormatError::Code::kShapeMismatch);
      }
    }
  }

  TEST_CASE("sinusoidal positions") {
    const Mat pe = embedder::sinusoidal_positions(3, 4);
    CHECK(pe(0, 0) == 0.0);
    CHECK(pe(0, 1) == 1.0);
    CHECK(pe(1, 0) == doctest::Approx(std::sin(1.0)));
    CHECK(pe(2, 2) == doctest::Approx(std::sin(2.0 / 100.0)));
  }
}
