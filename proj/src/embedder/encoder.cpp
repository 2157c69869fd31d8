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

#include "sr/embedder/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "sr/common/binary_io.hpp"
#include "sr/common/error.hpp"
#include "sr/corpus/text.hpp"

namespace sr::embedder {
namespace {

constexpr int kEmbedChunk = 256;

std::string layer_prefix(int l) { return "tf.l" + std::to_string(l) + "."; }

nn::Var linear(nn::Tape& tape, nn::Var x, const nn::Parameter& w, const nn::Parameter& b) {
  return tape.add_row(tape.matmul(x, tape.param(w)), tape.param(b));
}

}  // namespace

uint64_t vocab_fingerprint(const corpus::Vocab& vocab) {
  ByteWriter w;
  for (const auto& e : vocab.words()) {
    w.bytes(e.word);
    w.u8(0);
    w.u64(e.count);
  }
  for (unsigned char c : vocab.chars()) w.u8(c);
  return fnv1a64(w.buffer());
}

Mat sinusoidal_positions(int positions, int dim) {
  Mat pe(positions, dim);
  for (int p = 0; p < positions; ++p) {
    for (int i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(p, i) = (i % 2 == 0) ? std::sin(p * rate) : std::cos(p * rate);
    }
  }
  return pe;
}

Encoder::Encoder(EncoderConfig config, corpus::Vocab vocab, uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  Rng rng(seed);
  const auto& c = config_;
  nn::init_normal(params_.add("word_emb", vocab_.word_table_size(), c.d_w).value, rng,
                  1.0 / std::sqrt(static_cast<double>(c.d_w)));
  if (c.charcnn) {
    nn::init_normal(params_.add("char_emb", vocab_.char_table_size(), c.d_c_in).value, rng, 0.5);
    for (size_t i = 0; i < c.filter_widths.size(); ++i) {
      nn::init_glorot(
          params_.add("cnn.w" + std::to_string(i), c.filter_widths[i] * c.d_c_in, c.filter_counts[i]).value,
          rng);
      params_.add("cnn.b" + std::to_string(i), 1, c.filter_counts[i]);
    }
  }
  const int in = c.word_dim();
  if (c.kind == EncoderKind::kGru) {
    const int h = c.d_out;
    nn::init_glorot(params_.add("gru.wx", in, 3 * h).value, rng);
    nn::init_glorot(params_.add("gru.wh", h, 3 * h).value, rng);
    params_.add("gru.bx", 1, 3 * h);
    params_.add("gru.bh", 1, 3 * h);
  } else {
    const auto& t = c.transformer;
    nn::init_glorot(params_.add("tf.proj.w", in, t.model_dim).value, rng);
    params_.add("tf.proj.b", 1, t.model_dim);
    for (int l = 0; l < t.layers; ++l) {
      const std::string p = layer_prefix(l);
      for (const char* name : {"wq", "wk", "wv", "wo"}) {
        nn::init_glorot(params_.add(p + name, t.model_dim, t.model_dim).value, rng);
        params_.add(p + "b" + std::string(name + 1), 1, t.model_dim);
      }
      params_.add(p + "ln1.g", 1, t.model_dim).value.data.assign(t.model_dim, 1.0);
      params_.add(p + "ln1.b", 1, t.model_dim);
      nn::init_glorot(params_.add(p + "ff.w1", t.model_dim, t.inner_dim).value, rng);
      params_.add(p + "ff.b1", 1, t.inner_dim);
      nn::init_glorot(params_.add(p + "ff.w2", t.inner_dim, t.model_dim).value, rng);
      params_.add(p + "ff.b2", 1, t.model_dim);
      params_.add(p + "ln2.g", 1, t.model_dim).value.data.assign(t.model_dim, 1.0);
      params_.add(p + "ln2.b", 1, t.model_dim);
    }
  }
}

EncodedMessage Encoder::prepare(const std::vector<corpus::Token>& tokens) const {
  EncodedMessage m;
  const int w = config_.max_word_chars;
  m.word_ids.reserve(tokens.size());
  m.char_ids.assign(tokens.size() * w, corpus::Vocab::kPad);
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& text = tokens[i].text;
    m.word_ids.push_back(vocab_.word_id(text));
    const size_t n = std::min(text.size(), static_cast<size_t>(w));
    for (size_t j = 0; j < n; ++j) {
      m.char_ids[i * w + j] = vocab_.char_id(static_cast<unsigned char>(text[j]));
    }
  }
  return m;
}

EncodedMessage Encoder::prepare(std::string_view text) const {
  return prepare(corpus::tokenize(corpus::normalize_repeats(text)));
}

nn::Var Encoder::activation(nn::Tape& tape, nn::Var x, std::string_view site) const {
  if (!hook_) return x;
  return tape.transform(x, [this, site](Mat& m) { hook_(site, m); });
}

nn::Var Encoder::char_features(nn::Tape& tape, std::span<const int> char_ids, int n_words) const {
  const int seg = config_.max_word_chars;
  if (static_cast<int>(char_ids.size()) != n_words * seg) throw Error("char id count mismatch");
  const nn::Var chars = tape.lookup(params_.at("char_emb"), char_ids, corpus::Vocab::kPad);
  std::vector<nn::Var> parts;
  for (size_t i = 0; i < config_.filter_widths.size(); ++i) {
    const int k = config_.filter_widths[i];
    const nn::Var windows = tape.unfold(chars, seg, k);
    const nn::Var conv = tape.relu(
        linear(tape, windows, params_.at("cnn.w" + std::to_string(i)), params_.at("cnn.b" + std::to_string(i))));
    parts.push_back(tape.segment_max(conv, seg - k + 1));
  }
  return tape.concat_cols(parts);
}

nn::Var Encoder::word_vectors(nn::Tape& tape, std::span<const EncodedMessage> batch) const {
  std::vector<int> word_ids;
  std::vector<int> char_ids;
  for (const auto& m : batch) {
    word_ids.insert(word_ids.end(), m.word_ids.begin(), m.word_ids.end());
    char_ids.insert(char_ids.end(), m.char_ids.begin(), m.char_ids.end());
  }
  nn::Var words = tape.lookup(params_.at("word_emb"), word_ids);
  if (config_.charcnn) {
    const nn::Var chars = char_features(tape, char_ids, static_cast<int>(word_ids.size()));
    const nn::Var both[] = {words, chars};
    words = tape.concat_cols(both);
  }
  return activation(tape, words, "word_vectors");
}

nn::Var Encoder::forward(nn::Tape& tape, std::span<const EncodedMessage> batch) const {
  if (batch.empty()) throw Error("empty batch");
  std::vector<int> lengths;
  lengths.reserve(batch.size());
  for (const auto& m : batch) {
    if (m.length() == 0) throw Error("empty message");
    lengths.push_back(m.length());
  }
  const nn::Var words = word_vectors(tape, batch);
  const nn::Var out = config_.kind == EncoderKind::kGru ? encode_gru(tape, words, lengths)
                                                        : encode_transformer(tape, words, lengths, nullptr, -1);
  return activation(tape, out, "output");
}

nn::Var Encoder::encode_gru(nn::Tape& tape, nn::Var words, const std::vector<int>& lengths) const {
  const int h = config_.d_out;
  const int b = static_cast<int>(lengths.size());
  const nn::Var xw = linear(tape, words, params_.at("gru.wx"), params_.at("gru.bx"));
  const nn::Var wh = tape.param(params_.at("gru.wh"));
  const nn::Var bh = tape.param(params_.at("gru.bh"));
  std::vector<int> offsets(b);
  int max_len = 0;
  for (int i = 0, off = 0; i < b; ++i) {
    offsets[i] = off;
    off += lengths[i];
    max_len = std::max(max_len, lengths[i]);
  }
  nn::Var state = tape.constant(Mat(b, h));
  for (int t = 0; t < max_len; ++t) {
    std::vector<int> index(b);
    bool all_active = true;
    for (int i = 0; i < b; ++i) {
      index[i] = t < lengths[i] ? offsets[i] + t : -1;
      all_active = all_active && t < lengths[i];
    }
    const nn::Var xt = tape.gather_rows(xw, index);
    const nn::Var ht = tape.add_row(tape.matmul(state, wh), bh);
    const nn::Var r = tape.sigmoid(tape.add(tape.slice_cols(xt, 0, h), tape.slice_cols(ht, 0, h)));
    const nn::Var z = tape.sigmoid(tape.add(tape.slice_cols(xt, h, h), tape.slice_cols(ht, h, h)));
    const nn::Var n = tape.tanh(tape.add(tape.slice_cols(xt, 2 * h, h), tape.mul(r, tape.slice_cols(ht, 2 * h, h))));
    // h' = (1 - z) * n + z * h
    const nn::Var next = tape.add(n, tape.mul(z, tape.sub(state, n)));
    if (all_active) {
      state = next;
    } else {
      Mat mask(b, h);
      for (int i = 0; i < b; ++i) {
        if (t < lengths[i]) std::fill(mask.row(i).begin(), mask.row(i).end(), 1.0);
      }
      state = tape.add(state, tape.mul(tape.constant(std::move(mask)), tape.sub(next, state)));
    }
    state = activation(tape, state, "gru.state");
  }
  return tape.dropout(state, config_.gru_dropout);
}

nn::Var Encoder::encode_transformer(nn::Tape& tape, nn::Var words, const std::vector<int>& lengths,
                                    std::vector<Mat>* probs, int probs_layer) const {
  const auto& t = config_.transformer;
  nn::Var x = tape.dropout(words, t.dropout);
  x = linear(tape, x, params_.at("tf.proj.w"), params_.at("tf.proj.b"));
  if (t.positional) {
    const int max_len = *std::max_element(lengths.begin(), lengths.end());
    const Mat table = sinusoidal_positions(max_len, t.model_dim);
    Mat pe(tape.value(x).rows, t.model_dim);
    int row = 0;
    for (int len : lengths) {
      for (int p = 0; p < len; ++p, ++row) std::copy_n(table.row(p).begin(), t.model_dim, pe.row(row).begin());
    }
    x = tape.add(x, tape.constant(std::move(pe)));
  }
  x = activation(tape, x, "tf.input");
  for (int l = 0; l < t.layers; ++l) {
    const std::string p = layer_prefix(l);
    const nn::Var q = linear(tape, x, params_.at(p + "wq"), params_.at(p + "bq"));
    const nn::Var k = linear(tape, x, params_.at(p + "wk"), params_.at(p + "bk"));
    const nn::Var v = linear(tape, x, params_.at(p + "wv"), params_.at(p + "bv"));
    const nn::Var att =
        tape.segment_attention(q, k, v, lengths, t.heads, t.dropout, l == probs_layer ? probs : nullptr);
    nn::Var o = linear(tape, att, params_.at(p + "wo"), params_.at(p + "bo"));
    o = tape.dropout(o, t.dropout);
    x = tape.layer_norm(tape.add(x, o), tape.param(params_.at(p + "ln1.g")), tape.param(params_.at(p + "ln1.b")));
    x = activation(tape, x, "tf.ln1");
    nn::Var f = tape.relu(linear(tape, x, params_.at(p + "ff.w1"), params_.at(p + "ff.b1")));
    f = activation(tape, f, "tf.ff");
    f = tape.dropout(linear(tape, f, params_.at(p + "ff.w2"), params_.at(p + "ff.b2")), t.dropout);
    x = tape.layer_norm(tape.add(x, f), tape.param(params_.at(p + "ln2.g")), tape.param(params_.at(p + "ln2.b")));
    x = activation(tape, x, "tf.ln2");
  }
  return tape.segment_mean(x, lengths);
}

Mat Encoder::embed_batch(std::span<const EncodedMessage> batch) const {
  Mat out(static_cast<int>(batch.size()), config_.d_out);
  for (size_t begin = 0; begin < batch.size(); begin += kEmbedChunk) {
    const size_t n = std::min<size_t>(kEmbedChunk, batch.size() - begin);
    nn::Tape tape(false, nullptr, false);
    const Mat& e = tape.value(forward(tape, batch.subspan(begin, n)));
    std::copy(e.data.begin(), e.data.end(), out.data.begin() + static_cast<ptrdiff_t>(begin * config_.d_out));
  }
  return out;
}

std::vector<double> Encoder::embed(std::string_view text) const {
  const EncodedMessage m = prepare(text);
  const Mat e = embed_batch(std::span<const EncodedMessage>(&m, 1));
  return e.data;
}

std::vector<Mat> Encoder::attention_weights(const EncodedMessage& message, int layer) const {
  if (config_.kind != EncoderKind::kTransformer) throw ConfigError("attention weights need a transformer");
  if (layer < 0 || layer >= config_.transformer.layers) throw ConfigError("layer out of range");
  if (message.length() == 0) throw Error("empty message");
  nn::Tape tape(false, nullptr, false);
  const nn::Var words = word_vectors(tape, std::span<const EncodedMessage>(&message, 1));
  std::vector<Mat> probs;
  encode_transformer(tape, words, {message.length()}, &probs, layer);
  return probs;
}

nn::Checkpoint Encoder::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.meta["kind"] = "encoder";
  ckpt.meta["config"] = to_json(config_);
  ckpt.meta["vocab"] = {{"fingerprint", hex64(vocab_fingerprint(vocab_))},
                        {"word_table", vocab_.word_table_size()},
                        {"char_table", vocab_.char_table_size()}};
  nn::append_parameters(ckpt, params_);
  return ckpt;
}

Encoder Encoder::from_checkpoint(const nn::Checkpoint& ckpt, corpus::Vocab vocab) {
  if (!ckpt.meta.contains("config")) throw FormatError(FormatError::Code::kCorrupt, "checkpoint has no config");
  EncoderConfig config = encoder_config_from_json(ckpt.meta.at("config"));
  if (ckpt.meta.contains("vocab")) {
    const std::string want = ckpt.meta["vocab"].value("fingerprint", "");
    if (!want.empty() && want != hex64(vocab_fingerprint(vocab))) {
      throw FormatError(FormatError::Code::kShapeMismatch, "vocabulary does not match the checkpoint");
    }
  }
  Encoder enc(std::move(config), std::move(vocab), 0);
  nn::restore_parameters(ckpt, enc.params_);
  return enc;
}

void Encoder::save(const std::string& path) const { nn::save_checkpoint(path, to_checkpoint()); }

Encoder Encoder::load(const std::string& checkpoint_path, const std::string& vocab_path) {
  return from_checkpoint(nn::load_checkpoint(checkpoint_path), corpus::read_vocab(vocab_path));
}

}  // namespace sr::embedder
