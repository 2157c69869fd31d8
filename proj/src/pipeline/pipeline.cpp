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

#include "sr/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <numeric>
#include <unordered_map>

#include "sr/common/binary_io.hpp"
#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "sr/eval/metrics.hpp"
#include "sr/replynet/quantize.hpp"

namespace sr::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> rank_top(std::span<const double> scores, int k) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  const int n = std::min<int>(k, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + n, idx.end(), [&](int a, int b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });
  idx.resize(n);
  return idx;
}

// Fraction of stickers whose best-matching cluster is dominated by the
// sticker's own intent.
double sticker_accuracy(const stickers::StickerMapping& mapping, const std::vector<clusterer::ClassRow>& rows,
                        const std::map<std::string, int>& ground_truth) {
  std::map<int, std::map<int, uint64_t>> votes;
  for (const auto& r : rows) {
    const auto it = ground_truth.find(r.phrase);
    if (it != ground_truth.end()) votes[r.cluster_id][it->second] += r.freq;
  }
  std::map<int, int> majority;
  for (const auto& [cluster, v] : votes) {
    majority[cluster] = std::max_element(v.begin(), v.end(), [](const auto& a, const auto& b) {
                          return a.second != b.second ? a.second < b.second : a.first > b.first;
                        })->first;
  }
  std::vector<std::pair<double, int>> best(mapping.stickers.size(), {-2.0, -1});
  for (const auto& [cluster, list] : mapping.clusters) {
    for (const auto& m : list) {
      if (m.similarity > best[m.sticker].first) best[m.sticker] = {m.similarity, cluster};
    }
  }
  size_t total = 0;
  size_t correct = 0;
  for (size_t s = 0; s < mapping.stickers.size(); ++s) {
    const auto gt = ground_truth.find(mapping.stickers[s].tags.front());
    if (gt == ground_truth.end()) continue;
    ++total;
    if (best[s].second < 0) continue;
    const auto mj = majority.find(best[s].second);
    if (mj != majority.end() && mj->second == gt->second) ++correct;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

json PipelineConfig::to_json() const {
  return {{"seed", seed},
          {"n_intents", n_intents},
          {"n_conversations", n_conversations},
          {"mean_length", mean_length},
          {"test_every", test_every},
          {"max_vocab", max_vocab},
          {"encoder", embedder::kind_name(kind)},
          {"charcnn", charcnn},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"min_cluster_size", min_cluster_size},
          {"top_phrases", top_phrases},
          {"max_clusters", max_clusters},
          {"head", {{"epochs", head.epochs}, {"batch_size", head.batch_size}, {"learning_rate", head.learning_rate}}},
          {"t_reply", t_reply},
          {"combiner", hybrid::to_json(weights)},
          {"sticker_threshold", sticker_threshold},
          {"full_net", full_net},
          {"calibration_size", calibration_size}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  c.seed = j.value("seed", c.seed);
  c.n_intents = j.value("n_intents", c.n_intents);
  c.n_conversations = j.value("n_conversations", c.n_conversations);
  c.mean_length = j.value("mean_length", c.mean_length);
  c.test_every = j.value("test_every", c.test_every);
  c.max_vocab = j.value("max_vocab", c.max_vocab);
  if (j.contains("encoder")) c.kind = embedder::parse_kind(j.at("encoder").get<std::string>());
  c.charcnn = j.value("charcnn", c.charcnn);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.min_cluster_size = j.value("min_cluster_size", c.min_cluster_size);
  c.top_phrases = j.value("top_phrases", c.top_phrases);
  c.max_clusters = j.value("max_clusters", c.max_clusters);
  if (j.contains("head")) {
    const json& h = j.at("head");
    c.head.epochs = h.value("epochs", c.head.epochs);
    c.head.batch_size = h.value("batch_size", c.head.batch_size);
    c.head.learning_rate = h.value("learning_rate", c.head.learning_rate);
  }
  c.t_reply = j.value("t_reply", c.t_reply);
  if (j.contains("combiner")) c.weights = hybrid::weights_from_json(j);
  c.sticker_threshold = j.value("sticker_threshold", c.sticker_threshold);
  c.full_net = j.value("full_net", c.full_net);
  c.calibration_size = j.value("calibration_size", c.calibration_size);
  if (c.test_every < 2) throw ConfigError("test_every must be >= 2");
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  c.weights.validate();
  return c;
}

json PipelineReport::to_json() const {
  json j = {{"train_seconds", train_seconds},
            {"final_loss", final_loss},
            {"phrases", num_phrases},
            {"clusters", num_clusters},
            {"ari", ari},
            {"sticker_accuracy", sticker_accuracy},
            {"typing", json::array({eval::to_json(hybrid), eval::to_json(trie_only)})}};
  if (full_net) j["typing"].push_back(eval::to_json(*full_net));
  if (full_net_quantized) j["typing"].push_back(eval::to_json(*full_net_quantized));
  if (quantized_checkpoint_bytes > 0) {
    j["checkpoint_bytes"] = {{"float", float_checkpoint_bytes}, {"quantized", quantized_checkpoint_bytes}};
  }
  return j;
}

std::map<std::string, int> cluster_lookup(const std::vector<clusterer::ClassRow>& rows) {
  std::map<std::string, int> out;
  for (const auto& r : rows) out.emplace(r.phrase, r.cluster_id);
  return out;
}

std::vector<replynet::ClusterExample> cluster_examples(const std::vector<corpus::MessagePair>& pairs,
                                                       const std::map<std::string, int>& cluster_of, bool prefixes) {
  std::vector<replynet::ClusterExample> out;
  for (const auto& p : pairs) {
    const std::string next = p.next.phrase();
    const auto it = cluster_of.find(next);
    if (it == cluster_of.end()) continue;
    const std::string prev = p.current.phrase();
    if (!prefixes) {
      out.push_back({prev, "", it->second});
      continue;
    }
    for (size_t len = 0; len <= next.size(); ++len) {
      if (len < next.size() && (static_cast<unsigned char>(next[len]) & 0xC0) == 0x80) continue;
      out.push_back({prev, next.substr(0, len), it->second});
    }
  }
  return out;
}

std::vector<eval::TypingCase> typing_cases(const std::vector<corpus::MessagePair>& pairs) {
  std::vector<eval::TypingCase> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.current.phrase(), p.next.phrase()});
  return out;
}

eval::RankFn hybrid_ranker(const replynet::ClusterNet* reply_net, double t_reply, const trie::TypedTrie& trie,
                           const hybrid::CombinerWeights& weights, int k) {
  auto memo = std::make_shared<std::unordered_map<std::string, std::vector<ClusterScore>>>();
  return [=, &trie](const std::string& prev, const std::string& typed) {
    std::vector<ClusterScore>* scores = nullptr;
    std::vector<ClusterScore> none;
    if (reply_net != nullptr) {
      auto it = memo->find(prev);
      if (it == memo->end()) {
        const replynet::ReplyOutput out = reply_net->predict_reply(prev);
        it = memo->emplace(prev, out.degenerate ? none : replynet::top_clusters(out.probs, t_reply)).first;
      }
      scores = &it->second;
    }
    const auto top = hybrid::predict(scores ? *scores : none, typed, trie, weights, k);
    std::vector<int> ids;
    for (const auto& c : top) ids.push_back(c.cluster_id);
    return ids;
  };
}

eval::RankFn trie_ranker(const trie::TypedTrie& trie, int k) {
  return [&trie, k](const std::string&, const std::string& typed) {
    const trie::TrieScoreResult r = trie.trie_scores(corpus::normalize_typed(typed));
    auto s = r.scores;
    const size_t n = std::min<size_t>(k, s.size());
    std::partial_sort(s.begin(), s.begin() + n, s.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<int> ids;
    for (size_t i = 0; i < n; ++i) ids.push_back(s[i].first);
    return ids;
  };
}

eval::RankFn full_net_ranker(const replynet::ClusterNet& net, int k) {
  return [&net, k](const std::string& prev, const std::string& typed) {
    const embedder::Encoder& enc = net.encoder();
    if (enc.prepare(prev).length() == 0 && enc.prepare(typed).length() == 0) return std::vector<int>{};
    return rank_top(net.predict_full(prev, typed), k);
  };
}

void write_assets(const std::string& dir, const trie::TypedTrie& trie, const stickers::StickerMapping& mapping,
                  const std::vector<clusterer::ClassRow>& rows, const hybrid::CombinerWeights& weights,
                  const replynet::ClusterNet* reply_net, const corpus::Vocab* vocab) {
  fs::create_directories(dir);
  const fs::path root(dir);
  write_file_bytes((root / "trie.bin").string(), trie.serialize());
  write_file_bytes((root / "stickers.bin").string(), stickers::serialize(mapping));
  clusterer::write_cluster_table((root / "clusters.tsv").string(), rows);
  write_text_file((root / "combiner.json").string(), json{{"combiner", hybrid::to_json(weights)}}.dump(2) + "\n");
  if (reply_net != nullptr) {
    if (vocab == nullptr) throw Error("reply net assets need the vocabulary");
    reply_net->save((root / "reply_net.ckpt").string());
    corpus::write_vocab((root / "vocab.tsv").string(), *vocab);
  }
}

PipelineRun run_pipeline(const PipelineConfig& config, const std::string& out_dir, const LogFn& log) {
  auto say = [&log](const std::string& s) {
    if (log) log(s);
  };
  const bool write = !out_dir.empty();
  const fs::path out(out_dir);
  if (write) fs::create_directories(out);

  PipelineRun run;
  run.config = config;

  corpus::SyntheticOptions so;
  so.seed = config.seed;
  so.n_intents = config.n_intents;
  so.n_conversations = config.n_conversations;
  so.mean_length = config.mean_length;
  run.corpus = corpus::generate_synthetic_corpus(so);
  const std::vector<corpus::Conversation> all = run.corpus.parsed();
  for (size_t i = 0; i < all.size(); ++i) {
    (static_cast<int>(i % config.test_every) == config.test_every - 1 ? run.test : run.train).push_back(all[i]);
  }
  run.train_pairs = corpus::extract_pairs(run.train);
  run.test_pairs = corpus::extract_pairs(run.test);
  run.vocab = corpus::build_vocab(run.train_pairs, config.max_vocab);
  say("corpus: " + std::to_string(all.size()) + " conversations, " + std::to_string(run.train_pairs.size()) +
      " train pairs, " + std::to_string(run.test_pairs.size()) + " test pairs, vocab " +
      std::to_string(run.vocab.word_table_size()));
  if (write) {
    corpus::write_corpus((out / "corpus.txt").string(), run.corpus.conversations);
    corpus::write_ground_truth((out / "ground_truth.tsv").string(), run.corpus.ground_truth);
    corpus::write_intents((out / "intents.tsv").string(), run.corpus.intents);
    corpus::write_vocab((out / "vocab.tsv").string(), run.vocab);
  }

  // Encoder.
  const embedder::EncoderConfig ec = embedder::EncoderConfig::desk(config.kind, config.charcnn);
  run.model = std::make_unique<trainer::DualEncoder>(embedder::Encoder(ec, run.vocab, config.seed), config.seed);
  trainer::TrainConfig tc = trainer::TrainConfig::for_kind(config.kind);
  tc.learning_rate = config.learning_rate;
  tc.epochs = config.epochs;
  tc.seed = config.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const trainer::TrainResult tr = trainer::fit(*run.model, run.train_pairs, tc);
  run.report.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.report.final_loss = tr.final_loss;
  say("encoder: " + std::to_string(tr.steps) + " steps, final loss " + std::to_string(tr.final_loss));
  if (write) {
    nn::save_checkpoint((out / "encoder.ckpt").string(), run.model->to_checkpoint());
    trainer::write_loss_csv((out / "loss.csv").string(), tr);
  }
  const embedder::Encoder& encoder = run.model->encoder();

  // Clusters and trie.
  clusterer::ClusterConfig cc;
  cc.min_cluster_size = config.min_cluster_size;
  cc.top_phrases = config.top_phrases;
  run.phrases = clusterer::count_phrases(run.train, config.top_phrases);
  run.clusters = clusterer::cluster(run.phrases, encoder, cc);
  run.rows = clusterer::export_classes(run.clusters, config.max_clusters);
  run.trie = trie::TypedTrie::from_cluster_table(run.rows);
  run.report.num_phrases = static_cast<int>(run.phrases.size());
  run.report.num_clusters = clusterer::num_classes(run.rows);

  std::map<std::string, int> predicted;
  std::map<std::string, int> truth;
  for (const auto& p : run.phrases) {
    const auto gt = run.corpus.ground_truth.find(p.phrase);
    if (gt == run.corpus.ground_truth.end()) continue;
    predicted[p.phrase] = run.clusters.assignment.at(p.phrase);
    truth[p.phrase] = gt->second;
  }
  run.report.ari = eval::adjusted_rand_index(predicted, truth);
  say("clusters: " + std::to_string(run.report.num_clusters) + " over " + std::to_string(run.phrases.size()) +
      " phrases, ARI " + std::to_string(run.report.ari));

  // Stickers.
  run.catalog = stickers::synthetic_catalog(run.corpus.intents);
  run.mapping = stickers::build_mapping(run.rows, run.catalog, encoder, config.sticker_threshold);
  run.report.sticker_accuracy = sticker_accuracy(run.mapping, run.rows, run.corpus.ground_truth);
  say("stickers: " + std::to_string(run.mapping.num_attachments()) + " attachments, accuracy " +
      std::to_string(run.report.sticker_accuracy));

  // Reply net on frozen encoder embeddings.
  const std::map<std::string, int> cluster_of = cluster_lookup(run.rows);
  const int g = std::max(2, run.report.num_clusters);
  run.reply_net = std::make_unique<replynet::ClusterNet>(
      replynet::NetKind::kReply, embedder::Encoder::from_checkpoint(encoder.to_checkpoint(), run.vocab), g,
      config.seed);
  run.reply_net->set_t_reply(config.t_reply);
  replynet::HeadTrainConfig hc = config.head;
  hc.seed = config.seed;
  const auto reply_loss = run.reply_net->fit(cluster_examples(run.train_pairs, cluster_of, false), hc);
  say("reply net: loss " + std::to_string(reply_loss.back()));

  if (write) {
    clusterer::write_cluster_table((out / "clusters.tsv").string(), run.rows);
    stickers::write_catalog((out / "stickers.jsonl").string(), run.catalog);
    write_assets((out / "assets").string(), run.trie, run.mapping, run.rows, config.weights, run.reply_net.get(),
                 &run.vocab);
  }

  // Typing evaluation.
  const std::vector<eval::TypingCase> cases = typing_cases(run.test_pairs);
  run.report.hybrid = eval::simulate_typing(
      hybrid_ranker(run.reply_net.get(), config.t_reply, run.trie, config.weights), cases, cluster_of, 3, "Hybrid");
  run.report.trie_only = eval::simulate_typing(trie_ranker(run.trie), cases, cluster_of, 3, "Trie only");
  say("hybrid: fraction retrieved " + std::to_string(run.report.hybrid.fraction_retrieved));

  if (config.full_net) {
    std::vector<replynet::ClusterExample> examples = cluster_examples(run.train_pairs, cluster_of, true);
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    rng.shuffle(examples);
    const size_t n_cal = std::min<size_t>(config.calibration_size, examples.size() / 10);
    std::vector<std::string> cal_prev;
    std::vector<std::string> cal_typed;
    for (size_t i = 0; i < n_cal; ++i) {
      cal_prev.push_back(examples.back().prev);
      cal_typed.push_back(examples.back().typed);
      examples.pop_back();
    }
    run.full_net = std::make_unique<replynet::ClusterNet>(
        replynet::NetKind::kFull, embedder::Encoder::from_checkpoint(encoder.to_checkpoint(), run.vocab), g,
        config.seed);
    run.full_net->fit(examples, hc);
    const replynet::ActivationRanges ranges = run.full_net->calibrate(cal_prev, cal_typed);
    const nn::Checkpoint fck = run.full_net->to_checkpoint();
    const nn::Checkpoint qck = replynet::quantize_checkpoint(fck, ranges);
    run.report.float_checkpoint_bytes = nn::encode_checkpoint(fck).size();
    run.report.quantized_checkpoint_bytes = nn::encode_checkpoint(qck).size();
    run.full_net_quantized = std::make_unique<replynet::ClusterNet>(replynet::ClusterNet::from_checkpoint(qck, run.vocab));
    run.report.full_net = eval::simulate_typing(full_net_ranker(*run.full_net), cases, cluster_of, 3, "NN");
    run.report.full_net_quantized =
        eval::simulate_typing(full_net_ranker(*run.full_net_quantized), cases, cluster_of, 3, "Quantized NN");
    if (write) {
      nn::save_checkpoint((out / "full_net.ckpt").string(), fck);
      nn::save_checkpoint((out / "full_net.q.ckpt").string(), qck);
    }
    say("full net: fraction retrieved " + std::to_string(run.report.full_net->fraction_retrieved) + ", quantized " +
        std::to_string(run.report.full_net_quantized->fraction_retrieved));
  }

  if (write) {
    write_text_file((out / "config.json").string(), config.to_json().dump(2) + "\n");
    write_text_file((out / "metrics.json").string(), run.report.to_json().dump(2) + "\n");
    std::vector<eval::TypingMetrics> table{run.report.hybrid, run.report.trie_only};
    if (run.report.full_net) table.push_back(*run.report.full_net);
    if (run.report.full_net_quantized) table.push_back(*run.report.full_net_quantized);
    write_text_file((out / "table.txt").string(), eval::render_table(table));
  }
  return run;
}

}  // namespace sr::pipeline
