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

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sr/clusterer/cluster_model.hpp"
#include "sr/common/binary_io.hpp"
#include "sr/corpus/corpus.hpp"
#include "sr/corpus/synthetic.hpp"
#include "sr/eval/metrics.hpp"
#include "sr/eval/typing.hpp"
#include "sr/pipeline/pipeline.hpp"
#include "sr/replynet/quantize.hpp"
#include "sr/replynet/replynet.hpp"
#include "sr/service/engine.hpp"
#include "sr/service/http.hpp"
#include "sr/stickers/sticker_map.hpp"
#include "sr/trainer/trainer.hpp"
#include "sr/trie/typed_trie.hpp"

namespace fs = std::filesystem;
using namespace sr;

namespace {

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

void log_line(const std::string& s) { std::cerr << s << "\n"; }

std::vector<std::string> column(const std::vector<replynet::ClusterExample>& ex, bool typed) {
  std::vector<std::string> out;
  out.reserve(ex.size());
  for (const auto& e : ex) out.push_back(typed ? e.typed : e.prev);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Type-ahead sticker recommendation toolkit"};
  app.require_subcommand(1);

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Generate or prepare a conversation corpus");
  corpus_cmd->require_subcommand(1);
  corpus::SyntheticOptions gen_opts;
  gen_opts.n_intents = 50;
  gen_opts.n_conversations = 600;
  std::string gen_out;
  auto* gen = corpus_cmd->add_subcommand("gen", "Write a synthetic corpus with ground truth");
  gen->add_option("--intents", gen_opts.n_intents, "Number of intents")->capture_default_str();
  gen->add_option("--conversations", gen_opts.n_conversations, "Number of conversations")->capture_default_str();
  gen->add_option("--mean-length", gen_opts.mean_length, "Mean messages per conversation")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  std::string prep_corpus;
  std::string prep_out;
  size_t prep_vocab = 50000;
  auto* prep = corpus_cmd->add_subcommand("prep", "Extract message pairs and the vocabulary");
  prep->add_option("--in", prep_corpus, "Corpus file (tab-separated messages)")->required();
  prep->add_option("--max-words", prep_vocab, "Vocabulary size cap")->capture_default_str();
  prep->add_option("--out", prep_out, "Output directory")->required();

  // train
  std::string train_pairs;
  std::string train_vocab;
  std::string train_kind = "transformer";
  bool train_no_charcnn = false;
  std::string train_out;
  std::string train_loss_csv;
  trainer::TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 8;
  auto* train = app.add_subcommand("train", "Train the message encoder");
  train->add_option("--pairs", train_pairs, "Pair file")->required();
  train->add_option("--vocab", train_vocab, "Vocabulary file")->required();
  train->add_option("--kind", train_kind, "gru or transformer")->capture_default_str();
  train->add_flag("--no-charcnn", train_no_charcnn, "Word embeddings only");
  train->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str();
  train->add_option("--lr", tc.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--batch", tc.batch_size, "Batch size")->capture_default_str();
  train->add_option("--seed", tc.seed, "Random seed")->capture_default_str();
  train->add_option("--out", train_out, "Encoder checkpoint")->required();
  train->add_option("--loss-csv", train_loss_csv, "Write the loss curve here");

  // cluster
  std::string cl_corpus;
  std::string cl_encoder;
  std::string cl_vocab;
  std::string cl_out;
  clusterer::ClusterConfig cc;
  cc.min_cluster_size = 3;
  size_t cl_max_clusters = 7500;
  auto* cluster = app.add_subcommand("cluster", "Cluster frequent phrases");
  cluster->add_option("--corpus", cl_corpus, "Corpus file")->required();
  cluster->add_option("--encoder", cl_encoder, "Encoder checkpoint")->required();
  cluster->add_option("--vocab", cl_vocab, "Vocabulary file")->required();
  cluster->add_option("--min-cluster-size", cc.min_cluster_size, "HDBSCAN min cluster size")->capture_default_str();
  cluster->add_option("--top-phrases", cc.top_phrases, "Phrases kept")->capture_default_str();
  cluster->add_option("--max-clusters", cl_max_clusters, "Clusters kept")->capture_default_str();
  cluster->add_option("--out", cl_out, "Cluster table (TSV)")->required();

  // assets
  auto* assets = app.add_subcommand("assets", "Build client assets");
  assets->require_subcommand(1);
  std::string bt_clusters;
  std::string bt_out;
  auto* build_trie = assets->add_subcommand("build-trie", "Serialize the phrase trie");
  build_trie->add_option("--clusters", bt_clusters, "Cluster table (TSV)")->required();
  build_trie->add_option("--out", bt_out, "Trie asset")->required();

  std::string bs_clusters;
  std::string bs_catalog;
  std::string bs_encoder;
  std::string bs_vocab;
  std::string bs_out;
  double bs_threshold = stickers::kDefaultThreshold;
  auto* build_stickers = assets->add_subcommand("build-stickers", "Map clusters to stickers");
  build_stickers->add_option("--clusters", bs_clusters, "Cluster table (TSV)")->required();
  build_stickers->add_option("--catalog", bs_catalog, "Sticker catalog (JSON lines)")->required();
  build_stickers->add_option("--encoder", bs_encoder, "Encoder checkpoint")->required();
  build_stickers->add_option("--vocab", bs_vocab, "Vocabulary file")->required();
  build_stickers->add_option("--threshold", bs_threshold, "Attachment threshold")->capture_default_str();
  build_stickers->add_option("--out", bs_out, "Sticker map asset")->required();

  std::string rs_map;
  std::string rs_feedback;
  std::string rs_out;
  auto* refresh = assets->add_subcommand("refresh-stickers", "Re-rank stickers from feedback");
  refresh->add_option("--map", rs_map, "Sticker map asset")->required();
  refresh->add_option("--feedback", rs_feedback, "Feedback log (JSON lines)")->required();
  refresh->add_option("--out", rs_out, "Refreshed sticker map")->required();

  // replynet
  auto* rn = app.add_subcommand("replynet", "Cluster classifiers");
  rn->require_subcommand(1);
  std::string rt_kind = "reply";
  std::string rt_pairs;
  std::string rt_clusters;
  std::string rt_encoder;
  std::string rt_vocab;
  std::string rt_out;
  double rt_t = replynet::kDefaultReplyThreshold;
  replynet::HeadTrainConfig hc;
  auto* rn_train = rn->add_subcommand("train", "Train a reply or full net");
  rn_train->add_option("--kind", rt_kind, "reply or full")->capture_default_str();
  rn_train->add_option("--pairs", rt_pairs, "Pair file")->required();
  rn_train->add_option("--clusters", rt_clusters, "Cluster table (TSV)")->required();
  rn_train->add_option("--encoder", rt_encoder, "Encoder checkpoint")->required();
  rn_train->add_option("--vocab", rt_vocab, "Vocabulary file")->required();
  rn_train->add_option("--epochs", hc.epochs, "Epochs")->capture_default_str();
  rn_train->add_option("--lr", hc.learning_rate, "Learning rate")->capture_default_str();
  rn_train->add_option("--t-reply", rt_t, "Score threshold for shipped clusters")->capture_default_str();
  rn_train->add_option("--out", rt_out, "Checkpoint")->required();

  std::string rq_in;
  std::string rq_vocab;
  std::string rq_pairs;
  std::string rq_clusters;
  std::string rq_out;
  size_t rq_calibration = 256;
  auto* rn_quant = rn->add_subcommand("quantize", "Post-training 8-bit quantization");
  rn_quant->add_option("--in", rq_in, "Float checkpoint")->required();
  rn_quant->add_option("--vocab", rq_vocab, "Vocabulary file")->required();
  rn_quant->add_option("--pairs", rq_pairs, "Held-out pairs for calibration")->required();
  rn_quant->add_option("--clusters", rq_clusters, "Cluster table (TSV)")->required();
  rn_quant->add_option("--calibration", rq_calibration, "Calibration inputs")->capture_default_str();
  rn_quant->add_option("--out", rq_out, "Quantized checkpoint")->required();

  std::string re_float;
  std::string re_quant;
  std::string re_vocab;
  std::string re_pairs;
  std::string re_clusters;
  size_t re_limit = 1000;
  auto* rn_eval = rn->add_subcommand("eval", "Compare float and quantized nets");
  rn_eval->add_option("--float", re_float, "Float checkpoint")->required();
  rn_eval->add_option("--quantized", re_quant, "Quantized checkpoint")->required();
  rn_eval->add_option("--vocab", re_vocab, "Vocabulary file")->required();
  rn_eval->add_option("--pairs", re_pairs, "Evaluation pairs")->required();
  rn_eval->add_option("--clusters", re_clusters, "Cluster table (TSV)")->required();
  rn_eval->add_option("--limit", re_limit, "Inputs compared")->capture_default_str();

  // eval
  std::string ev_assets;
  std::string ev_pairs;
  std::string ev_full;
  std::string ev_out;
  auto* ev = app.add_subcommand("eval", "Typing simulation on held-out pairs");
  ev->add_option("--assets", ev_assets, "Asset directory")->required();
  ev->add_option("--pairs", ev_pairs, "Test pairs")->required();
  ev->add_option("--full-net", ev_full, "Also evaluate this (prev, typed) net");
  ev->add_option("--out", ev_out, "Metrics JSON");

  // pipeline
  std::string pl_config;
  std::string pl_out;
  uint64_t pl_seed = 1;
  auto* pl = app.add_subcommand("pipeline", "Run every stage on a synthetic corpus");
  pl->add_option("--config", pl_config, "Run config (JSON)");
  pl->add_option("--seed", pl_seed, "Random seed")->capture_default_str();
  pl->add_option("--out", pl_out, "Output directory")->required();

  // serve
  service::EngineConfig sc;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the /v1 HTTP API");
  serve->add_option("--assets", sc.assets_dir, "Asset directory (SR_ASSETS_DIR overrides)");
  serve->add_option("--port", sv_port, "Port")->capture_default_str();
  serve->add_option("--host", sv_host, "Bind address")->capture_default_str();
  serve->add_option("--geo", sc.geo, "Geography; selects a subdirectory of the assets");
  serve->add_option("--cache", sc.cache_capacity, "Reply score cache entries")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const corpus::SyntheticCorpus c = corpus::generate_synthetic_corpus(gen_opts);
      fs::create_directories(gen_out);
      corpus::write_corpus(gen_out + "/corpus.txt", c.conversations);
      corpus::write_ground_truth(gen_out + "/ground_truth.tsv", c.ground_truth);
      corpus::write_intents(gen_out + "/intents.tsv", c.intents);
      stickers::write_catalog(gen_out + "/stickers.jsonl", stickers::synthetic_catalog(c.intents));
      std::printf("%zu conversations, %zu ground-truth phrases\n", c.conversations.size(), c.ground_truth.size());
    } else if (prep->parsed()) {
      const auto pairs = corpus::extract_pairs(corpus::read_corpus(prep_corpus));
      const corpus::Vocab vocab = corpus::build_vocab(pairs, prep_vocab);
      fs::create_directories(prep_out);
      corpus::write_pairs(prep_out + "/pairs.tsv", pairs);
      corpus::write_vocab(prep_out + "/vocab.tsv", vocab);
      std::printf("%zu pairs, %d words\n", pairs.size(), vocab.word_table_size());
    } else if (train->parsed()) {
      const embedder::EncoderKind kind = embedder::parse_kind(train_kind);
      const trainer::TrainConfig defaults = trainer::TrainConfig::for_kind(kind);
      tc.optimizer = defaults.optimizer;
      tc.decay_steps = defaults.decay_steps;
      const corpus::Vocab vocab = corpus::read_vocab(train_vocab);
      trainer::DualEncoder model(embedder::Encoder(embedder::EncoderConfig::desk(kind, !train_no_charcnn), vocab, tc.seed),
                                 tc.seed);
      const auto result = trainer::fit(model, corpus::read_pairs(train_pairs), tc, [](long step, double loss) {
        if (step % 100 == 0) std::fprintf(stderr, "step %ld loss %.4f\n", step, loss);
      });
      nn::save_checkpoint(train_out, model.to_checkpoint());
      if (!train_loss_csv.empty()) trainer::write_loss_csv(train_loss_csv, result);
      std::printf("%ld steps, final loss %.4f\n", result.steps, result.final_loss);
    } else if (cluster->parsed()) {
      const auto dual = trainer::DualEncoder::from_checkpoint(nn::load_checkpoint(cl_encoder), corpus::read_vocab(cl_vocab));
      const auto phrases = clusterer::count_phrases(corpus::read_corpus(cl_corpus), cc.top_phrases);
      const auto model = clusterer::cluster(phrases, dual.encoder(), cc);
      const auto rows = clusterer::export_classes(model, cl_max_clusters);
      clusterer::write_cluster_table(cl_out, rows);
      std::printf("%zu phrases, %d clusters\n", phrases.size(), clusterer::num_classes(rows));
    } else if (build_trie->parsed()) {
      const auto trie = trie::TypedTrie::from_cluster_table(clusterer::read_cluster_table(bt_clusters));
      const auto bytes = trie.serialize();
      write_file_bytes(bt_out, bytes);
      std::printf("%zu phrases, %zu bytes\n", trie.size(), bytes.size());
    } else if (build_stickers->parsed()) {
      const auto dual = trainer::DualEncoder::from_checkpoint(nn::load_checkpoint(bs_encoder), corpus::read_vocab(bs_vocab));
      const auto mapping = stickers::build_mapping(clusterer::read_cluster_table(bs_clusters),
                                                   stickers::read_catalog(bs_catalog), dual.encoder(), bs_threshold);
      write_file_bytes(bs_out, stickers::serialize(mapping));
      std::printf("%zu attachments over %zu clusters\n", mapping.num_attachments(), mapping.clusters.size());
    } else if (refresh->parsed()) {
      const auto mapping = stickers::deserialize(read_file_bytes(rs_map));
      const auto events = stickers::read_feedback(rs_feedback);
      const auto result = stickers::refresh_from_feedback(mapping, events);
      write_file_bytes(rs_out, stickers::serialize(result.mapping));
      std::printf("%zu events, %zu ignored\n", events.size(), result.ignored);
      if (result.ignored > 0) std::fprintf(stderr, "warning: %zu events name unattached pairs\n", result.ignored);
    } else if (rn_train->parsed()) {
      const corpus::Vocab vocab = corpus::read_vocab(rt_vocab);
      const auto dual = trainer::DualEncoder::from_checkpoint(nn::load_checkpoint(rt_encoder), vocab);
      const auto rows = clusterer::read_cluster_table(rt_clusters);
      const bool full = rt_kind == "full";
      if (!full && rt_kind != "reply") throw ConfigError("--kind must be reply or full");
      replynet::ClusterNet net(full ? replynet::NetKind::kFull : replynet::NetKind::kReply,
                               embedder::Encoder::from_checkpoint(dual.encoder().to_checkpoint(), vocab),
                               std::max(2, clusterer::num_classes(rows)), hc.seed);
      net.set_t_reply(rt_t);
      const auto loss = net.fit(
          pipeline::cluster_examples(corpus::read_pairs(rt_pairs), pipeline::cluster_lookup(rows), full), hc);
      net.save(rt_out);
      std::printf("final loss %.4f\n", loss.back());
    } else if (rn_quant->parsed()) {
      const corpus::Vocab vocab = corpus::read_vocab(rq_vocab);
      const nn::Checkpoint fck = nn::load_checkpoint(rq_in);
      auto net = replynet::ClusterNet::from_checkpoint(fck, vocab);
      auto examples = pipeline::cluster_examples(corpus::read_pairs(rq_pairs),
                                                 pipeline::cluster_lookup(clusterer::read_cluster_table(rq_clusters)),
                                                 net.kind() == replynet::NetKind::kFull);
      if (examples.size() > rq_calibration) examples.resize(rq_calibration);
      const auto ranges = net.calibrate(column(examples, false), column(examples, true));
      const nn::Checkpoint qck = replynet::quantize_checkpoint(fck, ranges);
      nn::save_checkpoint(rq_out, qck);
      const size_t fb = fs::file_size(rq_in);
      const size_t qb = fs::file_size(rq_out);
      std::printf("float %zu bytes, quantized %zu bytes, ratio %.3f\n", fb, qb, static_cast<double>(fb) / qb);
    } else if (rn_eval->parsed()) {
      const corpus::Vocab vocab = corpus::read_vocab(re_vocab);
      const auto fnet = replynet::ClusterNet::load(re_float, re_vocab);
      const auto qnet = replynet::ClusterNet::load(re_quant, re_vocab);
      auto examples = pipeline::cluster_examples(corpus::read_pairs(re_pairs),
                                                 pipeline::cluster_lookup(clusterer::read_cluster_table(re_clusters)),
                                                 fnet.kind() == replynet::NetKind::kFull);
      if (examples.size() > re_limit) examples.resize(re_limit);
      const auto prev = column(examples, false);
      const auto typed = column(examples, true);
      const Mat a = fnet.predict_batch(prev, typed);
      const Mat b = qnet.predict_batch(prev, typed);
      std::printf("top-3 overlap %.4f over %zu inputs\n", replynet::top_k_overlap(a, b, 3), examples.size());
    } else if (ev->parsed()) {
      const auto loaded = service::load_assets(ev_assets);
      const auto rows = clusterer::read_cluster_table(ev_assets + "/" + service::kClusterFile);
      const auto cluster_of = pipeline::cluster_lookup(rows);
      const auto cases = pipeline::typing_cases(corpus::read_pairs(ev_pairs));
      std::vector<eval::TypingMetrics> table;
      table.push_back(eval::simulate_typing(
          pipeline::hybrid_ranker(loaded->reply_net.get(), loaded->t_reply, loaded->trie, loaded->weights), cases,
          cluster_of, 3, "Hybrid"));
      table.push_back(eval::simulate_typing(pipeline::trie_ranker(loaded->trie), cases, cluster_of, 3, "Trie only"));
      if (!ev_full.empty()) {
        const auto net = replynet::ClusterNet::load(ev_full, ev_assets + "/" + service::kVocabFile);
        table.push_back(eval::simulate_typing(pipeline::full_net_ranker(net), cases, cluster_of, 3,
                                              net.quantized() ? "Quantized NN" : "NN"));
      }
      std::printf("%s", eval::render_table(table).c_str());
      if (!ev_out.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& m : table) j.push_back(eval::to_json(m));
        write_text_file(ev_out, j.dump(2) + "\n");
      }
    } else if (pl->parsed()) {
      pipeline::PipelineConfig config;
      if (!pl_config.empty()) config = pipeline::PipelineConfig::from_json(nlohmann::json::parse(read_text_file(pl_config)));
      if (pl->count("--seed") > 0) config.seed = pl_seed;
      const auto run = pipeline::run_pipeline(config, pl_out, log_line);
      std::printf("%s", read_text_file(pl_out + "/table.txt").c_str());
      std::printf("ARI %.4f, clusters %d, sticker accuracy %.3f\n", run.report.ari, run.report.num_clusters,
                  run.report.sticker_accuracy);
    } else if (serve->parsed()) {
      if (const char* env = std::getenv("SR_ASSETS_DIR"); env != nullptr && *env != '\0') sc.assets_dir = env;
      if (sc.assets_dir.empty()) throw ConfigError("no asset directory: pass --assets or set SR_ASSETS_DIR");
      service::Engine engine(sc);
      try {
        engine.reload();
      } catch (const Error& e) {
        std::fprintf(stderr, "warning: assets not loaded (%s); serving 503 until reload\n", e.what());
      }
      service::HttpServer server(engine);
      const int port = server.bind(sv_host, sv_port);
      if (port < 0) throw Error("cannot bind " + sv_host + ":" + std::to_string(sv_port));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "listening on %s:%d (assets %s)\n", sv_host.c_str(), port, sc.resolved_dir().c_str());
      server.serve();
      g_server = nullptr;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
