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

#include <atomic>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "sr/common/binary_io.hpp"
#include "sr/service/engine.hpp"
#include "sr/service/http.hpp"
#include "support/toy_assets.hpp"

using namespace sr;
using namespace sr::service;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return sub.empty() ? path.string() : (path / sub).string(); }
};

int status_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 200;
}

std::vector<int> ids(const PredictResult& r) {
  std::vector<int> out;
  for (const auto& c : r.clusters) out.push_back(c.cluster_id);
  return out;
}

// Serves an engine on a free local port for the lifetime of the object.
struct LiveServer {
  HttpServer server;
  int port = -1;
  std::thread thread;
  explicit LiveServer(Engine& engine) : server(engine) {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.serve(); });
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5);
    c.set_read_timeout(5);
    return c;
  }
};

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("engine without assets answers 503") {
    TempDir dir("sr_service_empty");
    Engine engine({dir.str("missing")});
    CHECK_FALSE(engine.loaded());
    CHECK(status_of([&] { engine.route_message("s", "hi"); }) == 503);
    CHECK(status_of([&] { engine.predict("s", "h"); }) == 503);
    CHECK(engine.health().at("status") == "no_assets");
    CHECK_THROWS(engine.reload());
    CHECK_FALSE(engine.loaded());
  }

  TEST_CASE("predict without a reply net ranks typed evidence") {
    TempDir dir("sr_service_trie");
    testing::write_toy_assets(dir.str());
    Engine engine({dir.str()});
    engine.reload();
    CHECK(ids(engine.predict("s", "")).empty());
    const auto r = engine.predict("s", "H");
    CHECK(ids(r) == std::vector<int>{0, 1});
    REQUIRE(r.stickers.items.size() == 1);
    CHECK(r.stickers.items[0].sticker_id == "wave");
    CHECK(r.latency_ms >= 0.0);
    CHECK(r.version == engine.assets()->bundle.version);
    const auto b = engine.predict("s", "b");
    CHECK(ids(b) == std::vector<int>{2});
    CHECK(b.stickers.items.size() == 2);
    // without a reply net, messages route to nothing
    CHECK(engine.route_message("s", "hello").clusters.empty());
  }

  TEST_CASE("reply scores, sessions, cache and size limits") {
    TempDir dir("sr_service_reply");
    testing::write_toy_assets(dir.str(), 0, true);
    Engine engine({dir.str()});
    engine.reload();
    const RouteResult routed = engine.route_message("alice", "hi there");
    REQUIRE(routed.clusters.size() == 2);
    CHECK(routed.clusters[0].cluster_id == 0);
    CHECK(routed.clusters[0].score == doctest::Approx(0.9));
    CHECK(routed.clusters[1].cluster_id == 1);
    CHECK(engine.cache_size() == 1);
    engine.route_message("alice", "hi there");
    CHECK(engine.cache_size() == 1);

    // alice sees reply clusters before typing; bob has received nothing
    CHECK(ids(engine.predict("alice", "")) == std::vector<int>{0, 1});
    CHECK(ids(engine.predict("bob", "")).empty());
    CHECK(engine.num_sessions() == 2);
    // typed evidence for cluster 2 overtakes the reply favourite
    CHECK(engine.predict("alice", "bye").clusters[0].cluster_id == 2);

    const std::string big(kMaxTextBytes + 1, 'a');
    CHECK(status_of([&] { engine.route_message("alice", big); }) == 413);
    CHECK(status_of([&] { engine.predict("alice", big); }) == 413);
    CHECK(status_of([&] { engine.route_message("alice", std::string(kMaxTextBytes, 'a')); }) == 200);

    const RouteResult empty = engine.route_message("carol", "");
    CHECK(empty.degenerate);

    EngineConfig strict{dir.str()};
    strict.t_reply = 0.6;
    Engine high(strict);
    high.reload();
    CHECK(high.route_message("x", "hi").clusters.size() == 1);
  }

  TEST_CASE("asset bundle, versions and failed reloads") {
    TempDir dir("sr_service_assets");
    testing::write_toy_assets(dir.str());
    Engine engine({dir.str()});
    engine.reload();
    const std::string v1 = engine.assets()->bundle.version;
    CHECK(v1.size() == 16);
    CHECK(engine.get_assets(v1).not_modified);
    CHECK_FALSE(engine.get_assets("").not_modified);
    CHECK_FALSE(engine.get_assets("0000").not_modified);
    CHECK(engine.assets()->bundle.trie == read_file_bytes(dir.str("trie.bin")));
    const auto j = engine.assets()->bundle.to_json();
    CHECK(j.at("version") == v1);
    CHECK(base64_decode(j.at("trie").get<std::string>()) == read_file_bytes(dir.str("trie.bin")));

    // reload of unchanged files keeps the version; changed files change it
    engine.reload();
    CHECK(engine.assets()->bundle.version == v1);
    testing::write_toy_assets(dir.str(), 1);
    engine.reload();
    const std::string v2 = engine.assets()->bundle.version;
    CHECK(v2 != v1);

    // a corrupt trie leaves the previous snapshot serving
    write_file_bytes(dir.str("trie.bin"), std::vector<uint8_t>{'b', 'a', 'd'});
    CHECK_THROWS(engine.reload());
    CHECK(engine.assets()->bundle.version == v2);
    CHECK(engine.predict("s", "hi").clusters[0].cluster_id == 1);
  }

  TEST_CASE("geo selects a subdirectory when present") {
    TempDir dir("sr_service_geo");
    testing::write_toy_assets(dir.str());
    testing::write_toy_assets(dir.str("in"), 2);
    EngineConfig in{dir.str()};
    in.geo = "in";
    CHECK(in.resolved_dir() == dir.str("in"));
    Engine engine(in);
    engine.reload();
    CHECK(engine.predict("s", "hi").clusters[0].cluster_id == 2);
    EngineConfig other{dir.str()};
    other.geo = "us";
    CHECK(other.resolved_dir() == dir.str());
  }

  TEST_CASE("readers never observe a half-swapped snapshot") {
    TempDir dir("sr_service_swap");
    testing::write_toy_assets(dir.str("a"), 0);
    testing::write_toy_assets(dir.str("b"), 2);
    fs::create_directory_symlink(dir.str("a"), dir.str("current"));
    Engine engine({dir.str("current")});
    engine.reload();
    const std::string va = engine.assets()->bundle.version;
    std::string vb;
    std::atomic<bool> done{false};
    std::atomic<int> bad{0}, reads{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
      readers.emplace_back([&] {
        while (!done) {
          const auto r = engine.predict("s" + std::to_string(reads % 7), "hi");
          const int top = r.clusters.at(0).cluster_id;
          if (!((r.version == va && top == 0) || (r.version != va && top == 2))) ++bad;
          ++reads;
        }
      });
    }
    while (reads < 3) std::this_thread::yield();
    for (int i = 0; i < 40; ++i) {
      std::this_thread::yield();
      const std::string target = dir.str(i % 2 == 0 ? "b" : "a");
      fs::create_directory_symlink(target, dir.str("next"));
      fs::rename(dir.str("next"), dir.str("current"));
      engine.reload();
      if (i == 0) vb = engine.assets()->bundle.version;
    }
    done = true;
    for (auto& th : readers) th.join();
    CHECK(vb != va);
    CHECK(bad == 0);
    CHECK(reads > 0);
  }

  TEST_CASE("reply cache evicts least recently used") {
    ReplyCache cache(2);
    cache.put("a", {{1, 0.5}});
    cache.put("b", {{2, 0.5}});
    CHECK(cache.get("a").has_value());
    cache.put("c", {{3, 0.5}});
    CHECK_FALSE(cache.get("b").has_value());
    CHECK(cache.get("a").has_value());
    CHECK(cache.get("c")->front().cluster_id == 3);
    CHECK(cache.size() == 2);
    cache.clear();
    CHECK(cache.size() == 0);
  }

  TEST_CASE("HTTP endpoints") {
    TempDir dir("sr_service_http");
    testing::write_toy_assets(dir.str(), 0, true);
    Engine engine({dir.str()});
    engine.reload();
    LiveServer live(engine);
    REQUIRE(live.port > 0);
    auto c = live.client();

    auto msg = c.Post("/v1/message", R"({"session_id":"u1","text":"hi there"})", "application/json");
    REQUIRE(msg);
    CHECK(msg->status == 200);
    const auto mj = nlohmann::json::parse(msg->body);
    CHECK(mj.at("clusters").size() == 2);
    CHECK(mj.at("clusters")[0].at("id") == 0);

    auto pred = c.Get("/v1/predict?session_id=u1&typed=bye");
    REQUIRE(pred);
    CHECK(pred->status == 200);
    const auto pj = nlohmann::json::parse(pred->body);
    CHECK(pj.at("clusters")[0].at("id") == 2);
    CHECK(pj.at("clusters")[0].at("provenance") == "trie");
    CHECK(pj.at("clusters")[1].at("provenance") == "reply");
    for (const char* key : {"q", "p_trie", "p_reply"}) CHECK(pj.at("clusters")[0].contains(key));
    CHECK(pj.at("stickers")[0].at("id") == "door");
    CHECK(pj.at("latency_ms").get<double>() >= 0.0);
    const std::string version = pj.at("version");

    auto assets = c.Get("/v1/assets");
    REQUIRE(assets);
    CHECK(assets->status == 200);
    CHECK(assets->get_header_value("ETag") == version);
    const auto aj = nlohmann::json::parse(assets->body);
    CHECK(base64_decode(aj.at("sticker_map").get<std::string>()) == read_file_bytes(dir.str("stickers.bin")));
    auto same = c.Get(("/v1/assets?since=" + version).c_str());
    REQUIRE(same);
    CHECK(same->status == 304);
    CHECK(same->body.empty());
    for (const char* file : {kTrieFile, kStickerFile, kClusterFile, kCombinerFile}) {
      auto raw = c.Get((std::string("/v1/assets/") + file).c_str());
      REQUIRE(raw);
      CHECK(raw->status == 200);
      const auto disk = read_file_bytes(dir.str(file));
      CHECK(raw->body == std::string(disk.begin(), disk.end()));
    }
    CHECK(c.Get("/v1/assets/reply_net.ckpt")->status == 404);

    CHECK(c.Post("/v1/message", "{not json", "application/json")->status == 400);
    CHECK(c.Post("/v1/message", R"({"session_id":"u1"})", "application/json")->status == 400);
    CHECK(c.Get("/v1/predict?typed=h")->status == 400);
    const std::string big = nlohmann::json{{"session_id", "u1"}, {"text", std::string(2000, 'x')}}.dump();
    CHECK(c.Post("/v1/message", big, "application/json")->status == 413);

    auto health = c.Get("/v1/health");
    REQUIRE(health);
    const auto hj = nlohmann::json::parse(health->body);
    CHECK(hj.at("status") == "ok");
    CHECK(hj.at("reply_model") == true);
    CHECK(hj.at("phrases") == 5);

    testing::write_toy_assets(dir.str(), 1, true);
    auto reload = c.Post("/v1/reload", "", "application/json");
    REQUIRE(reload);
    CHECK(reload->status == 200);
    CHECK(nlohmann::json::parse(reload->body).at("version") != version);
    write_file_bytes(dir.str("trie.bin"), std::vector<uint8_t>{'x'});
    CHECK(c.Post("/v1/reload", "", "application/json")->status == 500);
    CHECK(c.Get("/v1/health")->status == 200);
  }

  TEST_CASE("HTTP without assets answers 503") {
    TempDir dir("sr_service_http_empty");
    Engine engine({dir.str("none")});
    LiveServer live(engine);
    auto c = live.client();
    CHECK(c.Get("/v1/predict?session_id=a&typed=h")->status == 503);
    CHECK(c.Get("/v1/assets")->status == 503);
    CHECK(c.Post("/v1/message", R"({"session_id":"a","text":"hi"})", "application/json")->status == 503);
    CHECK(c.Get("/v1/health")->status == 200);
  }
}
