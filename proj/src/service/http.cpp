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

#include "sr/service/http.hpp"

#include <cstdio>

#include "httplib.h"
#include "json.hpp"
#include "sr/common/binary_io.hpp"

namespace sr::service {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

// Runs fn, mapping library errors to HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    send_error(res, e.status(), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("bad request: ") + e.what());
  } catch (const Error& e) {
    send_error(res, 500, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

json cluster_scores_json(const std::vector<ClusterScore>& scores) {
  json arr = json::array();
  for (const auto& c : scores) arr.push_back({{"id", c.cluster_id}, {"score", c.score}});
  return arr;
}

}  // namespace

HttpServer::HttpServer(Engine& engine) : engine_(engine), server_(std::make_unique<httplib::Server>()) {
  httplib::Server& s = *server_;
  s.set_payload_max_length(64 * 1024);
  s.set_tcp_nodelay(true);

  s.Post("/v1/message", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const std::string session = body.at("session_id").get<std::string>();
      const std::string text = body.at("text").get<std::string>();
      const RouteResult r = engine_.route_message(session, text);
      json out = {{"clusters", cluster_scores_json(r.clusters)}, {"version", r.version}};
      if (r.degenerate) out["degenerate"] = true;
      send_json(res, 200, out);
    });
  });

  s.Get("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("session_id")) throw ServiceError(400, "missing session_id");
      const PredictResult r = engine_.predict(req.get_param_value("session_id"), req.get_param_value("typed"));
      json clusters = json::array();
      for (const auto& c : r.clusters) {
        clusters.push_back({{"id", c.cluster_id},
                            {"q", c.q},
                            {"p_trie", c.p_trie},
                            {"p_reply", c.p_reply},
                            {"provenance", hybrid::provenance_name(c.provenance)}});
      }
      json stickers = json::array();
      for (const auto& it : r.stickers.items) {
        stickers.push_back({{"id", it.sticker_id}, {"label", it.label}, {"cluster", it.cluster_id}});
      }
      send_json(res, 200,
                {{"clusters", clusters}, {"stickers", stickers}, {"latency_ms", r.latency_ms}, {"version", r.version}});
    });
  });

  s.Get("/v1/assets", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const AssetsResponse r = engine_.get_assets(req.get_param_value("since"));
      res.set_header("ETag", r.assets->bundle.version);
      if (r.not_modified) {
        res.status = 304;
        return;
      }
      send_json(res, 200, r.assets->bundle.to_json());
    });
  });

  s.Get(R"(/v1/assets/([A-Za-z_.]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const AssetsResponse r = engine_.get_assets("");
      const AssetBundle& b = r.assets->bundle;
      const std::string name = req.matches[1];
      res.set_header("ETag", b.version);
      if (name == kTrieFile) {
        res.set_content(std::string(b.trie.begin(), b.trie.end()), "application/octet-stream");
      } else if (name == kStickerFile) {
        res.set_content(std::string(b.sticker_map.begin(), b.sticker_map.end()), "application/octet-stream");
      } else if (name == kClusterFile) {
        res.set_content(b.cluster_table, "text/tab-separated-values");
      } else if (name == kCombinerFile) {
        res.set_content(b.combiner, "application/json");
      } else {
        throw ServiceError(404, "no such asset: " + name);
      }
    });
  });

  s.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, engine_.health()); });
  });

  s.Post("/v1/reload", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      try {
        engine_.reload();
      } catch (const ServiceError&) {
        throw;
      } catch (const Error& e) {
        throw ServiceError(500, std::string("reload failed: ") + e.what());
      }
      send_json(res, 200, engine_.health());
    });
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::serve() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace sr::service
