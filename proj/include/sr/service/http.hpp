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

#pragma once

#include <memory>
#include <string>

#include "sr/service/engine.hpp"

namespace httplib {
class Server;
}

namespace sr::service {

// /v1 HTTP front end over an Engine.
//   POST /v1/message        {session_id, text} -> {clusters:[{id,score}], version}
//   GET  /v1/predict        ?session_id=&typed= -> clusters, stickers, latency_ms, version
//   GET  /v1/assets         ?since= -> bundle JSON, or 304 when since is current
//   GET  /v1/assets/<file>  raw asset bytes
//   GET  /v1/health
//   POST /v1/reload
class HttpServer {
 public:
  explicit HttpServer(Engine& engine);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to port (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  bool serve();
  void stop();

 private:
  Engine& engine_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace sr::service
