// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/fixture_server.hpp"

#include <httplib.h>

#include "ricot/jsonl.hpp"

namespace ricot::scorer {

struct FixtureScoreServer::Impl {
  ScoreFixture entries;
  httplib::Server server;
  std::string host;
  int port = 0;
};

FixtureScoreServer::FixtureScoreServer(ScoreFixture entries)
    : impl_(std::make_unique<Impl>()) {
  impl_->entries = std::move(entries);

  impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  // Test harnesses stop the server over the wire; signal delivery to a
  // detached child is not portable across sandboxed kernels.
  impl_->server.Post("/__shutdown__", [this](const httplib::Request&,
                                             httplib::Response& res) {
    res.set_content("bye", "text/plain");
    impl_->server.stop();
  });

  impl_->server.Post("/v1/score", [this](const httplib::Request& req,
                                         httplib::Response& res) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("instruction") ||
        !j.contains("candidates") || !j["candidates"].is_array()) {
      res.status = 400;
      res.set_content(json{{"error", "malformed score request"}}.dump(),
                      "application/json");
      return;
    }
    ScoreRequest request;
    request.instruction = j["instruction"].get<std::string>();
    for (const auto& c : j["candidates"]) {
      request.candidates.push_back(c.get<std::string>());
    }
    const std::string digest = score_request_digest(request);
    const auto it = impl_->entries.find(digest);
    if (it == impl_->entries.end()) {
      res.status = 404;
      res.set_content(
          json{{"error", "unknown request digest"}, {"digest", digest}}.dump(),
          "application/json");
      return;
    }
    json scores = json::array();
    for (const auto& s : it->second) {
      scores.push_back(json{{"total", s.total}, {"token_count", s.token_count}});
    }
    res.set_content(json{{"scores", std::move(scores)}}.dump(),
                    "application/json");
  });
}

FixtureScoreServer::~FixtureScoreServer() { stop(); }

int FixtureScoreServer::bind(const std::string& host, int port) {
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) {
      throw Error("serve-fixture: cannot bind " + host + ":" +
                  std::to_string(port));
    }
    impl_->port = port;
  }
  if (impl_->port <= 0) {
    throw Error("serve-fixture: cannot bind " + host);
  }
  return impl_->port;
}

void FixtureScoreServer::run() { impl_->server.listen_after_bind(); }

void FixtureScoreServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace ricot::scorer
