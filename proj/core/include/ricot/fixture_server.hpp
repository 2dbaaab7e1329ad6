// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "ricot/scorer.hpp"

namespace ricot::scorer {

/// Hosts recorded score responses behind the /v1/score wire protocol so
/// integration tests can exercise the network boundary.
class FixtureScoreServer {
 public:
  explicit FixtureScoreServer(ScoreFixture entries);
  ~FixtureScoreServer();

  FixtureScoreServer(const FixtureScoreServer&) = delete;
  FixtureScoreServer& operator=(const FixtureScoreServer&) = delete;

  /// Bind to host:port (port 0 picks a free port). Returns the bound port.
  int bind(const std::string& host, int port);

  /// Serve until stop(). Call bind() first.
  void run();

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ricot::scorer
