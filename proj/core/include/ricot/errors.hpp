// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace ricot {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad field values, missing paths). The message
/// carries the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Integrity violations in datasets and derived artifacts.
class DataError : public Error {
 public:
  using Error::Error;
};

/// k-core or another filter reduced a catalog to nothing.
class EmptyCatalogError : public DataError {
 public:
  using DataError::DataError;
};

/// A transient failure talking to a remote backend. Retriable.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what,
                          std::optional<double> retry_after_seconds = {})
      : Error(what), retry_after_seconds(retry_after_seconds) {}

  /// Rate-limit hint from the backend, when one was given.
  std::optional<double> retry_after_seconds;
};

/// The remote backend answered with something that is not the protocol.
/// Not retriable; carries an excerpt of the raw payload.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string payload_excerpt)
      : Error(what + " | payload: " + payload_excerpt),
        payload_excerpt(std::move(payload_excerpt)) {}

  std::string payload_excerpt;
};

}  // namespace ricot
