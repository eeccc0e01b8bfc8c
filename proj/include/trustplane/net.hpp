/*
 * Copyright 2026 The trustplane authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <atomic>
#include <optional>
#include <string>

#include "trustplane/bytes.hpp"

namespace trustplane::net {

struct Endpoint {
  std::string host;
  uint16_t port = 0;

  static std::optional<Endpoint> parse(const std::string& text);  // "host:port"
  std::string str() const;
  bool is_loopback() const;
};

/// Connected TCP stream (move-only fd wrapper). TCP_NODELAY is always set;
/// the latency harness cannot tolerate Nagle delays.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd);
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static std::optional<TcpStream> connect(const Endpoint& ep, int timeout_ms = 5000);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  int release_fd();
  void close();
  void shutdown_write();
  bool set_nonblocking(bool enabled);

  bool write_all(ByteView data);
  // Reads exactly out.size() bytes or fails (timeout/EOF/error).
  bool read_exact(std::span<uint8_t> out, int timeout_ms = 5000);
  // Reads until EOF (bounded by max_len), appending to out.
  bool read_to_eof(Bytes& out, int timeout_ms = 5000, size_t max_len = 1 << 22);

  std::optional<Endpoint> peer() const;

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  ~TcpListener();

  // Port 0 binds an ephemeral port; see local_endpoint() for the result.
  static std::optional<TcpListener> bind(const Endpoint& ep);

  bool valid() const { return fd_ >= 0; }
  Endpoint local_endpoint() const { return local_; }

  // Waits up to timeout_ms; nullopt on timeout or closed listener.
  std::optional<TcpStream> accept(int timeout_ms);
  void close();

 private:
  int fd_ = -1;
  Endpoint local_;
};

}  // namespace trustplane::net
