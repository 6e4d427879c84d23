/*
Copyright 2026 The diarl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "diarl/protocol.hpp"
#include "diarl/session.hpp"

namespace diarl {

enum class Pace { kNone, kRealtime };

struct ServeOptions {
  std::string listen = "127.0.0.1:0";
  std::string transcript_path;
  std::string checkpoint_path;
  std::string reward_log_path;
  Pace pace = Pace::kNone;
  std::size_t max_client_queue = 1000;
};

// Per-client outbound lines. Bounded: once more than `limit` lines are
// waiting the queue is marked overflowed and refuses further pushes.
class OutboundQueue {
 public:
  explicit OutboundQueue(std::size_t limit) : limit_(limit) {}

  // False when the push overflowed the queue (the line is dropped).
  bool push(std::string line);
  // Pushes regardless of the bound (final error/ack lines).
  void push_final(std::string line);
  // Blocks until a line is available or the queue is closed and empty.
  std::optional<std::string> pop();
  void close();
  bool overflowed() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> lines_;
  std::size_t limit_;
  bool closed_ = false;
  bool overflowed_ = false;
};

// Session service: one acceptor, a reader and a writer per client, and the
// decision loop in `run`, which is the only code touching the session.
class Server {
 public:
  Server(Session session, ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts accepting. Returns the bound port.
  int bind();

  // Reads PCM from `audio_fd` until EOF or stop(), then finishes the
  // session, writes the output files, broadcasts snapshot_ack and closes
  // every client after its queue drains.
  void run(int audio_fd);

  // Thread-safe; makes `run` return soon.
  void stop();

  const Session& session() const { return session_; }

 private:
  struct Client;

  void accept_loop();
  void reader_loop(std::shared_ptr<Client> client);
  void writer_loop(std::shared_ptr<Client> client);
  void broadcast(const protocol::Message& m);
  void send_to(std::uint64_t client_id, const protocol::Message& m);
  void send_line(Client& c, std::string line);
  void dispatch_events();
  void wake();
  void shutdown_clients();

  Session session_;
  ServeOptions opts_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;

  std::mutex clients_mu_;
  std::vector<std::shared_ptr<Client>> clients_;
  std::uint64_t next_client_id_ = 1;

  // Registry as last broadcast; what hello replies report.
  std::mutex registry_mu_;
  std::vector<protocol::RegistryEntry> registry_view_;
};

}  // namespace diarl
