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

#include "diarl/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>

#include "diarl/audio.hpp"
#include "diarl/error.hpp"
#include "diarl/log.hpp"

#include <spdlog/spdlog.h>

namespace diarl {

namespace {

constexpr std::size_t kMaxLineBytes = 1 << 20;

std::pair<std::string, int> split_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::kConfig, "listen address must be host:port, got " + addr);
  std::string host = addr.substr(0, colon);
  if (host.empty() || host == "localhost") host = "127.0.0.1";
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    fail(ErrorCode::kConfig, "bad port in listen address " + addr);
  }
  if (port < 0 || port > 65535) fail(ErrorCode::kConfig, "port out of range in " + addr);
  return {host, port};
}

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kIo, "cannot write " + path);
  f << content;
  if (!f) fail(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace

// OutboundQueue

bool OutboundQueue::push(std::string line) {
  {
    std::lock_guard lock(mu_);
    if (closed_ || overflowed_) return false;
    if (lines_.size() >= limit_) {
      overflowed_ = true;
      lines_.clear();
      return false;
    }
    lines_.push_back(std::move(line));
  }
  cv_.notify_one();
  return true;
}

void OutboundQueue::push_final(std::string line) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    lines_.push_back(std::move(line));
  }
  cv_.notify_one();
}

std::optional<std::string> OutboundQueue::pop() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return closed_ || !lines_.empty(); });
  if (lines_.empty()) return std::nullopt;
  auto line = std::move(lines_.front());
  lines_.pop_front();
  return line;
}

void OutboundQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool OutboundQueue::overflowed() const {
  std::lock_guard lock(mu_);
  return overflowed_;
}

std::size_t OutboundQueue::size() const {
  std::lock_guard lock(mu_);
  return lines_.size();
}

// Server

struct Server::Client {
  Client(int fd_, std::uint64_t id_, std::size_t limit) : fd(fd_), id(id_), out(limit) {}
  ~Client() {
    if (fd >= 0) ::close(fd);
  }
  int fd;
  std::uint64_t id;
  OutboundQueue out;
  std::thread reader;
  std::thread writer;
  std::atomic<bool> dropped{false};
};

Server::Server(Session session, ServeOptions options) : session_(std::move(session)), opts_(std::move(options)) {
  if (opts_.max_client_queue == 0) fail(ErrorCode::kConfig, "max_client_queue must be positive");
  if (::pipe(wake_pipe_) != 0) fail(ErrorCode::kIo, "pipe failed");
  registry_view_ = protocol::registry_entries(session_.registry());
}

Server::~Server() {
  stop();
  if (acceptor_.joinable()) acceptor_.join();
  shutdown_clients();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  for (int fd : wake_pipe_)
    if (fd >= 0) ::close(fd);
}

int Server::bind() {
  const auto [host, port] = split_address(opts_.listen);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    fail(ErrorCode::kConfig, "listen host must be an IPv4 address: " + host);

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) fail(ErrorCode::kIo, "socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    fail(ErrorCode::kIo, "bind " + opts_.listen + ": " + std::strerror(errno));
  if (::listen(listen_fd_, 16) != 0) fail(ErrorCode::kIo, "listen failed");

  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  const int bound = ntohs(addr.sin_port);
  logger()->info("listening on {}:{}", host, bound);
  acceptor_ = std::thread([this] { accept_loop(); });
  return bound;
}

void Server::stop() {
  stopping_ = true;
  wake();
}

void Server::wake() {
  const char b = 1;
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &b, 1);
}

void Server::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    // A writer stuck on a client that never reads gives up eventually.
    timeval tv{2, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);

    std::lock_guard lock(clients_mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    auto c = std::make_shared<Client>(fd, next_client_id_++, opts_.max_client_queue);
    c->reader = std::thread([this, c] { reader_loop(c); });
    c->writer = std::thread([this, c] { writer_loop(c); });
    clients_.push_back(c);
    logger()->info("client {} connected", c->id);
  }
}

void Server::reader_loop(std::shared_ptr<Client> c) {
  std::string buf;
  char chunk[4096];
  bool discarding = false;  // inside an oversized line, skip to its newline
  auto reply_error = [&](const std::string& code, const std::string& msg) {
    send_line(*c, protocol::encode(protocol::ErrorMsg{code, msg}));
  };
  for (;;) {
    const auto n = ::recv(c->fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buf.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = buf.find('\n', start); nl != std::string::npos; nl = buf.find('\n', start)) {
      std::string_view line(buf.data() + start, nl - start);
      start = nl + 1;
      if (discarding) {
        discarding = false;
        continue;
      }
      if (line.size() > kMaxLineBytes) {
        reply_error("BAD_REQUEST", "line too long");
        continue;
      }
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      try {
        auto msg = protocol::decode(line);
        if (std::holds_alternative<protocol::Hello>(msg)) {
          protocol::Hello h;
          {
            std::lock_guard lock(registry_mu_);
            h.registry = registry_view_;
          }
          send_line(*c, protocol::encode(h));
        } else if (const auto* fb = std::get_if<protocol::Feedback>(&msg)) {
          session_.queue()->push({protocol::to_event(*fb, 0.0), c->id});
          wake();
        } else if (const auto* reg = std::get_if<protocol::RegisterSpeaker>(&msg)) {
          session_.queue()->push({RegisterRequest{reg->name}, c->id});
          wake();
        } else {
          reply_error("BAD_REQUEST", "clients may not send " + std::string(protocol::type_name(msg)));
        }
      } catch (const protocol::DecodeError& e) {
        reply_error(e.code(), e.what());
      }
    }
    buf.erase(0, start);
    if (buf.size() > kMaxLineBytes) {
      if (!discarding) reply_error("BAD_REQUEST", "line too long");
      discarding = true;
      buf.clear();
    }
  }
  // Reader gone: nothing more to send either.
  c->out.close();
}

void Server::writer_loop(std::shared_ptr<Client> c) {
  while (auto line = c->out.pop()) {
    if (!send_all(c->fd, *line)) {
      c->dropped = true;
      break;
    }
  }
  c->out.close();
  ::shutdown(c->fd, SHUT_RDWR);
  logger()->info("client {} closed", c->id);
}

void Server::send_line(Client& c, std::string line) {
  if (c.dropped) return;
  if (!c.out.push(std::move(line)) && c.out.overflowed() && !c.dropped.exchange(true)) {
    logger()->warn("client {} too slow; disconnecting", c.id);
    c.out.push_final(protocol::encode(protocol::ErrorMsg{"SLOW_CLIENT", "outbound queue overflow"}));
    c.out.close();
  }
}

void Server::broadcast(const protocol::Message& m) {
  const auto line = protocol::encode(m);
  std::lock_guard lock(clients_mu_);
  for (auto& c : clients_) send_line(*c, line);
}

void Server::send_to(std::uint64_t client_id, const protocol::Message& m) {
  std::lock_guard lock(clients_mu_);
  for (auto& c : clients_)
    if (c->id == client_id) send_line(*c, protocol::encode(m));
}

void Server::dispatch_events() {
  for (auto& ev : session_.take_events()) {
    auto msg = protocol::from_session_event(ev);
    if (const auto* err = std::get_if<ErrorEvent>(&ev)) {
      send_to(err->origin, msg);
      continue;
    }
    if (const auto* reg = std::get_if<protocol::RegistryUpdate>(&msg)) {
      std::lock_guard lock(registry_mu_);
      registry_view_ = reg->entries;
    }
    if (!opts_.reward_log_path.empty())
      if (const auto* rr = std::get_if<protocol::RewardRecordMsg>(&msg)) {
        std::ofstream f(opts_.reward_log_path, std::ios::app);
        f << rr->record.to_json().dump() << '\n';
      }
    broadcast(msg);
  }
}

void Server::shutdown_clients() {
  std::vector<std::shared_ptr<Client>> clients;
  {
    std::lock_guard lock(clients_mu_);
    clients.swap(clients_);
  }
  for (auto& c : clients) {
    c->out.close();
    if (c->writer.joinable()) c->writer.join();
    ::shutdown(c->fd, SHUT_RDWR);
    if (c->reader.joinable()) c->reader.join();
  }
}

void Server::run(int audio_fd) {
  if (!opts_.reward_log_path.empty()) std::ofstream(opts_.reward_log_path, std::ios::trunc);
  PcmDecoder decoder;
  std::vector<std::int16_t> samples;
  std::uint64_t total_samples = 0;
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::uint8_t> buf(4096);
  bool audio_open = true;

  auto drain_wake = [&] {
    char junk[64];
    while (true) {
      pollfd p{wake_pipe_[0], POLLIN, 0};
      if (::poll(&p, 1, 0) <= 0) break;
      if (::read(wake_pipe_[0], junk, sizeof junk) <= 0) break;
    }
    session_.drain_requests();
    dispatch_events();
  };

  while (audio_open && !stopping_) {
    pollfd fds[2] = {{audio_fd, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::kIo, "poll failed");
    }
    if (fds[1].revents & POLLIN) drain_wake();
    if (!(fds[0].revents & (POLLIN | POLLHUP | POLLERR))) continue;

    const auto n = ::read(audio_fd, buf.data(), buf.size());
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorCode::kIo, std::string("audio read: ") + std::strerror(errno));
    }
    if (n == 0) {
      audio_open = false;
      break;
    }
    samples.clear();
    decoder.feed({buf.data(), static_cast<std::size_t>(n)}, samples);
    if (samples.empty()) continue;
    total_samples += samples.size();
    if (opts_.pace == Pace::kRealtime) {
      const auto due = start + std::chrono::microseconds(total_samples * 1000000 / kSampleRate);
      while (!stopping_ && std::chrono::steady_clock::now() < due) {
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(due - std::chrono::steady_clock::now()).count();
        pollfd p{wake_pipe_[0], POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(std::max<long>(left, 1))) > 0) drain_wake();
      }
    }
    session_.push_pcm(samples);
    dispatch_events();
  }

  session_.drain_requests();
  session_.finish();
  dispatch_events();
  if (!opts_.transcript_path.empty()) write_file(opts_.transcript_path, session_.transcript());
  if (!opts_.checkpoint_path.empty()) write_file(opts_.checkpoint_path, session_.snapshot().dump(1) + "\n");
  broadcast(protocol::SnapshotAck{opts_.checkpoint_path, session_.segment_count(), session_.timeline_hash()});

  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  shutdown_clients();
}

}  // namespace diarl
