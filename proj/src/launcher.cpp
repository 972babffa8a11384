// Copyright 2026 The randstream Authors.
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

#include "randstream/launcher.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

extern char** environ;

namespace randstream::launcher {

namespace {

using Clock = std::chrono::steady_clock;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tail(const std::string& s, std::size_t n = 4096) { return s.size() <= n ? s : s.substr(s.size() - n); }

}  // namespace

std::uint64_t child_seed(std::uint64_t base_seed, std::uint64_t btid) { return base_seed + btid; }

void LaunchConfig::validate() const {
  if (num_instances < 1) throw std::invalid_argument("num_instances must be >= 1");
  if (executable.empty()) throw std::invalid_argument("producer executable required");
  std::set<std::string> seen;
  for (const auto& n : named_sockets) {
    if (n.empty() || n.find('=') != std::string::npos) throw std::invalid_argument("bad socket name '" + n + "'");
    if (!seen.insert(n).second) throw std::invalid_argument("duplicate socket name '" + n + "'");
  }
}

LaunchInfo::~LaunchInfo() {
  shutdown(Millis(2000));
  for (const auto& c : children_) {
    std::error_code ec;
    std::filesystem::remove(c.log_path, ec);
  }
}

std::vector<pid_t> LaunchInfo::pids() const {
  std::lock_guard lk(mu_);
  std::vector<pid_t> out;
  for (const auto& c : children_) out.push_back(c.pid);
  return out;
}

channel::Distributor& LaunchInfo::distributor(const std::string& name) {
  auto it = data_.find(name);
  if (it == data_.end()) throw std::out_of_range("no data socket named '" + name + "'");
  return *it->second;
}

void LaunchInfo::reap_locked(bool block) {
  for (auto& c : children_) {
    if (c.reaped) continue;
    int status = 0;
    pid_t r;
    do {
      r = ::waitpid(c.pid, &status, block ? 0 : WNOHANG);
    } while (r < 0 && errno == EINTR);
    if (r == c.pid) {
      c.reaped = true;
      c.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    } else if (r < 0) {
      // Not our child any more (reaped elsewhere); nothing left to wait for.
      c.reaped = true;
      c.exit_code = -1;
    }
  }
}

void LaunchInfo::kill_all_locked() {
  for (auto& c : children_) {
    if (!c.reaped) ::kill(c.pid, SIGKILL);
  }
}

std::vector<ChildHealth> LaunchInfo::poll_health() {
  std::lock_guard lk(mu_);
  reap_locked(false);
  std::vector<ChildHealth> out;
  for (const auto& c : children_) {
    out.push_back({c.btid, c.reaped ? ChildState::kExited : ChildState::kRunning, c.reaped ? c.exit_code : 0});
  }
  return out;
}

bool LaunchInfo::is_shut_down() const {
  std::lock_guard lk(mu_);
  return shut_down_;
}

void LaunchInfo::shutdown(Millis grace) {
  std::lock_guard lk(mu_);
  if (shut_down_) return;
  shut_down_ = true;

  if (control_) {
    try {
      control_->send(channel::make_command(channel::kCmdStop));
    } catch (const std::exception&) {
    }
  }
  // Producers blocked in publish() see PeerClosed once the data sockets go.
  for (auto& [name, d] : data_) d->close();

  const auto deadline = Clock::now() + grace;
  while (true) {
    reap_locked(false);
    bool all = true;
    for (const auto& c : children_) all = all && c.reaped;
    if (all || Clock::now() >= deadline) break;
    std::this_thread::sleep_for(Millis(5));
  }
  kill_all_locked();
  reap_locked(true);
  if (control_) control_->close();
}

std::string LaunchInfo::child_log(std::uint64_t btid) const {
  std::lock_guard lk(mu_);
  for (const auto& c : children_) {
    if (c.btid == btid) return read_file(c.log_path);
  }
  throw std::out_of_range("no child with btid " + std::to_string(btid));
}

std::unique_ptr<LaunchInfo> launch(const LaunchConfig& cfg) {
  cfg.validate();
  std::unique_ptr<LaunchInfo> li(new LaunchInfo());

  try {
    for (const auto& name : cfg.named_sockets) {
      if (name == kControlSocket) {
        li->control_ = std::make_unique<channel::ControlHub>(channel::ControlHub::bind(cfg.host, 0));
        li->addresses_[name] = li->control_->endpoint();
      } else {
        channel::DistributorConfig dc = cfg.data;
        dc.host = cfg.host;
        dc.port = 0;
        auto d = std::make_unique<channel::Distributor>(channel::Distributor::bind(dc));
        li->addresses_[name] = d->endpoint();
        li->data_[name] = std::move(d);
      }
    }
  } catch (const channel::ChannelError& e) {
    if (e.code() == channel::ChannelErrc::kAddrInUse) throw LaunchError(LaunchErrc::kPortExhausted, e.what());
    throw;
  }

  if (::access(cfg.executable.c_str(), X_OK) != 0) {
    throw LaunchError(LaunchErrc::kSpawnFailed,
                      "cannot execute '" + cfg.executable + "': " + std::strerror(errno));
  }

  const auto log_dir = std::filesystem::temp_directory_path();
  for (std::size_t i = 0; i < cfg.num_instances; ++i) {
    const std::uint64_t btid = i;
    std::vector<std::string> args{cfg.executable,
                                  "--btid",
                                  std::to_string(btid),
                                  "--scene",
                                  cfg.scene,
                                  "--seed",
                                  std::to_string(child_seed(cfg.base_seed, btid))};
    for (const auto& name : cfg.named_sockets) {
      args.push_back("--sock");
      args.push_back(name + "=" + li->addresses_.at(name).to_string());
    }
    args.insert(args.end(), cfg.extra_args.begin(), cfg.extra_args.end());
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    std::string log_path = (log_dir / "randstream-child-XXXXXX").string();
    const int log_fd = ::mkstemp(log_path.data());
    if (log_fd < 0) throw LaunchError(LaunchErrc::kSpawnFailed, std::string("cannot create child log: ") + std::strerror(errno));

    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_adddup2(&fa, log_fd, 1);
    posix_spawn_file_actions_adddup2(&fa, log_fd, 2);
    posix_spawn_file_actions_addclose(&fa, log_fd);
    pid_t pid = -1;
    const int rc = ::posix_spawn(&pid, cfg.executable.c_str(), &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    ::close(log_fd);
    if (rc != 0) {
      std::filesystem::remove(log_path);
      throw LaunchError(LaunchErrc::kSpawnFailed,
                        "spawning '" + cfg.executable + "' failed: " + std::strerror(rc));
    }
    std::lock_guard lk(li->mu_);
    li->children_.push_back({btid, pid, false, 0, log_path});
    li->btids_.push_back(btid);
  }

  if (li->control_) {
    const auto deadline = Clock::now() + cfg.ready_timeout;
    while (!li->control_->wait_for_producers(cfg.num_instances, Millis(20))) {
      for (const auto& h : li->poll_health()) {
        if (h.state == ChildState::kExited && h.exit_code != 0) {
          throw LaunchError(LaunchErrc::kSpawnFailed, "producer " + std::to_string(h.btid) + " exited with code " +
                                                          std::to_string(h.exit_code) + " during startup:\n" +
                                                          tail(li->child_log(h.btid)));
        }
      }
      if (Clock::now() >= deadline) {
        throw LaunchError(LaunchErrc::kSpawnFailed, "producers did not connect within " +
                                                        std::to_string(cfg.ready_timeout.count()) + " ms");
      }
    }
  }
  return li;
}

}  // namespace randstream::launcher
