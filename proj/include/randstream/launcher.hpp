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

#pragma once

// Spawns and supervises a fleet of producer processes.
//
// Every named socket is bound on port 0 before any child starts. The socket
// named "CTRL" becomes a ControlHub, every other name a Distributor. Child i
// is started as
//
//   <executable> --btid i --scene NAME --seed base_seed+i
//                --sock DATA=tcp://h:p --sock CTRL=tcp://h:p [extra_args...]
//
// with stdout and stderr captured in a per-child log file.

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "randstream/channel.hpp"

namespace randstream::launcher {

using Millis = std::chrono::milliseconds;

inline constexpr const char* kControlSocket = "CTRL";
inline constexpr const char* kDataSocket = "DATA";

struct LaunchConfig {
  std::size_t num_instances = 1;
  std::string scene;
  std::vector<std::string> named_sockets{kDataSocket, kControlSocket};
  std::uint64_t base_seed = 0;
  std::string executable;
  std::vector<std::string> extra_args;  // appended to every child's arguments
  std::string host = "127.0.0.1";
  // Applied to every data socket; host and port are chosen by the launcher.
  channel::DistributorConfig data;
  // With a CTRL socket, launch() waits this long for every child to connect.
  Millis ready_timeout{15000};

  /// Throws std::invalid_argument.
  void validate() const;
};

enum class LaunchErrc { kSpawnFailed, kPortExhausted };

class LaunchError : public std::runtime_error {
 public:
  LaunchError(LaunchErrc code, const std::string& detail) : std::runtime_error(detail), code_(code) {}
  LaunchErrc code() const noexcept { return code_; }

 private:
  LaunchErrc code_;
};

enum class ChildState { kRunning, kExited };

struct ChildHealth {
  std::uint64_t btid = 0;
  ChildState state = ChildState::kRunning;
  int exit_code = 0;  // 128 + signal for signalled children
};

/// A running fleet. Destruction shuts it down.
class LaunchInfo {
 public:
  LaunchInfo(const LaunchInfo&) = delete;
  LaunchInfo& operator=(const LaunchInfo&) = delete;
  ~LaunchInfo();

  const std::map<std::string, channel::Endpoint>& addresses() const { return addresses_; }
  const std::vector<std::uint64_t>& btids() const { return btids_; }
  std::vector<pid_t> pids() const;

  /// Throws std::out_of_range for unknown or control socket names.
  channel::Distributor& distributor(const std::string& name = kDataSocket);
  /// Null without a CTRL socket.
  channel::ControlHub* control() { return control_.get(); }

  std::vector<ChildHealth> poll_health();
  /// Sends `stop`, waits up to `grace` for children to exit, kills the
  /// rest and reaps them. Closes all sockets. Idempotent.
  void shutdown(Millis grace = Millis(5000));
  bool is_shut_down() const;

  /// Captured stdout/stderr of a child.
  std::string child_log(std::uint64_t btid) const;

 private:
  friend std::unique_ptr<LaunchInfo> launch(const LaunchConfig& cfg);
  LaunchInfo() = default;

  struct Child {
    std::uint64_t btid = 0;
    pid_t pid = -1;
    bool reaped = false;
    int exit_code = 0;
    std::string log_path;
  };

  void reap_locked(bool block);
  void kill_all_locked();

  mutable std::mutex mu_;
  std::map<std::string, channel::Endpoint> addresses_;
  std::vector<std::uint64_t> btids_;
  std::map<std::string, std::unique_ptr<channel::Distributor>> data_;
  std::unique_ptr<channel::ControlHub> control_;
  std::vector<Child> children_;
  bool shut_down_ = false;
};

/// Throws LaunchError(kSpawnFailed) with the child's captured output when a
/// child cannot be started or dies before connecting, LaunchError(kPortExhausted)
/// when no port can be bound, std::invalid_argument on a bad config.
std::unique_ptr<LaunchInfo> launch(const LaunchConfig& cfg);

std::uint64_t child_seed(std::uint64_t base_seed, std::uint64_t btid);

}  // namespace randstream::launcher
