#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gohr/board_gen.hpp"
#include "gohr/engine.hpp"
#include "gohr/rng.hpp"
#include "gohr/rule.hpp"

namespace gohr::server {

struct SessionConfig {
  std::shared_ptr<const RuleSpec> rule;
  BoardSupply boards;
  int horizon = 100;
  int max_episodes = 0;  // 0: unlimited
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> transcript_dir;

  // Throws std::invalid_argument.
  void validate() const;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RequestKind : std::uint8_t { kNew, kDisplay, kMove, kExit };

struct Request {
  RequestKind kind = RequestKind::kDisplay;
  Move move;
};

// One request per line:
//   NEW | DISPLAY | MOVE <row> <column> <bucket> | EXIT
// Keywords are case-insensitive. Range checks on MOVE fields happen when the
// move is applied, not here. Throws ProtocolError.
Request parse_request(std::string_view line);

// One client's sequential game: owns its state, board stream, and
// transcript file. Every call to handle() yields exactly one response line
// (a compact JSON object, without the trailing newline).
class Session {
 public:
  Session(std::shared_ptr<const SessionConfig> config, std::uint64_t seed, std::string id);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::string handle(std::string_view line);
  bool closed() const { return closed_; }

  // Flushes and closes the transcript. Idempotent.
  void close();

 private:
  std::string respond_new();
  std::string respond_move(const Move& move);
  std::string state_response(const char* request, const char* status,
                             const std::optional<Judgment>& judgment,
                             const std::string& error) const;
  void open_transcript();

  std::shared_ptr<const SessionConfig> config_;
  std::string id_;
  Rng board_rng_;
  std::optional<GameState> state_;
  int episode_ = -1;
  int errors_ = 0;
  bool closed_ = false;
  std::ofstream transcript_;
  std::ofstream boards_;
};

// Request/response loop over a pair of streams until EXIT or end of input.
// Returns the number of requests handled.
std::size_t serve(std::shared_ptr<const SessionConfig> config, std::istream& in, std::ostream& out,
                  std::uint64_t seed, const std::string& session_id);

// TCP front end: one session per connection, each on its own thread with
// its own state. Connection k (0-based) plays with seed
// derive_seed(config.seed, k) and session id "tcp-<k>".
class TcpServer {
 public:
  // Binds immediately; throws std::runtime_error on failure. Port 0 picks a
  // free port.
  TcpServer(std::shared_ptr<const SessionConfig> config, const std::string& host,
            unsigned short port);
  ~TcpServer();

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  unsigned short port() const;

  // Accepts connections until stop(); blocks.
  void run();
  // Accept loop on a background thread.
  void start();
  // Stops accepting and waits for open sessions to finish.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gohr::server
