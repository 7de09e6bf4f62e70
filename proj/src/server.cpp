#include "gohr/server.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <sstream>

#include <boost/asio.hpp>
#include "json.hpp"

namespace gohr::server {

namespace {

using Json = nlohmann::ordered_json;
namespace asio = boost::asio;

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

int parse_field(const std::string& token, const char* name) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(token, &used);
    if (used != token.size() || v < -1'000'000 || v > 1'000'000) throw std::invalid_argument(token);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ProtocolError(std::string(name) + " must be an integer, got '" + token + "'");
  }
}

const char* request_name(RequestKind k) {
  switch (k) {
    case RequestKind::kNew:
      return "NEW";
    case RequestKind::kDisplay:
      return "DISPLAY";
    case RequestKind::kMove:
      return "MOVE";
    case RequestKind::kExit:
      return "EXIT";
  }
  return "?";
}

Json board_json(const Board& board, const FeatureSet& features) {
  Json pieces = Json::array();
  for (const Piece& p : board.pieces()) {
    pieces.push_back({{"cell", p.cell},
                      {"row", cell_row(p.cell)},
                      {"col", cell_column(p.cell)},
                      {"shape", features.shapes.at(static_cast<std::size_t>(p.shape))},
                      {"color", features.colors.at(static_cast<std::size_t>(p.color))}});
  }
  return pieces;
}

}  // namespace

void SessionConfig::validate() const {
  if (!rule) throw std::invalid_argument("session has no rule");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (max_episodes < 0) throw std::invalid_argument("max_episodes must be non-negative");
  if (boards.fixed) {
    if (boards.fixed->empty()) throw std::invalid_argument("board file holds no boards");
  } else {
    boards.params.validate(rule->features);
  }
}

Request parse_request(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(t);
  if (tokens.empty()) throw ProtocolError("empty request");
  const std::string verb = upper(tokens[0]);
  auto arity = [&](std::size_t n) {
    if (tokens.size() != n + 1) {
      throw ProtocolError(verb + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
    }
  };
  Request r;
  if (verb == "NEW") {
    arity(0);
    r.kind = RequestKind::kNew;
  } else if (verb == "DISPLAY") {
    arity(0);
    r.kind = RequestKind::kDisplay;
  } else if (verb == "EXIT") {
    arity(0);
    r.kind = RequestKind::kExit;
  } else if (verb == "MOVE") {
    arity(3);
    r.kind = RequestKind::kMove;
    r.move = {parse_field(tokens[1], "row"), parse_field(tokens[2], "column"),
              parse_field(tokens[3], "bucket")};
  } else {
    throw ProtocolError("unknown request '" + tokens[0] + "'");
  }
  return r;
}

Session::Session(std::shared_ptr<const SessionConfig> config, std::uint64_t seed, std::string id)
    : config_(std::move(config)), id_(std::move(id)), board_rng_(seed) {
  config_->validate();
  open_transcript();
}

Session::~Session() { close(); }

void Session::open_transcript() {
  if (!config_->transcript_dir) return;
  std::filesystem::create_directories(*config_->transcript_dir);
  const auto base = *config_->transcript_dir / id_;
  transcript_.open(base.string() + ".csv", std::ios::binary | std::ios::trunc);
  boards_.open(base.string() + ".boards", std::ios::binary | std::ios::trunc);
  if (!transcript_ || !boards_) {
    throw std::runtime_error("cannot open transcript files under " +
                             config_->transcript_dir->string());
  }
  transcript_ << "episode,step,row,col,bucket,verdict,reason,reward,pieces_left\n" << std::flush;
}

void Session::close() {
  if (transcript_.is_open()) {
    transcript_.flush();
    transcript_.close();
  }
  if (boards_.is_open()) {
    boards_.flush();
    boards_.close();
  }
  closed_ = true;
}

std::string Session::state_response(const char* request, const char* status,
                                    const std::optional<Judgment>& judgment,
                                    const std::string& error) const {
  const FeatureSet& features = config_->rule->features;
  Json j;
  j["status"] = status;
  j["request"] = request;
  j["episode"] = episode_;
  if (state_) {
    j["move_count"] = state_->move_count;
    j["moves_left"] = std::max(0, config_->horizon - state_->move_count);
    j["episode_over"] = state_->episode_over;
    j["errors"] = errors_;
  } else {
    j["move_count"] = 0;
    j["moves_left"] = 0;
    j["episode_over"] = true;
    j["errors"] = 0;
  }
  if (judgment) {
    j["verdict"] = judgment->accepted() ? 0 : 1;
    j["reason"] = to_string(judgment->reason);
    j["reward"] = judgment->reward;
  } else {
    j["verdict"] = nullptr;
    j["reason"] = nullptr;
    j["reward"] = nullptr;
  }
  j["board"] = state_ ? board_json(state_->board, features) : Json::array();
  if (!error.empty()) j["error"] = error;
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string Session::respond_new() {
  if (config_->max_episodes > 0 && episode_ + 1 >= config_->max_episodes) {
    return state_response("NEW", "error", std::nullopt, "episode limit reached");
  }
  ++episode_;
  errors_ = 0;
  Board board = config_->boards.board_for_episode(static_cast<std::size_t>(episode_),
                                                  config_->rule->features, board_rng_);
  if (boards_.is_open()) {
    boards_ << "# episode " << episode_ << '\n'
            << format_boards({board}, config_->rule->features) << std::flush;
  }
  state_ = init_episode(config_->rule, std::move(board));

  // The first response of an episode also names the feature values so that
  // clients can render pieces without prior configuration.
  Json j = Json::parse(state_response("NEW", "ok", std::nullopt, {}));
  j["shapes"] = config_->rule->features.shapes;
  j["colors"] = config_->rule->features.colors;
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string Session::respond_move(const Move& move) {
  if (!state_) return state_response("MOVE", "error", std::nullopt, "no active episode; send NEW");
  try {
    validate_move(move);
  } catch (const MalformedMove& e) {
    return state_response("MOVE", "error", std::nullopt, e.what());
  }
  if (!state_->episode_over && state_->move_count >= config_->horizon) {
    return state_response("MOVE", "error", std::nullopt, "horizon reached; send NEW");
  }
  const bool live = !state_->episode_over;
  const Judgment judgment = apply_move(*state_, move);
  if (live && !judgment.accepted()) ++errors_;
  if (live && transcript_.is_open()) {
    transcript_ << episode_ << ',' << state_->move_count - 1 << ',' << move.row << ','
                << move.column << ',' << move.bucket << ',' << (judgment.accepted() ? 0 : 1) << ','
                << to_string(judgment.reason) << ',' << judgment.reward << ','
                << state_->board.size() << '\n'
                << std::flush;
  }
  return state_response("MOVE", "ok", judgment, {});
}

std::string Session::handle(std::string_view line) {
  if (closed_) return state_response("?", "error", std::nullopt, "session closed");
  Request request;
  try {
    request = parse_request(line);
  } catch (const ProtocolError& e) {
    return state_response("?", "error", std::nullopt, e.what());
  }
  try {
    switch (request.kind) {
      case RequestKind::kNew:
        return respond_new();
      case RequestKind::kDisplay:
        return state_response("DISPLAY", "ok", std::nullopt, {});
      case RequestKind::kMove:
        return respond_move(request.move);
      case RequestKind::kExit: {
        std::string response = state_response("EXIT", "ok", std::nullopt, {});
        close();
        return response;
      }
    }
  } catch (const std::exception& e) {
    return state_response(request_name(request.kind), "error", std::nullopt, e.what());
  }
  return state_response("?", "error", std::nullopt, "unhandled request");
}

std::size_t serve(std::shared_ptr<const SessionConfig> config, std::istream& in, std::ostream& out,
                  std::uint64_t seed, const std::string& session_id) {
  Session session(std::move(config), seed, session_id);
  std::size_t handled = 0;
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << session.handle(line) << '\n' << std::flush;
    ++handled;
    if (!out) break;
  }
  session.close();
  return handled;
}

struct TcpServer::Impl {
  std::shared_ptr<const SessionConfig> config;
  asio::io_context io;
  asio::ip::tcp::acceptor acceptor{io};
  std::atomic<bool> stopping{false};
  std::uint64_t next_session = 0;
  std::mutex mutex;
  std::vector<std::thread> sessions;
  std::thread accept_thread;
};

TcpServer::TcpServer(std::shared_ptr<const SessionConfig> config, const std::string& host,
                     unsigned short port)
    : impl_(std::make_unique<Impl>()) {
  config->validate();
  impl_->config = std::move(config);
  try {
    const auto address = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host);
    const asio::ip::tcp::endpoint endpoint(address, port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(asio::ip::tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + ": " +
                             e.what());
  }
}

TcpServer::~TcpServer() { stop(); }

unsigned short TcpServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TcpServer::run() {
  while (!impl_->stopping) {
    asio::ip::tcp::socket socket(impl_->io);
    boost::system::error_code ec;
    impl_->acceptor.accept(socket, ec);
    if (impl_->stopping) break;
    if (ec) continue;
    const std::uint64_t index = impl_->next_session++;
    std::lock_guard lock(impl_->mutex);
    impl_->sessions.emplace_back([config = impl_->config, index, s = std::move(socket)]() mutable {
      asio::ip::tcp::iostream stream(std::move(s));
      try {
        serve(config, stream, stream, derive_seed(config->seed, index),
              "tcp-" + std::to_string(index));
      } catch (const std::exception& e) {
        std::cerr << "session tcp-" << index << ": " << e.what() << '\n';
      }
    });
  }
}

void TcpServer::start() {
  impl_->accept_thread = std::thread([this] { run(); });
}

void TcpServer::stop() {
  if (!impl_) return;
  if (!impl_->stopping.exchange(true)) {
    // Wake a blocking accept with a throwaway connection.
    boost::system::error_code ec;
    asio::ip::tcp::socket poke(impl_->io);
    auto endpoint = impl_->acceptor.local_endpoint(ec);
    if (!ec) {
      if (endpoint.address().is_unspecified()) endpoint.address(asio::ip::address_v4::loopback());
      poke.connect(endpoint, ec);
    }
  }
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  std::vector<std::thread> sessions;
  {
    std::lock_guard lock(impl_->mutex);
    sessions.swap(impl_->sessions);
  }
  for (auto& t : sessions) {
    if (t.joinable()) t.join();
  }
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
}

}  // namespace gohr::server
