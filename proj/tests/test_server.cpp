#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/asio.hpp>
#include "json.hpp"

#include "gohr/server.hpp"

using namespace gohr;
using namespace gohr::server;
using Json = nlohmann::json;

namespace {

const FeatureSet kF = FeatureSet::defaults();

std::shared_ptr<const SessionConfig> make_config(std::string_view rule_text, int horizon = 100,
                                                 int episodes = 0, std::uint64_t seed = 7) {
  auto c = std::make_shared<SessionConfig>();
  c->rule = std::make_shared<const RuleSpec>(parse_rule(rule_text, kF));
  c->horizon = horizon;
  c->max_episodes = episodes;
  c->seed = seed;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Keys a response may carry. Anything else could expose rule internals.
const std::set<std::string> kAllowedKeys{"status", "request", "episode", "move_count", "moves_left",
                                         "episode_over", "errors", "verdict", "reason", "reward",
                                         "board", "error", "shapes", "colors"};

void check_no_leak(const std::string& response) {
  const Json j = Json::parse(response);
  for (const auto& [key, value] : j.items()) REQUIRE(kAllowedKeys.count(key) == 1);
  for (const auto& piece : j["board"]) {
    std::set<std::string> keys;
    for (const auto& [k, v] : piece.items()) keys.insert(k);
    REQUIRE(keys == std::set<std::string>{"cell", "row", "col", "shape", "color"});
  }
  REQUIRE(response.find('(') == std::string::npos);
  REQUIRE(response.find("remotest") == std::string::npos);
  REQUIRE(response.find("nearby") == std::string::npos);
}

}  // namespace

TEST_SUITE("server") {

TEST_CASE("request grammar") {
  CHECK(parse_request("NEW").kind == RequestKind::kNew);
  CHECK(parse_request("  display ").kind == RequestKind::kDisplay);
  CHECK(parse_request("Exit").kind == RequestKind::kExit);
  const auto m = parse_request("MOVE 2 3 1");
  CHECK(m.kind == RequestKind::kMove);
  CHECK(m.move == Move{2, 3, 1});
  // Out-of-range fields parse; they are rejected when applied.
  CHECK(parse_request("move 9 9 9").move == Move{9, 9, 9});
  CHECK_THROWS_AS(parse_request(""), ProtocolError);
  CHECK_THROWS_AS(parse_request("MOVE 1 2"), ProtocolError);
  CHECK_THROWS_AS(parse_request("MOVE 1 2 3 4"), ProtocolError);
  CHECK_THROWS_AS(parse_request("MOVE x 2 3"), ProtocolError);
  CHECK_THROWS_AS(parse_request("MOVE 1.5 2 3"), ProtocolError);
  CHECK_THROWS_AS(parse_request("NEW 1"), ProtocolError);
  CHECK_THROWS_AS(parse_request("PLAY"), ProtocolError);
}

TEST_CASE("new episode and moves") {
  Session s(make_config("(*, *, *, *, [0,1,2,3])"), 3, "t");
  const Json fresh = Json::parse(s.handle("NEW"));
  CHECK(fresh["status"] == "ok");
  CHECK(fresh["episode"] == 0);
  CHECK(fresh["move_count"] == 0);
  CHECK(fresh["board"].size() == 9);
  CHECK(fresh["verdict"].is_null());
  CHECK(fresh["shapes"] == Json(kF.shapes));

  const int row = fresh["board"][0]["row"];
  const int col = fresh["board"][0]["col"];
  const Json accepted = Json::parse(s.handle("MOVE " + std::to_string(row) + " " + std::to_string(col) + " 2"));
  CHECK(accepted["verdict"] == 0);
  CHECK(accepted["reason"] == "ACCEPTED");
  CHECK(accepted["move_count"] == 1);
  CHECK(accepted["board"].size() == 8);
  for (const auto& p : accepted["board"]) CHECK(!(p["row"] == row && p["col"] == col));

  // Out-of-range bucket: error response, state untouched.
  const std::string before = s.handle("DISPLAY");
  const Json bad = Json::parse(s.handle("MOVE 1 1 7"));
  CHECK(bad["status"] == "error");
  CHECK(bad["error"].get<std::string>().find("bucket out of range") != std::string::npos);
  CHECK(bad["move_count"] == 1);
  CHECK(bad["board"] == Json::parse(before)["board"]);
  CHECK(s.handle("DISPLAY") == before);

  // An empty cell is a rejected move, counted against the horizon.
  int empty_row = 1, empty_col = 1;
  for (int cell = 1; cell <= 36; ++cell) {
    bool used = false;
    for (const auto& p : accepted["board"]) used = used || p["cell"] == cell;
    if (!used) {
      empty_row = cell_row(cell);
      empty_col = cell_column(cell);
      break;
    }
  }
  const Json rejected = Json::parse(
      s.handle("MOVE " + std::to_string(empty_row) + " " + std::to_string(empty_col) + " 0"));
  CHECK(rejected["verdict"] == 1);
  CHECK(rejected["reason"] == "EMPTY_CELL");
  CHECK(rejected["errors"] == 1);
  CHECK(rejected["move_count"] == 2);
}

TEST_CASE("malformed requests keep the session alive") {
  Session s(make_config("(*, *, *, *, 0)"), 1, "t");
  for (const char* line : {"", "   ", "HELLO", "MOVE", "MOVE 1 1 0", "MOVE a 1 0", "MOVE 1 1 1 1",
                           "NEW NOW", "MOVE 99999999999 1 0", "\x01\x02", "\xff\xfe bad utf8", "MOVE -1 -1 -1"}) {
    const std::string r = s.handle(line);
    const Json j = Json::parse(r);
    CHECK(j["status"] == "error");
    CHECK(j.contains("error"));
    check_no_leak(r);
    CHECK(!s.closed());
  }
  CHECK(Json::parse(s.handle("NEW"))["status"] == "ok");
  CHECK(Json::parse(s.handle("MOVE 0 0 0"))["status"] == "error");
  CHECK(Json::parse(s.handle("DISPLAY"))["status"] == "ok");
}

TEST_CASE("responses never carry rule state") {
  const char* rules[] = {
      "(1, *, red, *, [nearby, remotest])\n(*, *, *, *, (p + 1))",
      "(2, star, *, *, [ps, pc]) (1, *, blue, *, 3)\n(*, *, *, *, remotest)",
  };
  Rng rng(9);
  for (const char* text : rules) {
    Session s(make_config(text, 30), 5, "t");
    for (int i = 0; i < 300; ++i) {
      std::string request;
      switch (rng.below(6)) {
        case 0:
          request = "NEW";
          break;
        case 1:
          request = "DISPLAY";
          break;
        default:
          request = "MOVE " + std::to_string(rng.uniform_int(0, 7)) + " " +
                    std::to_string(rng.uniform_int(0, 7)) + " " + std::to_string(rng.uniform_int(-1, 4));
      }
      const std::string r = s.handle(request);
      check_no_leak(r);
      REQUIRE(r.find("p + 1") == std::string::npos);
      const Json j = Json::parse(r);
      for (const char* secret : {"ps", "pc", "atom", "line", "rule"}) {
        for (const auto& [key, value] : j.items()) REQUIRE(key.find(secret) == std::string::npos);
      }
    }
  }
}

TEST_CASE("horizon and episode limits") {
  Session s(make_config("(*, *, *, *, 0)", 2, 2), 1, "t");
  CHECK(Json::parse(s.handle("NEW"))["moves_left"] == 2);
  s.handle("MOVE 0 1 0");  // malformed, not counted
  s.handle("MOVE 1 1 3");
  const Json second = Json::parse(s.handle("MOVE 1 1 3"));
  CHECK(second["moves_left"] == 0);
  CHECK(Json::parse(s.handle("MOVE 1 1 0"))["error"] == "horizon reached; send NEW");
  CHECK(Json::parse(s.handle("NEW"))["episode"] == 1);
  CHECK(Json::parse(s.handle("NEW"))["error"] == "episode limit reached");
  CHECK(Json::parse(s.handle("DISPLAY"))["episode"] == 1);
}

TEST_CASE("moves after a cleared board are reported, not counted") {
  auto c = std::make_shared<SessionConfig>(*make_config("(*, *, *, *, 0)"));
  c->boards.fixed = parse_boards("1 star red\n", kF);
  Session s(c, 1, "t");
  s.handle("NEW");
  CHECK(Json::parse(s.handle("MOVE 1 1 0"))["episode_over"] == true);
  const Json after = Json::parse(s.handle("MOVE 1 1 0"));
  CHECK(after["reason"] == "EPISODE_OVER");
  CHECK(after["move_count"] == 1);
  CHECK(after["errors"] == 0);
}

TEST_CASE("golden session log") {
  const std::filesystem::path golden = GOHR_GOLDEN_DIR;
  auto config = std::make_shared<SessionConfig>();
  config->rule = std::make_shared<const RuleSpec>(parse_rule(slurp(GOHR_BENCHMARK_DIR "/clockwise.rule"), kF));
  config->horizon = 20;
  config->max_episodes = 3;
  config->seed = 7;

  std::string logs[2];
  for (auto& log : logs) {
    std::istringstream in(slurp(golden / "session.in"));
    std::ostringstream out;
    serve(config, in, out, 7, "stdio");
    log = out.str();
  }
  CHECK(logs[0] == logs[1]);
  CHECK(logs[0] == slurp(golden / "session.out"));
  std::istringstream lines(logs[0]);
  for (std::string line; std::getline(lines, line);) check_no_leak(line);
}

TEST_CASE("transcripts are flushed per move") {
  const auto dir = std::filesystem::temp_directory_path() / "gohr_server_transcripts";
  std::filesystem::remove_all(dir);
  auto c = std::make_shared<SessionConfig>(*make_config("(*, *, *, *, 0)"));
  c->boards.fixed = parse_boards("1 star red\n2 circle blue\n", kF);
  c->transcript_dir = dir;
  {
    Session s(c, 1, "abc");
    s.handle("NEW");
    s.handle("MOVE 1 1 0");
    s.handle("MOVE 1 3 0");
    // Readable before the session ends.
    const std::string csv = slurp(dir / "abc.csv");
    CHECK(csv ==
          "episode,step,row,col,bucket,verdict,reason,reward,pieces_left\n"
          "0,0,1,1,0,0,ACCEPTED,0,1\n"
          "0,1,1,3,0,1,EMPTY_CELL,-1,1\n");
    CHECK(slurp(dir / "abc.boards").find("star red") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("tcp sessions are isolated") {
  auto c = std::make_shared<SessionConfig>(*make_config("(*, *, *, *, [0,1,2,3])"));
  TcpServer server(c, "127.0.0.1", 0);
  server.start();
  namespace asio = boost::asio;
  const asio::ip::tcp::endpoint endpoint(asio::ip::make_address("127.0.0.1"), server.port());
  asio::ip::tcp::iostream a(endpoint), b(endpoint);
  REQUIRE(a);
  REQUIRE(b);
  auto ask = [](asio::ip::tcp::iostream& s, const std::string& request) {
    s << request << '\n' << std::flush;
    std::string line;
    std::getline(s, line);
    return Json::parse(line);
  };
  const Json board_a = ask(a, "NEW")["board"];
  ask(b, "NEW");
  const int row = board_a[0]["row"], col = board_a[0]["col"];
  const Json moved = ask(a, "MOVE " + std::to_string(row) + " " + std::to_string(col) + " 1");
  CHECK(moved["verdict"] == 0);
  CHECK(moved["move_count"] == 1);
  const Json other = ask(b, "DISPLAY");
  CHECK(other["move_count"] == 0);
  CHECK(other["board"].size() == 9);
  CHECK(ask(a, "EXIT")["request"] == "EXIT");
  CHECK(ask(b, "EXIT")["status"] == "ok");
  a.close();
  b.close();
  server.stop();
}

TEST_CASE("serve stops at EXIT") {
  std::istringstream in("NEW\nEXIT\nDISPLAY\n");
  std::ostringstream out;
  CHECK(serve(make_config("(*, *, *, *, 0)"), in, out, 1, "t") == 2);
}

}  // TEST_SUITE
