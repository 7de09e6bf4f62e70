// gohr: command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or validation
// failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gohr/board_gen.hpp"
#include "gohr/engine.hpp"
#include "gohr/experiment.hpp"
#include "gohr/rule.hpp"
#include "gohr/server.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

// Raised for bad flag combinations or unreadable inputs.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct FeatureOptions {
  std::string shapes;
  std::string colors;

  void add(CLI::App* cmd) {
    cmd->add_option("--shapes", shapes, "Comma-separated shape names (default circle,triangle,square,star)");
    cmd->add_option("--colors", colors, "Comma-separated color names (default red,blue,black,yellow)");
  }

  gohr::FeatureSet resolve() const {
    gohr::FeatureSet f = gohr::FeatureSet::defaults();
    if (!shapes.empty()) f.shapes = split_list(shapes);
    if (!colors.empty()) f.colors = split_list(colors);
    try {
      f.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return f;
  }
};

std::shared_ptr<const gohr::RuleSpec> load_rule(const std::string& path,
                                                const gohr::FeatureSet& features) {
  const std::string name = std::filesystem::path(path).stem().string();
  return std::make_shared<const gohr::RuleSpec>(gohr::parse_rule(read_text(path), features, name));
}

struct BoardOptions {
  std::string board_file;
  std::string gen;

  void add(CLI::App* cmd) {
    auto* b = cmd->add_option("--board", board_file, "Board file (boards are cycled per episode)");
    auto* g = cmd->add_option("--gen", gen,
                              "Generator ranges min_pieces,max_pieces,min_colors,max_colors,"
                              "min_shapes,max_shapes (default 9,9,4,4,4,4)");
    b->excludes(g);
  }

  gohr::BoardSupply resolve(const gohr::FeatureSet& features, std::uint64_t seed) const {
    gohr::BoardSupply supply;
    if (!board_file.empty()) {
      supply.fixed = gohr::parse_boards(read_text(board_file), features);
      if (supply.fixed->empty()) throw UsageError(board_file + " holds no boards");
    } else if (!gen.empty()) {
      supply.params = gohr::GenParams::parse(gen);
    }
    supply.params.seed = seed;
    if (!supply.fixed) supply.params.validate(features);
    return supply;
  }
};

void print_rule_error(const std::string& path, const gohr::RuleError& e) {
  std::cerr << path << ':' << e.what() << '\n';
}

int cmd_validate_rule(const std::vector<std::string>& paths, const FeatureOptions& fopts, bool quiet) {
  const gohr::FeatureSet features = fopts.resolve();
  int status = kExitOk;
  for (const auto& path : paths) {
    std::vector<gohr::RuleWarning> warnings;
    try {
      const auto spec = gohr::parse_rule(read_text(path), features, path, &warnings);
      for (const auto& w : warnings) {
        std::cerr << path << ':' << w.line << ':' << w.column << ": warning: " << w.message << '\n';
      }
      if (!quiet) {
        std::cout << path << ": ok, " << spec.lines.size() << " line"
                  << (spec.lines.size() == 1 ? "" : "s") << ", " << spec.atom_count() << " atom"
                  << (spec.atom_count() == 1 ? "" : "s") << '\n'
                  << gohr::format_rule(spec) << '\n';
      }
    } catch (const gohr::RuleError& e) {
      print_rule_error(path, e);
      status = kExitConfig;
    }
  }
  return status;
}

struct OracleOptions {
  std::string rule;
  FeatureOptions features;
  BoardOptions boards;
  std::uint64_t seed = 1;
  int episodes = 1;
  int horizon = 100;
  bool verbose = false;
};

// Clears boards by always playing a legal move drawn uniformly at random.
int cmd_play_oracle(const OracleOptions& o) {
  const gohr::FeatureSet features = o.features.resolve();
  const auto rule = load_rule(o.rule, features);
  const gohr::BoardSupply supply = o.boards.resolve(features, o.seed);
  gohr::Rng board_rng(gohr::derive_seed(o.seed, 0));
  gohr::Rng move_rng(gohr::derive_seed(o.seed, 1));
  const gohr::Policy oracle = [&](const gohr::GameState& state) {
    const auto legal = gohr::legal_moves(state);
    if (legal.empty()) return gohr::Move{};
    return legal[move_rng.below(legal.size())];
  };
  int uncleared = 0;
  for (int ep = 0; ep < o.episodes; ++ep) {
    gohr::Board board = supply.board_for_episode(static_cast<std::size_t>(ep), features, board_rng);
    const int pieces = board.size();
    const auto outcome = gohr::run_episode(rule, std::move(board), oracle, o.horizon);
    std::cout << "episode " << ep << ": pieces " << pieces << ", moves " << outcome.moves
              << ", errors " << outcome.errors << ", " << (outcome.cleared ? "cleared" : "not cleared")
              << (outcome.completed && !outcome.cleared ? " (rule satisfied)" : "") << '\n';
    if (o.verbose) {
      for (const auto& entry : outcome.transcript) {
        std::cout << "  " << entry.move.row << ' ' << entry.move.column << ' ' << entry.move.bucket
                  << ' ' << gohr::to_string(entry.judgment.reason) << '\n';
      }
    }
    if (!outcome.completed) ++uncleared;
  }
  return uncleared == 0 ? kExitOk : kExitRuntime;
}

struct ServeOptions {
  std::string rule;
  FeatureOptions features;
  BoardOptions boards;
  std::uint64_t seed = 1;
  int episodes = 0;
  int horizon = 100;
  std::string tcp;
  bool stdio = false;
  std::string transcript_dir;
};

int cmd_serve(const ServeOptions& o) {
  const gohr::FeatureSet features = o.features.resolve();
  auto config = std::make_shared<gohr::server::SessionConfig>();
  config->rule = load_rule(o.rule, features);
  config->boards = o.boards.resolve(features, o.seed);
  config->horizon = o.horizon;
  config->max_episodes = o.episodes;
  config->seed = o.seed;
  if (!o.transcript_dir.empty()) config->transcript_dir = o.transcript_dir;
  try {
    config->validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (o.tcp.empty()) {
    gohr::server::serve(config, std::cin, std::cout, o.seed, "stdio");
    return kExitOk;
  }
  const auto colon = o.tcp.rfind(':');
  if (colon == std::string::npos) throw UsageError("--tcp expects HOST:PORT");
  int port = 0;
  try {
    port = std::stoi(o.tcp.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("bad port in --tcp " + o.tcp);
  }
  if (port < 0 || port > 65535) throw UsageError("bad port in --tcp " + o.tcp);
  gohr::server::TcpServer server(config, o.tcp.substr(0, colon), static_cast<unsigned short>(port));
  std::cerr << "listening on " << o.tcp.substr(0, colon) << ':' << server.port() << '\n';
  server.run();
  return kExitOk;
}

struct TrainOptions {
  std::string config;
  std::string manifest;
  std::string output;
  int jobs = 0;
  int trials = 0;
  int episodes = 0;
  int horizon = 0;
  std::optional<std::uint64_t> seed;
  bool no_transcripts = false;
  bool save_weights = false;
};

int cmd_train(const TrainOptions& o) {
  gohr::ExperimentConfig config = !o.manifest.empty()
                                      ? gohr::ExperimentConfig::from_manifest(o.manifest)
                                      : gohr::ExperimentConfig::load(o.config);
  if (!o.output.empty()) config.output = o.output;
  if (o.jobs > 0) config.jobs = o.jobs;
  if (o.trials > 0) config.agent.trials = o.trials;
  if (o.episodes > 0) config.agent.episodes_per_trial = o.episodes;
  if (o.horizon > 0) config.agent.horizon = o.horizon;
  if (o.seed) {
    config.seed = *o.seed;
    config.gen.seed = *o.seed;
  }
  if (o.no_transcripts) config.transcripts = false;
  if (o.save_weights) config.save_weights = true;

  const auto result = gohr::run_experiment(config);
  int failed = 0;
  for (const auto& cell : result.cells) {
    if (!cell.ok) {
      ++failed;
      std::cerr << "cell " << cell.rule << "/" << cell.trial << " failed: " << cell.error << '\n';
    }
  }
  if (!result.analysis_ok) std::cerr << "analysis failed: " << result.analysis_error << '\n';
  std::cout << result.directory.string() << ": " << result.cells.size() - failed << " of "
            << result.cells.size() << " cells ok\n";
  return result.ok() ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Game of Hidden Rules: rule compiler, engine, server, learner, analysis"};
  app.set_version_flag("--version", gohr::kVersion);
  app.require_subcommand(1);

  std::vector<std::string> rule_paths;
  FeatureOptions validate_features;
  bool quiet = false;
  auto* validate = app.add_subcommand("validate-rule", "Parse and validate rule files");
  validate->add_option("rules", rule_paths, "Rule files")->required();
  validate->add_flag("-q,--quiet", quiet, "Print diagnostics only");
  validate_features.add(validate);

  OracleOptions oracle;
  auto* play = app.add_subcommand("play-oracle", "Clear boards with a legal-move oracle");
  play->add_option("--rule", oracle.rule, "Rule file")->required();
  oracle.boards.add(play);
  oracle.features.add(play);
  play->add_option("--seed", oracle.seed, "Seed");
  play->add_option("--episodes", oracle.episodes, "Episodes to play")->check(CLI::PositiveNumber);
  play->add_option("--horizon", oracle.horizon, "Move limit per episode")->check(CLI::PositiveNumber);
  play->add_flag("-v,--verbose", oracle.verbose, "Print every move");

  ServeOptions serve;
  auto* srv = app.add_subcommand("serve", "Run the captive game server");
  srv->add_option("--rule", serve.rule, "Rule file")->required();
  serve.boards.add(srv);
  serve.features.add(srv);
  srv->add_option("--seed", serve.seed, "Seed for generated boards");
  srv->add_option("--episodes", serve.episodes, "Episodes per session, 0 for unlimited")
      ->check(CLI::NonNegativeNumber);
  srv->add_option("--horizon", serve.horizon, "Move limit per episode")->check(CLI::PositiveNumber);
  auto* tcp = srv->add_option("--tcp", serve.tcp, "Listen on HOST:PORT, one session per connection");
  auto* stdio = srv->add_flag("--stdio", serve.stdio, "Serve one session on stdin/stdout (default)");
  tcp->excludes(stdio);
  srv->add_option("--transcript-dir", serve.transcript_dir, "Directory for session transcripts");

  TrainOptions train;
  auto* trn = app.add_subcommand("train", "Run a DQN experiment over rules x trials");
  auto* cfg = trn->add_option("--config", train.config, "Experiment config (JSON)");
  auto* man = trn->add_option("--manifest", train.manifest, "Rerun from a manifest.json");
  cfg->excludes(man);
  trn->add_option("-o,--output", train.output, "Output directory");
  trn->add_option("-j,--jobs", train.jobs, "Parallel cells")->check(CLI::PositiveNumber);
  trn->add_option("--trials", train.trials, "Override trials")->check(CLI::PositiveNumber);
  trn->add_option("--episodes", train.episodes, "Override episodes per trial")->check(CLI::PositiveNumber);
  trn->add_option("--horizon", train.horizon, "Override horizon")->check(CLI::PositiveNumber);
  trn->add_option("--seed", train.seed, "Override master seed");
  trn->add_flag("--no-transcripts", train.no_transcripts, "Skip per-move transcripts");
  trn->add_flag("--save-weights", train.save_weights, "Write learned weights per trial");

  std::string analyze_dir, analyze_out;
  int resamples = 0;
  auto* ana = app.add_subcommand("analyze", "Recompute analysis tables for an experiment directory");
  ana->add_option("dir", analyze_dir, "Experiment directory")->required();
  ana->add_option("-o,--output", analyze_out, "Output directory (default <dir>/analysis)");
  ana->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);

  std::string plot_dir;
  auto* plt = app.add_subcommand("plot", "Render SVG figures from analysis tables");
  plt->add_option("dir", plot_dir, "Analysis directory, or an experiment directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate) return cmd_validate_rule(rule_paths, validate_features, quiet);
    if (*play) return cmd_play_oracle(oracle);
    if (*srv) return cmd_serve(serve);
    if (*trn) {
      if (train.config.empty() && train.manifest.empty()) {
        throw UsageError("train needs --config or --manifest");
      }
      return cmd_train(train);
    }
    if (*ana) {
      std::optional<gohr::analysis::BootstrapOptions> bootstrap;
      if (resamples > 0) {
        bootstrap = gohr::ExperimentConfig::from_manifest(std::filesystem::path(analyze_dir) /
                                                          "manifest.json")
                        .bootstrap;
        bootstrap->resamples = resamples;
      }
      std::optional<std::filesystem::path> out;
      if (!analyze_out.empty()) out = analyze_out;
      gohr::analyze_directory(analyze_dir, out, bootstrap);
      return kExitOk;
    }
    if (*plt) {
      std::filesystem::path dir = plot_dir;
      if (std::filesystem::exists(dir / "manifest.json")) dir /= "analysis";
      gohr::plot_directory(dir);
      return kExitOk;
    }
  } catch (const gohr::RuleError& e) {
    std::cerr << "rule error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gohr::BoardFormatError& e) {
    std::cerr << "board error: line " << e.line() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const gohr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
