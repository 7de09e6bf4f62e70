#include "gohr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gohr/rng.hpp"
#include "json.hpp"

namespace gohr {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

bool valid_rule_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "format",  "rules",     "features", "board_generator", "board_file", "boards",
      "trials",  "episodes",  "horizon",  "seed",            "agent",      "bootstrap",
      "transcripts", "save_weights", "jobs", "output", "version"};
  return keys;
}

ExperimentConfig from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known_keys().count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  }
  ExperimentConfig c;

  if (!j.contains("rules") || !j.at("rules").is_array() || j.at("rules").empty()) {
    throw ConfigError("config needs a non-empty 'rules' array");
  }
  for (const auto& r : j.at("rules")) {
    RuleSource src;
    if (r.is_string()) {
      const fs::path p = base_dir / r.get<std::string>();
      src.name = p.stem().string();
      src.text = read_file(p);
    } else if (r.is_object()) {
      if (r.contains("text")) {
        src.text = get_or<std::string>(r, "text", "");
      } else if (r.contains("path")) {
        src.text = read_file(base_dir / get_or<std::string>(r, "path", ""));
      } else {
        throw ConfigError("rule entries need 'path' or 'text'");
      }
      src.name = get_or<std::string>(r, "name", "");
      if (src.name.empty() && r.contains("path")) {
        src.name = fs::path(get_or<std::string>(r, "path", "")).stem().string();
      }
    } else {
      throw ConfigError("rule entries must be paths or objects");
    }
    c.rules.push_back(std::move(src));
  }

  if (j.contains("features")) {
    const Json& f = j.at("features");
    c.features.shapes = get_or(f, "shapes", c.features.shapes);
    c.features.colors = get_or(f, "colors", c.features.colors);
  }
  if (j.contains("board_generator")) {
    const Json& g = j.at("board_generator");
    c.gen.min_pieces = get_or(g, "min_pieces", c.gen.min_pieces);
    c.gen.max_pieces = get_or(g, "max_pieces", c.gen.max_pieces);
    c.gen.min_colors = get_or(g, "min_colors", c.gen.min_colors);
    c.gen.max_colors = get_or(g, "max_colors", c.gen.max_colors);
    c.gen.min_shapes = get_or(g, "min_shapes", c.gen.min_shapes);
    c.gen.max_shapes = get_or(g, "max_shapes", c.gen.max_shapes);
  }
  if (j.contains("board_file") && j.contains("boards")) {
    throw ConfigError("give either 'board_file' or 'boards', not both");
  }
  if (j.contains("board_file")) {
    c.boards_text = read_file(base_dir / get_or<std::string>(j, "board_file", ""));
  } else if (j.contains("boards")) {
    c.boards_text = get_or<std::string>(j, "boards", "");
  }

  c.agent.trials = get_or(j, "trials", c.agent.trials);
  c.agent.episodes_per_trial = get_or(j, "episodes", c.agent.episodes_per_trial);
  c.agent.horizon = get_or(j, "horizon", c.agent.horizon);
  c.seed = get_or(j, "seed", c.seed);
  c.gen.seed = c.seed;
  if (j.contains("agent")) {
    const Json& a = j.at("agent");
    for (const auto& item : a.items()) {
      static const std::set<std::string> agent_keys{
          "buffer_size", "batch_size",  "epsilon_start",       "epsilon_min",     "epsilon_decay_steps",
          "gamma",       "learning_rate", "episodes_per_target", "literal_terminal"};
      if (!agent_keys.count(item.key())) throw ConfigError("unknown agent key '" + item.key() + "'");
    }
    c.agent.buffer_size = get_or(a, "buffer_size", c.agent.buffer_size);
    c.agent.batch_size = get_or(a, "batch_size", c.agent.batch_size);
    c.agent.epsilon_start = get_or(a, "epsilon_start", c.agent.epsilon_start);
    c.agent.epsilon_min = get_or(a, "epsilon_min", c.agent.epsilon_min);
    c.agent.epsilon_decay_steps = get_or(a, "epsilon_decay_steps", c.agent.epsilon_decay_steps);
    c.agent.gamma = get_or(a, "gamma", c.agent.gamma);
    c.agent.learning_rate = get_or(a, "learning_rate", c.agent.learning_rate);
    c.agent.episodes_per_target = get_or(a, "episodes_per_target", c.agent.episodes_per_target);
    c.agent.literal_terminal = get_or(a, "literal_terminal", c.agent.literal_terminal);
  }
  if (j.contains("bootstrap")) {
    const Json& b = j.at("bootstrap");
    c.bootstrap.resamples = get_or(b, "resamples", c.bootstrap.resamples);
    c.bootstrap.confidence = get_or(b, "confidence", c.bootstrap.confidence);
    c.bootstrap.seed = get_or(b, "seed", c.bootstrap.seed);
  }
  c.transcripts = get_or(j, "transcripts", c.transcripts);
  c.save_weights = get_or(j, "save_weights", c.save_weights);
  c.jobs = get_or(j, "jobs", c.jobs);
  if (j.contains("output")) c.output = base_dir / get_or<std::string>(j, "output", "");
  return c;
}

Json canonical(const ExperimentConfig& c) {
  Json j;
  j["format"] = "gohr-experiment-1";
  Json rules = Json::array();
  for (const auto& r : c.rules) rules.push_back({{"name", r.name}, {"text", r.text}});
  j["rules"] = rules;
  j["features"] = {{"shapes", c.features.shapes}, {"colors", c.features.colors}};
  if (c.boards_text) {
    j["boards"] = *c.boards_text;
  } else {
    j["board_generator"] = {{"min_pieces", c.gen.min_pieces}, {"max_pieces", c.gen.max_pieces},
                            {"min_colors", c.gen.min_colors}, {"max_colors", c.gen.max_colors},
                            {"min_shapes", c.gen.min_shapes}, {"max_shapes", c.gen.max_shapes}};
  }
  j["trials"] = c.agent.trials;
  j["episodes"] = c.agent.episodes_per_trial;
  j["horizon"] = c.agent.horizon;
  j["seed"] = c.seed;
  j["agent"] = {{"buffer_size", c.agent.buffer_size},
                {"batch_size", c.agent.batch_size},
                {"epsilon_start", c.agent.epsilon_start},
                {"epsilon_min", c.agent.epsilon_min},
                {"epsilon_decay_steps", c.agent.epsilon_decay_steps},
                {"gamma", c.agent.gamma},
                {"learning_rate", c.agent.learning_rate},
                {"episodes_per_target", c.agent.episodes_per_target},
                {"literal_terminal", c.agent.literal_terminal}};
  j["bootstrap"] = {{"resamples", c.bootstrap.resamples},
                    {"confidence", c.bootstrap.confidence},
                    {"seed", c.bootstrap.seed}};
  j["transcripts"] = c.transcripts;
  j["save_weights"] = c.save_weights;
  return j;
}

std::string trial_file(int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03d.csv", trial);
  return buf;
}

void write_curve_file(const fs::path& path, const dqn::TrialResult& result) {
  std::ostringstream out;
  out << "episode,errors,moves,cleared,cumulated\n";
  std::int64_t running = 0;
  for (const auto& e : result.episodes) {
    running += e.errors;
    out << e.episode << ',' << e.errors << ',' << e.moves << ',' << (e.cleared ? 1 : 0) << ','
        << running << '\n';
  }
  write_file(path, out.str());
}

void write_transcript_file(const fs::path& path, const dqn::TrialResult& result) {
  std::ostringstream out;
  out << "episode,step,row,col,bucket,verdict,reason,reward\n";
  for (const auto& r : result.transcript) {
    out << r.episode << ',' << r.step << ',' << r.move.row << ',' << r.move.column << ','
        << r.move.bucket << ',' << (r.judgment.accepted() ? 0 : 1) << ','
        << to_string(r.judgment.reason) << ',' << r.judgment.reward << '\n';
  }
  write_file(path, out.str());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Minimal SVG helpers for plot_directory.
struct Series {
  std::string name;
  std::vector<double> x, median, low, high;
};

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text, const fs::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j, base_dir);
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_json_text(read_file(path), path.parent_path());
}

ExperimentConfig ExperimentConfig::from_manifest(const fs::path& manifest_path) {
  Json m;
  try {
    m = Json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (get_or<std::string>(m, "format", "") != kManifestFormat || !m.contains("config")) {
    throw ConfigError(manifest_path.string() + " is not a gohr manifest");
  }
  return from_json(m.at("config"), manifest_path.parent_path());
}

std::string ExperimentConfig::canonical_json() const { return canonical(*this).dump(); }

void ExperimentConfig::validate() const {
  if (rules.empty()) throw ConfigError("no rules configured");
  try {
    features.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::set<std::string> names;
  for (const auto& r : rules) {
    if (!valid_rule_name(r.name)) {
      throw ConfigError("rule name '" + r.name + "' must match [a-z0-9_-]+");
    }
    if (!names.insert(r.name).second) throw ConfigError("duplicate rule name '" + r.name + "'");
    try {
      parse_rule(r.text, features, r.name);
    } catch (const RuleError& e) {
      throw ConfigError("rule " + r.name + ": " + e.what());
    }
  }
  try {
    if (boards_text) {
      if (parse_boards(*boards_text, features).empty()) throw ConfigError("board source holds no boards");
    } else {
      gen.validate(features);
    }
    agent.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const BoardFormatError& e) {
    throw ConfigError(std::string("boards: ") + e.what());
  }
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (bootstrap.resamples < 1) throw ConfigError("bootstrap resamples must be at least 1");
  if (!(bootstrap.confidence > 0.0 && bootstrap.confidence < 1.0)) {
    throw ConfigError("bootstrap confidence must lie in (0, 1)");
  }
}

std::uint64_t trial_seed(std::uint64_t master, const std::string& rule, int trial) {
  return hash_seed(master, rule, static_cast<std::uint64_t>(trial));
}

bool ExperimentResult::ok() const {
  return analysis_ok && std::all_of(cells.begin(), cells.end(), [](const CellStatus& c) { return c.ok; });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.directory = config.output;
  fs::create_directories(config.output);

  BoardSupply boards;
  boards.params = config.gen;
  if (config.boards_text) boards.fixed = parse_boards(*config.boards_text, config.features);

  std::vector<std::shared_ptr<const RuleSpec>> specs;
  for (const auto& r : config.rules) {
    specs.push_back(std::make_shared<const RuleSpec>(parse_rule(r.text, config.features, r.name)));
    fs::create_directories(config.output / "curves" / r.name);
    if (config.transcripts) fs::create_directories(config.output / "transcripts" / r.name);
    if (config.save_weights) fs::create_directories(config.output / "weights" / r.name);
  }

  for (const auto& r : config.rules) {
    for (int t = 0; t < config.agent.trials; ++t) {
      result.cells.push_back({r.name, t, trial_seed(config.seed, r.name, t), true, {}});
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next++;
      if (i >= result.cells.size()) return;
      CellStatus& cell = result.cells[i];
      const std::size_t rule_index = i / static_cast<std::size_t>(config.agent.trials);
      try {
        const auto trial = dqn::train_trial(specs[rule_index], boards, config.agent, cell.seed,
                                            config.transcripts);
        write_curve_file(config.output / "curves" / cell.rule / trial_file(cell.trial), trial);
        if (config.transcripts) {
          write_transcript_file(config.output / "transcripts" / cell.rule / trial_file(cell.trial),
                                trial);
        }
        if (config.save_weights) {
          std::string name = trial_file(cell.trial);
          name.replace(name.size() - 4, 4, ".theta");
          write_file(config.output / "weights" / cell.rule / name,
                     dqn::format_theta(trial.theta, FeatureLayout::for_features(config.features)));
        }
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(result.cells.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  Json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = kVersion;
  const std::string config_text = config.canonical_json();
  manifest["config_hash"] = hex64(fnv1a(config_text));
  manifest["config"] = canonical(config);
  Json cells = Json::array();
  for (const auto& c : result.cells) {
    Json cj = {{"rule", c.rule}, {"trial", c.trial}, {"seed", c.seed},
               {"status", c.ok ? "ok" : "error"}};
    if (!c.ok) cj["error"] = c.error;
    cells.push_back(cj);
  }
  manifest["cells"] = cells;
  write_file(config.output / "manifest.json", manifest.dump(2) + "\n");

  try {
    analyze_directory(config.output, std::nullopt, config.bootstrap);
  } catch (const std::exception& e) {
    result.analysis_ok = false;
    result.analysis_error = e.what();
  }
  return result;
}

std::vector<analysis::EpisodeRecord> read_curve_file(const fs::path& path, int trial) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("episode,errors,moves,cleared", 0) != 0) {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  std::vector<analysis::EpisodeRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    try {
      if (f.size() < 4) throw std::invalid_argument("short row");
      records.push_back({trial, std::stoi(f[0]), std::stoi(f[1]), f[3] == "1", std::stoi(f[2])});
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  return records;
}

void analyze_directory(const fs::path& dir, const std::optional<fs::path>& out_dir,
                       const std::optional<analysis::BootstrapOptions>& bootstrap) {
  const ExperimentConfig config = ExperimentConfig::from_manifest(dir / "manifest.json");
  std::vector<analysis::RuleCurves> rules;
  for (const auto& r : config.rules) {
    analysis::RuleCurves rc;
    rc.rule = r.name;
    for (int t = 0; t < config.agent.trials; ++t) {
      const fs::path path = dir / "curves" / r.name / trial_file(t);
      if (!fs::exists(path)) continue;  // failed cell, recorded in the manifest
      auto recs = read_curve_file(path, t);
      rc.records.insert(rc.records.end(), recs.begin(), recs.end());
    }
    rules.push_back(std::move(rc));
  }
  analysis::ExportOptions options;
  options.bootstrap = bootstrap.value_or(config.bootstrap);
  analysis::export_tables(rules, options, out_dir.value_or(dir / "analysis"));
}

void plot_directory(const fs::path& analysis_dir) {
  // Median curves with interval bands.
  std::vector<Series> series;
  {
    std::ifstream in(analysis_dir / "median_curves.csv");
    if (!in) throw std::runtime_error("cannot read " + (analysis_dir / "median_curves.csv").string());
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
      const auto f = split_csv(line);
      if (f.size() != 5) continue;
      auto [it, inserted] = index.emplace(f[0], series.size());
      if (inserted) series.push_back({f[0], {}, {}, {}, {}});
      Series& s = series[it->second];
      s.x.push_back(std::stod(f[1]) + 1.0);
      s.median.push_back(std::stod(f[2]));
      s.low.push_back(std::stod(f[3]));
      s.high.push_back(std::stod(f[4]));
    }
  }
  constexpr double W = 720, H = 440, L = 70, R = 160, T = 30, B = 50;
  double xmax = 1, ymax = 1;
  for (const auto& s : series) {
    for (double v : s.x) xmax = std::max(xmax, v);
    for (double v : s.high) ymax = std::max(ymax, v);
  }
  auto px = [&](double x) { return L + (x - 1) / std::max(1.0, xmax - 1) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">episode</text>\n"
      << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\" font-size=\"13\">median cumulated error</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << py(ymax) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << num(ymax) << "</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << py(0) + 4 << "\" text-anchor=\"end\" font-size=\"11\">0</text>\n"
      << "<text x=\"" << px(xmax) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << xmax << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    svg << "<polygon fill=\"" << palette(i) << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) svg << num(px(s.x[k])) << ',' << num(py(s.high[k])) << ' ';
    for (std::size_t k = s.x.size(); k-- > 0;) svg << num(px(s.x[k])) << ',' << num(py(s.low[k])) << ' ';
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << palette(i) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) svg << num(px(s.x[k])) << ',' << num(py(s.median[k])) << ' ';
    svg << "\"/>\n<text x=\"" << W - R + 10 << "\" y=\"" << T + 18 * (i + 1) << "\" fill=\"" << palette(i)
        << "\" font-size=\"13\">" << s.name << "</text>\n";
  }
  svg << "</svg>\n";
  write_file(analysis_dir / "median_curves.svg", svg.str());

  // TCE box plots: box spans the quartiles, whiskers reach the most extreme
  // point within 1.5 IQR, points beyond are drawn individually.
  std::map<std::string, std::vector<double>> tce;
  std::vector<std::string> order;
  {
    std::ifstream in(analysis_dir / "tce.csv");
    if (!in) throw std::runtime_error("cannot read " + (analysis_dir / "tce.csv").string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto f = split_csv(line);
      if (f.size() != 3) continue;
      if (!tce.count(f[0])) order.push_back(f[0]);
      tce[f[0]].push_back(std::stod(f[2]));
    }
  }
  double top = 1;
  for (auto& [name, v] : tce) {
    std::sort(v.begin(), v.end());
    top = std::max(top, v.back());
  }
  auto qy = [&](double y) { return H - B - y / top * (H - T - B); };
  auto quart = [](const std::vector<double>& v, double q) {
    const double h = (static_cast<double>(v.size()) - 1) * q;
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  std::ostringstream box;
  const double slot = (W - L - 40) / std::max<std::size_t>(1, order.size());
  box << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << qy(top) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << num(top) << "</text>\n"
      << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\" font-size=\"13\">terminal cumulated error</text>\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& v = tce[order[i]];
    const double q1 = quart(v, 0.25), q2 = quart(v, 0.5), q3 = quart(v, 0.75);
    const double iqr = q3 - q1;
    double lo = q1, hi = q3;
    for (double x : v) {
      if (x >= q1 - 1.5 * iqr) lo = std::min(lo, x);
      if (x <= q3 + 1.5 * iqr) hi = std::max(hi, x);
    }
    const double cx = L + slot * (static_cast<double>(i) + 0.5);
    const double half = slot * 0.25;
    box << "<g stroke=\"" << palette(i) << "\" fill=\"none\">\n"
        << "<line x1=\"" << num(cx) << "\" y1=\"" << num(qy(lo)) << "\" x2=\"" << num(cx) << "\" y2=\""
        << num(qy(hi)) << "\"/>\n"
        << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(qy(q3)) << "\" width=\"" << num(2 * half)
        << "\" height=\"" << num(std::max(0.5, qy(q1) - qy(q3))) << "\" fill=\"" << palette(i)
        << "\" fill-opacity=\"0.3\"/>\n"
        << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(qy(q2)) << "\" x2=\"" << num(cx + half)
        << "\" y2=\"" << num(qy(q2)) << "\" stroke-width=\"2\"/>\n";
    for (double x : v) {
      if (x < lo || x > hi) box << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(qy(x)) << "\" r=\"2\"/>\n";
    }
    box << "</g>\n<text x=\"" << num(cx) << "\" y=\"" << H - B + 18
        << "\" text-anchor=\"middle\" font-size=\"12\">" << order[i] << "</text>\n";
  }
  box << "</svg>\n";
  write_file(analysis_dir / "tce_boxplot.svg", box.str());
}

}  // namespace gohr
