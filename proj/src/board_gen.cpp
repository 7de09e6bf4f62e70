#include "gohr/board_gen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gohr {

namespace {

std::string located(const std::string& msg, int record, int line) {
  std::string where = "line " + std::to_string(line);
  if (record > 0) where += ", record " + std::to_string(record);
  return where + ": " + msg;
}

// First k entries of a uniform random permutation of 0..n-1.
std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = rng.uniform_int(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

// n draws from `values`, redrawn until every value appears.
std::vector<int> covering_assignment(const std::vector<int>& values, int n, Rng& rng) {
  const int k = static_cast<int>(values.size());
  std::vector<int> out(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(k));
  while (true) {
    std::fill(seen.begin(), seen.end(), 0);
    int distinct = 0;
    for (int i = 0; i < n; ++i) {
      const int pick = rng.uniform_int(0, k - 1);
      out[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(pick)];
      if (!seen[static_cast<std::size_t>(pick)]) {
        seen[static_cast<std::size_t>(pick)] = 1;
        ++distinct;
      }
    }
    if (distinct == k) return out;
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

int parse_int(const std::string& s, int record, int line) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      s.size() > 6) {
    throw BoardFormatError(located("expected an integer, got '" + s + "'", record, line), record, line);
  }
  return std::stoi(s);
}

}  // namespace

void GenParams::validate(const FeatureSet& features) const {
  auto range = [](int lo, int hi, int cap, const char* what) {
    if (lo < 1 || hi < lo || hi > cap) {
      throw InfeasibleParams(std::string(what) + " range [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "] must satisfy 1 <= min <= max <= " +
                             std::to_string(cap));
    }
  };
  range(min_pieces, max_pieces, kCellCount, "pieces");
  range(min_colors, max_colors, static_cast<int>(features.colors.size()), "colors");
  range(min_shapes, max_shapes, static_cast<int>(features.shapes.size()), "shapes");
  if (max_pieces < std::max(min_colors, min_shapes)) {
    throw InfeasibleParams("at most " + std::to_string(max_pieces) +
                           " pieces cannot show the minimum number of colors and shapes");
  }
}

GenParams GenParams::parse(std::string_view text) {
  std::array<int, 6> v{};
  std::size_t field = 0;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (field >= v.size()) throw std::invalid_argument("expected 6 comma-separated values");
    try {
      std::size_t used = 0;
      v[field] = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad generator value '" + item + "'");
    }
    ++field;
  }
  if (field != v.size()) throw std::invalid_argument("expected 6 comma-separated values");
  GenParams p;
  p.min_pieces = v[0];
  p.max_pieces = v[1];
  p.min_colors = v[2];
  p.max_colors = v[3];
  p.min_shapes = v[4];
  p.max_shapes = v[5];
  return p;
}

std::string GenParams::to_string() const {
  std::ostringstream out;
  out << min_pieces << ',' << max_pieces << ',' << min_colors << ',' << max_colors << ','
      << min_shapes << ',' << max_shapes;
  return out.str();
}

Board generate_board(const GenParams& params, const FeatureSet& features, Rng& rng) {
  params.validate(features);
  int pieces = 0;
  int colors = 0;
  int shapes = 0;
  do {
    pieces = rng.uniform_int(params.min_pieces, params.max_pieces);
    colors = rng.uniform_int(params.min_colors, params.max_colors);
    shapes = rng.uniform_int(params.min_shapes, params.max_shapes);
  } while (pieces < std::max(colors, shapes));

  const auto color_pool =
      sample_without_replacement(static_cast<int>(features.colors.size()), colors, rng);
  const auto shape_pool =
      sample_without_replacement(static_cast<int>(features.shapes.size()), shapes, rng);
  const auto piece_colors = covering_assignment(color_pool, pieces, rng);
  const auto piece_shapes = covering_assignment(shape_pool, pieces, rng);
  const auto cells = sample_without_replacement(kCellCount, pieces, rng);

  Board board;
  for (std::size_t i = 0; i < static_cast<std::size_t>(pieces); ++i) {
    board.place({cells[i] + 1, piece_shapes[i], piece_colors[i]});
  }
  return board;
}

BoardFormatError::BoardFormatError(const std::string& what, int record, int line)
    : std::runtime_error(what), record_(record), line_(line) {}

std::vector<Board> parse_boards(std::string_view text, const FeatureSet& features) {
  std::vector<Board> boards;
  Board current;
  bool open = false;
  int record = 0;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line == "---") {
      boards.push_back(current);
      current = Board{};
      open = false;
      continue;
    }
    ++record;
    std::string cell_text;
    std::string rest;
    if (line.front() == '(') {
      const auto close = line.find(')');
      if (close == std::string::npos) {
        throw BoardFormatError(located("unterminated '(x,y)' cell", record, line_no), record, line_no);
      }
      cell_text = line.substr(0, close + 1);
      rest = line.substr(close + 1);
    } else {
      const auto space = line.find_first_of(" \t");
      cell_text = line.substr(0, space);
      rest = space == std::string::npos ? "" : line.substr(space);
    }

    int label = 0;
    if (cell_text.front() == '(') {
      const std::string inner = cell_text.substr(1, cell_text.size() - 2);
      const auto comma = inner.find(',');
      if (comma == std::string::npos) {
        throw BoardFormatError(located("expected '(x,y)'", record, line_no), record, line_no);
      }
      const int x = parse_int(trim(inner.substr(0, comma)), record, line_no);
      const int y = parse_int(trim(inner.substr(comma + 1)), record, line_no);
      if (x < 1 || x > kBoardSide || y < 1 || y > kBoardSide) {
        throw BoardFormatError(located("coordinates outside 1-6", record, line_no), record, line_no);
      }
      label = cell_label(kBoardSide + 1 - y, x);
    } else {
      label = parse_int(cell_text, record, line_no);
      if (label < 1 || label > kCellCount) {
        throw BoardFormatError(located("cell label outside 1-36", record, line_no), record, line_no);
      }
    }

    std::istringstream fields(rest);
    std::string shape;
    std::string color;
    std::string extra;
    if (!(fields >> shape >> color) || (fields >> extra)) {
      throw BoardFormatError(located("expected '<cell> <shape> <color>'", record, line_no), record,
                             line_no);
    }
    std::transform(shape.begin(), shape.end(), shape.begin(), [](unsigned char c) { return std::tolower(c); });
    std::transform(color.begin(), color.end(), color.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto s = features.shape_index(shape);
    const auto c = features.color_index(color);
    if (!s) throw BoardFormatError(located("unknown shape '" + shape + "'", record, line_no), record, line_no);
    if (!c) throw BoardFormatError(located("unknown color '" + color + "'", record, line_no), record, line_no);
    if (current.occupied(label)) {
      throw BoardFormatError(located("cell " + std::to_string(label) + " already holds a piece", record,
                                     line_no),
                             record, line_no);
    }
    current.place({label, *s, *c});
    open = true;
  }
  if (open) boards.push_back(current);
  return boards;
}

std::vector<Board> load_boards(const std::filesystem::path& path, const FeatureSet& features) {
  std::ifstream in(path);
  if (!in) throw BoardFormatError("cannot open board file " + path.string(), 0, 0);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_boards(text.str(), features);
  } catch (const BoardFormatError& e) {
    throw BoardFormatError(path.string() + ": " + e.what(), e.record(), e.line());
  }
}

std::string format_boards(const std::vector<Board>& boards, const FeatureSet& features) {
  std::ostringstream out;
  for (const Board& board : boards) {
    for (const Piece& p : board.pieces()) {
      out << p.cell << ' ' << features.shapes.at(static_cast<std::size_t>(p.shape)) << ' '
          << features.colors.at(static_cast<std::size_t>(p.color)) << '\n';
    }
    out << "---\n";
  }
  return out.str();
}

void save_boards(const std::filesystem::path& path, const std::vector<Board>& boards,
                 const FeatureSet& features) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write board file " + path.string());
  out << format_boards(boards, features);
  if (!out) throw std::runtime_error("failed writing board file " + path.string());
}

Board BoardSupply::board_for_episode(std::size_t episode, const FeatureSet& features,
                                     Rng& rng) const {
  if (fixed) {
    if (fixed->empty()) throw std::invalid_argument("board file holds no boards");
    return (*fixed)[episode % fixed->size()];
  }
  return generate_board(params, features, rng);
}

}  // namespace gohr
