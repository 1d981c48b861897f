#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "blastlab/error.hpp"
#include "blastlab/levels.hpp"

namespace blastlab {

namespace {

constexpr char kHeader[] = "blastlab-level";

// Characters handed out to rocks, containers and teleporters, in order of
// first appearance in the layout.
constexpr std::string_view kPool =
    "ABCDEFHIJKLMNOPQRSTUVWXYZabcdefhijklmnopqrstuvwxyz<>^*@%&+=~!?$";

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string legend_entry(const Piece& p, const Level& level) {
  std::ostringstream os;
  switch (p.type) {
    case PieceType::Empty: os << "empty"; break;
    case PieceType::Color: os << "color " << int(p.color); break;
    case PieceType::Rock: os << "rock " << int(p.hp); break;
    case PieceType::Grass: os << "grass"; break;
    case PieceType::Container: {
      auto it = level.containerHp.find(p.id);
      os << "container " << p.id << " hp " << (it == level.containerHp.end() ? 0 : it->second);
      break;
    }
    case PieceType::Teleporter:
      os << "teleporter " << p.id << (p.role == PortalRole::Entry ? " entry" : " exit");
      break;
  }
  return os.str();
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate_level(const Level& L) {
  auto fail = [](const std::string& rule) { throw ValidationError(rule); };
  if (L.width < 1 || L.height < 1 || L.width > 64 || L.height > 64) fail("dimensions must be in 1..64");
  if (static_cast<int>(L.layout.size()) != L.cell_count()) fail("layout must have width*height cells");
  if (L.colorCount < 2 || L.colorCount > kMaxColors) fail("color count must be in 2..6");
  if (L.moveLimit < 1) fail("move limit must be >= 1");
  if (static_cast<int>(L.refillWeights.size()) != L.colorCount) fail("one refill weight per color");
  double sum = 0.0;
  for (double w : L.refillWeights) {
    if (!(w >= 0.0)) fail("refill weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("refill weights must sum to 1");
  if (L.goals.empty()) fail("level needs at least one goal");

  std::vector<int> color_count(L.colorCount, 0);
  int rocks = 0;
  int grass = 0;
  std::map<int, std::vector<int>> containers;
  for (int p = 0; p < L.cell_count(); ++p) {
    const Piece& c = L.layout[p];
    switch (c.type) {
      case PieceType::Color:
        if (c.color >= L.colorCount) fail("layout color exceeds color count");
        ++color_count[c.color];
        break;
      case PieceType::Rock:
        if (c.hp < 1) fail("rock hp must be >= 1");
        ++rocks;
        break;
      case PieceType::Grass: ++grass; break;
      case PieceType::Container: containers[c.id].push_back(p); break;
      default: break;
    }
  }
  for (const auto& [id, cells] : containers) {
    if (cells.size() != 4) fail("container " + std::to_string(id) + " must cover a 2x2 block");
    int x0 = cells[0] % L.width, y0 = cells[0] / L.width;
    if (x0 + 1 >= L.width || y0 + 1 >= L.height ||
        cells[1] != cells[0] + 1 || cells[2] != cells[0] + L.width || cells[3] != cells[0] + L.width + 1) {
      fail("container " + std::to_string(id) + " must cover a 2x2 block");
    }
    auto hp = L.containerHp.find(id);
    if (hp == L.containerHp.end() || hp->second < 1) fail("container " + std::to_string(id) + " needs hp >= 1");
  }
  for (const auto& [id, hp] : L.containerHp) {
    if (!containers.contains(id)) fail("container hp given for absent container " + std::to_string(id));
  }
  std::string topo = check_gravity_topology(L.width, L.height, L.layout);
  if (!topo.empty()) fail(topo);

  for (const auto& [kind, req] : L.goals) {
    if (req < 1) fail("goal " + to_string(kind) + " must require >= 1");
    switch (kind.type) {
      case GoalType::CollectColor:
        if (kind.color >= L.colorCount) fail("goal color exceeds color count");
        if (L.refillWeights[kind.color] <= 0.0 && color_count[kind.color] < req) {
          fail("goal " + to_string(kind) + " is not achievable");
        }
        break;
      case GoalType::ClearRock:
        if (rocks < req) fail("goal clear-rock is not achievable");
        break;
      case GoalType::ClearGrass:
        if (grass < req) fail("goal clear-grass is not achievable");
        break;
      case GoalType::ClearContainer:
        if (static_cast<int>(containers.size()) < req) fail("goal clear-container is not achievable");
        break;
    }
  }
}

std::string serialize_level(const Level& L) {
  std::ostringstream os;
  os << kHeader << ' ' << kLevelFormatVersion << '\n';
  os << "id: " << L.id << '\n';
  os << "size: " << L.width << ' ' << L.height << '\n';
  os << "colors: " << L.colorCount << '\n';
  os << "moves: " << L.moveLimit << '\n';
  os << "refill:";
  for (double w : L.refillWeights) os << ' ' << format_real(w);
  os << '\n';
  for (const auto& [kind, req] : L.goals) os << "goal: " << to_string(kind) << ' ' << req << '\n';

  // Legend: fixed characters for empty/colors/grass, pooled ones otherwise.
  std::vector<std::pair<char, Piece>> legend;
  auto char_for = [&](const Piece& p) -> char {
    for (const auto& [ch, q] : legend) {
      if (q == p) return ch;
    }
    char ch;
    if (p.type == PieceType::Empty) ch = '.';
    else if (p.type == PieceType::Color) ch = static_cast<char>('0' + p.color);
    else if (p.type == PieceType::Grass) ch = 'g';
    else {
      std::size_t used = std::count_if(legend.begin(), legend.end(), [](const auto& e) {
        auto t = e.second.type;
        return t == PieceType::Rock || t == PieceType::Container || t == PieceType::Teleporter;
      });
      if (used >= kPool.size()) throw DataError("level has too many distinct pieces to serialize");
      ch = kPool[used];
    }
    legend.emplace_back(ch, p);
    return ch;
  };
  std::string grid;
  for (int y = 0; y < L.height; ++y) {
    for (int x = 0; x < L.width; ++x) grid += char_for(L.layout[y * L.width + x]);
    grid += '\n';
  }
  os << "legend:\n";
  for (const auto& [ch, p] : legend) os << "  " << ch << ' ' << legend_entry(p, L) << '\n';
  os << "layout:\n" << grid;
  return os.str();
}

Level parse_level(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string t = trim(line);
      if (!t.empty() && t[0] != '#') return true;
    }
    return false;
  };
  if (!next()) throw ParseError(lineno, "empty level file");
  {
    std::istringstream h(trim(line));
    std::string tag;
    int version = 0;
    if (!(h >> tag >> version) || tag != kHeader) throw ParseError(lineno, "missing blastlab-level header");
    if (version != kLevelFormatVersion) {
      throw ParseError(lineno, "unsupported level format version " + std::to_string(version));
    }
  }
  Level L;
  L.layout.clear();
  std::map<char, Piece> legend;
  bool have_size = false;
  bool in_legend = false;
  while (next()) {
    std::string t = trim(line);
    if (t == "legend:") {
      in_legend = true;
      continue;
    }
    if (t == "layout:") {
      if (!have_size) throw ParseError(lineno, "layout before size");
      for (int y = 0; y < L.height; ++y) {
        if (!std::getline(in, line)) throw ParseError(lineno, "layout has too few rows");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (static_cast<int>(line.size()) != L.width) {
          throw ParseError(lineno, "layout row must have " + std::to_string(L.width) + " characters");
        }
        for (char ch : line) {
          auto it = legend.find(ch);
          if (it == legend.end()) throw ParseError(lineno, std::string("unknown piece character '") + ch + "'");
          L.layout.push_back(it->second);
        }
      }
      while (next()) throw ParseError(lineno, "trailing content after layout");
      break;
    }
    if (in_legend && t.find(':') == std::string::npos) {
      std::istringstream e(t);
      std::string sym, kind;
      e >> sym >> kind;
      if (sym.size() != 1) throw ParseError(lineno, "legend symbol must be one character");
      Piece p;
      if (kind == "empty") {
        p = Piece::empty();
      } else if (kind == "color") {
        int c = -1;
        if (!(e >> c) || c < 0 || c >= kMaxColors) throw ParseError(lineno, "bad color index");
        p = Piece::make_color(c);
      } else if (kind == "rock") {
        int hp = 0;
        if (!(e >> hp) || hp < 1 || hp > 255) throw ParseError(lineno, "bad rock hp");
        p = Piece::rock(hp);
      } else if (kind == "grass") {
        p = Piece::grass();
      } else if (kind == "container") {
        int id = -1, hp = 0;
        std::string word;
        if (!(e >> id >> word >> hp) || word != "hp" || id < 0 || id > 65535) {
          throw ParseError(lineno, "container entry must read 'container <id> hp <hp>'");
        }
        p = Piece::container(id);
        L.containerHp[id] = hp;
      } else if (kind == "teleporter") {
        int id = -1;
        std::string role;
        if (!(e >> id >> role) || id < 0 || id > 65535 || (role != "entry" && role != "exit")) {
          throw ParseError(lineno, "teleporter entry must read 'teleporter <id> entry|exit'");
        }
        p = Piece::teleporter(id, role == "entry" ? PortalRole::Entry : PortalRole::Exit);
      } else {
        throw ParseError(lineno, "unknown legend kind '" + kind + "'");
      }
      if (legend.contains(sym[0])) throw ParseError(lineno, "duplicate legend symbol");
      legend[sym[0]] = p;
      continue;
    }
    in_legend = false;
    auto colon = t.find(':');
    if (colon == std::string::npos) throw ParseError(lineno, "expected 'key: value'");
    std::string key = trim(t.substr(0, colon));
    std::istringstream v(t.substr(colon + 1));
    if (key == "id") {
      v >> L.id;
      if (L.id.empty()) throw ParseError(lineno, "empty level id");
    } else if (key == "size") {
      if (!(v >> L.width >> L.height) || L.width < 1 || L.height < 1 || L.width > 64 || L.height > 64) {
        throw ParseError(lineno, "bad size");
      }
      have_size = true;
    } else if (key == "colors") {
      if (!(v >> L.colorCount)) throw ParseError(lineno, "bad color count");
    } else if (key == "moves") {
      if (!(v >> L.moveLimit)) throw ParseError(lineno, "bad move limit");
    } else if (key == "refill") {
      L.refillWeights.clear();
      double w;
      while (v >> w) L.refillWeights.push_back(w);
      if (!v.eof()) throw ParseError(lineno, "bad refill weight");
    } else if (key == "goal") {
      std::string kind;
      int req = 0;
      if (!(v >> kind >> req)) throw ParseError(lineno, "goal must read '<kind> <count>'");
      try {
        L.goals[parse_goal_kind(kind)] = req;
      } catch (const DataError& e) {
        throw ParseError(lineno, e.what());
      }
    } else {
      throw ParseError(lineno, "unknown key '" + key + "'");
    }
  }
  if (static_cast<int>(L.layout.size()) != L.cell_count()) throw ParseError(lineno, "missing layout");
  double sum = 0.0;
  for (double w : L.refillWeights) sum += w;
  if (sum > 0.0 && std::abs(sum - 1.0) > 1e-12) {
    for (double& w : L.refillWeights) w /= sum;
  }
  validate_level(L);
  return L;
}

Level load_level(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open level file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_level(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

void save_level(const Level& level, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write level file " + path.string());
  out << serialize_level(level);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<Level> load_level_set(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("level directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".lvl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Level> levels;
  levels.reserve(files.size());
  for (const auto& f : files) levels.push_back(load_level(f));
  return levels;
}

void save_level_set(const std::vector<Level>& levels, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Level& L : levels) save_level(L, dir / (L.id + ".lvl"));
}

}  // namespace blastlab
