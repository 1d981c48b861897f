#include <cmath>
#include <fstream>
#include <sstream>

#include "blastlab/error.hpp"
#include "blastlab/eval.hpp"
#include "blastlab/util/csv.hpp"

namespace blastlab {

namespace {
const std::vector<std::string> kEpisodeHeader = {"levelId", "agentId", "seed", "movesTaken",
                                                 "completed", "moveCap", "moveLimit"};
}

void write_episodes_csv(const std::vector<EpisodeRecord>& records, const std::filesystem::path& path,
                        const std::string& configNote) {
  csv::Writer w(path, kEpisodeHeader, configNote);
  for (const auto& r : records) {
    w.row({r.levelId, r.agentId, std::to_string(r.seed), std::to_string(r.movesTaken), r.completed ? "1" : "0",
           std::to_string(r.moveCap), std::to_string(r.moveLimit)});
  }
  w.close();
}

std::vector<EpisodeRecord> read_episodes_csv(const std::filesystem::path& path) {
  auto t = csv::read(path);
  int c[7];
  for (int i = 0; i < 7; ++i) c[i] = t.column(kEpisodeHeader[i]);
  std::vector<EpisodeRecord> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    EpisodeRecord r;
    r.levelId = row[c[0]];
    r.agentId = row[c[1]];
    try {
      r.seed = std::stoull(row[c[2]]);
    } catch (const std::exception&) {
      throw DataError(path.string() + ": bad seed '" + row[c[2]] + "'");
    }
    r.movesTaken = static_cast<int>(csv::to_long(row[c[3]], "movesTaken"));
    const std::string& done = row[c[4]];
    if (done != "0" && done != "1") throw DataError(path.string() + ": completed must be 0 or 1");
    r.completed = done == "1";
    r.moveCap = static_cast<int>(csv::to_long(row[c[5]], "moveCap"));
    r.moveLimit = static_cast<int>(csv::to_long(row[c[6]], "moveLimit"));
    if (r.movesTaken < 0 || r.movesTaken > r.moveCap || r.moveLimit < 1) {
      throw DataError(path.string() + ": inconsistent episode row for level " + r.levelId);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_correlation_report(const CorrelationReport& report, const std::filesystem::path& dir,
                              const std::string& configNote) {
  std::filesystem::create_directories(dir);
  const auto best = report.best_index();
  {
    csv::Writer w(dir / "sweep.csv", {"x", "rho", "absRho", "levelsUsed", "best", "note"}, configNote);
    for (std::size_t i = 0; i < report.sweep.size(); ++i) {
      const auto& p = report.sweep[i];
      w.row({csv::fmt(p.x), p.rho ? csv::fmt(*p.rho) : "", p.rho ? csv::fmt(std::abs(*p.rho)) : "",
             std::to_string(p.levelsUsed), best && *best == i ? "1" : "0", p.note});
    }
    w.close();
  }
  {
    std::vector<std::string> header = {"levelId", "completionRate", "episodes", "completed"};
    for (const auto& p : report.sweep) header.push_back("stat@" + csv::fmt(p.x));
    header.push_back("note");
    csv::Writer w(dir / "levels.csv", header, configNote);
    for (const auto& row : report.levels) {
      std::vector<std::string> f = {row.levelId, row.completionRate ? csv::fmt(*row.completionRate) : "",
                                    std::to_string(row.episodes), std::to_string(row.completed)};
      for (const auto& p : report.sweep) {
        auto it = row.statByX.find(p.x);
        f.push_back(it == row.statByX.end() ? "" : csv::fmt(it->second));
      }
      f.push_back(row.note);
      w.row(f);
    }
    w.close();
  }
  std::ofstream out(dir / "summary.txt", std::ios::binary);
  if (!configNote.empty()) out << "config: " << configNote << '\n';
  for (const auto& [k, v] : report.metadata) out << k << ": " << v << '\n';
  out << "completion rates are synthetic unless supplied externally\n";
  out << "x        rho        |rho|     levels\n";
  for (std::size_t i = 0; i < report.sweep.size(); ++i) {
    const auto& p = report.sweep[i];
    char line[160];
    if (p.rho) {
      std::snprintf(line, sizeof line, "%-8.4g %+9.4f  %8.4f  %6d%s", p.x, *p.rho, std::abs(*p.rho), p.levelsUsed,
                    best && *best == i ? "   <- max |rho|" : "");
    } else {
      std::snprintf(line, sizeof line, "%-8.4g %9s  %8s  %6d   (%s)", p.x, "undef", "", p.levelsUsed, p.note.c_str());
    }
    out << line << '\n';
  }
  if (best) {
    out << "best x: " << csv::fmt(report.sweep[*best].x) << " (rho " << csv::fmt(*report.sweep[*best].rho, 6) << ")\n";
  } else {
    out << "best x: undefined\n";
  }
  out.close();
  if (out.fail()) throw DataError("failed writing summary in " + dir.string());
}

void write_move_distributions(const std::vector<NamedHistogram>& hists, const std::filesystem::path& histPath,
                              const std::filesystem::path& cumPath, const std::string& configNote) {
  csv::Writer h(histPath, {"agentId", "levelId", "binStart", "count", "censored"}, configNote);
  csv::Writer c(cumPath, {"agentId", "levelId", "moves", "cumulativeFraction"}, configNote);
  for (const auto& nh : hists) {
    for (const auto& [bin, count] : nh.hist.bins) {
      h.row({nh.agentId, nh.levelId, std::to_string(bin), std::to_string(count), "0"});
    }
    h.row({nh.agentId, nh.levelId, "", std::to_string(nh.hist.censored), "1"});
    c.row({nh.agentId, nh.levelId, "0", "0"});
    for (const auto& [moves, frac] : nh.hist.cumulative) {
      c.row({nh.agentId, nh.levelId, std::to_string(moves), csv::fmt(frac)});
    }
  }
  h.close();
  c.close();
}

}  // namespace blastlab
