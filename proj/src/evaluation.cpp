// SPDX-License-Identifier: Apache-2.0
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "vrag/error.hpp"
#include "vrag/retrieval.hpp"

namespace vrag {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool skip(const std::string& line) { return line.empty() || line[0] == '#'; }

}  // namespace

void write_rankings(std::span<const RankedList> rankings, std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& r : rankings) {
    for (std::size_t i = 0; i < r.items.size(); ++i) {
      out << r.query_id << '\t' << i + 1 << '\t' << r.items[i].video_id << '\t' << r.items[i].score << '\n';
    }
  }
}

std::vector<RankedList> read_rankings(std::istream& in) {
  std::vector<RankedList> out;
  std::map<std::string, std::size_t> slot;
  std::map<std::string, std::vector<std::pair<std::size_t, RankedItem>>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (skip(line)) continue;
    auto f = split(line, '\t');
    if (f.size() != 4) throw Error(ErrorCode::kInvalidArgument, "rankings line needs 4 fields: " + line);
    if (slot.emplace(f[0], out.size()).second) out.push_back({f[0], {}});
    rows[f[0]].push_back({std::stoul(f[1]), {f[2], std::stod(f[3])}});
  }
  for (auto& list : out) {
    auto& r = rows[list.query_id];
    std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [pos, item] : r) list.items.push_back(std::move(item));
  }
  return out;
}

Qrels read_qrels(std::istream& in) {
  Qrels q;
  std::string line;
  while (std::getline(in, line)) {
    if (skip(line)) continue;
    auto f = split(line, '\t');
    if (f.size() < 3 || f.size() > 4 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "qrels line needs query, video, label[, group]: " + line);
    }
    q.labels[f[0]][f[1]].insert(f[2]);
    if (f.size() == 4 && !f[3].empty()) {
      auto [it, inserted] = q.query_group.emplace(f[0], f[3]);
      if (!inserted && it->second != f[3]) {
        throw Error(ErrorCode::kInvalidArgument, "query " + f[0] + " assigned to two groups");
      }
    }
  }
  return q;
}

void write_qrels(const Qrels& qrels, std::ostream& out) {
  for (const auto& [query, videos] : qrels.labels) {
    auto group = qrels.query_group.find(query);
    for (const auto& [video, labels] : videos) {
      for (const auto& label : labels) {
        out << query << '\t' << video << '\t' << label;
        if (group != qrels.query_group.end()) out << '\t' << group->second;
        out << '\n';
      }
    }
  }
}

std::map<std::string, TaskDefinition> read_tasks(std::istream& in) {
  std::map<std::string, TaskDefinition> tasks;
  std::string line;
  while (std::getline(in, line)) {
    if (skip(line)) continue;
    auto f = split(line, '\t');
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "task line needs name<TAB>labels: " + line);
    }
    TaskDefinition task{f[0], {}};
    for (auto& label : split(f[1], ',')) {
      if (!label.empty()) task.positive_labels.insert(label);
    }
    tasks[task.name] = std::move(task);
  }
  return tasks;
}

void write_tasks(const std::map<std::string, TaskDefinition>& tasks, std::ostream& out) {
  for (const auto& [name, task] : tasks) {
    out << name << '\t';
    bool first = true;
    for (const auto& label : task.positive_labels) {
      out << (first ? "" : ",") << label;
      first = false;
    }
    out << '\n';
  }
}

void validate_labels(const Qrels& qrels, const std::map<std::string, TaskDefinition>& tasks) {
  std::set<std::string> vocabulary;
  for (const auto& [name, task] : tasks) vocabulary.insert(task.positive_labels.begin(), task.positive_labels.end());
  for (const auto& [query, videos] : qrels.labels) {
    for (const auto& [video, labels] : videos) {
      for (const auto& label : labels) {
        if (!vocabulary.contains(label)) {
          throw Error(ErrorCode::kInvalidArgument, "qrels label '" + label + "' is not declared by any task");
        }
      }
    }
  }
}

std::set<std::string> relevant_videos(const Qrels& qrels, const std::string& query_id,
                                      const TaskDefinition& task) {
  std::set<std::string> out;
  auto it = qrels.labels.find(query_id);
  if (it == qrels.labels.end()) return out;
  for (const auto& [video, labels] : it->second) {
    for (const auto& label : labels) {
      if (task.positive_labels.contains(label)) {
        out.insert(video);
        break;
      }
    }
  }
  return out;
}

double average_precision(std::span<const std::string> ranked_ids, const std::set<std::string>& relevant) {
  if (relevant.empty()) return 0.0;
  double sum = 0;
  std::size_t hits = 0;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ranked_ids.size(); ++i) {
    if (relevant.contains(ranked_ids[i]) && seen.insert(ranked_ids[i]).second) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

MapReport mean_average_precision(std::span<const RankedList> rankings, const Qrels& qrels,
                                 const TaskDefinition& task) {
  MapReport report;
  std::map<std::string, std::vector<double>> by_group;
  for (const auto& r : rankings) {
    const auto relevant = relevant_videos(qrels, r.query_id, task);
    if (relevant.empty()) {
      report.excluded.push_back(r.query_id);
      continue;
    }
    std::vector<std::string> ids;
    ids.reserve(r.items.size());
    for (const auto& item : r.items) ids.push_back(item.video_id);
    const double ap = average_precision(ids, relevant);
    if (ids.empty()) report.flagged.push_back(r.query_id);
    report.per_query.emplace_back(r.query_id, ap);
    auto group = qrels.query_group.find(r.query_id);
    if (group != qrels.query_group.end()) by_group[group->second].push_back(ap);
  }
  if (!report.per_query.empty()) {
    double total = 0;
    for (const auto& [q, ap] : report.per_query) total += ap;
    report.mean_ap = total / static_cast<double>(report.per_query.size());
  }
  report.macro_mean_ap = report.mean_ap;
  if (!by_group.empty()) {
    double total = 0;
    for (const auto& [group, aps] : by_group) {
      double s = 0;
      for (double ap : aps) s += ap;
      report.per_group[group] = s / static_cast<double>(aps.size());
      total += report.per_group[group];
    }
    report.macro_mean_ap = total / static_cast<double>(by_group.size());
  }
  return report;
}

}  // namespace vrag
