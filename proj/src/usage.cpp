#include "mungo/usage.hpp"

#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace mungo {

UsageState resolve_head(const UsageState& s) {
  UsageState cur = s;
  std::set<std::string> seen;
  while (cur.body->kind == UsageKind::Var) {
    const std::string& x = cur.body->var;
    if (!seen.insert(x).second)
      throw UsageError(DiagCode::UnfoldCycle, "non-productive usage recursion through " + x);
    auto it = cur.equations.find(x);
    if (it == cur.equations.end())
      throw UsageError(DiagCode::UnboundUsageVariable, "unbound usage variable " + x);
    cur.body = it->second;
  }
  return cur;
}

std::optional<UsageState> step_method(const UsageState& s, const std::string& m) {
  UsageState head = resolve_head(s);
  if (head.body->kind != UsageKind::Branch) return std::nullopt;
  auto it = head.body->entries.find(m);
  if (it == head.body->entries.end()) return std::nullopt;
  return UsageState{it->second, head.equations};
}

std::optional<UsageState> step_label(const UsageState& s, const std::string& l) {
  if (s.body->kind != UsageKind::Choice) return std::nullopt;
  auto it = s.body->entries.find(l);
  if (it == s.body->entries.end()) return std::nullopt;
  return UsageState{it->second, s.equations};
}

std::vector<std::string> offered_methods(const UsageState& s) {
  UsageState head = resolve_head(s);
  std::vector<std::string> out;
  if (head.body->kind == UsageKind::Branch)
    for (const auto& [m, _] : head.body->entries) out.push_back(m);
  return out;
}

std::vector<std::string> offered_labels(const UsageState& s) {
  std::vector<std::string> out;
  if (s.body->kind == UsageKind::Choice)
    for (const auto& [l, _] : s.body->entries) out.push_back(l);
  return out;
}

namespace {

struct Explored {
  std::map<std::string, UsageState> states;  // canonical print -> state
  std::vector<UsageTransition> edges;
};

Explored explore(const UsageState& start) {
  Explored out;
  std::deque<UsageState> work;
  auto key = [](const UsageState& s) { return print_usage(canonical_usage(s)); };
  auto push = [&](const UsageState& s) {
    auto k = key(s);
    if (!out.states.count(k)) {
      out.states.emplace(k, canonical_usage(s));
      work.push_back(s);
    }
    return k;
  };
  push(start);
  while (!work.empty()) {
    UsageState s = work.front();
    work.pop_front();
    std::string from = key(s);
    for (const auto& m : offered_methods(s)) {
      auto next = step_method(s, m);
      std::string to = push(*next);
      out.edges.push_back({from, to, false, m});
    }
    for (const auto& l : offered_labels(s)) {
      auto next = step_label(s, l);
      std::string to = push(*next);
      out.edges.push_back({from, to, true, l});
    }
  }
  return out;
}

}  // namespace

std::vector<UsageState> reachable_states(const UsageState& s) {
  auto ex = explore(s);
  std::vector<UsageState> out;
  out.reserve(ex.states.size());
  for (auto& [_, st] : ex.states) out.push_back(st);
  return out;
}

std::vector<UsageTransition> usage_transitions(const UsageState& s) {
  return explore(s).edges;
}

std::string usage_dot(const UsageState& s, const std::string& title) {
  auto ex = explore(s);
  std::map<std::string, int> ids;
  for (const auto& [k, _] : ex.states) ids.emplace(k, static_cast<int>(ids.size()));
  auto esc = [](const std::string& t) {
    std::string r;
    for (char c : t) {
      if (c == '"' || c == '\\') r += '\\';
      r += c;
    }
    return r;
  };
  std::ostringstream os;
  os << "digraph \"" << esc(title) << "\" {\n";
  os << "  rankdir=LR;\n";
  os << "  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto& [k, id] : ids)
    os << "  n" << id << " [label=\"" << esc(k) << "\"];\n";
  std::string start = print_usage(canonical_usage(s));
  os << "  start [shape=point];\n";
  os << "  start -> n" << ids[start] << ";\n";
  for (const auto& e : ex.edges)
    os << "  n" << ids[e.from] << " -> n" << ids[e.to] << " [label=\""
       << (e.is_label ? "label:" : "call:") << esc(e.name) << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace mungo
