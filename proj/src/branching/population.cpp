#include <algorithm>
#include <cmath>

#include "mvb/branching.hpp"
#include "mvb/error.hpp"

namespace mvb {

std::string to_string(Engine e) {
  switch (e) {
    case Engine::kAuto: return "auto";
    case Engine::kParticle: return "particle";
    case Engine::kLumped: return "lumped";
  }
  return "auto";
}

Engine engine_from_string(const std::string& s) {
  if (s == "auto") return Engine::kAuto;
  if (s == "particle") return Engine::kParticle;
  if (s == "lumped") return Engine::kLumped;
  throw ConfigError("unknown engine '" + s + "' (auto|particle|lumped)");
}

Functional Functional::one() { return Functional{"1", [](double) { return 1.0; }, 1.0}; }

Functional Functional::of_curve(std::string name, Curve c) {
  std::optional<double> k;
  if (c.is_constant()) k = c(0.0);
  return Functional{std::move(name), [c = std::move(c)](double x) { return c(x); }, k};
}

Functional Functional::of_grid(std::string name, const Grid& grid, const Vec& values) {
  auto v = to_std(values);
  // zero outside the grid: matches the absorbing discretization
  return Functional{std::move(name), [grid, v = std::move(v)](double x) { return grid.interpolate(v, x, 0.0); },
                    std::nullopt};
}

double PathFunctional::operator()(const PathSegment& path) const {
  if (path.states.empty()) return 0.0;
  switch (kind) {
    case Kind::kEndpointIndicator: {
      const double x = path.states.back();
      return (x >= lo && x <= hi) ? 1.0 : 0.0;
    }
    case Kind::kTimeIntegral: {
      double acc = 0.0;
      for (std::size_t k = 1; k < path.times.size(); ++k)
        acc += 0.5 * (g(path.states[k - 1]) + g(path.states[k])) * (path.times[k] - path.times[k - 1]);
      return acc;
    }
    case Kind::kRunningMaxAbs: {
      double m = 0.0;
      for (double x : path.states) m = std::max(m, std::abs(x));
      return m;
    }
  }
  return 0.0;
}

int HistoricalForest::add_root(double t, double x) {
  Lineage l;
  l.birth_time = t;
  l.times.push_back(t);
  l.states.push_back(x);
  nodes_.push_back(std::move(l));
  return static_cast<int>(nodes_.size()) - 1;
}

int HistoricalForest::add_child(int parent, double t, double x) {
  if (parent < 0 || parent >= static_cast<int>(nodes_.size())) throw DomainError("add_child: bad parent id");
  const int id = add_root(t, x);
  nodes_[id].parent = parent;
  return id;
}

void HistoricalForest::record(int id, double t, double x) {
  auto& l = nodes_.at(id);
  l.times.push_back(t);
  l.states.push_back(x);
}

PathSegment HistoricalForest::path(int id) const {
  // chain of (lineage, cut time) from the root down
  std::vector<std::pair<int, double>> chain;
  double cut = std::numeric_limits<double>::infinity();
  for (int cur = id; cur >= 0; cur = nodes_.at(cur).parent) {
    chain.emplace_back(cur, cut);
    cut = nodes_[cur].birth_time;
  }
  std::reverse(chain.begin(), chain.end());
  PathSegment p;
  for (const auto& [lid, upto] : chain) {
    const auto& l = nodes_[lid];
    for (std::size_t k = 0; k < l.times.size(); ++k) {
      if (l.times[k] > upto) break;
      // a child's first sample repeats its parent's sample at the branch time
      if (!p.times.empty() && l.times[k] <= p.times.back()) continue;
      p.times.push_back(l.times[k]);
      p.states.push_back(l.states[k]);
      p.jumped.push_back(false);
    }
  }
  return p;
}

}  // namespace mvb
