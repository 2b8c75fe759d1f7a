#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace inkgraph::detail {

/// Enumerates every connected vertex subset of an undirected graph exactly
/// once (ESU enumeration), up to `max_size` vertices. `compatible(subset, w)`
/// may veto adding w to a subset; the veto must be hereditary (if a set is
/// rejected, all of its supersets are too). `emit(subset)` returns false to
/// stop the enumeration.
template <typename Compatible, typename Emit>
void enumerate_connected_subsets(const std::vector<std::vector<int>>& adjacency, std::size_t max_size,
                                 Compatible&& compatible, Emit&& emit) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<int> subset;
  std::vector<int> near_count(n, 0);  // how many subset vertices are at distance <= 1
  bool stopped = false;

  auto mark = [&](int v, int delta) {
    near_count[v] += delta;
    for (int u : adjacency[v]) near_count[u] += delta;
  };

  auto extend = [&](auto& self, std::vector<int> ext, int root) -> void {
    if (!emit(subset)) {
      stopped = true;
      return;
    }
    if (subset.size() >= max_size) return;
    while (!ext.empty() && !stopped) {
      const int w = ext.back();
      ext.pop_back();
      if (!compatible(subset, w)) continue;
      std::vector<int> next_ext = ext;
      for (int u : adjacency[w])
        if (u > root && near_count[u] == 0 && std::find(next_ext.begin(), next_ext.end(), u) == next_ext.end())
          next_ext.push_back(u);
      subset.push_back(w);
      mark(w, +1);
      self(self, std::move(next_ext), root);
      mark(w, -1);
      subset.pop_back();
    }
  };

  for (int v = 0; v < n && !stopped; ++v) {
    if (!compatible(subset, v)) continue;
    std::vector<int> ext;
    for (int u : adjacency[v])
      if (u > v) ext.push_back(u);
    subset.push_back(v);
    mark(v, +1);
    extend(extend, std::move(ext), v);
    mark(v, -1);
    subset.pop_back();
  }
}

}  // namespace inkgraph::detail
