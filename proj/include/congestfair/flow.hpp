#pragma once

#include <optional>
#include <queue>
#include <vector>

#include "congestfair/rational.hpp"

namespace congestfair::detail {

// Exact-arithmetic max flow (shortest augmenting paths). Integral capacities
// yield integral flows; everything stays rational otherwise. Sizes here are
// tiny, so no scaling tricks are needed.
class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes) : head_(nodes, -1) {}

  int add_edge(int from, int to, const Rational& capacity) {
    int id = static_cast<int>(to_.size());
    to_.push_back(to);
    cap_.push_back(capacity);
    next_.push_back(head_[from]);
    head_[from] = id;
    to_.push_back(from);
    cap_.push_back(Rational(0));
    next_.push_back(head_[to]);
    head_[to] = id + 1;
    return id;
  }

  // Flow through a forward edge = capacity consumed = residual of its twin.
  Rational flow(int edge_id) const { return cap_[edge_id ^ 1]; }

  Rational max_flow(int source, int sink) {
    Rational total = 0;
    int n = static_cast<int>(head_.size());
    std::vector<int> via(n);
    while (true) {
      std::fill(via.begin(), via.end(), -1);
      via[source] = -2;
      std::queue<int> q;
      q.push(source);
      while (!q.empty() && via[sink] == -1) {
        int u = q.front();
        q.pop();
        for (int e = head_[u]; e != -1; e = next_[e]) {
          if (cap_[e] > 0 && via[to_[e]] == -1) {
            via[to_[e]] = e;
            q.push(to_[e]);
          }
        }
      }
      if (via[sink] == -1) break;
      Rational push = cap_[via[sink]];
      for (int v = sink; v != source;) {
        int e = via[v];
        push = rational_min(push, cap_[e]);
        v = to_[e ^ 1];
      }
      for (int v = sink; v != source;) {
        int e = via[v];
        cap_[e] -= push;
        cap_[e ^ 1] += push;
        v = to_[e ^ 1];
      }
      total += push;
    }
    return total;
  }

 private:
  std::vector<int> head_;
  std::vector<int> to_;
  std::vector<Rational> cap_;
  std::vector<int> next_;
};

// Transportation feasibility: route supplies[t] from each source row into
// column demands[a], using only the allowed (row, column) edges. Returns the
// routed amounts per edge, or nullopt when the demands cannot be met exactly.
struct TransportEdge {
  int row;
  int col;
};

inline std::optional<std::vector<Rational>> route_transport(
    const std::vector<Rational>& supplies, const std::vector<Rational>& demands,
    const std::vector<TransportEdge>& edges) {
  int rows = static_cast<int>(supplies.size());
  int cols = static_cast<int>(demands.size());
  Rational total_supply = 0, total_demand = 0;
  for (const auto& s : supplies) total_supply += s;
  for (const auto& d : demands) total_demand += d;
  if (total_supply != total_demand) return std::nullopt;

  FlowNetwork net(rows + cols + 2);
  int source = rows + cols, sink = source + 1;
  std::vector<int> row_edge(rows), edge_id(edges.size());
  for (int t = 0; t < rows; ++t)
    row_edge[t] = net.add_edge(source, t, supplies[t]);
  for (std::size_t k = 0; k < edges.size(); ++k)
    edge_id[k] = net.add_edge(edges[k].row, rows + edges[k].col, total_supply);
  for (int a = 0; a < cols; ++a) net.add_edge(rows + a, sink, demands[a]);

  if (net.max_flow(source, sink) != total_supply) return std::nullopt;
  std::vector<Rational> routed(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) routed[k] = net.flow(edge_id[k]);
  return routed;
}

// Same, with per-column demand windows [lo, hi] instead of exact demands.
// Uses the circulation-with-lower-bounds transformation: exact row supplies
// and column floors become node excesses served by a super source/sink.
// Integral inputs give integral routing.
inline std::optional<std::vector<Rational>> route_transport_bounded(
    const std::vector<Rational>& supplies, const std::vector<Rational>& lo,
    const std::vector<Rational>& hi, const std::vector<TransportEdge>& edges) {
  int rows = static_cast<int>(supplies.size());
  int cols = static_cast<int>(lo.size());
  Rational total_supply = 0, total_lo = 0;
  for (const auto& s : supplies) total_supply += s;
  for (const auto& l : lo) {
    total_lo += l;
  }
  for (int a = 0; a < cols; ++a)
    if (lo[a] > hi[a]) return std::nullopt;

  FlowNetwork net(rows + cols + 4);
  int sink = rows + cols;          // T
  int source = sink + 1;           // S (circulation return)
  int super_source = sink + 2, super_sink = sink + 3;

  std::vector<int> edge_id(edges.size());
  // S -> row_t had bounds [s_t, s_t]; after the transform only excesses remain.
  for (int t = 0; t < rows; ++t) net.add_edge(super_source, t, supplies[t]);
  net.add_edge(source, super_sink, total_supply);
  for (std::size_t k = 0; k < edges.size(); ++k)
    edge_id[k] = net.add_edge(edges[k].row, rows + edges[k].col, total_supply);
  // col_a -> T had bounds [lo_a, hi_a].
  for (int a = 0; a < cols; ++a) {
    net.add_edge(rows + a, sink, hi[a] - lo[a]);
    if (lo[a] > 0) net.add_edge(rows + a, super_sink, lo[a]);
  }
  if (total_lo > 0) net.add_edge(super_source, sink, total_lo);
  net.add_edge(sink, source, total_supply);

  if (net.max_flow(super_source, super_sink) != total_supply + total_lo)
    return std::nullopt;
  std::vector<Rational> routed(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) routed[k] = net.flow(edge_id[k]);
  return routed;
}

}  // namespace congestfair::detail
