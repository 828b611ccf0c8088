#include "eshed/error.hpp"
#include "eshed/netmodel.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include <fmt/format.h>

namespace eshed::net {

bool operator==(const Bus& a, const Bus& b) { return a.id == b.id && a.has_load == b.has_load; }

bool operator==(const Branch& a, const Branch& b) {
  return a.from == b.from && a.to == b.to && a.reactance == b.reactance && a.flow_limit == b.flow_limit &&
         a.rating_mva == b.rating_mva;
}

bool Network::operator==(const Network& o) const {
  return buses == o.buses && branches == o.branches && base_mva == o.base_mva && reference_bus == o.reference_bus;
}

int Network::index_of(int id) const {
  const auto it = std::find_if(buses.begin(), buses.end(), [id](const Bus& b) { return b.id == id; });
  if (it == buses.end()) throw ValidationError(fmt::format("unknown bus id {}", id));
  return static_cast<int>(it - buses.begin());
}

bool Network::has_bus(int id) const {
  return std::any_of(buses.begin(), buses.end(), [id](const Bus& b) { return b.id == id; });
}

bool induced_subgraph_connected(const Network& network, const std::set<int>& nodes) {
  if (nodes.empty()) throw ValidationError("empty bus set");
  for (int id : nodes)
    if (!network.has_bus(id)) throw ValidationError(fmt::format("unknown bus id {}", id));

  std::map<int, std::vector<int>> adj;
  for (const Branch& br : network.branches)
    if (nodes.count(br.from) && nodes.count(br.to)) {
      adj[br.from].push_back(br.to);
      adj[br.to].push_back(br.from);
    }
  std::set<int> reached{*nodes.begin()};
  std::queue<int> frontier;
  frontier.push(*nodes.begin());
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[u])
      if (reached.insert(v).second) frontier.push(v);
  }
  return reached.size() == nodes.size();
}

bool Network::connected() const {
  if (buses.empty()) return false;
  std::set<int> all;
  for (const Bus& b : buses) all.insert(b.id);
  return induced_subgraph_connected(*this, all);
}

} // namespace eshed::net
