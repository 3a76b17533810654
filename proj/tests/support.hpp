#pragma once

// Fixtures and generators shared by the test binaries.

#include <random>
#include <string>
#include <vector>

#include "fbc/capacity_domain.hpp"
#include "fbc/grid_model.hpp"
#include "fbc/market_coupling.hpp"

namespace fbc::test {

inline std::string data_path(const std::string& name) { return std::string(FBC_DATA_DIR) + "/" + name; }

/// Three nodes, one per zone, unit reactances, 100 MW limits, slack C.
/// Branches AB (A->B), BC (B->C), AC (A->C).
inline NetworkSnapshot trizone(double limit = 100.0) {
  return NetworkSnapshot({{"A", "A", {}}, {"B", "B", {}}, {"C", "C", {}}},
                         {{"AB", "A", "B", 1.0, limit, true},
                          {"BC", "B", "C", 1.0, limit, true},
                          {"AC", "A", "C", 1.0, limit, true}},
                         {{"A", {{"A", 1.0}}}, {"B", {{"B", 1.0}}}, {"C", {{"C", 1.0}}}}, {}, "C");
}

/// Two zones joined by a single line AB with the given limit, slack B.
inline NetworkSnapshot two_zone(double limit = 50.0) {
  return NetworkSnapshot({{"A", "A", {}}, {"B", "B", {}}}, {{"AB", "A", "B", 1.0, limit, true}},
                         {{"A", {}}, {"B", {}}}, {}, "B");
}

inline Contingency outage(const std::string& branch) { return {branch, {branch}}; }

/// Connected random grid: a random spanning tree plus `extra` chords.
inline NetworkSnapshot random_grid(std::mt19937& rng, int n_nodes = 10, int n_zones = 3, int extra = 6) {
  std::uniform_real_distribution<double> reactance(0.05, 1.0), limit(50.0, 500.0), basis(0.1, 5.0);
  std::vector<Node> nodes;
  std::vector<Zone> zones;
  for (int z = 0; z < n_zones; ++z) zones.push_back({"Z" + std::to_string(z), {}});
  for (int i = 0; i < n_nodes; ++i) {
    // First nodes cover every zone so none is empty.
    const int z = i < n_zones ? i : static_cast<int>(rng() % n_zones);
    nodes.push_back({"n" + std::to_string(i), "Z" + std::to_string(z), basis(rng)});
  }
  std::vector<Branch> branches;
  int id = 0;
  for (int i = 1; i < n_nodes; ++i) {
    const int j = static_cast<int>(rng() % i);
    branches.push_back({"b" + std::to_string(id++), nodes[j].id, nodes[i].id, reactance(rng), limit(rng), true});
  }
  for (int k = 0; k < extra; ++k) {
    const int a = static_cast<int>(rng() % n_nodes);
    int b = static_cast<int>(rng() % n_nodes);
    if (a == b) b = (b + 1) % n_nodes;
    branches.push_back({"b" + std::to_string(id++), nodes[a].id, nodes[b].id, reactance(rng), limit(rng), true});
  }
  const std::string slack = nodes[rng() % n_nodes].id;
  return NetworkSnapshot(std::move(nodes), std::move(branches), std::move(zones), {}, slack);
}

/// Random nodal injections summing to zero (the last node balances).
inline Injections random_balanced(const NetworkSnapshot& net, std::mt19937& rng, double scale = 200.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Injections p;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < net.nodes().size(); ++i) {
    p[net.nodes()[i].id] = u(rng);
    sum += p[net.nodes()[i].id];
  }
  p[net.nodes().back().id] = -sum;
  return p;
}

inline OrderBook random_book(std::mt19937& rng, const std::vector<std::string>& zones, int min_bids, int max_bids) {
  std::uniform_int_distribution<int> count(min_bids, max_bids);
  std::uniform_int_distribution<int> price(1, 100), qty(5, 150);
  OrderBook book;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Bid b;
    b.zone = zones[rng() % zones.size()];
    b.side = rng() % 2 ? Side::kSupply : Side::kDemand;
    b.price = price(rng);
    b.quantity = qty(rng);
    book.bids.push_back(b);
  }
  return book;
}

}  // namespace fbc::test
