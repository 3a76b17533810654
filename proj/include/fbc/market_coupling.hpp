#pragma once

// Single-hour welfare-maximizing market coupling over an NTC or flow-based
// domain. Zonal prices are duals of the zone balance rows; shadow prices are
// duals of the capacity constraints.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fbc/capacity_domain.hpp"

namespace fbc {

enum class Side { kSupply, kDemand };

struct Bid {
  std::string zone;
  Side side = Side::kSupply;
  double price = 0.0;     // EUR/MWh
  double quantity = 0.0;  // MW

  bool operator==(const Bid&) const = default;
};

struct OrderBook {
  std::vector<Bid> bids;
  std::string hour;

  void validate() const;
  bool operator==(const OrderBook&) const = default;
};

struct CouplingResult {
  std::vector<std::string> zones;
  std::map<std::string, double> np;
  std::map<std::string, double> zonal_price;
  std::vector<double> accepted;  // fraction in [0, 1], one per bid in book order
  double consumer_surplus = 0.0;
  double producer_surplus = 0.0;
  double congestion_rent = 0.0;
  double total_surplus = 0.0;
  // Dual of the system balance row (flow-based only; zero for NTC).
  double system_price = 0.0;
  std::map<std::string, double> shadow_price;  // constraint id -> EUR/MW
  std::set<std::string> binding;
  double dual_objective = 0.0;
};

inline constexpr double kBindingTolerance = 1e-6;

CouplingResult couple(const OrderBook& book, const FlowBasedDomain& domain);
CouplingResult couple(const OrderBook& book, const NtcDomain& domain);

struct SurplusSplit {
  double consumer = 0.0;
  double producer = 0.0;
  double congestion = 0.0;
};

/// Recomputes the surplus terms from accepted volumes and zonal prices.
/// Throws MismatchedResult when the result does not belong to the book.
SurplusSplit surplus_decomposition(const CouplingResult& result, const OrderBook& book);

}  // namespace fbc
