#pragma once

// DC network model: topology, load flow and nodal/zonal PTDFs.
//
// Sign convention: a branch flow is positive when power moves from
// `from_node` to `to_node`. Nodal injections are positive for generation.
// All powers are MW; reactances only enter through ratios.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace fbc {

/// node id -> MW
using Injections = std::map<std::string, double>;
/// branch id -> MW
using BranchFlows = std::map<std::string, double>;

inline constexpr double kBalanceTolerance = 1e-6;
inline constexpr double kGskSumTolerance = 1e-9;

struct Node {
  std::string id;
  std::string zone_id;
  // Pro-rata basis for a derived GSK; unused when the zone spells out weights.
  std::optional<double> gsk_basis;

  bool operator==(const Node&) const = default;
};

struct Branch {
  std::string id;
  std::string from_node;
  std::string to_node;
  double reactance = 1.0;
  double f_max_thermal = 0.0;
  bool in_service = true;

  bool operator==(const Branch&) const = default;
};

struct Zone {
  std::string id;
  // node id -> weight. Left empty on input to request the default key.
  std::map<std::string, double> gsk;

  bool operator==(const Zone&) const = default;
};

/// Modeled as a pair of fixed injections: -setpoint at from_node,
/// +setpoint at to_node. Never part of the susceptance matrix.
struct HvdcLink {
  std::string id;
  std::string from_node;
  std::string to_node;
  double setpoint = 0.0;
  double capacity = 0.0;

  bool operator==(const HvdcLink&) const = default;
};

struct Contingency {
  std::string id;
  std::vector<std::string> outaged_branch_ids;

  bool operator==(const Contingency&) const = default;
};

/// Immutable, validated network. Construction enforces every type invariant
/// (unique ids, positive reactances, GSK sums, single in-service island) and
/// fills default GSKs for zones given without explicit weights.
class NetworkSnapshot {
 public:
  NetworkSnapshot(std::vector<Node> nodes, std::vector<Branch> branches,
                  std::vector<Zone> zones, std::vector<HvdcLink> hvdc_links,
                  std::string slack_node);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Zone>& zones() const { return zones_; }
  const std::vector<HvdcLink>& hvdc_links() const { return hvdc_links_; }
  const std::string& slack_node() const { return slack_node_; }

  std::size_t node_index(const std::string& id) const;
  std::size_t branch_index(const std::string& id) const;
  std::size_t zone_index(const std::string& id) const;
  bool has_node(const std::string& id) const { return node_pos_.contains(id); }
  bool has_branch(const std::string& id) const { return branch_pos_.contains(id); }
  bool has_zone(const std::string& id) const { return zone_pos_.contains(id); }

  const Node& node(const std::string& id) const { return nodes_[node_index(id)]; }
  const Branch& branch(const std::string& id) const { return branches_[branch_index(id)]; }
  const Zone& zone(const std::string& id) const { return zones_[zone_index(id)]; }

  std::vector<std::string> zone_ids() const;
  std::vector<std::string> in_service_branch_ids() const;

  NetworkSnapshot with_slack(const std::string& slack) const;
  /// Copy with the listed branches set in or out of service. Throws
  /// IslandedNetwork when the result is disconnected.
  NetworkSnapshot with_branch_status(std::span<const std::string> branch_ids,
                                     bool in_service) const;

  bool operator==(const NetworkSnapshot& other) const;

 private:
  void validate_and_complete();

  std::vector<Node> nodes_;
  std::vector<Branch> branches_;
  std::vector<Zone> zones_;
  std::vector<HvdcLink> hvdc_links_;
  std::string slack_node_;
  std::unordered_map<std::string, std::size_t> node_pos_;
  std::unordered_map<std::string, std::size_t> branch_pos_;
  std::unordered_map<std::string, std::size_t> zone_pos_;
};

/// Dense sensitivity matrix with labeled rows (branches) and columns
/// (nodes or zones).
struct PtdfMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd values;

  double at(const std::string& row, const std::string& col) const;
  std::optional<std::size_t> row_of(const std::string& row) const;
  std::optional<std::size_t> col_of(const std::string& col) const;
};

/// Reduced-susceptance factorization for one topology. Reused across any
/// number of injection vectors.
class DcPowerFlow {
 public:
  explicit DcPowerFlow(const NetworkSnapshot& net);

  const NetworkSnapshot& network() const { return net_; }

  /// Flows for a node-indexed injection vector (must be balanced).
  Eigen::VectorXd flows(const Eigen::VectorXd& injections) const;
  /// Branch-indexed (in-service only) nodal PTDF, slack column zero.
  const PtdfMatrix& nodal_ptdf() const { return ptdf_; }
  const std::vector<std::size_t>& active_branches() const { return active_; }

 private:
  NetworkSnapshot net_;
  std::vector<std::size_t> active_;
  std::size_t slack_;
  Eigen::LDLT<Eigen::MatrixXd> reduced_;
  PtdfMatrix ptdf_;
};

/// Node-indexed injection vector with HVDC setpoints folded in.
Eigen::VectorXd injection_vector(const NetworkSnapshot& net, const Injections& injections,
                                 bool include_hvdc = true);

/// Throws UnbalancedInjections when the vector does not sum to zero.
void require_balanced(const Eigen::VectorXd& injections);

/// Signed flow per in-service branch.
BranchFlows dc_load_flow(const NetworkSnapshot& net, const Injections& injections);

PtdfMatrix nodal_ptdf(const NetworkSnapshot& net);
PtdfMatrix zonal_ptdf(const NetworkSnapshot& net, const PtdfMatrix& nodal);
PtdfMatrix zonal_ptdf(const NetworkSnapshot& net);

/// Network with the contingency's branches removed (validated).
NetworkSnapshot apply_contingency(const NetworkSnapshot& net, const Contingency& c);
PtdfMatrix post_contingency_ptdf(const NetworkSnapshot& net, const Contingency& c);

/// Nodal PTDF column combination for a node-weight map (e.g. a GSK or a
/// source/sink shift).
Eigen::VectorXd weighted_ptdf_column(const NetworkSnapshot& net, const PtdfMatrix& nodal,
                                     const std::map<std::string, double>& weights);

/// Nodal injections that realize zonal net positions through the GSKs.
Injections injections_from_net_positions(const NetworkSnapshot& net,
                                         const std::map<std::string, double>& net_positions);
/// Zonal sums of nodal injections (HVDC excluded).
std::map<std::string, double> net_positions_from_injections(const NetworkSnapshot& net,
                                                            const Injections& injections);

}  // namespace fbc
