#include "fbc/grid_model.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "fbc/error.hpp"

namespace fbc {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kValidationError, what);
}

template <typename T>
std::unordered_map<std::string, std::size_t> index_ids(const std::vector<T>& items,
                                                       const char* kind) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id.empty()) invalid(std::string(kind) + " with empty id");
    if (!pos.emplace(items[i].id, i).second)
      invalid(std::string("duplicate ") + kind + " id '" + items[i].id + "'");
  }
  return pos;
}

}  // namespace

NetworkSnapshot::NetworkSnapshot(std::vector<Node> nodes, std::vector<Branch> branches,
                                 std::vector<Zone> zones, std::vector<HvdcLink> hvdc_links,
                                 std::string slack_node)
    : nodes_(std::move(nodes)),
      branches_(std::move(branches)),
      zones_(std::move(zones)),
      hvdc_links_(std::move(hvdc_links)),
      slack_node_(std::move(slack_node)) {
  validate_and_complete();
}

void NetworkSnapshot::validate_and_complete() {
  if (nodes_.empty()) invalid("network has no nodes");
  node_pos_ = index_ids(nodes_, "node");
  branch_pos_ = index_ids(branches_, "branch");
  zone_pos_ = index_ids(zones_, "zone");
  index_ids(hvdc_links_, "hvdc link");

  if (!node_pos_.contains(slack_node_)) invalid("slack node '" + slack_node_ + "' does not exist");

  std::map<std::string, std::vector<std::size_t>> zone_members;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!zone_pos_.contains(n.zone_id))
      invalid("node '" + n.id + "' references unknown zone '" + n.zone_id + "'");
    if (n.gsk_basis && !(*n.gsk_basis >= 0.0 && std::isfinite(*n.gsk_basis)))
      invalid("node '" + n.id + "' has a negative gsk_basis");
    zone_members[n.zone_id].push_back(i);
  }

  for (const Branch& b : branches_) {
    if (!node_pos_.contains(b.from_node) || !node_pos_.contains(b.to_node))
      throw Error(ErrorCode::kUnknownElement, "branch '" + b.id + "' references an unknown node");
    if (b.from_node == b.to_node) invalid("branch '" + b.id + "' connects a node to itself");
    if (!(b.reactance > 0.0) || !std::isfinite(b.reactance))
      invalid("branch '" + b.id + "' must have reactance > 0");
    if (!(b.f_max_thermal > 0.0) || !std::isfinite(b.f_max_thermal))
      invalid("branch '" + b.id + "' must have f_max_thermal > 0");
  }

  for (const HvdcLink& h : hvdc_links_) {
    if (!node_pos_.contains(h.from_node) || !node_pos_.contains(h.to_node))
      throw Error(ErrorCode::kUnknownElement, "hvdc link '" + h.id + "' references an unknown node");
    if (!(h.capacity > 0.0)) invalid("hvdc link '" + h.id + "' must have capacity > 0");
    if (std::abs(h.setpoint) > h.capacity)
      invalid("hvdc link '" + h.id + "' setpoint exceeds capacity");
  }

  for (Zone& z : zones_) {
    const auto members = zone_members.find(z.id);
    if (members == zone_members.end())
      throw Error(ErrorCode::kMissingGsk, "zone '" + z.id + "' has no nodes to carry a GSK");
    if (z.gsk.empty()) {
      double basis_sum = 0.0;
      for (std::size_t i : members->second) basis_sum += nodes_[i].gsk_basis.value_or(0.0);
      for (std::size_t i : members->second) {
        const double w = basis_sum > 0.0
                             ? nodes_[i].gsk_basis.value_or(0.0) / basis_sum
                             : 1.0 / static_cast<double>(members->second.size());
        z.gsk[nodes_[i].id] = w;
      }
    }
    double sum = 0.0;
    for (const auto& [node_id, w] : z.gsk) {
      const auto it = node_pos_.find(node_id);
      if (it == node_pos_.end() || nodes_[it->second].zone_id != z.id)
        invalid("zone '" + z.id + "' GSK references node '" + node_id + "' outside the zone");
      if (!(w >= 0.0) || !std::isfinite(w)) invalid("zone '" + z.id + "' has a negative GSK weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kGskSumTolerance)
      invalid("zone '" + z.id + "' GSK weights sum to " + std::to_string(sum) + ", expected 1");
  }

  // Single in-service island.
  std::vector<std::vector<std::size_t>> adj(nodes_.size());
  for (const Branch& b : branches_) {
    if (!b.in_service) continue;
    adj[node_pos_.at(b.from_node)].push_back(node_pos_.at(b.to_node));
    adj[node_pos_.at(b.to_node)].push_back(node_pos_.at(b.from_node));
  }
  std::vector<bool> seen(nodes_.size(), false);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!todo.empty()) {
    const std::size_t u = todo.front();
    todo.pop();
    for (std::size_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        todo.push(v);
      }
    }
  }
  if (reached != nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!seen[i])
        throw Error(ErrorCode::kIslandedNetwork,
                    "node '" + nodes_[i].id + "' is disconnected from node '" + nodes_[0].id + "'");
  }
}

std::size_t NetworkSnapshot::node_index(const std::string& id) const {
  const auto it = node_pos_.find(id);
  if (it == node_pos_.end()) throw Error(ErrorCode::kUnknownElement, "unknown node '" + id + "'");
  return it->second;
}

std::size_t NetworkSnapshot::branch_index(const std::string& id) const {
  const auto it = branch_pos_.find(id);
  if (it == branch_pos_.end()) throw Error(ErrorCode::kUnknownElement, "unknown branch '" + id + "'");
  return it->second;
}

std::size_t NetworkSnapshot::zone_index(const std::string& id) const {
  const auto it = zone_pos_.find(id);
  if (it == zone_pos_.end()) throw Error(ErrorCode::kZoneMismatch, "unknown zone '" + id + "'");
  return it->second;
}

std::vector<std::string> NetworkSnapshot::zone_ids() const {
  std::vector<std::string> ids;
  ids.reserve(zones_.size());
  for (const Zone& z : zones_) ids.push_back(z.id);
  return ids;
}

std::vector<std::string> NetworkSnapshot::in_service_branch_ids() const {
  std::vector<std::string> ids;
  for (const Branch& b : branches_)
    if (b.in_service) ids.push_back(b.id);
  return ids;
}

NetworkSnapshot NetworkSnapshot::with_slack(const std::string& slack) const {
  NetworkSnapshot copy = *this;
  copy.slack_node_ = slack;
  copy.validate_and_complete();
  return copy;
}

NetworkSnapshot NetworkSnapshot::with_branch_status(std::span<const std::string> branch_ids,
                                                    bool in_service) const {
  NetworkSnapshot copy = *this;
  for (const std::string& id : branch_ids) copy.branches_[branch_index(id)].in_service = in_service;
  copy.validate_and_complete();
  return copy;
}

bool NetworkSnapshot::operator==(const NetworkSnapshot& other) const {
  return nodes_ == other.nodes_ && branches_ == other.branches_ && zones_ == other.zones_ &&
         hvdc_links_ == other.hvdc_links_ && slack_node_ == other.slack_node_;
}

std::optional<std::size_t> PtdfMatrix::row_of(const std::string& row) const {
  for (std::size_t i = 0; i < row_ids.size(); ++i)
    if (row_ids[i] == row) return i;
  return std::nullopt;
}

std::optional<std::size_t> PtdfMatrix::col_of(const std::string& col) const {
  for (std::size_t i = 0; i < col_ids.size(); ++i)
    if (col_ids[i] == col) return i;
  return std::nullopt;
}

double PtdfMatrix::at(const std::string& row, const std::string& col) const {
  const auto r = row_of(row);
  const auto c = col_of(col);
  if (!r || !c) throw Error(ErrorCode::kUnknownElement, "no PTDF entry (" + row + ", " + col + ")");
  return values(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(*c));
}

DcPowerFlow::DcPowerFlow(const NetworkSnapshot& net)
    : net_(net), slack_(net.node_index(net.slack_node())) {
  const auto n = static_cast<Eigen::Index>(net_.nodes().size());
  for (std::size_t i = 0; i < net_.branches().size(); ++i)
    if (net_.branches()[i].in_service) active_.push_back(i);

  // Reduced index: slack removed.
  auto reduced_index = [this](std::size_t node) -> Eigen::Index {
    return static_cast<Eigen::Index>(node < slack_ ? node : node - 1);
  };

  Eigen::MatrixXd b_reduced = Eigen::MatrixXd::Zero(n - 1, n - 1);
  for (std::size_t bi : active_) {
    const Branch& b = net_.branches()[bi];
    const double y = 1.0 / b.reactance;
    const std::size_t f = net_.node_index(b.from_node);
    const std::size_t t = net_.node_index(b.to_node);
    if (f != slack_) b_reduced(reduced_index(f), reduced_index(f)) += y;
    if (t != slack_) b_reduced(reduced_index(t), reduced_index(t)) += y;
    if (f != slack_ && t != slack_) {
      b_reduced(reduced_index(f), reduced_index(t)) -= y;
      b_reduced(reduced_index(t), reduced_index(f)) -= y;
    }
  }
  reduced_.compute(b_reduced);
  if (n > 1 && reduced_.info() != Eigen::Success)
    throw Error(ErrorCode::kIslandedNetwork, "reduced susceptance matrix is singular");

  // Angle sensitivities: X = B_red^-1, padded with a zero slack row/column.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
  if (n > 1) {
    const Eigen::MatrixXd inv =
        reduced_.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
    for (Eigen::Index r = 0; r < n; ++r) {
      if (static_cast<std::size_t>(r) == slack_) continue;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (static_cast<std::size_t>(c) == slack_) continue;
        x(r, c) = inv(reduced_index(static_cast<std::size_t>(r)),
                      reduced_index(static_cast<std::size_t>(c)));
      }
    }
  }

  ptdf_.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(active_.size()), n);
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const Branch& b = net_.branches()[active_[k]];
    const auto f = static_cast<Eigen::Index>(net_.node_index(b.from_node));
    const auto t = static_cast<Eigen::Index>(net_.node_index(b.to_node));
    ptdf_.values.row(static_cast<Eigen::Index>(k)) = (x.row(f) - x.row(t)) / b.reactance;
    ptdf_.row_ids.push_back(b.id);
  }
  for (const Node& node : net_.nodes()) ptdf_.col_ids.push_back(node.id);
}

Eigen::VectorXd DcPowerFlow::flows(const Eigen::VectorXd& injections) const {
  require_balanced(injections);
  const auto n = static_cast<Eigen::Index>(net_.nodes().size());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  if (n > 1) {
    Eigen::VectorXd p_reduced(n - 1);
    for (Eigen::Index i = 0, r = 0; i < n; ++i)
      if (static_cast<std::size_t>(i) != slack_) p_reduced(r++) = injections(i);
    const Eigen::VectorXd solved = reduced_.solve(p_reduced);
    for (Eigen::Index i = 0, r = 0; i < n; ++i)
      if (static_cast<std::size_t>(i) != slack_) theta(i) = solved(r++);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(active_.size()));
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const Branch& b = net_.branches()[active_[k]];
    out(static_cast<Eigen::Index>(k)) =
        (theta(static_cast<Eigen::Index>(net_.node_index(b.from_node))) -
         theta(static_cast<Eigen::Index>(net_.node_index(b.to_node)))) /
        b.reactance;
  }
  return out;
}

void require_balanced(const Eigen::VectorXd& injections) {
  const double sum = injections.sum();
  if (std::abs(sum) > kBalanceTolerance)
    throw Error(ErrorCode::kUnbalancedInjections,
                "injections sum to " + std::to_string(sum) + " MW, expected 0");
}

Eigen::VectorXd injection_vector(const NetworkSnapshot& net, const Injections& injections,
                                 bool include_hvdc) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.nodes().size()));
  for (const auto& [node_id, mw] : injections)
    p(static_cast<Eigen::Index>(net.node_index(node_id))) += mw;
  if (include_hvdc) {
    for (const HvdcLink& h : net.hvdc_links()) {
      p(static_cast<Eigen::Index>(net.node_index(h.from_node))) -= h.setpoint;
      p(static_cast<Eigen::Index>(net.node_index(h.to_node))) += h.setpoint;
    }
  }
  return p;
}

BranchFlows dc_load_flow(const NetworkSnapshot& net, const Injections& injections) {
  const Eigen::VectorXd p = injection_vector(net, injections);
  require_balanced(p);
  const DcPowerFlow solver(net);
  const Eigen::VectorXd f = solver.flows(p);
  BranchFlows out;
  for (std::size_t k = 0; k < solver.active_branches().size(); ++k)
    out[net.branches()[solver.active_branches()[k]].id] = f(static_cast<Eigen::Index>(k));
  return out;
}

PtdfMatrix nodal_ptdf(const NetworkSnapshot& net) { return DcPowerFlow(net).nodal_ptdf(); }

Eigen::VectorXd weighted_ptdf_column(const NetworkSnapshot& net, const PtdfMatrix& nodal,
                                     const std::map<std::string, double>& weights) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(nodal.values.rows());
  for (const auto& [node_id, w] : weights) {
    // Nodal PTDF columns follow the network's node order.
    col += w * nodal.values.col(static_cast<Eigen::Index>(net.node_index(node_id)));
  }
  return col;
}

PtdfMatrix zonal_ptdf(const NetworkSnapshot& net, const PtdfMatrix& nodal) {
  PtdfMatrix out;
  out.row_ids = nodal.row_ids;
  out.values = Eigen::MatrixXd::Zero(nodal.values.rows(),
                                     static_cast<Eigen::Index>(net.zones().size()));
  for (std::size_t z = 0; z < net.zones().size(); ++z) {
    const Zone& zone = net.zones()[z];
    if (zone.gsk.empty())
      throw Error(ErrorCode::kMissingGsk, "zone '" + zone.id + "' has no GSK weights");
    out.values.col(static_cast<Eigen::Index>(z)) = weighted_ptdf_column(net, nodal, zone.gsk);
    out.col_ids.push_back(zone.id);
  }
  return out;
}

PtdfMatrix zonal_ptdf(const NetworkSnapshot& net) { return zonal_ptdf(net, nodal_ptdf(net)); }

NetworkSnapshot apply_contingency(const NetworkSnapshot& net, const Contingency& c) {
  for (const std::string& id : c.outaged_branch_ids) {
    if (!net.has_branch(id))
      throw Error(ErrorCode::kUnknownElement,
                  "contingency '" + c.id + "' references unknown branch '" + id + "'");
    if (!net.branch(id).in_service)
      throw Error(ErrorCode::kValidationError,
                  "contingency '" + c.id + "' outages branch '" + id + "' already out of service");
  }
  try {
    return net.with_branch_status(c.outaged_branch_ids, false);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kIslandedNetwork) throw;
    throw Error(ErrorCode::kIslandedNetwork,
                "contingency '" + c.id + "' splits the grid (" + e.what() + ")");
  }
}

PtdfMatrix post_contingency_ptdf(const NetworkSnapshot& net, const Contingency& c) {
  return zonal_ptdf(apply_contingency(net, c));
}

Injections injections_from_net_positions(const NetworkSnapshot& net,
                                         const std::map<std::string, double>& net_positions) {
  Injections out;
  for (const auto& [zone_id, np] : net_positions)
    for (const auto& [node_id, w] : net.zone(zone_id).gsk) out[node_id] += w * np;
  return out;
}

std::map<std::string, double> net_positions_from_injections(const NetworkSnapshot& net,
                                                            const Injections& injections) {
  std::map<std::string, double> np;
  for (const Zone& z : net.zones()) np[z.id] = 0.0;
  for (const auto& [node_id, mw] : injections) np[net.node(node_id).zone_id] += mw;
  return np;
}

}  // namespace fbc
