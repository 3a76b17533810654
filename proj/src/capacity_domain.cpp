#include "fbc/capacity_domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>
#include <set>

#include "fbc/error.hpp"

namespace fbc {

double RamBreakdown::ram() const { return compute_ram(*this); }

double compute_ram(const RamBreakdown& b) {
  return b.f_max - b.f_rm - b.f_0 + b.f_ra + b.amr - b.f_aac - b.iva;
}

RamBreakdown apply_amr_policy(RamBreakdown b, double ram_floor) {
  if (!(ram_floor >= 0.0)) throw Error(ErrorCode::kValidationError, "ram_floor must be >= 0");
  b.amr = 0.0;
  const double without_amr = compute_ram(b);
  const double floor = ram_floor > 0.0 ? ram_floor : kRamEpsilon;
  b.amr = std::max(0.0, floor - without_amr);
  return b;
}

void Ptc::validate() const {
  if (member_branch_ids.size() < 2)
    throw Error(ErrorCode::kValidationError, "corridor '" + id + "' needs at least two members");
  if (direction_signs.size() != member_branch_ids.size())
    throw Error(ErrorCode::kValidationError,
                "corridor '" + id + "' needs one direction sign per member");
  for (int s : direction_signs)
    if (s != 1 && s != -1)
      throw Error(ErrorCode::kValidationError, "corridor '" + id + "' signs must be +1 or -1");
  if (!(limit > 0.0)) throw Error(ErrorCode::kValidationError, "corridor '" + id + "' limit must be > 0");
}

void NtcDomain::validate() const {
  std::set<std::string> zone_set(zones.begin(), zones.end());
  std::set<std::pair<std::string, std::string>> seen;
  for (const NtcBorder& b : borders) {
    if (!zone_set.contains(b.zone_from) || !zone_set.contains(b.zone_to))
      throw Error(ErrorCode::kZoneMismatch, "border " + b.id() + " references an unknown zone");
    if (b.zone_from == b.zone_to)
      throw Error(ErrorCode::kValidationError, "border " + b.id() + " connects a zone to itself");
    if (!(b.capacity >= 0.0))
      throw Error(ErrorCode::kValidationError, "border " + b.id() + " has negative capacity");
    if (!seen.emplace(b.zone_from, b.zone_to).second)
      throw Error(ErrorCode::kValidationError, "border " + b.id() + " listed twice");
  }
}

std::vector<CnecSpec> branch_cnec_specs(const NetworkSnapshot& net, bool both_directions,
                                        const std::string& tso) {
  std::vector<CnecSpec> specs;
  for (const Branch& b : net.branches()) {
    if (!b.in_service) continue;
    for (int dir : {1, -1}) {
      if (dir == -1 && !both_directions) break;
      CnecSpec s;
      s.id = both_directions ? b.id + (dir > 0 ? "+" : "-") : b.id;
      s.branch_id = b.id;
      s.direction = dir;
      s.tso = tso;
      specs.push_back(std::move(s));
    }
  }
  return specs;
}

namespace {

// Row of a (zonal or nodal) PTDF table for a CNEC element, unsigned.
Eigen::RowVectorXd element_row(const PtdfMatrix& table, const CnecSpec& spec,
                               const std::string& state) {
  auto branch_row = [&](const std::string& branch_id) -> Eigen::RowVectorXd {
    const auto r = table.row_of(branch_id);
    if (!r)
      throw Error(ErrorCode::kUnknownElement,
                  "CNEC '" + spec.id + "' monitors branch '" + branch_id +
                      "' which is not in service in state " + state);
    return table.values.row(static_cast<Eigen::Index>(*r));
  };
  if (!spec.ptc) return branch_row(spec.branch_id);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(table.values.cols());
  for (std::size_t k = 0; k < spec.ptc->member_branch_ids.size(); ++k)
    row += spec.ptc->direction_signs[k] * branch_row(spec.ptc->member_branch_ids[k]);
  return row;
}

void validate_spec(const NetworkSnapshot& net, const CnecSpec& s) {
  if (s.id.empty()) throw Error(ErrorCode::kValidationError, "CNEC with empty id");
  if (s.direction != 1 && s.direction != -1)
    throw Error(ErrorCode::kValidationError, "CNEC '" + s.id + "' direction must be +1 or -1");
  if (s.ptc) {
    s.ptc->validate();
    for (const std::string& m : s.ptc->member_branch_ids)
      if (!net.has_branch(m))
        throw Error(ErrorCode::kUnknownElement, "CNEC '" + s.id + "' corridor member '" + m + "' unknown");
  } else if (!net.has_branch(s.branch_id)) {
    throw Error(ErrorCode::kUnknownElement, "CNEC '" + s.id + "' references unknown branch '" +
                                                s.branch_id + "'");
  }
  if (s.f_max && !(*s.f_max > 0.0))
    throw Error(ErrorCode::kValidationError, "CNEC '" + s.id + "' fmax must be > 0");
  if (s.f_rm < 0.0 || s.f_aac < 0.0 || s.iva < 0.0 || !std::isfinite(s.f_rm + s.f_aac + s.iva))
    throw Error(ErrorCode::kValidationError, "CNEC '" + s.id + "' margins must be >= 0");
}

}  // namespace

FlowBasedDomain build_fb_domain(const NetworkSnapshot& net, std::span<const CnecSpec> specs,
                                const Injections& basecase,
                                const std::map<std::string, double>& ra_uplifts,
                                const FbBuildOptions& options) {
  FlowBasedDomain domain;
  domain.zones = net.zone_ids();

  const Eigen::VectorXd p0 = injection_vector(net, basecase);
  require_balanced(p0);
  const std::map<std::string, double> np0 = net_positions_from_injections(net, basecase);
  Eigen::VectorXd np0_vec(static_cast<Eigen::Index>(domain.zones.size()));
  for (std::size_t z = 0; z < domain.zones.size(); ++z)
    np0_vec(static_cast<Eigen::Index>(z)) = np0.at(domain.zones[z]);

  struct StateCache {
    std::unique_ptr<DcPowerFlow> solver;
    PtdfMatrix zonal;
    Eigen::VectorXd ref_flows;
  };
  std::map<std::string, StateCache> states;
  auto state_for = [&](const CnecSpec& spec) -> StateCache& {
    const std::string key = spec.contingency ? "c:" + spec.contingency->id : kBasecaseStateId;
    auto it = states.find(key);
    if (it != states.end()) return it->second;
    StateCache cache;
    cache.solver = std::make_unique<DcPowerFlow>(
        spec.contingency ? apply_contingency(net, *spec.contingency) : net);
    cache.zonal = zonal_ptdf(cache.solver->network(), cache.solver->nodal_ptdf());
    cache.ref_flows = cache.solver->flows(p0);
    return states.emplace(key, std::move(cache)).first->second;
  };

  std::set<std::string> seen_ids;
  for (const CnecSpec& spec : specs) {
    validate_spec(net, spec);
    if (!seen_ids.insert(spec.id).second)
      throw Error(ErrorCode::kValidationError, "duplicate CNEC id '" + spec.id + "'");
    StateCache& state = state_for(spec);
    const std::string state_name = spec.contingency ? spec.contingency->id : kBasecaseStateId;

    const Eigen::RowVectorXd ptdf_row = element_row(state.zonal, spec, state_name);
    // Reference flow through the same element mapping: flows as a one-column table.
    PtdfMatrix flow_table;
    flow_table.row_ids = state.zonal.row_ids;
    flow_table.values = state.ref_flows;
    const double f_ref = element_row(flow_table, spec, state_name)(0);

    Cnec c;
    c.id = spec.id;
    c.element_id = spec.element_id();
    c.is_ptc = spec.ptc.has_value();
    c.direction = spec.direction;
    c.contingency = spec.contingency;
    c.tso = spec.tso;
    for (std::size_t z = 0; z < domain.zones.size(); ++z)
      c.ptdf[domain.zones[z]] = spec.direction * ptdf_row(static_cast<Eigen::Index>(z));

    RamBreakdown& b = c.ram_breakdown;
    b.f_max = spec.f_max.value_or(spec.ptc ? spec.ptc->limit : net.branch(spec.branch_id).f_max_thermal);
    b.f_rm = spec.f_rm;
    b.f_0 = spec.direction * (f_ref - ptdf_row.dot(np0_vec));
    const auto uplift = ra_uplifts.find(spec.id);
    b.f_ra = std::max(0.0, uplift != ra_uplifts.end() ? uplift->second : spec.ra_uplift);
    b.f_aac = spec.f_aac;
    b.iva = spec.iva;
    b = apply_amr_policy(b, options.ram_floor);
    domain.cnecs.push_back(std::move(c));
  }
  return domain;
}

FlowBasedDomain build_fb_domain_from_net_positions(
    const NetworkSnapshot& net, std::span<const CnecSpec> specs,
    const std::map<std::string, double>& basecase_np,
    const std::map<std::string, double>& ra_uplifts, const FbBuildOptions& options) {
  return build_fb_domain(net, specs, injections_from_net_positions(net, basecase_np), ra_uplifts,
                         options);
}

namespace {

void check_net_positions(const std::vector<std::string>& zones,
                         const std::map<std::string, double>& np) {
  double sum = 0.0;
  for (const std::string& z : zones) {
    const auto it = np.find(z);
    if (it == np.end()) throw Error(ErrorCode::kZoneMismatch, "no net position for zone '" + z + "'");
    sum += it->second;
  }
  for (const auto& [z, v] : np) {
    if (std::find(zones.begin(), zones.end(), z) == zones.end())
      throw Error(ErrorCode::kZoneMismatch, "net position for unknown zone '" + z + "'");
    (void)v;
  }
  if (std::abs(sum) > kBalanceTolerance)
    throw Error(ErrorCode::kUnbalancedInjections,
                "net positions sum to " + std::to_string(sum) + " MW, expected 0");
}

// Edmonds-Karp on a small dense graph.
double max_flow(std::vector<std::vector<double>> cap, std::size_t s, std::size_t t) {
  const std::size_t n = cap.size();
  double total = 0.0;
  for (;;) {
    std::vector<std::size_t> parent(n, n);
    parent[s] = s;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty() && parent[t] == n) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v) {
        if (parent[v] == n && cap[u][v] > 1e-12) {
          parent[v] = u;
          q.push(v);
        }
      }
    }
    if (parent[t] == n) return total;
    double push = std::numeric_limits<double>::infinity();
    for (std::size_t v = t; v != s; v = parent[v]) push = std::min(push, cap[parent[v]][v]);
    for (std::size_t v = t; v != s; v = parent[v]) {
      cap[parent[v]][v] -= push;
      cap[v][parent[v]] += push;
    }
    total += push;
  }
}

}  // namespace

Containment domain_contains(const FlowBasedDomain& domain,
                            const std::map<std::string, double>& np) {
  check_net_positions(domain.zones, np);
  Containment out;
  for (const Cnec& c : domain.cnecs) {
    double flow = 0.0;
    for (const auto& [zone, factor] : c.ptdf) flow += factor * np.at(zone);
    if (flow > c.ram() + kFeasibilityTolerance) {
      out.contained = false;
      out.violated.push_back(c.id);
    }
  }
  return out;
}

Containment domain_contains(const NtcDomain& domain, const std::map<std::string, double>& np) {
  domain.validate();
  check_net_positions(domain.zones, np);
  Containment out;
  std::map<std::string, double> inbound, outbound;
  for (const NtcBorder& b : domain.borders) {
    outbound[b.zone_from] += b.capacity;
    inbound[b.zone_to] += b.capacity;
  }
  for (const std::string& z : domain.zones) {
    const double v = np.at(z);
    if (v > outbound[z] + kFeasibilityTolerance) {
      out.contained = false;
      out.violated.push_back("np_max:" + z);
    }
    if (v < -inbound[z] - kFeasibilityTolerance) {
      out.contained = false;
      out.violated.push_back("np_min:" + z);
    }
  }

  // Transport feasibility: border flows within capacity that realize np.
  const std::size_t nz = domain.zones.size();
  const std::size_t source = nz, sink = nz + 1;
  std::vector<std::vector<double>> cap(nz + 2, std::vector<double>(nz + 2, 0.0));
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < nz; ++i) idx[domain.zones[i]] = i;
  for (const NtcBorder& b : domain.borders) cap[idx[b.zone_from]][idx[b.zone_to]] += b.capacity;
  double exports = 0.0;
  for (std::size_t i = 0; i < nz; ++i) {
    const double v = np.at(domain.zones[i]);
    if (v > 0.0) {
      cap[source][i] = v;
      exports += v;
    } else if (v < 0.0) {
      cap[i][sink] = -v;
    }
  }
  if (max_flow(std::move(cap), source, sink) < exports - 1e-7) {
    out.contained = false;
    out.violated.push_back("transport");
  }
  return out;
}

bool RemedialAction::applies_to(const std::string& state_id) const {
  return contingency_ids.empty() ||
         std::find(contingency_ids.begin(), contingency_ids.end(), state_id) != contingency_ids.end();
}

namespace {

struct StateModel {
  std::string id;
  const Contingency* contingency = nullptr;
};

// A fixed topology with flows linear in the transfer.
struct LinearConfig {
  std::map<std::string, double> base;         // branch -> MW at T = 0
  std::map<std::string, double> sensitivity;  // branch -> MW per MW of transfer
};

double element_flow(const MonitoredElement& e, const std::map<std::string, double>& flows,
                    bool& present) {
  present = true;
  if (!e.ptc) {
    const auto it = flows.find(e.branch_id);
    if (it == flows.end()) {
      present = false;
      return 0.0;
    }
    return it->second;
  }
  double v = 0.0;
  for (std::size_t k = 0; k < e.ptc->member_branch_ids.size(); ++k) {
    const auto it = flows.find(e.ptc->member_branch_ids[k]);
    if (it != flows.end()) v += e.ptc->direction_signs[k] * it->second;
  }
  return v;
}

class TransferSearch {
 public:
  TransferSearch(const NetworkSnapshot& net, const ShiftSpec& shift,
                 std::span<const RemedialAction> ra_set, const MaxTransferOptions& options)
      : net_(net), options_(options) {
    const auto& src = shift.source_gsk ? *shift.source_gsk : net.zone(shift.source_zone).gsk;
    const auto& snk = shift.sink_gsk ? *shift.sink_gsk : net.zone(shift.sink_zone).gsk;
    for (const auto& [node, w] : src) shift_[node] += w;
    for (const auto& [node, w] : snk) shift_[node] -= w;
    for (const auto& [node, w] : shift_) (void)net.node_index(node);

    if (options.monitored.empty()) {
      for (const Branch& b : net.branches())
        if (b.in_service) monitored_.push_back({b.id, std::nullopt, 0, std::nullopt, {}});
    } else {
      monitored_ = options.monitored;
    }
    for (const RemedialAction& ra : ra_set) {
      if (ra.costly) continue;  // costly actions are never used in capacity calculation
      if (!ra.branch_id.empty()) (void)net.branch_index(ra.branch_id);
      ras_.push_back(ra);
    }
    if (shift.headroom) {
      upper_ = *shift.headroom;
    } else {
      double sum = 0.0;
      for (const Branch& b : net.branches())
        if (b.in_service) sum += b.f_max_thermal;
      upper_ = 10.0 * sum;
    }
  }

  double upper() const { return upper_; }

  StateTransfer solve_state(const StateModel& state, std::vector<std::string>& diagnostics) {
    prepare(state);
    StateTransfer out{state.id, 0.0, true};
    if (!feasible(state, 0.0, &diagnostics)) {
      out.feasible_at_zero = false;
      return out;
    }
    double lo = 0.0, hi = upper_;
    if (feasible(state, hi, nullptr)) {
      out.transfer_mw = hi;
      return out;
    }
    while (hi - lo > options_.tolerance) {
      const double mid = 0.5 * (lo + hi);
      (feasible(state, mid, nullptr) ? lo : hi) = mid;
    }
    out.transfer_mw = polish(state, lo, hi);
    return out;
  }

 private:
  void prepare(const StateModel& state) {
    configs_.clear();
    relief_.clear();
    const NetworkSnapshot state_net =
        state.contingency ? apply_contingency(net_, *state.contingency) : net_;

    std::vector<const RemedialAction*> switching;
    for (const RemedialAction& ra : ras_) {
      if (!ra.applies_to(state.id)) continue;
      if (ra.kind == RemedialAction::Kind::kFlowRelief)
        relief_[ra.branch_id] += std::max(0.0, ra.relief_mw);
      else
        switching.push_back(&ra);
    }

    // Exhaustive choice over switching actions; beyond ten use none/all only.
    std::vector<std::vector<const RemedialAction*>> subsets;
    if (switching.size() <= 10) {
      for (unsigned mask = 0; mask < (1u << switching.size()); ++mask) {
        std::vector<const RemedialAction*> pick;
        for (std::size_t k = 0; k < switching.size(); ++k)
          if (mask & (1u << k)) pick.push_back(switching[k]);
        subsets.push_back(std::move(pick));
      }
    } else {
      subsets.push_back({});
      subsets.push_back(switching);
    }

    const Eigen::VectorXd base_p = injection_vector(net_, options_.base_injections);
    const Eigen::VectorXd shift_p = injection_vector(net_, shift_, false);
    for (const auto& pick : subsets) {
      std::vector<std::string> opened, closed;
      for (const RemedialAction* ra : pick)
        (ra->kind == RemedialAction::Kind::kOpenBranch ? opened : closed).push_back(ra->branch_id);
      std::optional<NetworkSnapshot> cfg_net;
      try {
        NetworkSnapshot n = state_net.with_branch_status(closed, true);
        cfg_net.emplace(n.with_branch_status(opened, false));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kIslandedNetwork) continue;
        throw;
      }
      const DcPowerFlow solver(*cfg_net);
      const Eigen::VectorXd fb = solver.flows(base_p);
      const Eigen::VectorXd fs = solver.flows(shift_p);
      LinearConfig cfg;
      for (std::size_t k = 0; k < solver.active_branches().size(); ++k) {
        const std::string& id = cfg_net->branches()[solver.active_branches()[k]].id;
        cfg.base[id] = fb(static_cast<Eigen::Index>(k));
        cfg.sensitivity[id] = fs(static_cast<Eigen::Index>(k));
      }
      configs_.push_back(std::move(cfg));
    }
  }

  // Flows are linear in the transfer within a configuration, so the exact
  // boundary inside the final bracket is where some element meets its limit.
  double polish(const StateModel& state, double lo, double hi) {
    double best = lo;
    for (const LinearConfig& cfg : configs_) {
      for (const MonitoredElement& e : monitored_) {
        bool present = true;
        const double a = element_flow(e, cfg.base, present);
        if (!present) continue;
        const double b = element_flow(e, cfg.sensitivity, present);
        if (b == 0.0) continue;
        const double limit = limit_of(e);
        for (double target : {limit, -limit}) {
          const double t = (target - a) / b;
          if (t > best && t < hi && feasible(state, t, nullptr)) best = t;
        }
      }
    }
    return best;
  }

  double limit_of(const MonitoredElement& e) const {
    double limit = e.limit.value_or(e.ptc ? e.ptc->limit : net_.branch(e.branch_id).f_max_thermal);
    if (!e.ptc) {
      const auto r = relief_.find(e.branch_id);
      if (r != relief_.end()) limit += r->second;
    }
    return limit;
  }

  bool within_limits(const StateModel& state, const std::map<std::string, double>& flows,
                     std::vector<std::string>* violations) const {
    bool ok = true;
    for (const MonitoredElement& e : monitored_) {
      if (!e.state_ids.empty() &&
          std::find(e.state_ids.begin(), e.state_ids.end(), state.id) == e.state_ids.end())
        continue;
      bool present = true;
      const double v = element_flow(e, flows, present);
      if (!present) continue;
      const double limit = limit_of(e);
      const double loading = e.direction == 0 ? std::abs(v) : e.direction * v;
      if (loading > limit + kFeasibilityTolerance) {
        ok = false;
        if (!violations) return false;
        violations->push_back(state.id + ": " + (e.ptc ? e.ptc->id : e.branch_id) + " at " +
                              std::to_string(v) + " MW exceeds " + std::to_string(limit) + " MW");
      }
    }
    return ok;
  }

  bool feasible(const StateModel& state, double transfer, std::vector<std::string>* diagnostics) {
    std::vector<std::string> first_violations;
    for (const LinearConfig& cfg : configs_) {
      std::map<std::string, double> flows;
      for (const auto& [id, f] : cfg.base) flows[id] = f + transfer * cfg.sensitivity.at(id);
      std::vector<std::string> v;
      if (within_limits(state, flows, diagnostics ? &v : nullptr)) return true;
      if (first_violations.empty()) first_violations = std::move(v);
    }
    if (options_.automatic) {
      Injections dispatch = options_.base_injections;
      for (const auto& [node, w] : shift_) dispatch[node] += transfer * w;
      const auto flows = options_.automatic->respond(net_, state.contingency, dispatch);
      if (flows && within_limits(state, *flows, nullptr)) return true;
    }
    if (diagnostics)
      diagnostics->insert(diagnostics->end(), first_violations.begin(), first_violations.end());
    return false;
  }

  const NetworkSnapshot& net_;
  const MaxTransferOptions& options_;
  std::map<std::string, double> shift_;
  std::vector<MonitoredElement> monitored_;
  std::vector<RemedialAction> ras_;
  double upper_ = 0.0;
  std::vector<LinearConfig> configs_;
  std::map<std::string, double> relief_;
};

}  // namespace

MaxTransferResult max_transfer(const NetworkSnapshot& net, const ShiftSpec& shift,
                               std::span<const Contingency> contingencies,
                               std::span<const RemedialAction> ra_set,
                               const MaxTransferOptions& options) {
  if (!(options.tolerance > 0.0))
    throw Error(ErrorCode::kValidationError, "max_transfer tolerance must be > 0");
  TransferSearch search(net, shift, ra_set, options);

  std::vector<StateModel> states;
  if (options.include_basecase) states.push_back({kBasecaseStateId, nullptr});
  std::set<std::string> ids;
  for (const Contingency& c : contingencies) {
    if (!ids.insert(c.id).second)
      throw Error(ErrorCode::kValidationError, "duplicate contingency id '" + c.id + "'");
    states.push_back({c.id, &c});
  }

  MaxTransferResult result;
  result.transfer_mw = search.upper();
  for (const StateModel& s : states) result.states.push_back(search.solve_state(s, result.diagnostics));

  std::vector<const StateTransfer*> infeasible;
  for (const StateTransfer& s : result.states)
    if (!s.feasible_at_zero) infeasible.push_back(&s);
  if (!infeasible.empty()) {
    result.feasible = false;
    result.transfer_mw = 0.0;
    result.limiting_state = (*std::min_element(infeasible.begin(), infeasible.end(),
                                               [](auto* a, auto* b) { return a->state_id < b->state_id; }))
                                ->state_id;
    return result;
  }
  for (const StateTransfer& s : result.states) result.transfer_mw = std::min(result.transfer_mw, s.transfer_mw);
  for (const StateTransfer& s : result.states) {
    if (s.transfer_mw <= result.transfer_mw + options.tolerance &&
        (result.limiting_state.empty() || s.state_id < result.limiting_state))
      result.limiting_state = s.state_id;
  }
  return result;
}

NtcDomain ntc_from_borders(const NetworkSnapshot& net, std::span<const BorderDirection> borders,
                           std::span<const Contingency> contingencies,
                           std::span<const RemedialAction> ra_set,
                           const MaxTransferOptions& options) {
  NtcDomain domain;
  domain.zones = net.zone_ids();
  for (const BorderDirection& b : borders) {
    const MaxTransferResult r =
        max_transfer(net, ShiftSpec{b.zone_from, b.zone_to, {}, {}, {}}, contingencies, ra_set, options);
    domain.borders.push_back({b.zone_from, b.zone_to, r.transfer_mw});
  }
  domain.validate();
  return domain;
}

}  // namespace fbc
