#include "fbc/remedial_actions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fbc/error.hpp"

namespace fbc {

void ResourceProfile::validate() const {
  if (trigger == Trigger::kInherent && timing != Timing::kNotApplicable)
    throw Error(ErrorCode::kValidationError,
                "resource '" + name + "' is inherently provided and cannot have a timing");
}

Classification classify(const ResourceProfile& r) {
  r.validate();
  Classification c;
  c.is_remedial_action = r.disturbance_linked;
  c.is_ancillary_service = r.provider == Provider::kNetworkUser;
  c.is_sips = r.disturbance_linked && r.trigger == Trigger::kAutomatic && r.timing == Timing::kCurative;
  return c;
}

std::vector<std::pair<ResourceProfile, Classification>> reference_resources() {
  using T = Trigger;
  using Tm = Timing;
  using P = Provider;
  return {
      {{"FFR", T::kAutomatic, Tm::kCurative, P::kNetworkUser, true}, {true, true, true}},
      {{"inertia", T::kInherent, Tm::kNotApplicable, P::kNetworkUser, false}, {true, false, false}},
      {{"short-circuit current", T::kInherent, Tm::kNotApplicable, P::kNetworkUser, false},
       {true, false, false}},
      {{"countertrading", T::kManual, Tm::kPreventive, P::kOperator, true}, {false, true, false}},
      {{"redispatch", T::kManual, Tm::kPreventive, P::kOperator, true}, {false, true, false}},
      {{"automatic load shedding", T::kAutomatic, Tm::kCurative, P::kOperator, true},
       {false, true, true}},
      {{"HVDC EPC", T::kAutomatic, Tm::kCurative, P::kOperator, true}, {false, true, true}},
      {{"mFRR", T::kManual, Tm::kCurative, P::kNetworkUser, true}, {true, true, false}},
  };
}

std::string_view to_string(SystemCondition c) {
  switch (c) {
    case SystemCondition::kComponentOverload: return "component_overload";
    case SystemCondition::kAbnormalVoltage: return "abnormal_voltage";
    case SystemCondition::kTransientAngleInstability: return "transient_angle_instability";
    case SystemCondition::kSmallSignalAngleInstability: return "small_signal_angle_instability";
    case SystemCondition::kVoltageInstability: return "voltage_instability";
    case SystemCondition::kFrequencyInstability: return "frequency_instability";
  }
  return "";
}

std::string_view to_string(MitigativeAction a) {
  switch (a) {
    case MitigativeAction::kGridReconfiguration: return "grid_reconfiguration";
    case MitigativeAction::kVarRescheduling: return "var_rescheduling";
    case MitigativeAction::kHvdcControl: return "hvdc_control";
    case MitigativeAction::kGeneratorPowerControl: return "generator_p_control";
    case MitigativeAction::kGenerationRejection: return "generation_rejection";
    case MitigativeAction::kLoadShedding: return "load_shedding";
  }
  return "";
}

SystemCondition parse_condition(std::string_view s) {
  for (SystemCondition c : kAllConditions)
    if (to_string(c) == s) return c;
  throw Error(ErrorCode::kValidationError, "unknown system condition '" + std::string(s) + "'");
}

MitigativeAction parse_action(std::string_view s) {
  for (MitigativeAction a : kAllActions)
    if (to_string(a) == s) return a;
  throw Error(ErrorCode::kValidationError, "unknown mitigative action '" + std::string(s) + "'");
}

void SchemeRegistry::validate() const {
  std::set<std::string> ids;
  for (const SipsScheme& s : schemes) {
    if (s.id.empty()) throw Error(ErrorCode::kValidationError, "scheme with empty id");
    if (!ids.insert(s.id).second)
      throw Error(ErrorCode::kValidationError, "duplicate scheme id '" + s.id + "'");
    if (s.input.kind == SchemeInput::Kind::kEventBased && s.input.trigger_element_ids.empty())
      throw Error(ErrorCode::kValidationError, "event-based scheme '" + s.id + "' has no trigger elements");
    if (s.input.kind == SchemeInput::Kind::kResponseBased && s.input.monitored_id.empty())
      throw Error(ErrorCode::kValidationError, "response-based scheme '" + s.id + "' monitors nothing");
    const MitigativeAction t = s.action.type;
    if ((t == MitigativeAction::kGenerationRejection || t == MitigativeAction::kLoadShedding) &&
        !(s.action.mw >= 0.0))
      throw Error(ErrorCode::kValidationError, "scheme '" + s.id + "' must shed/reject a nonnegative amount");
    if (!(s.declared_fra >= 0.0))
      throw Error(ErrorCode::kValidationError, "scheme '" + s.id + "' declared_fra must be >= 0");
  }
}

void SchemeRegistry::validate_against(const NetworkSnapshot& net) const {
  validate();
  for (const SipsScheme& s : schemes) {
    const SchemeAction& a = s.action;
    switch (a.type) {
      case MitigativeAction::kGridReconfiguration: (void)net.branch_index(a.branch_id); break;
      case MitigativeAction::kGeneratorPowerControl:
      case MitigativeAction::kGenerationRejection:
      case MitigativeAction::kLoadShedding: (void)net.node_index(a.node_id); break;
      case MitigativeAction::kHvdcControl: {
        const auto& links = net.hvdc_links();
        const auto it = std::find_if(links.begin(), links.end(),
                                     [&](const HvdcLink& h) { return h.id == a.hvdc_id; });
        if (it == links.end())
          throw Error(ErrorCode::kUnknownElement, "scheme '" + s.id + "' references unknown hvdc link '" +
                                                      a.hvdc_id + "'");
        if (std::abs(a.mw) > 2.0 * it->capacity)
          throw Error(ErrorCode::kValidationError, "scheme '" + s.id + "' HVDC delta exceeds the link range");
        break;
      }
      case MitigativeAction::kVarRescheduling: break;
    }
  }
}

std::size_t SchemeRegistry::combination_count(int operator_tag) const {
  std::set<std::pair<int, int>> cells;
  for (const SchemeCombination& c : combinations)
    if (std::find(c.operators.begin(), c.operators.end(), operator_tag) != c.operators.end())
      cells.emplace(static_cast<int>(c.condition), static_cast<int>(c.action));
  return cells.size();
}

namespace {

std::map<std::string, double> balancing_weights(const NetworkSnapshot& net, const SipsOptions& options,
                                                const std::string& exclude) {
  std::map<std::string, double> w;
  if (options.balancing_gsk.empty()) {
    for (const Node& n : net.nodes())
      if (n.id != exclude) w[n.id] = 1.0;
  } else {
    for (const auto& [node, v] : options.balancing_gsk)
      if (node != exclude && v > 0.0) w[node] = v;
  }
  double sum = 0.0;
  for (const auto& [node, v] : w) sum += v;
  if (!(sum > 0.0))
    throw Error(ErrorCode::kValidationError, "balancing GSK is empty once node '" + exclude + "' is excluded");
  for (auto& [node, v] : w) v /= sum;
  return w;
}

void rebalance(Injections& p, const std::map<std::string, double>& weights, double mw) {
  for (const auto& [node, w] : weights) p[node] += w * mw;
}

bool triggered(const SipsScheme& s, const std::set<std::string>& outaged, const BranchFlows& flows) {
  if (!s.armed || !s.input.simulatable()) return false;
  if (s.input.kind == SchemeInput::Kind::kEventBased) {
    return std::any_of(s.input.trigger_element_ids.begin(), s.input.trigger_element_ids.end(),
                       [&](const std::string& id) { return outaged.contains(id); });
  }
  const auto it = flows.find(s.input.monitored_id);
  return it != flows.end() && std::abs(it->second) > s.input.threshold;
}

std::string fmt_mw(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

SipsOutcome simulate_sips(const NetworkSnapshot& net, const Injections& dispatch,
                          const Contingency* contingency, const SchemeRegistry& registry,
                          const SipsOptions& options) {
  registry.validate_against(net);
  require_balanced(injection_vector(net, dispatch));

  SipsOutcome out;
  NetworkSnapshot current = contingency ? apply_contingency(net, *contingency) : net;
  std::set<std::string> outaged;
  if (contingency) {
    outaged.insert(contingency->outaged_branch_ids.begin(), contingency->outaged_branch_ids.end());
    out.outaged_branches = contingency->outaged_branch_ids;
  }
  out.injections = dispatch;
  std::map<std::string, double> hvdc_delta;

  std::vector<const SipsScheme*> ordered;
  for (const SipsScheme& s : registry.schemes) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

  auto effective_injections = [&]() {
    Injections p = out.injections;
    for (const auto& [link_id, delta] : hvdc_delta) {
      for (const HvdcLink& h : net.hvdc_links()) {
        if (h.id != link_id) continue;
        p[h.from_node] -= delta;
        p[h.to_node] += delta;
      }
    }
    return p;
  };

  std::set<std::string> fired;
  out.flows = dc_load_flow(current, effective_injections());
  for (int round = 1;; ++round) {
    std::vector<const SipsScheme*> now;
    for (const SipsScheme* s : ordered)
      if (!fired.contains(s->id) && triggered(*s, outaged, out.flows)) now.push_back(s);
    if (now.empty()) break;
    if (round > options.max_rounds)
      throw Error(ErrorCode::kCascadeLimitExceeded,
                  "schemes still firing after " + std::to_string(options.max_rounds) + " rounds");
    out.rounds = round;

    for (const SipsScheme* s : now) {
      fired.insert(s->id);
      out.fired.push_back(s->id);
      const SchemeAction& a = s->action;
      ActionLogEntry entry{round, s->id, {}, 0.0};
      switch (a.type) {
        case MitigativeAction::kGridReconfiguration: {
          if (current.branch(a.branch_id).in_service) {
            const std::string ids[] = {a.branch_id};
            current = current.with_branch_status(ids, false);
            outaged.insert(a.branch_id);
            out.outaged_branches.push_back(a.branch_id);
            entry.description = "open branch " + a.branch_id;
          } else {
            entry.description = "branch " + a.branch_id + " already open";
          }
          break;
        }
        case MitigativeAction::kGenerationRejection: {
          const double available = std::max(0.0, out.injections[a.node_id]);
          const double amount = std::min(a.mw, available);
          out.injections[a.node_id] -= amount;
          rebalance(out.injections, balancing_weights(net, options, a.node_id), amount);
          entry.applied_mw = amount;
          entry.description = "reject " + fmt_mw(amount) + " MW at " + a.node_id;
          break;
        }
        case MitigativeAction::kLoadShedding: {
          const double available = std::max(0.0, -out.injections[a.node_id]);
          const double amount = std::min(a.mw, available);
          out.injections[a.node_id] += amount;
          rebalance(out.injections, balancing_weights(net, options, a.node_id), -amount);
          entry.applied_mw = amount;
          entry.description = "shed " + fmt_mw(amount) + " MW at " + a.node_id;
          break;
        }
        case MitigativeAction::kGeneratorPowerControl: {
          double delta = a.mw;
          if (delta < 0.0) delta = -std::min(-delta, std::max(0.0, out.injections[a.node_id]));
          out.injections[a.node_id] += delta;
          rebalance(out.injections, balancing_weights(net, options, a.node_id), -delta);
          entry.applied_mw = delta;
          entry.description = "change output at " + a.node_id + " by " + fmt_mw(delta) + " MW";
          break;
        }
        case MitigativeAction::kHvdcControl: {
          const auto& links = net.hvdc_links();
          const auto it = std::find_if(links.begin(), links.end(),
                                       [&](const HvdcLink& h) { return h.id == a.hvdc_id; });
          const double before = it->setpoint + hvdc_delta[a.hvdc_id];
          const double after = std::clamp(before + a.mw, -it->capacity, it->capacity);
          hvdc_delta[a.hvdc_id] += after - before;
          entry.applied_mw = after - before;
          entry.description = "move HVDC " + a.hvdc_id + " setpoint to " + fmt_mw(after) + " MW";
          break;
        }
        case MitigativeAction::kVarRescheduling:
          entry.description = "reactive rescheduling (no active-power effect)";
          break;
      }
      out.log.push_back(std::move(entry));
    }
    out.flows = dc_load_flow(current, effective_injections());
  }

  for (const auto& [id, f] : out.flows)
    if (std::abs(f) > current.branch(id).f_max_thermal + kFeasibilityTolerance) out.overloaded.push_back(id);
  return out;
}

std::optional<BranchFlows> SipsCurativeModel::respond(const NetworkSnapshot& net,
                                                      const Contingency* contingency,
                                                      const Injections& dispatch) const {
  try {
    SipsOutcome o = simulate_sips(net, dispatch, contingency, registry_, options_);
    if (o.fired.empty()) return std::nullopt;
    return std::move(o.flows);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCascadeLimitExceeded || e.code() == ErrorCode::kIslandedNetwork)
      return std::nullopt;
    throw;
  }
}

double capacity_uplift(const NetworkSnapshot& net, const CnecSpec& cnec, const SchemeRegistry& registry,
                       const ShiftSpec& shift, const SipsOptions& options, double tolerance) {
  registry.validate_against(net);
  MonitoredElement element;
  element.branch_id = cnec.branch_id;
  element.ptc = cnec.ptc;
  element.direction = cnec.direction;
  element.limit = cnec.f_max;

  MaxTransferOptions base;
  base.tolerance = tolerance;
  base.monitored = {element};
  std::vector<Contingency> states;
  if (cnec.contingency) {
    base.include_basecase = false;
    states.push_back(*cnec.contingency);
  }
  const MaxTransferResult without = max_transfer(net, shift, states, {}, base);

  const SipsCurativeModel model(registry, options);
  MaxTransferOptions with = base;
  with.automatic = &model;
  const MaxTransferResult with_schemes = max_transfer(net, shift, states, {}, with);

  // Schemes that cannot be simulated contribute their declared uplift on the
  // element they monitor.
  double declared = 0.0;
  for (const SipsScheme& s : registry.schemes)
    if (s.armed && !s.input.simulatable() && s.input.monitored_id == cnec.element_id())
      declared += s.declared_fra;

  return with_schemes.transfer_mw - without.transfer_mw + declared;
}

}  // namespace fbc
