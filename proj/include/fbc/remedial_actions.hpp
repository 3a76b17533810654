#pragma once

// Resource classification (ancillary service / remedial action / SIPS) and
// an event-driven simulator for protection schemes on the DC model.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fbc/capacity_domain.hpp"
#include "fbc/grid_model.hpp"

namespace fbc {

enum class Trigger { kManual, kAutomatic, kInherent };
enum class Timing { kPreventive, kCurative, kNotApplicable };
enum class Provider { kNetworkUser, kOperator };

struct ResourceProfile {
  std::string name;
  Trigger trigger = Trigger::kManual;
  Timing timing = Timing::kNotApplicable;
  Provider provider = Provider::kOperator;
  // Used only to mitigate detected, or avoid forecasted, disturbances.
  bool disturbance_linked = false;

  void validate() const;
};

struct Classification {
  bool is_ancillary_service = false;
  bool is_remedial_action = false;
  bool is_sips = false;

  bool operator==(const Classification&) const = default;
};

Classification classify(const ResourceProfile& r);

/// The eight labelled resources used to illustrate the categories, each
/// paired with its expected placement.
std::vector<std::pair<ResourceProfile, Classification>> reference_resources();

// ---- protection schemes ---------------------------------------------------

enum class SystemCondition {
  kComponentOverload,
  kAbnormalVoltage,
  kTransientAngleInstability,
  kSmallSignalAngleInstability,
  kVoltageInstability,
  kFrequencyInstability,
};

enum class MitigativeAction {
  kGridReconfiguration,
  kVarRescheduling,
  kHvdcControl,
  kGeneratorPowerControl,
  kGenerationRejection,
  kLoadShedding,
};

std::string_view to_string(SystemCondition c);
std::string_view to_string(MitigativeAction a);
SystemCondition parse_condition(std::string_view s);
MitigativeAction parse_action(std::string_view s);
inline constexpr SystemCondition kAllConditions[] = {
    SystemCondition::kComponentOverload,        SystemCondition::kAbnormalVoltage,
    SystemCondition::kTransientAngleInstability, SystemCondition::kSmallSignalAngleInstability,
    SystemCondition::kVoltageInstability,       SystemCondition::kFrequencyInstability};
inline constexpr MitigativeAction kAllActions[] = {
    MitigativeAction::kGridReconfiguration, MitigativeAction::kVarRescheduling,
    MitigativeAction::kHvdcControl,         MitigativeAction::kGeneratorPowerControl,
    MitigativeAction::kGenerationRejection, MitigativeAction::kLoadShedding};

/// Detection side of a scheme. Event-based inputs fire when any listed
/// element is out of service; response-based inputs fire when the monitored
/// quantity exceeds the threshold. Only "flow" is observable in a DC model;
/// other quantities (voltage, frequency, ...) parse but never fire.
struct SchemeInput {
  enum class Kind { kEventBased, kResponseBased };
  Kind kind = Kind::kEventBased;
  std::vector<std::string> trigger_element_ids;
  std::string quantity = "flow";
  std::string monitored_id;
  double threshold = 0.0;

  bool simulatable() const { return kind == Kind::kEventBased || quantity == "flow"; }
  bool operator==(const SchemeInput&) const = default;
};

/// Mitigative output. `mw` is the amount to reject/shed (>= 0) or the signed
/// setpoint delta for power and HVDC control.
struct SchemeAction {
  MitigativeAction type = MitigativeAction::kGenerationRejection;
  std::string node_id;
  std::string branch_id;
  std::string hvdc_id;
  double mw = 0.0;

  bool operator==(const SchemeAction&) const = default;
};

struct SipsScheme {
  std::string id;
  SchemeInput input;
  SystemCondition condition = SystemCondition::kComponentOverload;
  SchemeAction action;
  bool armed = true;
  std::optional<int> operator_tag;
  // Uplift the scheme is declared to provide when it cannot be simulated.
  double declared_fra = 0.0;

  bool operator==(const SipsScheme&) const = default;
};

/// One cell of the operator survey: a condition/action pair and the
/// operators reporting at least one scheme for it.
struct SchemeCombination {
  SystemCondition condition;
  MitigativeAction action;
  std::vector<int> operators;

  bool operator==(const SchemeCombination&) const = default;
};

struct SchemeRegistry {
  std::vector<SipsScheme> schemes;
  std::map<int, std::string> operators;
  std::vector<SchemeCombination> combinations;

  void validate() const;
  void validate_against(const NetworkSnapshot& net) const;
  /// Unique condition/action pairs reported by one operator.
  std::size_t combination_count(int operator_tag) const;
  bool operator==(const SchemeRegistry&) const = default;
};

struct SipsOptions {
  // Where shed or rejected power is picked up. Defaults to every node except
  // the one the action acts on, uniformly.
  std::map<std::string, double> balancing_gsk;
  int max_rounds = 10;
};

struct ActionLogEntry {
  int round = 0;
  std::string scheme_id;
  std::string description;
  double applied_mw = 0.0;

  bool operator==(const ActionLogEntry&) const = default;
};

struct SipsOutcome {
  BranchFlows flows;
  Injections injections;
  std::vector<std::string> outaged_branches;
  std::vector<std::string> fired;
  std::vector<ActionLogEntry> log;
  std::vector<std::string> overloaded;  // branches above their thermal limit
  int rounds = 0;
};

SipsOutcome simulate_sips(const NetworkSnapshot& net, const Injections& dispatch,
                          const Contingency* contingency, const SchemeRegistry& registry,
                          const SipsOptions& options = {});

/// Adapts a registry to the automatic-response hook of max_transfer.
class SipsCurativeModel : public CurativeModel {
 public:
  explicit SipsCurativeModel(const SchemeRegistry& registry, SipsOptions options = {})
      : registry_(registry), options_(std::move(options)) {}

  std::optional<BranchFlows> respond(const NetworkSnapshot& net, const Contingency* contingency,
                                     const Injections& dispatch) const override;

 private:
  const SchemeRegistry& registry_;
  SipsOptions options_;
};

/// max_transfer(with registry) - max_transfer(without) for the CNEC's
/// element in its own state (basecase when it has no contingency).
double capacity_uplift(const NetworkSnapshot& net, const CnecSpec& cnec,
                       const SchemeRegistry& registry, const ShiftSpec& shift,
                       const SipsOptions& options = {}, double tolerance = 0.01);

}  // namespace fbc
