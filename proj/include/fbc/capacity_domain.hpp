#pragma once

// NTC and flow-based capacity domains, and the iterative maximum-transfer
// search used to size both.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbc/grid_model.hpp"

namespace fbc {

/// Smallest margin the AMR policy guarantees when no positive floor is set.
inline constexpr double kRamEpsilon = 1e-6;
/// Membership checks accept flows this far past a limit.
inline constexpr double kFeasibilityTolerance = 1e-9;
inline constexpr const char* kBasecaseStateId = "N-0";

/// The seven terms that make up the remaining available margin of a CNEC.
struct RamBreakdown {
  double f_max = 0.0;
  double f_rm = 0.0;
  double f_0 = 0.0;
  double f_ra = 0.0;
  double amr = 0.0;
  double f_aac = 0.0;
  double iva = 0.0;

  double ram() const;
  bool operator==(const RamBreakdown&) const = default;
};

double compute_ram(const RamBreakdown& b);

/// Sets `amr` so the margin reaches `ram_floor` (or kRamEpsilon when the
/// floor is zero: the margin must stay strictly positive). Any previous
/// `amr` is discarded.
RamBreakdown apply_amr_policy(RamBreakdown b, double ram_floor);

/// Power transfer corridor: signed sum of member branch flows.
struct Ptc {
  std::string id;
  std::vector<std::string> member_branch_ids;
  std::vector<int> direction_signs;
  double limit = 0.0;

  void validate() const;
  bool operator==(const Ptc&) const = default;
};

/// Input description of one CNEC, before PTDFs and F0 are computed.
struct CnecSpec {
  std::string id;
  std::string branch_id;   // empty when the element is a corridor
  std::optional<Ptc> ptc;  // set when the element is a corridor
  int direction = 1;       // +1 monitors from->to, -1 to->from
  std::optional<Contingency> contingency;
  std::string tso;
  std::optional<double> f_max;
  double f_rm = 0.0;
  double f_aac = 0.0;
  double iva = 0.0;
  double ra_uplift = 0.0;

  const std::string& element_id() const { return ptc ? ptc->id : branch_id; }
  bool operator==(const CnecSpec&) const = default;
};

struct Cnec {
  std::string id;
  std::string element_id;
  bool is_ptc = false;
  int direction = 1;
  std::optional<Contingency> contingency;
  std::string tso;
  std::map<std::string, double> ptdf;  // zone -> dimensionless
  RamBreakdown ram_breakdown;

  double ram() const { return ram_breakdown.ram(); }
};

struct FlowBasedDomain {
  std::vector<std::string> zones;
  std::vector<Cnec> cnecs;
};

struct NtcBorder {
  std::string zone_from;
  std::string zone_to;
  double capacity = 0.0;

  std::string id() const { return zone_from + "->" + zone_to; }
  bool operator==(const NtcBorder&) const = default;
};

struct NtcDomain {
  std::vector<std::string> zones;
  std::vector<NtcBorder> borders;

  void validate() const;
};

struct Containment {
  bool contained = true;
  std::vector<std::string> violated;
};

struct FbBuildOptions {
  double ram_floor = 0.0;
};

/// One CNEC spec per in-service branch, thermal limit, no contingency.
/// With `both_directions` each branch gets a "<id>+" and "<id>-" CNEC.
std::vector<CnecSpec> branch_cnec_specs(const NetworkSnapshot& net, bool both_directions,
                                        const std::string& tso = {});

/// `basecase` is the D-2 nodal dispatch (HVDC setpoints are added from the
/// network). F0 is the flow left when every zone's net position is zeroed
/// through its GSK while the intra-zonal pattern is kept.
FlowBasedDomain build_fb_domain(const NetworkSnapshot& net, std::span<const CnecSpec> specs,
                                const Injections& basecase,
                                const std::map<std::string, double>& ra_uplifts = {},
                                const FbBuildOptions& options = {});

/// Overload for a basecase given as zonal net positions only; they are
/// spread with the GSKs, so F0 carries HVDC effects only.
FlowBasedDomain build_fb_domain_from_net_positions(
    const NetworkSnapshot& net, std::span<const CnecSpec> specs,
    const std::map<std::string, double>& basecase_np,
    const std::map<std::string, double>& ra_uplifts = {}, const FbBuildOptions& options = {});

Containment domain_contains(const FlowBasedDomain& domain,
                            const std::map<std::string, double>& np);
Containment domain_contains(const NtcDomain& domain, const std::map<std::string, double>& np);

// ---- maximum transfer -----------------------------------------------------

/// Source and sink of a transfer: power is added on the source side and
/// withdrawn on the sink side through the given keys (zone GSKs if unset).
struct ShiftSpec {
  std::string source_zone;
  std::string sink_zone;
  std::optional<std::map<std::string, double>> source_gsk;
  std::optional<std::map<std::string, double>> sink_gsk;
  // Upper bracket of the search; defaults to 10x the sum of thermal limits.
  std::optional<double> headroom;
};

/// A non-costly remedial action available to the capacity coordinator.
struct RemedialAction {
  enum class Kind { kFlowRelief, kOpenBranch, kCloseBranch };

  std::string id;
  Kind kind = Kind::kFlowRelief;
  // States in which the action may be used; empty means every state.
  std::vector<std::string> contingency_ids;
  std::string branch_id;
  double relief_mw = 0.0;  // kFlowRelief only
  bool costly = false;

  bool applies_to(const std::string& state_id) const;
  bool operator==(const RemedialAction&) const = default;
};

/// Automatic post-contingency behaviour (e.g. protection schemes). Returns
/// the flows after the automatic actions settle, or nullopt when the model
/// has nothing to do or cannot settle.
class CurativeModel {
 public:
  virtual ~CurativeModel() = default;
  virtual std::optional<BranchFlows> respond(const NetworkSnapshot& net,
                                             const Contingency* contingency,
                                             const Injections& dispatch) const = 0;
};

/// An element whose flow is limited during the search.
struct MonitoredElement {
  std::string branch_id;
  std::optional<Ptc> ptc;
  int direction = 0;  // 0 limits |flow|; +1/-1 limit a single direction
  std::optional<double> limit;  // thermal limit when unset
  // Only monitored in these states (empty = every state).
  std::vector<std::string> state_ids;
};

struct MaxTransferOptions {
  double tolerance = 0.01;
  bool include_basecase = true;
  // Defaults to every in-service branch, both directions.
  std::vector<MonitoredElement> monitored;
  Injections base_injections;
  const CurativeModel* automatic = nullptr;
};

struct StateTransfer {
  std::string state_id;
  double transfer_mw = 0.0;
  bool feasible_at_zero = true;
};

struct MaxTransferResult {
  double transfer_mw = 0.0;
  std::string limiting_state;
  bool feasible = true;  // false when even a zero transfer violates a limit
  std::vector<StateTransfer> states;
  std::vector<std::string> diagnostics;
};

MaxTransferResult max_transfer(const NetworkSnapshot& net, const ShiftSpec& shift,
                               std::span<const Contingency> contingencies,
                               std::span<const RemedialAction> ra_set,
                               const MaxTransferOptions& options = {});

struct BorderDirection {
  std::string zone_from;
  std::string zone_to;
};

NtcDomain ntc_from_borders(const NetworkSnapshot& net, std::span<const BorderDirection> borders,
                           std::span<const Contingency> contingencies,
                           std::span<const RemedialAction> ra_set,
                           const MaxTransferOptions& options = {});

}  // namespace fbc
