#pragma once

// Lower-bound value of remedial actions from published flow-based results:
// every MW of F_RA on an active CNEC is worth at least its shadow price.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbc/timestamp.hpp"

namespace fbc {

inline constexpr double kSnapshotRamTolerance = 0.5;  // MW, published data is rounded

struct CneSnapshotRecord {
  Timestamp hour;
  std::string cnec_id;
  std::string tso;
  double fmax = 0.0, frm = 0.0, f0 = 0.0, fra = 0.0, amr = 0.0, faac = 0.0, iva = 0.0, ram = 0.0;
  double fref = 0.0;     // D-2 forecast flow
  double flow_fb = 0.0;  // expected flow after coupling
  double min_flow = 0.0, max_flow = 0.0;
  double shadow_price = 0.0;  // EUR/MW
  std::map<std::string, double> ptdfs;

  /// Empty when the record satisfies every invariant, else the reason.
  std::optional<std::string> invalid_reason() const;
  bool operator==(const CneSnapshotRecord&) const = default;
};

double ra_value_lower_bound(const CneSnapshotRecord& record);

struct TimeWindow {
  std::optional<Timestamp> start;  // inclusive
  std::optional<Timestamp> end;    // exclusive
  bool contains(Timestamp t) const;
};

struct RecordValue {
  Timestamp hour;
  std::string cnec_id;
  std::string tso;
  double fra = 0.0;
  double shadow_price = 0.0;
  double value = 0.0;
};

struct CumulativePoint {
  Timestamp hour;
  std::string tso;
  double cumulative = 0.0;
};

struct ValuationReport {
  std::vector<RecordValue> records;          // sorted by (hour, cnec id)
  std::map<std::string, double> tso_value;   // EUR
  std::map<std::string, double> tso_fra_mwh; // 1-hour records, MW == MWh
  std::vector<CumulativePoint> cumulative;   // per TSO, every hour in the window
  double total_value = 0.0;
};

/// Records outside the window are ignored. Throws DuplicateRecord when a
/// (cnec, hour) pair appears twice.
ValuationReport aggregate_by_tso(std::span<const CneSnapshotRecord> records, const TimeWindow& window = {});

struct ActiveConstraintRow {
  std::string cnec_id;
  std::string tso;
  double fmax = 0.0, fra = 0.0, fref = 0.0, flow_fb = 0.0, min_flow = 0.0, max_flow = 0.0;
  double shadow_price = 0.0;
};

/// CNECs with a positive shadow price in the hour, highest first (ties by
/// id). Throws UnknownHour when no record carries that hour.
std::vector<ActiveConstraintRow> active_constraint_report(std::span<const CneSnapshotRecord> records,
                                                          Timestamp hour);

}  // namespace fbc
