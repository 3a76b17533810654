#include "fbc/ra_valuation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fbc/error.hpp"

namespace fbc {

std::optional<std::string> CneSnapshotRecord::invalid_reason() const {
  const double eq4 = fmax - frm - f0 + fra + amr - faac - iva;
  if (std::abs(eq4 - ram) > kSnapshotRamTolerance)
    return "ram " + std::to_string(ram) + " differs from its terms (" + std::to_string(eq4) + ")";
  if (fra < 0.0) return "fra must be >= 0";
  if (shadow_price < 0.0) return "shadow_price must be >= 0";
  if (min_flow > flow_fb + kSnapshotRamTolerance || flow_fb > max_flow + kSnapshotRamTolerance)
    return "flow_fb outside [min_flow, max_flow]";
  if (shadow_price > 0.0 && std::abs(flow_fb - max_flow) > kSnapshotRamTolerance &&
      std::abs(flow_fb - min_flow) > kSnapshotRamTolerance)
    return "positive shadow price on a constraint that is not active";
  return std::nullopt;
}

double ra_value_lower_bound(const CneSnapshotRecord& record) {
  if (record.fra < 0.0 || record.shadow_price < 0.0)
    throw Error(ErrorCode::kValidationError, "fra and shadow_price must be >= 0");
  return record.fra * record.shadow_price;
}

bool TimeWindow::contains(Timestamp t) const {
  return (!start || t >= *start) && (!end || t < *end);
}

ValuationReport aggregate_by_tso(std::span<const CneSnapshotRecord> records, const TimeWindow& window) {
  std::vector<const CneSnapshotRecord*> in_window;
  for (const CneSnapshotRecord& r : records)
    if (window.contains(r.hour)) in_window.push_back(&r);
  // Fixed summation order keeps totals independent of input order.
  std::sort(in_window.begin(), in_window.end(), [](auto* a, auto* b) {
    return std::tie(a->hour, a->cnec_id) < std::tie(b->hour, b->cnec_id);
  });
  for (std::size_t i = 1; i < in_window.size(); ++i)
    if (in_window[i]->hour == in_window[i - 1]->hour && in_window[i]->cnec_id == in_window[i - 1]->cnec_id)
      throw Error(ErrorCode::kDuplicateRecord,
                  "CNEC '" + in_window[i]->cnec_id + "' appears twice at " + format_utc(in_window[i]->hour));

  ValuationReport report;
  std::set<std::string> tsos;
  std::vector<Timestamp> hours;
  for (const CneSnapshotRecord* r : in_window) {
    const double v = ra_value_lower_bound(*r);
    report.records.push_back({r->hour, r->cnec_id, r->tso, r->fra, r->shadow_price, v});
    report.tso_value[r->tso] += v;
    report.tso_fra_mwh[r->tso] += r->fra;
    tsos.insert(r->tso);
    if (hours.empty() || hours.back() != r->hour) hours.push_back(r->hour);
  }

  std::map<std::string, double> running;
  std::size_t next = 0;
  for (Timestamp h : hours) {
    for (; next < report.records.size() && report.records[next].hour == h; ++next)
      running[report.records[next].tso] += report.records[next].value;
    for (const std::string& tso : tsos) report.cumulative.push_back({h, tso, running[tso]});
  }
  for (const auto& [tso, v] : report.tso_value) report.total_value += v;
  return report;
}

std::vector<ActiveConstraintRow> active_constraint_report(std::span<const CneSnapshotRecord> records,
                                                          Timestamp hour) {
  bool known = false;
  std::vector<ActiveConstraintRow> rows;
  for (const CneSnapshotRecord& r : records) {
    if (r.hour != hour) continue;
    known = true;
    if (r.shadow_price > 0.0)
      rows.push_back({r.cnec_id, r.tso, r.fmax, r.fra, r.fref, r.flow_fb, r.min_flow, r.max_flow, r.shadow_price});
  }
  if (!known) throw Error(ErrorCode::kUnknownHour, "no records for " + format_utc(hour));
  std::sort(rows.begin(), rows.end(), [](const ActiveConstraintRow& a, const ActiveConstraintRow& b) {
    if (a.shadow_price != b.shadow_price) return a.shadow_price > b.shadow_price;
    return a.cnec_id < b.cnec_id;
  });
  return rows;
}

}  // namespace fbc
