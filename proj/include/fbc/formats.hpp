#pragma once

// File formats: JSON network/CNEC/scheme files, CSV order books, snapshots
// and domain exports. Parsers enforce the type invariants and report
// ParseError (malformed input) or ValidationError (invariant breach) with
// the file, line or field that caused it.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbc/capacity_domain.hpp"
#include "fbc/grid_model.hpp"
#include "fbc/market_coupling.hpp"
#include "fbc/ra_valuation.hpp"
#include "fbc/remedial_actions.hpp"

namespace fbc::io {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path);

// Network
NetworkSnapshot network_from_json(const json& j, const std::string& source = "network");
json network_to_json(const NetworkSnapshot& net);
NetworkSnapshot parse_network(const std::filesystem::path& path);

// CNEC specs (JSON list)
std::vector<CnecSpec> cnecs_from_json(const json& j, const std::string& source = "cnecs");
json cnecs_to_json(std::span<const CnecSpec> specs);
std::vector<CnecSpec> parse_cnecs(const std::filesystem::path& path);

// Contingencies, remedial actions, nodal injections
std::vector<Contingency> contingencies_from_json(const json& j, const std::string& source = "contingencies");
json contingencies_to_json(std::span<const Contingency> list);
std::vector<RemedialAction> remedial_actions_from_json(const json& j, const std::string& source = "remedial actions");
json remedial_actions_to_json(std::span<const RemedialAction> list);
Injections injections_from_json(const json& j, const std::string& source = "injections");

// Scheme registry
SchemeRegistry registry_from_json(const json& j, const std::string& source = "schemes");
json registry_to_json(const SchemeRegistry& registry);
SchemeRegistry parse_schemes(const std::filesystem::path& path);

// Order book: zone,side,price_eur_mwh,quantity_mw
OrderBook read_orderbook(std::istream& in, const std::string& source = "orderbook");
void write_orderbook(std::ostream& out, const OrderBook& book);
OrderBook parse_orderbook(const std::filesystem::path& path);

// Snapshots: one row per CNEC-hour
struct RejectedRecord {
  std::size_t line = 0;
  std::string cnec_id;
  std::string reason;
};
struct SnapshotIngest {
  std::vector<CneSnapshotRecord> records;
  std::vector<RejectedRecord> rejected;
};
SnapshotIngest read_snapshots(std::istream& in, const std::string& source = "snapshots");
void write_snapshots(std::ostream& out, std::span<const CneSnapshotRecord> records);
SnapshotIngest parse_snapshots(const std::filesystem::path& path);

// Domains
void write_fb_domain(std::ostream& out, const FlowBasedDomain& domain);
FlowBasedDomain read_fb_domain(std::istream& in, const std::string& source = "fb domain");
void write_ntc_domain(std::ostream& out, const NtcDomain& domain);
NtcDomain read_ntc_domain(std::istream& in, const std::string& source = "ntc domain");
void write_ptdf(std::ostream& out, const PtdfMatrix& ptdf);

// Coupling results
json coupling_result_to_json(const CouplingResult& result, const OrderBook& book);
CouplingResult coupling_result_from_json(const json& j);

// Valuation reports
void write_record_values(std::ostream& out, const ValuationReport& report, std::string_view tz);
void write_tso_totals(std::ostream& out, const ValuationReport& report);
void write_cumulative(std::ostream& out, const ValuationReport& report, std::string_view tz);
void write_active_constraints(std::ostream& out, std::span<const ActiveConstraintRow> rows);

}  // namespace fbc::io
