#include "fbc/formats.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fbc/csv.hpp"
#include "fbc/error.hpp"

namespace fbc::io {

namespace {

using csv::format_number;

template <typename T>
T field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::kParseError, ctx + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, ctx + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<T>(j, key, ctx);
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& ctx) {
  return optional_field<T>(j, key, ctx).value_or(std::move(fallback));
}

const json& array_field(const json& j, const char* key, const std::string& ctx, bool required = true) {
  static const json empty = json::array();
  if (!j.is_object()) throw Error(ErrorCode::kParseError, ctx + ": expected an object");
  if (!j.contains(key)) {
    if (required) throw Error(ErrorCode::kParseError, ctx + ": missing field '" + key + "'");
    return empty;
  }
  const json& a = j.at(key);
  if (!a.is_array()) throw Error(ErrorCode::kParseError, ctx + ": field '" + key + "' must be an array");
  return a;
}

const json& as_array(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw Error(ErrorCode::kParseError, ctx + ": expected a JSON list");
  return j;
}

std::string item_ctx(const std::string& source, const char* kind, std::size_t i) {
  return source + ": " + kind + "[" + std::to_string(i) + "]";
}

// Re-raise construction errors with the source attached.
template <typename F>
auto with_context(const std::string& ctx, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), ctx + ": " + e.detail());
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open '" + path.string() + "'");
  return in;
}

Contingency contingency_from_json(const json& j, const std::string& ctx) {
  Contingency c{field<std::string>(j, "id", ctx), field<std::vector<std::string>>(j, "outaged_branch_ids", ctx)};
  if (c.outaged_branch_ids.empty())
    throw Error(ErrorCode::kValidationError, ctx + ": contingency '" + c.id + "' outages no branch");
  return c;
}

json contingency_to_json(const Contingency& c) {
  return {{"id", c.id}, {"outaged_branch_ids", c.outaged_branch_ids}};
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

// ---- network ----------------------------------------------------------------

NetworkSnapshot network_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, source + ": expected an object");
  std::vector<Node> nodes;
  const json& jn = array_field(j, "nodes", source);
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string ctx = item_ctx(source, "nodes", i);
    nodes.push_back({field<std::string>(jn[i], "id", ctx), field<std::string>(jn[i], "zone_id", ctx),
                     optional_field<double>(jn[i], "gsk_basis", ctx)});
  }
  std::vector<Branch> branches;
  const json& jb = array_field(j, "branches", source);
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const std::string ctx = item_ctx(source, "branches", i);
    branches.push_back({field<std::string>(jb[i], "id", ctx), field<std::string>(jb[i], "from_node", ctx),
                        field<std::string>(jb[i], "to_node", ctx), field<double>(jb[i], "reactance", ctx),
                        field<double>(jb[i], "f_max_thermal", ctx), field_or<bool>(jb[i], "in_service", true, ctx)});
  }
  std::vector<Zone> zones;
  const json& jz = array_field(j, "zones", source);
  for (std::size_t i = 0; i < jz.size(); ++i) {
    const std::string ctx = item_ctx(source, "zones", i);
    zones.push_back({field<std::string>(jz[i], "id", ctx),
                     field_or<std::map<std::string, double>>(jz[i], "gsk", {}, ctx)});
  }
  std::vector<HvdcLink> links;
  const json& jh = array_field(j, "hvdc_links", source, false);
  for (std::size_t i = 0; i < jh.size(); ++i) {
    const std::string ctx = item_ctx(source, "hvdc_links", i);
    links.push_back({field<std::string>(jh[i], "id", ctx), field<std::string>(jh[i], "from_node", ctx),
                     field<std::string>(jh[i], "to_node", ctx), field<double>(jh[i], "setpoint", ctx),
                     field<double>(jh[i], "capacity", ctx)});
  }
  const std::string slack = field<std::string>(j, "slack_node", source);
  return with_context(source, [&] {
    return NetworkSnapshot(std::move(nodes), std::move(branches), std::move(zones), std::move(links), slack);
  });
}

json network_to_json(const NetworkSnapshot& net) {
  json j;
  j["nodes"] = json::array();
  for (const Node& n : net.nodes()) {
    json o = {{"id", n.id}, {"zone_id", n.zone_id}};
    if (n.gsk_basis) o["gsk_basis"] = *n.gsk_basis;
    j["nodes"].push_back(std::move(o));
  }
  j["branches"] = json::array();
  for (const Branch& b : net.branches())
    j["branches"].push_back({{"id", b.id},
                             {"from_node", b.from_node},
                             {"to_node", b.to_node},
                             {"reactance", b.reactance},
                             {"f_max_thermal", b.f_max_thermal},
                             {"in_service", b.in_service}});
  j["zones"] = json::array();
  for (const Zone& z : net.zones()) j["zones"].push_back({{"id", z.id}, {"gsk", z.gsk}});
  j["hvdc_links"] = json::array();
  for (const HvdcLink& h : net.hvdc_links())
    j["hvdc_links"].push_back({{"id", h.id},
                               {"from_node", h.from_node},
                               {"to_node", h.to_node},
                               {"setpoint", h.setpoint},
                               {"capacity", h.capacity}});
  j["slack_node"] = net.slack_node();
  return j;
}

NetworkSnapshot parse_network(const std::filesystem::path& path) {
  return network_from_json(read_json_file(path), path.string());
}

// ---- CNECs --------------------------------------------------------------------

std::vector<CnecSpec> cnecs_from_json(const json& j, const std::string& source) {
  std::vector<CnecSpec> specs;
  const json& list = as_array(j, source);
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    const std::string ctx = item_ctx(source, "cnecs", i);
    CnecSpec s;
    s.id = field<std::string>(e, "id", ctx);
    s.branch_id = field_or<std::string>(e, "branch_id", {}, ctx);
    if (e.contains("ptc")) {
      const json& p = e.at("ptc");
      const std::string pctx = ctx + ".ptc";
      s.ptc = Ptc{field<std::string>(p, "id", pctx), field<std::vector<std::string>>(p, "member_branch_ids", pctx),
                  field<std::vector<int>>(p, "direction_signs", pctx), field<double>(p, "limit", pctx)};
      with_context(pctx, [&] { s.ptc->validate(); });
    }
    if (s.branch_id.empty() == !s.ptc)
      throw Error(ErrorCode::kValidationError, ctx + ": exactly one of 'branch_id' or 'ptc' is required");
    s.direction = field_or<int>(e, "direction", 1, ctx);
    if (s.direction != 1 && s.direction != -1)
      throw Error(ErrorCode::kValidationError, ctx + ": direction must be 1 or -1");
    if (e.contains("contingency") && !e.at("contingency").is_null())
      s.contingency = contingency_from_json(e.at("contingency"), ctx + ".contingency");
    s.tso = field_or<std::string>(e, "tso", {}, ctx);
    s.f_max = optional_field<double>(e, "fmax", ctx);
    s.f_rm = field_or<double>(e, "frm", 0.0, ctx);
    s.f_aac = field_or<double>(e, "faac", 0.0, ctx);
    s.iva = field_or<double>(e, "iva", 0.0, ctx);
    s.ra_uplift = field_or<double>(e, "ra_uplift", 0.0, ctx);
    if (s.f_rm < 0.0 || s.f_aac < 0.0 || s.iva < 0.0 || s.ra_uplift < 0.0 || (s.f_max && *s.f_max <= 0.0))
      throw Error(ErrorCode::kValidationError, ctx + ": fmax must be > 0 and margins/uplift >= 0");
    specs.push_back(std::move(s));
  }
  std::set<std::string> ids;
  for (const CnecSpec& s : specs)
    if (!ids.insert(s.id).second)
      throw Error(ErrorCode::kValidationError, source + ": duplicate CNEC id '" + s.id + "'");
  return specs;
}

json cnecs_to_json(std::span<const CnecSpec> specs) {
  json list = json::array();
  for (const CnecSpec& s : specs) {
    json o = {{"id", s.id}, {"direction", s.direction}, {"tso", s.tso}, {"frm", s.f_rm},
              {"faac", s.f_aac}, {"iva", s.iva}, {"ra_uplift", s.ra_uplift}};
    if (s.ptc)
      o["ptc"] = {{"id", s.ptc->id},
                  {"member_branch_ids", s.ptc->member_branch_ids},
                  {"direction_signs", s.ptc->direction_signs},
                  {"limit", s.ptc->limit}};
    else
      o["branch_id"] = s.branch_id;
    if (s.contingency) o["contingency"] = contingency_to_json(*s.contingency);
    if (s.f_max) o["fmax"] = *s.f_max;
    list.push_back(std::move(o));
  }
  return list;
}

std::vector<CnecSpec> parse_cnecs(const std::filesystem::path& path) {
  return cnecs_from_json(read_json_file(path), path.string());
}

// ---- contingencies, RAs, injections -------------------------------------------

std::vector<Contingency> contingencies_from_json(const json& j, const std::string& source) {
  std::vector<Contingency> out;
  const json& list = as_array(j, source);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(contingency_from_json(list[i], item_ctx(source, "contingencies", i)));
    if (!ids.insert(out.back().id).second)
      throw Error(ErrorCode::kValidationError, source + ": duplicate contingency id '" + out.back().id + "'");
  }
  return out;
}

json contingencies_to_json(std::span<const Contingency> list) {
  json out = json::array();
  for (const Contingency& c : list) out.push_back(contingency_to_json(c));
  return out;
}

std::vector<RemedialAction> remedial_actions_from_json(const json& j, const std::string& source) {
  std::vector<RemedialAction> out;
  const json& list = as_array(j, source);
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string ctx = item_ctx(source, "remedial_actions", i);
    RemedialAction ra;
    ra.id = field<std::string>(list[i], "id", ctx);
    const std::string kind = field<std::string>(list[i], "kind", ctx);
    if (kind == "flow_relief") ra.kind = RemedialAction::Kind::kFlowRelief;
    else if (kind == "open_branch") ra.kind = RemedialAction::Kind::kOpenBranch;
    else if (kind == "close_branch") ra.kind = RemedialAction::Kind::kCloseBranch;
    else throw Error(ErrorCode::kValidationError, ctx + ": unknown kind '" + kind + "'");
    ra.contingency_ids = field_or<std::vector<std::string>>(list[i], "contingency_ids", {}, ctx);
    ra.branch_id = field<std::string>(list[i], "branch_id", ctx);
    ra.relief_mw = field_or<double>(list[i], "relief_mw", 0.0, ctx);
    ra.costly = field_or<bool>(list[i], "costly", false, ctx);
    if (ra.relief_mw < 0.0) throw Error(ErrorCode::kValidationError, ctx + ": relief_mw must be >= 0");
    out.push_back(std::move(ra));
  }
  return out;
}

json remedial_actions_to_json(std::span<const RemedialAction> list) {
  json out = json::array();
  for (const RemedialAction& ra : list) {
    const char* kind = ra.kind == RemedialAction::Kind::kFlowRelief ? "flow_relief"
                       : ra.kind == RemedialAction::Kind::kOpenBranch ? "open_branch"
                                                                       : "close_branch";
    out.push_back({{"id", ra.id}, {"kind", kind}, {"contingency_ids", ra.contingency_ids},
                   {"branch_id", ra.branch_id}, {"relief_mw", ra.relief_mw}, {"costly", ra.costly}});
  }
  return out;
}

Injections injections_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, source + ": expected an object of node -> MW");
  Injections out;
  for (const auto& [node, v] : j.items()) {
    if (!v.is_number()) throw Error(ErrorCode::kParseError, source + ": injection for '" + node + "' is not a number");
    out[node] = v.get<double>();
  }
  return out;
}

// ---- schemes ------------------------------------------------------------------

SchemeRegistry registry_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, source + ": expected an object");
  SchemeRegistry reg;
  if (j.contains("operators")) {
    for (const auto& [key, name] : j.at("operators").items()) {
      int tag = 0;
      try {
        std::size_t used = 0;
        tag = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError, source + ": operator key '" + key + "' is not an integer");
      }
      if (!name.is_string()) throw Error(ErrorCode::kParseError, source + ": operator names must be strings");
      reg.operators[tag] = name.get<std::string>();
    }
  }
  const json& schemes = array_field(j, "schemes", source, false);
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const json& e = schemes[i];
    const std::string ctx = item_ctx(source, "schemes", i);
    SipsScheme s;
    s.id = field<std::string>(e, "id", ctx);
    const json& in = e.contains("input") ? e.at("input") : json::object();
    const std::string type = field<std::string>(in, "type", ctx + ".input");
    if (type == "event_based") {
      s.input.kind = SchemeInput::Kind::kEventBased;
      s.input.trigger_element_ids = field<std::vector<std::string>>(in, "trigger_element_ids", ctx + ".input");
    } else if (type == "response_based") {
      s.input.kind = SchemeInput::Kind::kResponseBased;
      s.input.quantity = field_or<std::string>(in, "quantity", "flow", ctx + ".input");
      s.input.monitored_id = field<std::string>(in, "monitored_id", ctx + ".input");
      s.input.threshold = field<double>(in, "threshold", ctx + ".input");
    } else {
      throw Error(ErrorCode::kValidationError, ctx + ": unknown input type '" + type + "'");
    }
    s.condition = with_context(ctx, [&] { return parse_condition(field<std::string>(e, "condition", ctx)); });
    const json& act = e.contains("action") ? e.at("action") : json::object();
    s.action.type = with_context(ctx, [&] { return parse_action(field<std::string>(act, "type", ctx + ".action")); });
    s.action.node_id = field_or<std::string>(act, "node_id", {}, ctx + ".action");
    s.action.branch_id = field_or<std::string>(act, "branch_id", {}, ctx + ".action");
    s.action.hvdc_id = field_or<std::string>(act, "hvdc_id", {}, ctx + ".action");
    s.action.mw = field_or<double>(act, "mw", 0.0, ctx + ".action");
    s.armed = field_or<bool>(e, "armed", true, ctx);
    s.operator_tag = optional_field<int>(e, "operator", ctx);
    s.declared_fra = field_or<double>(e, "declared_fra", 0.0, ctx);
    reg.schemes.push_back(std::move(s));
  }
  const json& combos = array_field(j, "combinations", source, false);
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const std::string ctx = item_ctx(source, "combinations", i);
    reg.combinations.push_back(with_context(ctx, [&] {
      return SchemeCombination{parse_condition(field<std::string>(combos[i], "condition", ctx)),
                               parse_action(field<std::string>(combos[i], "action", ctx)),
                               field<std::vector<int>>(combos[i], "operators", ctx)};
    }));
  }
  with_context(source, [&] { reg.validate(); });
  return reg;
}

json registry_to_json(const SchemeRegistry& reg) {
  json j;
  j["operators"] = json::object();
  for (const auto& [tag, name] : reg.operators) j["operators"][std::to_string(tag)] = name;
  j["schemes"] = json::array();
  for (const SipsScheme& s : reg.schemes) {
    json in;
    if (s.input.kind == SchemeInput::Kind::kEventBased) {
      in = {{"type", "event_based"}, {"trigger_element_ids", s.input.trigger_element_ids}};
    } else {
      in = {{"type", "response_based"}, {"quantity", s.input.quantity},
            {"monitored_id", s.input.monitored_id}, {"threshold", s.input.threshold}};
    }
    json act = {{"type", std::string(to_string(s.action.type))}, {"mw", s.action.mw}};
    if (!s.action.node_id.empty()) act["node_id"] = s.action.node_id;
    if (!s.action.branch_id.empty()) act["branch_id"] = s.action.branch_id;
    if (!s.action.hvdc_id.empty()) act["hvdc_id"] = s.action.hvdc_id;
    json o = {{"id", s.id}, {"input", in}, {"condition", std::string(to_string(s.condition))},
              {"action", act}, {"armed", s.armed}, {"declared_fra", s.declared_fra}};
    if (s.operator_tag) o["operator"] = *s.operator_tag;
    j["schemes"].push_back(std::move(o));
  }
  j["combinations"] = json::array();
  for (const SchemeCombination& c : reg.combinations)
    j["combinations"].push_back({{"condition", std::string(to_string(c.condition))},
                                 {"action", std::string(to_string(c.action))},
                                 {"operators", c.operators}});
  return j;
}

SchemeRegistry parse_schemes(const std::filesystem::path& path) {
  return registry_from_json(read_json_file(path), path.string());
}

// ---- order book -----------------------------------------------------------------

OrderBook read_orderbook(std::istream& in, const std::string& source) {
  const csv::Table t = csv::read(in, source);
  const std::size_t zone = t.column("zone", source), side = t.column("side", source);
  const std::size_t price = t.column("price_eur_mwh", source), qty = t.column("quantity_mw", source);
  OrderBook book;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = source + ":" + std::to_string(t.lines[r]);
    Bid b;
    b.zone = row[zone];
    if (row[side] == "supply") b.side = Side::kSupply;
    else if (row[side] == "demand") b.side = Side::kDemand;
    else throw Error(ErrorCode::kParseError, ctx + ": field 'side': expected supply or demand, got '" + row[side] + "'");
    b.price = csv::parse_number(row[price], ctx + ": field 'price_eur_mwh'");
    b.quantity = csv::parse_number(row[qty], ctx + ": field 'quantity_mw'");
    book.bids.push_back(std::move(b));
  }
  with_context(source, [&] { book.validate(); });
  return book;
}

void write_orderbook(std::ostream& out, const OrderBook& book) {
  csv::write_row(out, {"zone", "side", "price_eur_mwh", "quantity_mw"});
  for (const Bid& b : book.bids)
    csv::write_row(out, {b.zone, b.side == Side::kSupply ? "supply" : "demand", format_number(b.price),
                         format_number(b.quantity)});
}

OrderBook parse_orderbook(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_orderbook(in, path.string());
}

// ---- snapshots --------------------------------------------------------------------

namespace {
constexpr const char* kSnapshotNumeric[] = {"fmax", "frm", "f0", "fra", "amr", "faac", "iva", "ram",
                                            "fref", "flow_fb", "min_flow", "max_flow", "shadow_price"};

double* snapshot_slot(CneSnapshotRecord& r, std::size_t k) {
  double* slots[] = {&r.fmax, &r.frm, &r.f0, &r.fra, &r.amr, &r.faac, &r.iva, &r.ram,
                     &r.fref, &r.flow_fb, &r.min_flow, &r.max_flow, &r.shadow_price};
  return slots[k];
}
}  // namespace

SnapshotIngest read_snapshots(std::istream& in, const std::string& source) {
  const csv::Table t = csv::read(in, source);
  const std::size_t hour = t.column("hour", source), id = t.column("cnec_id", source), tso = t.column("tso", source);
  std::vector<std::size_t> numeric;
  for (const char* name : kSnapshotNumeric) numeric.push_back(t.column(name, source));
  std::vector<std::pair<std::size_t, std::string>> ptdf_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c].rfind("ptdf_", 0) == 0) ptdf_cols.emplace_back(c, t.header[c].substr(5));

  SnapshotIngest out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = source + ":" + std::to_string(t.lines[r]);
    CneSnapshotRecord rec;
    rec.hour = with_context(ctx + ": field 'hour'", [&] { return parse_timestamp(row[hour]); });
    rec.cnec_id = row[id];
    rec.tso = row[tso];
    if (rec.cnec_id.empty()) throw Error(ErrorCode::kParseError, ctx + ": field 'cnec_id' is empty");
    for (std::size_t k = 0; k < numeric.size(); ++k)
      *snapshot_slot(rec, k) =
          csv::parse_number(row[numeric[k]], ctx + ": field '" + std::string(kSnapshotNumeric[k]) + "'");
    for (const auto& [c, zone] : ptdf_cols)
      if (!row[c].empty()) rec.ptdfs[zone] = csv::parse_number(row[c], ctx + ": field '" + t.header[c] + "'");
    if (const auto reason = rec.invalid_reason()) {
      out.rejected.push_back({t.lines[r], rec.cnec_id, *reason});
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

void write_snapshots(std::ostream& out, std::span<const CneSnapshotRecord> records) {
  std::set<std::string> zones;
  for (const CneSnapshotRecord& r : records)
    for (const auto& [z, v] : r.ptdfs) zones.insert(z);
  std::vector<std::string> header = {"hour", "cnec_id", "tso"};
  for (const char* name : kSnapshotNumeric) header.emplace_back(name);
  for (const std::string& z : zones) header.push_back("ptdf_" + z);
  csv::write_row(out, header);
  for (const CneSnapshotRecord& r : records) {
    CneSnapshotRecord copy = r;
    std::vector<std::string> row = {format_utc(r.hour), r.cnec_id, r.tso};
    for (std::size_t k = 0; k < std::size(kSnapshotNumeric); ++k) row.push_back(format_number(*snapshot_slot(copy, k)));
    for (const std::string& z : zones) {
      const auto it = r.ptdfs.find(z);
      row.push_back(it == r.ptdfs.end() ? "" : format_number(it->second));
    }
    csv::write_row(out, row);
  }
}

SnapshotIngest parse_snapshots(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_snapshots(in, path.string());
}

// ---- domains ------------------------------------------------------------------------

void write_fb_domain(std::ostream& out, const FlowBasedDomain& domain) {
  std::vector<std::string> header = {"id", "tso"};
  for (const std::string& z : domain.zones) header.push_back("ptdf_" + z);
  for (const char* name : {"fmax", "frm", "f0", "fra", "amr", "faac", "iva", "ram"}) header.emplace_back(name);
  csv::write_row(out, header);
  for (const Cnec& c : domain.cnecs) {
    std::vector<std::string> row = {c.id, c.tso};
    for (const std::string& z : domain.zones) {
      const auto it = c.ptdf.find(z);
      row.push_back(format_number(it == c.ptdf.end() ? 0.0 : it->second));
    }
    const RamBreakdown& b = c.ram_breakdown;
    for (double v : {b.f_max, b.f_rm, b.f_0, b.f_ra, b.amr, b.f_aac, b.iva, c.ram()}) row.push_back(format_number(v));
    csv::write_row(out, row);
  }
}

FlowBasedDomain read_fb_domain(std::istream& in, const std::string& source) {
  const csv::Table t = csv::read(in, source);
  FlowBasedDomain domain;
  std::vector<std::size_t> ptdf_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c].rfind("ptdf_", 0) == 0) {
      ptdf_cols.push_back(c);
      domain.zones.push_back(t.header[c].substr(5));
    }
  }
  if (domain.zones.empty()) throw Error(ErrorCode::kParseError, source + ": no ptdf_<zone> columns");
  const std::size_t id = t.column("id", source), tso = t.column("tso", source);
  std::vector<std::size_t> terms;
  for (const char* name : {"fmax", "frm", "f0", "fra", "amr", "faac", "iva", "ram"})
    terms.push_back(t.column(name, source));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = source + ":" + std::to_string(t.lines[r]);
    Cnec c;
    c.id = row[id];
    c.element_id = c.id;
    c.tso = row[tso];
    for (std::size_t k = 0; k < ptdf_cols.size(); ++k)
      c.ptdf[domain.zones[k]] = csv::parse_number(row[ptdf_cols[k]], ctx + ": field '" + t.header[ptdf_cols[k]] + "'");
    double v[8];
    for (std::size_t k = 0; k < 8; ++k) v[k] = csv::parse_number(row[terms[k]], ctx + ": field '" + t.header[terms[k]] + "'");
    c.ram_breakdown = {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
    if (std::abs(c.ram() - v[7]) > 1e-6)
      throw Error(ErrorCode::kValidationError, ctx + ": ram does not match its terms");
    if (!(c.ram() > 0.0)) throw Error(ErrorCode::kValidationError, ctx + ": ram must be > 0");
    domain.cnecs.push_back(std::move(c));
  }
  return domain;
}

void write_ntc_domain(std::ostream& out, const NtcDomain& domain) {
  csv::write_row(out, {"zone_from", "zone_to", "capacity_mw"});
  for (const NtcBorder& b : domain.borders) csv::write_row(out, {b.zone_from, b.zone_to, format_number(b.capacity)});
}

NtcDomain read_ntc_domain(std::istream& in, const std::string& source) {
  const csv::Table t = csv::read(in, source);
  const std::size_t from = t.column("zone_from", source), to = t.column("zone_to", source),
                    cap = t.column("capacity_mw", source);
  NtcDomain domain;
  std::set<std::string> zones;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    domain.borders.push_back({row[from], row[to],
                              csv::parse_number(row[cap], source + ":" + std::to_string(t.lines[r]) + ": field 'capacity_mw'")});
    zones.insert(row[from]);
    zones.insert(row[to]);
  }
  domain.zones.assign(zones.begin(), zones.end());
  with_context(source, [&] { domain.validate(); });
  return domain;
}

void write_ptdf(std::ostream& out, const PtdfMatrix& ptdf) {
  std::vector<std::string> header = {"branch_id"};
  header.insert(header.end(), ptdf.col_ids.begin(), ptdf.col_ids.end());
  csv::write_row(out, header);
  for (std::size_t r = 0; r < ptdf.row_ids.size(); ++r) {
    std::vector<std::string> row = {ptdf.row_ids[r]};
    for (Eigen::Index c = 0; c < ptdf.values.cols(); ++c)
      row.push_back(format_number(ptdf.values(static_cast<Eigen::Index>(r), c)));
    csv::write_row(out, row);
  }
}

// ---- coupling results ---------------------------------------------------------------

json coupling_result_to_json(const CouplingResult& r, const OrderBook& book) {
  json j;
  j["hour"] = book.hour;
  j["zones"] = r.zones;
  j["np"] = r.np;
  j["zonal_price"] = r.zonal_price;
  j["system_price"] = r.system_price;
  j["accepted"] = json::array();
  for (std::size_t i = 0; i < r.accepted.size() && i < book.bids.size(); ++i) {
    const Bid& b = book.bids[i];
    j["accepted"].push_back({{"bid", i}, {"zone", b.zone}, {"side", b.side == Side::kSupply ? "supply" : "demand"},
                             {"price_eur_mwh", b.price}, {"quantity_mw", b.quantity}, {"fraction", r.accepted[i]}});
  }
  j["consumer_surplus"] = r.consumer_surplus;
  j["producer_surplus"] = r.producer_surplus;
  j["congestion_rent"] = r.congestion_rent;
  j["total_surplus"] = r.total_surplus;
  j["dual_objective"] = r.dual_objective;
  j["shadow_price"] = r.shadow_price;
  j["binding"] = r.binding;
  return j;
}

CouplingResult coupling_result_from_json(const json& j) {
  const std::string ctx = "coupling result";
  CouplingResult r;
  r.zones = field<std::vector<std::string>>(j, "zones", ctx);
  r.np = field<std::map<std::string, double>>(j, "np", ctx);
  r.zonal_price = field<std::map<std::string, double>>(j, "zonal_price", ctx);
  r.system_price = field<double>(j, "system_price", ctx);
  for (const json& a : array_field(j, "accepted", ctx)) r.accepted.push_back(field<double>(a, "fraction", ctx));
  r.consumer_surplus = field<double>(j, "consumer_surplus", ctx);
  r.producer_surplus = field<double>(j, "producer_surplus", ctx);
  r.congestion_rent = field<double>(j, "congestion_rent", ctx);
  r.total_surplus = field<double>(j, "total_surplus", ctx);
  r.dual_objective = field<double>(j, "dual_objective", ctx);
  r.shadow_price = field<std::map<std::string, double>>(j, "shadow_price", ctx);
  r.binding = field<std::set<std::string>>(j, "binding", ctx);
  return r;
}

// ---- valuation reports ----------------------------------------------------------------

void write_record_values(std::ostream& out, const ValuationReport& report, std::string_view tz) {
  csv::write_row(out, {"hour", "cnec_id", "tso", "fra_mw", "shadow_price_eur_mw", "value_eur"});
  for (const RecordValue& v : report.records)
    csv::write_row(out, {format_in_zone(v.hour, tz), v.cnec_id, v.tso, format_number(v.fra),
                         format_number(v.shadow_price), format_number(v.value)});
}

void write_tso_totals(std::ostream& out, const ValuationReport& report) {
  csv::write_row(out, {"tso", "fra_mwh", "fra_twh", "value_eur"});
  for (const auto& [tso, value] : report.tso_value) {
    const double mwh = report.tso_fra_mwh.at(tso);
    csv::write_row(out, {tso, format_number(mwh), format_number(mwh / 1e6), format_number(value)});
  }
}

void write_cumulative(std::ostream& out, const ValuationReport& report, std::string_view tz) {
  csv::write_row(out, {"hour", "tso", "cumulative_eur"});
  for (const CumulativePoint& p : report.cumulative)
    csv::write_row(out, {format_in_zone(p.hour, tz), p.tso, format_number(p.cumulative)});
}

void write_active_constraints(std::ostream& out, std::span<const ActiveConstraintRow> rows) {
  csv::write_row(out, {"cnec_id", "tso", "fmax", "fra", "fref", "flow_fb", "min_flow", "max_flow", "shadow_price"});
  for (const ActiveConstraintRow& r : rows)
    csv::write_row(out, {r.cnec_id, r.tso, format_number(r.fmax), format_number(r.fra), format_number(r.fref),
                         format_number(r.flow_fb), format_number(r.min_flow), format_number(r.max_flow),
                         format_number(r.shadow_price)});
}

}  // namespace fbc::io
