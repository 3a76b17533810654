#include "fbc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "fbc/csv.hpp"
#include "fbc/error.hpp"
#include "fbc/formats.hpp"

namespace fbc {

namespace {

using io::json;

struct Inputs {
  std::string network;
  std::string cnecs;
  std::string contingencies;
  std::string ras;
  std::string schemes;
  std::string book;
  std::string dispatch;
  std::string snapshots;
  std::string domain;
  std::string kind = "fb";
  std::string output;
  std::string out_dir;
  std::string contingency_id;
  std::string from_zone;
  std::string to_zone;
  std::string hour;
  std::string window_start;
  std::string window_end;
  std::vector<std::string> borders;
  double ram_floor = 0.0;
  double tolerance = 0.01;
  bool nodal = false;
};

// Writes to the -o file when given, else to the result stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorCode::kValidationError, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

std::vector<Contingency> load_contingencies(const Inputs& in) {
  if (in.contingencies.empty()) return {};
  return io::contingencies_from_json(io::read_json_file(in.contingencies), in.contingencies);
}

std::vector<RemedialAction> load_ras(const Inputs& in) {
  if (in.ras.empty()) return {};
  return io::remedial_actions_from_json(io::read_json_file(in.ras), in.ras);
}

Injections load_dispatch(const Inputs& in) {
  if (in.dispatch.empty()) return {};
  return io::injections_from_json(io::read_json_file(in.dispatch), in.dispatch);
}

const Contingency* find_contingency(const std::vector<Contingency>& list, const std::string& id) {
  if (id.empty()) return nullptr;
  for (const Contingency& c : list)
    if (c.id == id) return &c;
  throw Error(ErrorCode::kUnknownElement, "contingency '" + id + "' is not in the contingency file");
}

// Every ordered pair of zones joined by an in-service branch.
std::vector<BorderDirection> default_borders(const NetworkSnapshot& net) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (const Branch& b : net.branches()) {
    if (!b.in_service) continue;
    const std::string& za = net.node(b.from_node).zone_id;
    const std::string& zb = net.node(b.to_node).zone_id;
    if (za == zb) continue;
    pairs.insert({za, zb});
    pairs.insert({zb, za});
  }
  std::vector<BorderDirection> out;
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

std::vector<BorderDirection> parse_borders(const std::vector<std::string>& specs) {
  std::vector<BorderDirection> out;
  for (const std::string& s : specs) {
    const auto arrow = s.find("->");
    if (arrow == std::string::npos || arrow == 0 || arrow + 2 >= s.size())
      throw Error(ErrorCode::kValidationError, "border '" + s + "' must look like A->B");
    out.push_back({s.substr(0, arrow), s.substr(arrow + 2)});
  }
  return out;
}

// Branch CNECs in both directions for the basecase and every contingency.
std::vector<CnecSpec> default_cnecs(const NetworkSnapshot& net, std::span<const Contingency> contingencies) {
  std::vector<CnecSpec> specs = branch_cnec_specs(net, true);
  const std::size_t basecase = specs.size();
  for (const Contingency& c : contingencies) {
    for (std::size_t i = 0; i < basecase; ++i) {
      const CnecSpec& base = specs[i];
      if (std::find(c.outaged_branch_ids.begin(), c.outaged_branch_ids.end(), base.branch_id) !=
          c.outaged_branch_ids.end())
        continue;
      CnecSpec s = base;
      s.id = base.id + "@" + c.id;
      s.contingency = c;
      specs.push_back(std::move(s));
    }
  }
  return specs;
}

FlowBasedDomain build_fb(const Inputs& in, const NetworkSnapshot& net) {
  const std::vector<Contingency> contingencies = load_contingencies(in);
  const std::vector<CnecSpec> specs =
      in.cnecs.empty() ? default_cnecs(net, contingencies) : io::parse_cnecs(in.cnecs);
  FbBuildOptions opts;
  opts.ram_floor = in.ram_floor;
  return build_fb_domain(net, specs, load_dispatch(in), {}, opts);
}

NtcDomain build_ntc(const Inputs& in, const NetworkSnapshot& net) {
  const std::vector<BorderDirection> borders = in.borders.empty() ? default_borders(net) : parse_borders(in.borders);
  MaxTransferOptions opts;
  opts.tolerance = in.tolerance;
  opts.base_injections = load_dispatch(in);
  return ntc_from_borders(net, borders, load_contingencies(in), load_ras(in), opts);
}

json transfer_to_json(const MaxTransferResult& r) {
  json j = {{"transfer_mw", r.transfer_mw}, {"limiting_state", r.limiting_state}, {"feasible", r.feasible}};
  j["states"] = json::array();
  for (const StateTransfer& s : r.states)
    j["states"].push_back(
        {{"state_id", s.state_id}, {"transfer_mw", s.transfer_mw}, {"feasible_at_zero", s.feasible_at_zero}});
  j["diagnostics"] = r.diagnostics;
  return j;
}

json surplus_summary(const CouplingResult& r) {
  return {{"np", r.np},
          {"zonal_price", r.zonal_price},
          {"consumer_surplus", r.consumer_surplus},
          {"producer_surplus", r.producer_surplus},
          {"congestion_rent", r.congestion_rent},
          {"total_surplus", r.total_surplus},
          {"binding", r.binding}};
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kValidationError, "cannot write '" + path.string() + "'");
  body(f);
}

// ---- subcommands ------------------------------------------------------------

void cmd_ptdf(const Inputs& in, std::ostream& out) {
  const NetworkSnapshot net = io::parse_network(in.network);
  const std::vector<Contingency> contingencies = load_contingencies(in);
  const Contingency* c = find_contingency(contingencies, in.contingency_id);
  const NetworkSnapshot topo = c ? apply_contingency(net, *c) : net;
  const PtdfMatrix nodal = nodal_ptdf(topo);
  Sink sink(in.output, out);
  io::write_ptdf(sink.stream(), in.nodal ? nodal : zonal_ptdf(topo, nodal));
}

void cmd_domain(const Inputs& in, std::ostream& out) {
  const NetworkSnapshot net = io::parse_network(in.network);
  Sink sink(in.output, out);
  if (in.kind == "fb")
    io::write_fb_domain(sink.stream(), build_fb(in, net));
  else
    io::write_ntc_domain(sink.stream(), build_ntc(in, net));
}

void cmd_couple(const Inputs& in, std::ostream& out) {
  const OrderBook book = io::parse_orderbook(in.book);
  CouplingResult result;
  if (!in.domain.empty()) {
    std::ifstream f(in.domain, std::ios::binary);
    if (!f) throw Error(ErrorCode::kParseError, "cannot open '" + in.domain + "'");
    result = in.kind == "fb" ? couple(book, io::read_fb_domain(f, in.domain))
                             : couple(book, io::read_ntc_domain(f, in.domain));
  } else if (!in.network.empty()) {
    const NetworkSnapshot net = io::parse_network(in.network);
    result = in.kind == "fb" ? couple(book, build_fb(in, net)) : couple(book, build_ntc(in, net));
  } else {
    throw Error(ErrorCode::kValidationError, "couple needs --domain or --network");
  }
  Sink sink(in.output, out);
  sink.stream() << io::coupling_result_to_json(result, book).dump(2) << '\n';
}

int cmd_max_transfer(const Inputs& in, std::ostream& out, std::ostream& err) {
  const NetworkSnapshot net = io::parse_network(in.network);
  ShiftSpec shift;
  shift.source_zone = in.from_zone;
  shift.sink_zone = in.to_zone;
  MaxTransferOptions opts;
  opts.tolerance = in.tolerance;
  opts.base_injections = load_dispatch(in);
  std::optional<SchemeRegistry> registry;
  std::optional<SipsCurativeModel> model;
  if (!in.schemes.empty()) {
    registry = io::parse_schemes(in.schemes);
    registry->validate_against(net);
    model.emplace(*registry);
    opts.automatic = &*model;
  }
  const MaxTransferResult r = max_transfer(net, shift, load_contingencies(in), load_ras(in), opts);
  Sink sink(in.output, out);
  sink.stream() << transfer_to_json(r).dump(2) << '\n';
  if (!r.feasible) {
    err << "NoFeasibleTransfer: limits are violated even at zero transfer\n";
    for (const std::string& d : r.diagnostics) err << "  " << d << '\n';
    return exit_code_for(ErrorCode::kNoFeasibleTransfer);
  }
  return 0;
}

void cmd_compare(const Inputs& in, std::ostream& out) {
  const NetworkSnapshot net = io::parse_network(in.network);
  const OrderBook book = io::parse_orderbook(in.book);
  const CouplingResult ntc = couple(book, build_ntc(in, net));
  const CouplingResult fb = couple(book, build_fb(in, net));
  const json j = {{"ntc", surplus_summary(ntc)},
                  {"fb", surplus_summary(fb)},
                  {"surplus_delta", fb.total_surplus - ntc.total_surplus}};
  Sink sink(in.output, out);
  sink.stream() << j.dump(2) << '\n';
}

void cmd_sips(const Inputs& in, std::ostream& out) {
  const NetworkSnapshot net = io::parse_network(in.network);
  const SchemeRegistry registry = io::parse_schemes(in.schemes);
  registry.validate_against(net);
  const std::vector<Contingency> contingencies = load_contingencies(in);
  const Contingency* c = find_contingency(contingencies, in.contingency_id);
  const SipsOutcome o = simulate_sips(net, load_dispatch(in), c, registry);
  json log = json::array();
  for (const ActionLogEntry& e : o.log)
    log.push_back({{"round", e.round}, {"scheme_id", e.scheme_id}, {"action", e.description},
                   {"applied_mw", e.applied_mw}});
  const json j = {{"flows", o.flows},       {"injections", o.injections}, {"outaged_branches", o.outaged_branches},
                  {"fired", o.fired},       {"log", log},                 {"overloaded", o.overloaded},
                  {"rounds", o.rounds}};
  Sink sink(in.output, out);
  sink.stream() << j.dump(2) << '\n';
}

void cmd_ra_value(const Inputs& in, const std::string& tz, std::ostream& out, std::ostream& err) {
  const io::SnapshotIngest ingest = io::parse_snapshots(in.snapshots);
  for (const io::RejectedRecord& r : ingest.rejected)
    err << "rejected " << in.snapshots << ":" << r.line << " (" << r.cnec_id << "): " << r.reason << '\n';
  TimeWindow window;
  if (!in.window_start.empty()) window.start = parse_timestamp(in.window_start);
  if (!in.window_end.empty()) window.end = parse_timestamp(in.window_end);
  const ValuationReport report = aggregate_by_tso(ingest.records, window);
  std::vector<ActiveConstraintRow> active;
  if (!in.hour.empty()) active = active_constraint_report(ingest.records, parse_timestamp(in.hour));

  if (!in.out_dir.empty()) {
    const std::filesystem::path dir(in.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "record_values.csv", [&](std::ostream& f) { io::write_record_values(f, report, tz); });
    write_file(dir / "tso_totals.csv", [&](std::ostream& f) { io::write_tso_totals(f, report); });
    write_file(dir / "cumulative.csv", [&](std::ostream& f) { io::write_cumulative(f, report, tz); });
    if (!in.hour.empty())
      write_file(dir / "active_constraints.csv", [&](std::ostream& f) { io::write_active_constraints(f, active); });
  }
  Sink sink(in.output, out);
  std::ostream& s = sink.stream();
  io::write_tso_totals(s, report);
  s << "total_value_eur," << csv::format_number(report.total_value) << "\r\n";
  if (!in.hour.empty() && in.out_dir.empty()) {
    s << "\r\n";
    io::write_active_constraints(s, active);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-based and NTC market coupling toolkit", "fbcoupler"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string tz = "UTC";
  app.add_option("--tz", tz, "Display time zone: UTC, CET, CEST, EET, EEST or +HH:MM")->envname("FBCOUPLER_TZ");

  Inputs in;
  auto network = [&](CLI::App* sub, bool required = true) {
    auto* o = sub->add_option("--network", in.network, "Network JSON file")->check(CLI::ExistingFile);
    if (required) o->required();
  };
  auto output = [&](CLI::App* sub) { sub->add_option("-o,--output", in.output, "Write the result here"); };
  auto contingencies = [&](CLI::App* sub) {
    sub->add_option("--contingencies", in.contingencies, "Contingency list JSON")->check(CLI::ExistingFile);
  };
  auto ntc_inputs = [&](CLI::App* sub) {
    sub->add_option("--border", in.borders, "Border direction A->B (repeatable; default: all)");
    sub->add_option("--ras", in.ras, "Remedial action list JSON")->check(CLI::ExistingFile);
    sub->add_option("--tolerance", in.tolerance, "Bisection tolerance in MW")->check(CLI::PositiveNumber);
  };
  auto fb_inputs = [&](CLI::App* sub) {
    sub->add_option("--cnecs", in.cnecs, "CNEC list JSON (default: every branch, both directions)")
        ->check(CLI::ExistingFile);
    sub->add_option("--ram-floor", in.ram_floor, "Minimum RAM in MW")->check(CLI::NonNegativeNumber);
  };
  auto dispatch = [&](CLI::App* sub, const char* help) {
    sub->add_option("--dispatch", in.dispatch, help)->check(CLI::ExistingFile);
  };

  CLI::App* ptdf = app.add_subcommand("ptdf", "Emit the zonal (or nodal) PTDF matrix as CSV");
  network(ptdf);
  contingencies(ptdf);
  ptdf->add_option("--contingency", in.contingency_id, "Id of the outage to apply");
  ptdf->add_flag("--nodal", in.nodal, "Node columns instead of zone columns");
  output(ptdf);

  CLI::App* domain = app.add_subcommand("domain", "Build and export a flow-based or NTC domain");
  network(domain);
  domain->add_option("--kind", in.kind, "fb or ntc")->check(CLI::IsMember({"fb", "ntc"}));
  contingencies(domain);
  fb_inputs(domain);
  ntc_inputs(domain);
  dispatch(domain, "D-2 basecase nodal injections JSON");
  output(domain);

  CLI::App* cpl = app.add_subcommand("couple", "Clear an order book on a domain and export the result");
  cpl->add_option("--book", in.book, "Order book CSV")->required()->check(CLI::ExistingFile);
  cpl->add_option("--domain", in.domain, "Exported domain CSV")->check(CLI::ExistingFile);
  cpl->add_option("--kind", in.kind, "fb or ntc")->check(CLI::IsMember({"fb", "ntc"}));
  network(cpl, false);
  contingencies(cpl);
  fb_inputs(cpl);
  ntc_inputs(cpl);
  dispatch(cpl, "D-2 basecase nodal injections JSON");
  output(cpl);

  CLI::App* mt = app.add_subcommand("max-transfer", "Maximum transfer between two zones over all states");
  network(mt);
  mt->add_option("--from", in.from_zone, "Source zone")->required();
  mt->add_option("--to", in.to_zone, "Sink zone")->required();
  contingencies(mt);
  mt->add_option("--ras", in.ras, "Remedial action list JSON")->check(CLI::ExistingFile);
  mt->add_option("--schemes", in.schemes, "Protection scheme registry JSON")->check(CLI::ExistingFile);
  mt->add_option("--tolerance", in.tolerance, "Bisection tolerance in MW")->check(CLI::PositiveNumber);
  dispatch(mt, "Base nodal injections JSON");
  output(mt);

  CLI::App* cmp = app.add_subcommand("compare-ntc-fb", "Couple one book on NTC and FB domains and compare");
  network(cmp);
  cmp->add_option("--book", in.book, "Order book CSV")->required()->check(CLI::ExistingFile);
  contingencies(cmp);
  fb_inputs(cmp);
  ntc_inputs(cmp);
  dispatch(cmp, "D-2 basecase nodal injections JSON");
  output(cmp);

  CLI::App* sips = app.add_subcommand("sips-sim", "Simulate protection schemes after an outage");
  network(sips);
  sips->add_option("--schemes", in.schemes, "Protection scheme registry JSON")->required()->check(CLI::ExistingFile);
  dispatch(sips, "Pre-event nodal injections JSON");
  contingencies(sips);
  sips->add_option("--contingency", in.contingency_id, "Id of the outage to apply");
  output(sips);

  CLI::App* rav = app.add_subcommand("ra-value", "Lower-bound value of remedial actions from snapshots");
  rav->add_option("--snapshots", in.snapshots, "Snapshot CSV")->required()->check(CLI::ExistingFile);
  rav->add_option("--start", in.window_start, "Window start (inclusive), ISO-8601 with offset");
  rav->add_option("--end", in.window_end, "Window end (exclusive), ISO-8601 with offset");
  rav->add_option("--hour", in.hour, "Hour for the active-constraint report");
  rav->add_option("--out-dir", in.out_dir, "Directory for the report CSV files");
  output(rav);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    bool unknown = false;
    for (int i = 1; i < argc && app.get_subcommands().empty(); ++i) {
      const std::string arg = argv[i];
      if (arg == "--tz") ++i;
      if (arg.empty() || arg[0] == '-') continue;
      unknown = true;
      err << "error: unknown subcommand '" << arg << "'\n\n";
      break;
    }
    if (!unknown) err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    display_offset_minutes(tz);
    if (ptdf->parsed()) cmd_ptdf(in, out);
    else if (domain->parsed()) cmd_domain(in, out);
    else if (cpl->parsed()) cmd_couple(in, out);
    else if (mt->parsed()) return cmd_max_transfer(in, out, err);
    else if (cmp->parsed()) cmd_compare(in, out);
    else if (sips->parsed()) cmd_sips(in, out);
    else if (rav->parsed()) cmd_ra_value(in, tz, out, err);
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fbc
