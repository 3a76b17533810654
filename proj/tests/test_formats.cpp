#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "fbc/csv.hpp"
#include "fbc/error.hpp"
#include "fbc/formats.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace fbc;
using namespace fbc::io;
using namespace fbc::test;

namespace {

constexpr int kTrials = 100;

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an fbc::Error");
  return {};
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an fbc::Error");
  return ErrorCode::kParseError;
}

void check_same(const CouplingResult& a, const CouplingResult& b) {
  CHECK(a.zones == b.zones);
  CHECK(a.np == b.np);
  CHECK(a.zonal_price == b.zonal_price);
  CHECK(a.accepted == b.accepted);
  CHECK(a.consumer_surplus == b.consumer_surplus);
  CHECK(a.producer_surplus == b.producer_surplus);
  CHECK(a.congestion_rent == b.congestion_rent);
  CHECK(a.total_surplus == b.total_surplus);
  CHECK(a.system_price == b.system_price);
  CHECK(a.shadow_price == b.shadow_price);
  CHECK(a.binding == b.binding);
  CHECK(a.dual_objective == b.dual_objective);
}

}  // namespace

TEST_CASE("network json round trip") {
  std::mt19937 rng(1);
  for (int t = 0; t < kTrials; ++t) {
    const NetworkSnapshot net = random_network(rng);
    // Through text, as a file would be.
    const NetworkSnapshot back = network_from_json(json::parse(network_to_json(net).dump()));
    CHECK(back == net);
  }
}

TEST_CASE("cnec json round trip") {
  std::mt19937 rng(2);
  for (int t = 0; t < kTrials; ++t) {
    std::vector<CnecSpec> specs;
    for (int k = 0; k < 1 + t % 5; ++k) specs.push_back(random_cnec(rng, k));
    CHECK(cnecs_from_json(json::parse(cnecs_to_json(specs).dump())) == specs);
  }
}

TEST_CASE("contingency and remedial action json round trip") {
  std::mt19937 rng(3);
  for (int t = 0; t < kTrials; ++t) {
    std::vector<Contingency> cs;
    std::vector<RemedialAction> ras;
    for (int k = 0; k < 1 + t % 4; ++k) {
      cs.push_back({"c" + std::to_string(k), {"AB", k % 2 ? "BC" : "AC"}});
      RemedialAction ra;
      ra.id = "ra" + std::to_string(k);
      ra.kind = static_cast<RemedialAction::Kind>(rng() % 3);
      if (rng() % 2) ra.contingency_ids = {"c0"};
      ra.branch_id = "AC";
      ra.relief_mw = ra.kind == RemedialAction::Kind::kFlowRelief ? real(rng, 0, 100) : 0.0;
      ra.costly = rng() % 2;
      ras.push_back(ra);
    }
    CHECK(contingencies_from_json(json::parse(contingencies_to_json(cs).dump())) == cs);
    CHECK(remedial_actions_from_json(json::parse(remedial_actions_to_json(ras).dump())) == ras);
  }
}

TEST_CASE("scheme registry json round trip") {
  std::mt19937 rng(4);
  for (int t = 0; t < kTrials; ++t) {
    SchemeRegistry reg;
    for (int k = 0; k < 1 + t % 4; ++k) reg.schemes.push_back(random_scheme(rng, k));
    reg.operators = {{1, "Energinet"}, {5, "Svenska kraftnät"}};
    reg.combinations.push_back({kAllConditions[rng() % 6], kAllActions[rng() % 6], {1, 5}});
    CHECK(registry_from_json(json::parse(registry_to_json(reg).dump())) == reg);
  }
  const SchemeRegistry table = parse_schemes(fbc::test::data_path("table2_registry.json"));
  CHECK(registry_from_json(registry_to_json(table)) == table);
}

TEST_CASE("order book csv round trip") {
  std::mt19937 rng(5);
  for (int t = 0; t < kTrials; ++t) {
    OrderBook book = fbc::test::random_book(rng, {"NO1", "SE 3", "a,b"}, 1, 20);
    for (Bid& b : book.bids) b.price += real(rng, -0.5, 0.5);  // non-integer and negative prices
    std::stringstream ss;
    write_orderbook(ss, book);
    CHECK(read_orderbook(ss).bids == book.bids);
  }
}

TEST_CASE("snapshot csv round trip") {
  std::mt19937 rng(6);
  for (int t = 0; t < kTrials; ++t) {
    std::vector<CneSnapshotRecord> rs;
    for (int k = 0; k < 1 + t % 6; ++k) rs.push_back(random_record(rng, k));
    std::stringstream ss;
    write_snapshots(ss, rs);
    const SnapshotIngest in = read_snapshots(ss);
    CHECK(in.rejected.empty());
    CHECK(in.records == rs);
  }
}

TEST_CASE("domain csv round trips") {
  std::mt19937 rng(7);
  for (int t = 0; t < kTrials; ++t) {
    FlowBasedDomain d;
    d.zones = {"A", "B", "C"};
    for (int k = 0; k < 1 + t % 5; ++k) {
      Cnec c;
      c.id = awkward_id(rng, k);
      c.element_id = c.id;
      c.tso = "TSO" + std::to_string(k % 2);
      for (const auto& z : d.zones) c.ptdf[z] = real(rng, -1, 1);
      c.ram_breakdown = {real(rng, 100, 1000), real(rng, 0, 50), real(rng, -100, 100), real(rng, 0, 50), 0.0,
                         real(rng, 0, 20), real(rng, 0, 10)};
      d.cnecs.push_back(c);
    }
    std::stringstream ss;
    write_fb_domain(ss, d);
    const FlowBasedDomain back = read_fb_domain(ss);
    CHECK(back.zones == d.zones);
    REQUIRE(back.cnecs.size() == d.cnecs.size());
    for (std::size_t k = 0; k < d.cnecs.size(); ++k) {
      CHECK(back.cnecs[k].id == d.cnecs[k].id);
      CHECK(back.cnecs[k].tso == d.cnecs[k].tso);
      CHECK(back.cnecs[k].ptdf == d.cnecs[k].ptdf);
      CHECK(back.cnecs[k].ram_breakdown == d.cnecs[k].ram_breakdown);
    }

    NtcDomain n{{"A", "B", "C"}, {}};
    for (const auto& a : n.zones)
      for (const auto& b : n.zones)
        if (a != b && rng() % 2) n.borders.push_back({a, b, real(rng, 0, 1000)});
    if (n.borders.empty()) n.borders.push_back({"A", "B", 1.0});
    std::stringstream ns;
    write_ntc_domain(ns, n);
    const NtcDomain nb = read_ntc_domain(ns);
    CHECK(nb.borders == n.borders);
  }
}

TEST_CASE("coupling result json round trip") {
  std::mt19937 rng(8);
  for (int t = 0; t < kTrials; ++t) {
    const OrderBook book = fbc::test::random_book(rng, {"A", "B", "C"}, 1, 10);
    FlowBasedDomain d;
    d.zones = {"A", "B", "C"};
    for (int k = 0; k < 3; ++k) {
      Cnec c;
      c.id = "c" + std::to_string(k);
      for (const auto& z : d.zones) c.ptdf[z] = real(rng, -1, 1);
      c.ram_breakdown.f_max = real(rng, 10, 200);
      d.cnecs.push_back(c);
    }
    const CouplingResult r = couple(book, d);
    check_same(coupling_result_from_json(json::parse(coupling_result_to_json(r, book).dump())), r);
  }
}

TEST_CASE("bundled trizone network") {
  const NetworkSnapshot net = parse_network(fbc::test::data_path("trizone.json"));
  CHECK(net.nodes().size() == 3);
  CHECK(net.branches().size() == 3);
  CHECK(net.zones().size() == 3);
  CHECK(net.slack_node() == "C");
  CHECK(net == fbc::test::trizone());
}

TEST_CASE("validation and parse errors name their source") {
  json net = network_to_json(fbc::test::trizone());
  SUBCASE("gsk that does not sum to one") {
    net["zones"][0]["gsk"] = {{"A", 0.9}};
    CHECK(code_of([&] { network_from_json(net); }) == ErrorCode::kValidationError);
  }
  SUBCASE("wrong field type") {
    net["branches"][1]["reactance"] = "one";
    const std::string msg = message_of([&] { network_from_json(net, "grid.json"); });
    CHECK(msg.find("grid.json") != std::string::npos);
    CHECK(msg.find("branches[1]") != std::string::npos);
    CHECK(msg.find("reactance") != std::string::npos);
  }
  SUBCASE("missing field") {
    net.erase("slack_node");
    CHECK(code_of([&] { network_from_json(net); }) == ErrorCode::kParseError);
  }
  SUBCASE("empty order book") {
    std::stringstream ss("zone,side,price_eur_mwh,quantity_mw\r\n");
    const std::string msg = message_of([&] { read_orderbook(ss); });
    CHECK(msg.find("at least one bid") != std::string::npos);
  }
  SUBCASE("bad number carries line and field") {
    std::stringstream ss("zone,side,price_eur_mwh,quantity_mw\nA,supply,10,100\nB,demand,abc,5\n");
    const std::string msg = message_of([&] { read_orderbook(ss, "book.csv"); });
    CHECK(msg.find("book.csv:3") != std::string::npos);
    CHECK(msg.find("price_eur_mwh") != std::string::npos);
  }
  SUBCASE("unknown side") {
    std::stringstream ss("zone,side,price_eur_mwh,quantity_mw\nA,sell,10,100\n");
    CHECK(code_of([&] { read_orderbook(ss); }) != ErrorCode::kInfeasible);
  }
  SUBCASE("cnec with both branch and corridor") {
    json j = json::array({{{"id", "x"}, {"branch_id", "AB"}, {"ptc", {{"id", "p"}, {"member_branch_ids", {"AB"}}, {"direction_signs", {1}}, {"limit", 1}}}}});
    CHECK(code_of([&] { cnecs_from_json(j); }) == ErrorCode::kValidationError);
  }
  SUBCASE("malformed json file") {
    CHECK(code_of([] { parse_network(fbc::test::data_path("sample_snapshots.csv")); }) == ErrorCode::kParseError);
  }
}

TEST_CASE("inconsistent snapshot records are rejected and reported") {
  std::stringstream ss(
      "hour,cnec_id,tso,fmax,frm,f0,fra,amr,faac,iva,ram,fref,flow_fb,min_flow,max_flow,shadow_price\n"
      "2024-11-06T17:00:00+01:00,ok,T,1000,0,0,0,0,0,0,1000,0,1000,-1000,1000,5\n"
      "2024-11-06T17:00:00+01:00,off,T,1000,0,0,0,0,0,0,990,0,990,-1000,990,5\n"
      "2024-11-06T17:00:00+01:00,rounded,T,1000,0,0,0,0,0,0,1000.4,0,1000.4,-1000,1000.4,5\n");
  const SnapshotIngest in = read_snapshots(ss);
  REQUIRE(in.records.size() == 2);
  REQUIRE(in.rejected.size() == 1);
  CHECK(in.rejected[0].cnec_id == "off");
  CHECK(in.rejected[0].line == 3);
  CHECK_FALSE(in.rejected[0].reason.empty());
}

TEST_CASE("csv quoting") {
  std::stringstream out;
  csv::write_row(out, {"plain", "a,b", "say \"hi\"", "line\nbreak", ""});
  CHECK(out.str() == "plain,\"a,b\",\"say \"\"hi\"\"\",\"line\nbreak\",\r\n");
  std::stringstream in(out.str());
  const csv::Table t = csv::read(in, "q");
  CHECK(t.header == std::vector<std::string>{"plain", "a,b", "say \"hi\"", "line\nbreak", ""});
  std::stringstream bad("a,b\n\"open,1\n");
  CHECK(code_of([&] { csv::read(bad, "bad"); }) == ErrorCode::kParseError);
  CHECK(csv::format_number(0.1) == "0.1");
  CHECK(csv::format_number(7325) == "7325");
  CHECK(csv::parse_number("1e3", "x") == 1000.0);
  CHECK(code_of([] { csv::parse_number("12abc", "x"); }) == ErrorCode::kParseError);
}

TEST_CASE("timestamps") {
  const Timestamp t = parse_timestamp("2024-11-06T17:00:00+01:00");
  CHECK(format_utc(t) == "2024-11-06T16:00:00Z");
  CHECK(parse_timestamp("2024-11-06T16:00Z") == t);
  CHECK(format_in_zone(t, "CET") == "2024-11-06T17:00:00+01:00");
  CHECK(format_in_zone(t, "-03:30") == "2024-11-06T12:30:00-03:30");
  CHECK(format_in_zone(t, "UTC") == "2024-11-06T16:00:00Z");
  CHECK(code_of([] { parse_timestamp("2024-11-06 17:00"); }) == ErrorCode::kParseError);
  CHECK(code_of([] { parse_timestamp("2024-02-30T00:00Z"); }) == ErrorCode::kParseError);
  CHECK(code_of([] { display_offset_minutes("Mars/Olympus"); }) == ErrorCode::kValidationError);
}
