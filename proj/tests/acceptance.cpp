// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "fbc/capacity_domain.hpp"
#include "fbc/formats.hpp"
#include "fbc/grid_model.hpp"
#include "fbc/market_coupling.hpp"
#include "fbc/ra_valuation.hpp"
#include "fbc/remedial_actions.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace fbc;
using namespace fbc::test;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1 ----
Outcome ram_exactness() {
  std::mt19937 rng(101);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const RamBreakdown b{real(rng, 0, 5000), real(rng, 0, 500), real(rng, -3000, 3000), real(rng, 0, 800),
                         real(rng, 0, 300),  real(rng, 0, 200), real(rng, 0, 100)};
    const double expected = b.f_max - b.f_rm - b.f_0 + b.f_ra + b.amr - b.f_aac - b.iva;
    mismatches += compute_ram(b) != expected;
  }
  int domains = 0, nonpositive = 0;
  for (int t = 0; t < 50; ++t) {
    const NetworkSnapshot net = random_grid(rng, 8, 3, 4);
    const Injections base = random_balanced(net, rng, 1500.0);
    std::vector<CnecSpec> specs = branch_cnec_specs(net, true);
    for (CnecSpec& s : specs) s.f_rm = real(rng, 0, 60);
    const FbBuildOptions opt{t % 2 ? 0.0 : 25.0};
    for (const Cnec& c : build_fb_domain(net, specs, base, {}, opt).cnecs) nonpositive += !(c.ram() > 0.0);
    ++domains;
  }
  return {mismatches == 0 && nonpositive == 0,
          fmt("%d/1000 mismatches; %d non-positive RAMs over %d domains", mismatches, nonpositive, domains)};
}

// ---- 2 ----
Outcome point_value() {
  CneSnapshotRecord r;
  r.fra = 250;
  r.shadow_price = 29.3;
  const double v = ra_value_lower_bound(r);
  const double rel = std::abs(v - 7300.0) / 7300.0;
  return {std::abs(v - 7325.0) <= 1e-9 && rel <= 0.005, fmt("value %.6f EUR, %.3f%% from 7300", v, 100 * rel)};
}

// ---- 3 ----
Outcome active_ordering() {
  std::vector<CneSnapshotRecord> rs;
  const double lambdas[] = {1513, 1019, 29.3, 722, 0};
  const Timestamp hour = parse_timestamp("2024-11-06T17:00:00+01:00");
  for (int i = 0; i < 5; ++i) {
    CneSnapshotRecord r;
    r.hour = hour;
    r.cnec_id = "CNE-" + std::to_string(i);
    r.tso = "Statnett";
    r.shadow_price = lambdas[i];
    rs.push_back(r);
  }
  std::vector<double> got;
  for (const auto& row : active_constraint_report(rs, hour)) got.push_back(row.shadow_price);
  std::string s;
  for (double g : got) s += fmt("%g ", g);
  return {got == std::vector<double>{1513, 1019, 722, 29.3}, "order [ " + s + "]"};
}

// ---- 4 ----
Outcome ptdf_oracle() {
  std::mt19937 rng(104);
  double worst = 0.0;
  int cases = 0;
  for (int g = 0; g < 10; ++g) {
    const NetworkSnapshot net = random_grid(rng, 10, 3, 6);
    const PtdfMatrix ptdf = nodal_ptdf(net);
    for (int k = 0; k < 10; ++k, ++cases) {
      const Injections p = random_balanced(net, rng, 300.0);
      Eigen::VectorXd v(static_cast<Eigen::Index>(ptdf.col_ids.size()));
      for (std::size_t c = 0; c < ptdf.col_ids.size(); ++c) v(static_cast<Eigen::Index>(c)) = p.at(ptdf.col_ids[c]);
      const Eigen::VectorXd f = ptdf.values * v;
      const BranchFlows flows = dc_load_flow(net, p);
      for (std::size_t r = 0; r < ptdf.row_ids.size(); ++r)
        worst = std::max(worst, std::abs(f(static_cast<Eigen::Index>(r)) - flows.at(ptdf.row_ids[r])));
    }
  }
  return {worst <= 1e-9, fmt("%d injection vectors, max |PTDF p - flow| = %.3g MW", cases, worst)};
}

// ---- 5 ----
struct DualityGaps {
  double gap = 0.0, slackness = 0.0, decomposition = 0.0;
};

void measure(const CouplingResult& r, const OrderBook& book, const FlowBasedDomain* fb, DualityGaps& g) {
  g.gap = std::max(g.gap, std::abs(r.total_surplus - r.dual_objective) / std::max(1.0, std::abs(r.total_surplus)));
  for (std::size_t i = 0; i < book.bids.size(); ++i) {
    const Bid& b = book.bids[i];
    const double margin = (b.side == Side::kSupply ? 1.0 : -1.0) * (r.zonal_price.at(b.zone) - b.price);
    // Accepted bids are in the money, rejected bids out of it.
    const double q = b.quantity;
    g.slackness = std::max(g.slackness, std::abs(std::min(0.0, margin)) * r.accepted[i] * q);
    g.slackness = std::max(g.slackness, std::max(0.0, margin) * (1.0 - r.accepted[i]) * q);
  }
  if (!fb) return;
  for (const Cnec& c : fb->cnecs) {
    double usage = 0.0;
    for (const auto& [z, f] : c.ptdf) usage += f * r.np.at(z);
    g.slackness = std::max(g.slackness, std::abs(r.shadow_price.at(c.id) * (c.ram() - usage)));
  }
  for (const std::string& z : fb->zones) {
    double expected = r.system_price;
    for (const Cnec& c : fb->cnecs) expected -= r.shadow_price.at(c.id) * c.ptdf.at(z);
    g.decomposition = std::max(g.decomposition, std::abs(r.zonal_price.at(z) - expected));
  }
}

Outcome duality_suite() {
  std::mt19937 rng(105);
  DualityGaps g;
  const std::vector<std::string> zones = {"Z0", "Z1", "Z2"};
  for (int t = 0; t < 200; ++t) {
    const OrderBook book = random_book(rng, zones, 3, 12);
    if (t % 2) {
      const NetworkSnapshot net = random_grid(rng, 8, 3, 5);
      const FlowBasedDomain d = build_fb_domain(net, branch_cnec_specs(net, true), {});
      measure(couple(book, d), book, &d, g);
    } else {
      NtcDomain d{zones, {}};
      for (const auto& a : zones)
        for (const auto& b : zones)
          if (a != b) d.borders.push_back({a, b, real(rng, 0, 150)});
      measure(couple(book, d), book, nullptr, g);
    }
  }
  return {g.gap <= 1e-6 && g.slackness <= 1e-6 && g.decomposition <= 1e-6,
          fmt("200 instances; max gap %.2g, slackness %.2g, price decomposition %.2g", g.gap, g.slackness,
              g.decomposition)};
}

// ---- 6 ----
Outcome marginal_value() {
  const NetworkSnapshot net = trizone();
  const FlowBasedDomain d = build_fb_domain(net, branch_cnec_specs(net, true), {});
  const OrderBook book{{{"A", Side::kSupply, 10, 300}, {"B", Side::kSupply, 30, 300}, {"C", Side::kDemand, 60, 300}}, {}};
  const CouplingResult base = couple(book, d);
  std::string id;
  double lambda = 0.0;
  for (const auto& [c, l] : base.shadow_price)
    if (l > lambda) std::tie(id, lambda) = std::tie(c, l);
  if (lambda <= 0.0) return {false, "no binding CNEC"};
  FlowBasedDomain relaxed = d;
  for (Cnec& c : relaxed.cnecs)
    if (c.id == id) c.ram_breakdown.f_max += 0.1;
  const double gain = couple(book, relaxed).total_surplus - base.total_surplus;
  const double rel = std::abs(gain - 0.1 * lambda) / (0.1 * lambda);
  return {rel <= 0.01, fmt("CNEC %s: lambda %.4f, surplus gain %.6f for 0.1 MW (%.3g%% off)", id.c_str(), lambda, gain,
                           100 * rel)};
}

// ---- 7 ----
Outcome meshed_witness() {
  const NetworkSnapshot net = trizone();
  const std::vector<BorderDirection> borders = {{"A", "B"}, {"B", "A"}, {"A", "C"}, {"C", "A"}, {"B", "C"}, {"C", "B"}};
  const NtcDomain ntc = ntc_from_borders(net, borders, {}, {});
  const FlowBasedDomain fb = build_fb_domain(net, branch_cnec_specs(net, true), {});
  for (double a = -300; a <= 300; a += 5)
    for (double b = -300; b <= 300; b += 5) {
      const std::map<std::string, double> np = {{"A", a}, {"B", b}, {"C", -a - b}};
      if (!domain_contains(ntc, np).contained) continue;
      const Containment c = domain_contains(fb, np);
      if (c.contained) continue;
      return {true, fmt("witness NP A=%g B=%g C=%g: NTC-feasible, violates %s", a, b, -a - b, c.violated.front().c_str())};
    }
  return {false, "no witness on the 5 MW grid"};
}

// ---- 8 ----
Outcome radial_equivalence() {
  std::mt19937 rng(108);
  const NetworkSnapshot net = two_zone(50.0);
  const FlowBasedDomain fb = build_fb_domain(net, branch_cnec_specs(net, true), {});
  const NtcDomain ntc = ntc_from_borders(net, std::vector<BorderDirection>{{"A", "B"}, {"B", "A"}}, {}, {});
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const OrderBook book = random_book(rng, {"A", "B"}, 2, 8);
    const CouplingResult a = couple(book, ntc), b = couple(book, fb);
    worst = std::max(worst, std::abs(a.total_surplus - b.total_surplus));
    for (const char* z : {"A", "B"}) {
      worst = std::max(worst, std::abs(a.np.at(z) - b.np.at(z)));
      worst = std::max(worst, std::abs(a.zonal_price.at(z) - b.zonal_price.at(z)));
    }
  }
  return {worst <= 1e-6, fmt("100 books, max difference %.3g", worst)};
}

// ---- 9 ----
Outcome transfer_process() {
  const NetworkSnapshot net = trizone();
  const ShiftSpec ac{"A", "C", {}, {}, {}};
  const std::vector<Contingency> ab = {outage("AB")};
  const std::vector<RemedialAction> ra = {{"relief", RemedialAction::Kind::kFlowRelief, {"AB"}, "AC", 30.0, false}};
  const double t0 = max_transfer(net, ac, {}, {}).transfer_mw;
  const double t1 = max_transfer(net, ac, ab, {}).transfer_mw;
  const double t2 = max_transfer(net, ac, ab, ra).transfer_mw;
  const bool ok = std::abs(t0 - 150) <= 0.01 && std::abs(t1 - 100) <= 0.01 && std::abs(t2 - 130) <= 0.01;
  return {ok, fmt("N-0 %.4f, N-1 %.4f, N-1 with RA %.4f MW", t0, t1, t2)};
}

// ---- 10 ----
Outcome classification() {
  struct Expected {
    ResourceProfile profile;
    Classification placement;
  };
  using T = Trigger;
  using Tm = Timing;
  using P = Provider;
  const Expected cases[] = {
      {{"FFR", T::kAutomatic, Tm::kCurative, P::kNetworkUser, true}, {true, true, true}},
      {{"inertia", T::kInherent, Tm::kNotApplicable, P::kNetworkUser, false}, {true, false, false}},
      {{"short-circuit current", T::kInherent, Tm::kNotApplicable, P::kNetworkUser, false}, {true, false, false}},
      {{"countertrading", T::kManual, Tm::kPreventive, P::kOperator, true}, {false, true, false}},
      {{"redispatch", T::kManual, Tm::kPreventive, P::kOperator, true}, {false, true, false}},
      {{"automatic load shedding", T::kAutomatic, Tm::kCurative, P::kOperator, true}, {false, true, true}},
      {{"HVDC EPC", T::kAutomatic, Tm::kCurative, P::kOperator, true}, {false, true, true}},
      {{"mFRR", T::kManual, Tm::kCurative, P::kNetworkUser, true}, {true, true, false}},
  };
  int right = 0;
  std::string wrong;
  for (const Expected& e : cases) {
    if (classify(e.profile) == e.placement) ++right;
    else wrong += " " + e.profile.name;
  }
  int ref_right = 0;
  for (const auto& [profile, placed] : reference_resources()) ref_right += classify(profile) == placed;
  return {right == 8 && ref_right == 8, fmt("%d/8 placements exact", right) + wrong};
}

// ---- 11 ----
Outcome sips_uplift() {
  const NetworkSnapshot net = trizone();
  const SchemeRegistry reg = io::parse_schemes(data_path("trizone_sips.json"));
  CnecSpec cnec;
  cnec.id = "AC@AB";
  cnec.branch_id = "AC";
  cnec.contingency = outage("AB");
  const double uplift = capacity_uplift(net, cnec, reg, {"A", "C", {}, {}, {}});

  // Lower bound: removing the uplift costs at least uplift x lambda.
  std::vector<CnecSpec> specs = branch_cnec_specs(net, true);
  const std::size_t base_count = specs.size();
  for (std::size_t i = 0; i < base_count; ++i) {
    if (specs[i].branch_id == "AB") continue;
    CnecSpec s = specs[i];
    s.id += "@AB";
    s.contingency = outage("AB");
    specs.push_back(s);
  }
  std::vector<CnecSpec> with = specs;
  for (CnecSpec& s : with)
    if (s.id == "AC+@AB") s.ra_uplift = uplift;
  const OrderBook book{{{"A", Side::kSupply, 10, 300}, {"C", Side::kDemand, 60, 300}}, {}};
  const CouplingResult a = couple(book, build_fb_domain(net, with, {}));
  const CouplingResult b = couple(book, build_fb_domain(net, specs, {}));
  const double lambda = a.shadow_price.at("AC+@AB");
  const double gain = a.total_surplus - b.total_surplus;
  const bool ok = std::abs(uplift - 50.0) <= 0.02 && gain >= uplift * lambda - 1e-6;
  return {ok, fmt("uplift %.4f MW; surplus gain %.4f >= F_RA x lambda = %.4f", uplift, gain, uplift * lambda)};
}

// ---- 12 ----
Outcome round_trips() {
  std::mt19937 rng(112);
  int failures = 0;
  std::string which;
  auto note = [&](bool ok, const char* pair) {
    if (ok) return;
    ++failures;
    if (which.find(pair) == std::string::npos) which += std::string(" ") + pair;
  };
  for (int t = 0; t < 100; ++t) {
    const NetworkSnapshot net = random_network(rng);
    note(io::network_from_json(io::json::parse(io::network_to_json(net).dump())) == net, "network");

    std::vector<CnecSpec> specs;
    for (int k = 0; k < 3; ++k) specs.push_back(random_cnec(rng, k));
    note(io::cnecs_from_json(io::json::parse(io::cnecs_to_json(specs).dump())) == specs, "cnecs");

    const std::vector<Contingency> cs = {{"c" + std::to_string(t), {"AB", "BC"}}};
    note(io::contingencies_from_json(io::json::parse(io::contingencies_to_json(cs).dump())) == cs, "contingencies");
    const std::vector<RemedialAction> ras = {
        {"ra", static_cast<RemedialAction::Kind>(t % 3), {}, "AC", t % 3 ? 0.0 : real(rng, 0, 90), t % 2 == 0}};
    note(io::remedial_actions_from_json(io::json::parse(io::remedial_actions_to_json(ras).dump())) == ras, "ras");

    SchemeRegistry reg;
    for (int k = 0; k < 3; ++k) reg.schemes.push_back(random_scheme(rng, k));
    note(io::registry_from_json(io::json::parse(io::registry_to_json(reg).dump())) == reg, "schemes");

    OrderBook book = random_book(rng, {"A", "B", "C"}, 1, 12);
    for (Bid& b : book.bids) b.price += real(rng, -1, 1);
    std::stringstream bs;
    io::write_orderbook(bs, book);
    note(io::read_orderbook(bs).bids == book.bids, "orderbook");

    std::vector<CneSnapshotRecord> recs;
    for (int k = 0; k < 4; ++k) recs.push_back(random_record(rng, k));
    std::stringstream ss;
    io::write_snapshots(ss, recs);
    const io::SnapshotIngest in = io::read_snapshots(ss);
    note(in.rejected.empty() && in.records == recs, "snapshots");

    FlowBasedDomain d;
    d.zones = {"A", "B", "C"};
    for (int k = 0; k < 3; ++k) {
      Cnec c;
      c.id = awkward_id(rng, k);
      c.element_id = c.id;
      c.tso = "T";
      for (const auto& z : d.zones) c.ptdf[z] = real(rng, -1, 1);
      c.ram_breakdown = {real(rng, 200, 900), real(rng, 0, 40), real(rng, -90, 90), real(rng, 0, 40), 0.0,
                         real(rng, 0, 20), real(rng, 0, 10)};
      d.cnecs.push_back(c);
    }
    std::stringstream ds;
    io::write_fb_domain(ds, d);
    const FlowBasedDomain db = io::read_fb_domain(ds);
    bool same = db.zones == d.zones && db.cnecs.size() == d.cnecs.size();
    for (std::size_t k = 0; same && k < d.cnecs.size(); ++k)
      same = db.cnecs[k].id == d.cnecs[k].id && db.cnecs[k].tso == d.cnecs[k].tso &&
             db.cnecs[k].ptdf == d.cnecs[k].ptdf && db.cnecs[k].ram_breakdown == d.cnecs[k].ram_breakdown;
    note(same, "fb-domain");

    NtcDomain n{{"A", "B", "C"}, {{"A", "B", real(rng, 0, 500)}, {"C", "A", real(rng, 0, 500)}}};
    std::stringstream ns;
    io::write_ntc_domain(ns, n);
    note(io::read_ntc_domain(ns).borders == n.borders, "ntc-domain");

    const CouplingResult r = couple(book, d);
    note(same_result(io::coupling_result_from_json(io::json::parse(io::coupling_result_to_json(r, book).dump())), r),
         "coupling-result");
  }
  return {failures == 0, fmt("100 objects x 10 format pairs, %d lossy", failures) + which};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "RAM exactness", 1.0, ram_exactness},
      {2, "lower-bound point value", 1.0, point_value},
      {3, "active-constraint ordering", 1.0, active_ordering},
      {4, "PTDF oracle", 5.0, ptdf_oracle},
      {5, "duality suite", 30.0, duality_suite},
      {6, "shadow-price marginal value", 1.0, marginal_value},
      {7, "meshed NTC inadequacy witness", 5.0, meshed_witness},
      {8, "radial NTC/FB equivalence", 1.0, radial_equivalence},
      {9, "maximum transfer process", 1.0, transfer_process},
      {10, "classification fidelity", 1.0, classification},
      {11, "SIPS capacity uplift", 2.0, sips_uplift},
      {12, "format round trips", 5.0, round_trips},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s budget)", c.budget_s);
    }
    failed += !o.pass;
    std::printf("%s %2d %-30s %8.3f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
