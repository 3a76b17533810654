#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>

#include "fbc/error.hpp"
#include "fbc/grid_model.hpp"
#include "support.hpp"

using namespace fbc;
using fbc::test::trizone;

namespace {

// Full Laplacian with the slack angle pinned to zero, solved by full-pivot LU.
BranchFlows oracle_flows(const NetworkSnapshot& net, const Injections& p) {
  const auto n = static_cast<Eigen::Index>(net.nodes().size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const Branch& b : net.branches()) {
    if (!b.in_service) continue;
    const auto i = static_cast<Eigen::Index>(net.node_index(b.from_node));
    const auto j = static_cast<Eigen::Index>(net.node_index(b.to_node));
    const double y = 1.0 / b.reactance;
    L(i, i) += y;
    L(j, j) += y;
    L(i, j) -= y;
    L(j, i) -= y;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const auto& [node, mw] : p) rhs(static_cast<Eigen::Index>(net.node_index(node))) += mw;
  const auto s = static_cast<Eigen::Index>(net.node_index(net.slack_node()));
  L.row(s).setZero();
  L(s, s) = 1.0;
  rhs(s) = 0.0;
  const Eigen::VectorXd theta = L.fullPivLu().solve(rhs);
  BranchFlows f;
  for (const Branch& b : net.branches()) {
    if (!b.in_service) continue;
    f[b.id] = (theta(static_cast<Eigen::Index>(net.node_index(b.from_node))) -
               theta(static_cast<Eigen::Index>(net.node_index(b.to_node)))) /
              b.reactance;
  }
  return f;
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

}  // namespace

TEST_CASE("trizone load flow") {
  const NetworkSnapshot net = trizone();
  SUBCASE("zero injections") {
    for (const auto& [id, f] : dc_load_flow(net, {})) CHECK(f == 0.0);
  }
  SUBCASE("90 MW from A to C splits 2:1") {
    const BranchFlows f = dc_load_flow(net, {{"A", 90.0}, {"C", -90.0}});
    CHECK(f.at("AC") == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(f.at("AB") == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(f.at("BC") == doctest::Approx(30.0).epsilon(1e-12));
  }
  SUBCASE("AB out of service") {
    const std::vector<std::string> ab = {"AB"};
    const NetworkSnapshot out = net.with_branch_status(ab, false);
    const BranchFlows f = dc_load_flow(out, {{"A", 90.0}, {"C", -90.0}});
    CHECK(f.size() == 2);
    CHECK(f.at("AC") == doctest::Approx(90.0));
    CHECK(std::abs(f.at("BC")) < 1e-12);
  }
  SUBCASE("unbalanced injections") {
    CHECK(code_of([&] { dc_load_flow(net, {{"A", 10.0}}); }) == ErrorCode::kUnbalancedInjections);
  }
}

TEST_CASE("trizone nodal and zonal ptdf") {
  const NetworkSnapshot net = trizone();
  const PtdfMatrix nodal = nodal_ptdf(net);
  CHECK(nodal.at("AC", "A") == doctest::Approx(2.0 / 3.0));
  CHECK(nodal.at("AB", "A") == doctest::Approx(1.0 / 3.0));
  CHECK(nodal.at("AB", "B") == doctest::Approx(-1.0 / 3.0));
  for (const std::string& b : nodal.row_ids) CHECK(nodal.at(b, "C") == 0.0);

  const PtdfMatrix zonal = zonal_ptdf(net);
  CHECK(zonal.values.isApprox(nodal.values));
  CHECK(zonal.col_ids == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("zonal ptdf column is the gsk-weighted nodal combination") {
  const NetworkSnapshot net({{"a1", "X", {}}, {"a2", "X", {}}, {"b", "Y", {}}},
                            {{"l1", "a1", "b", 0.5, 100, true}, {"l2", "a2", "b", 1.0, 100, true},
                             {"l3", "a1", "a2", 0.2, 100, true}},
                            {{"X", {{"a1", 0.5}, {"a2", 0.5}}}, {"Y", {}}}, {}, "b");
  const PtdfMatrix nodal = nodal_ptdf(net);
  const PtdfMatrix zonal = zonal_ptdf(net, nodal);
  for (const std::string& br : nodal.row_ids) {
    CHECK(zonal.at(br, "X") == doctest::Approx(0.5 * nodal.at(br, "a1") + 0.5 * nodal.at(br, "a2")));
    CHECK(zonal.at(br, "Y") == 0.0);
  }
}

TEST_CASE("default gsk: pro-rata on basis, else uniform") {
  const NetworkSnapshot net({{"a1", "X", 3.0}, {"a2", "X", 1.0}, {"b1", "Y", {}}, {"b2", "Y", {}}},
                            {{"l1", "a1", "b1", 1, 100, true}, {"l2", "a2", "b2", 1, 100, true},
                             {"l3", "b1", "b2", 1, 100, true}},
                            {{"X", {}}, {"Y", {}}}, {}, "b1");
  CHECK(net.zone("X").gsk.at("a1") == doctest::Approx(0.75));
  CHECK(net.zone("X").gsk.at("a2") == doctest::Approx(0.25));
  CHECK(net.zone("Y").gsk.at("b1") == doctest::Approx(0.5));
}

TEST_CASE("network validation") {
  auto build = [](std::vector<Node> nodes, std::vector<Branch> branches, std::vector<Zone> zones,
                  std::vector<HvdcLink> hvdc = {}, std::string slack = "A") {
    return NetworkSnapshot(std::move(nodes), std::move(branches), std::move(zones), std::move(hvdc), slack);
  };
  const std::vector<Node> n2 = {{"A", "A", {}}, {"B", "B", {}}};
  const std::vector<Zone> z2 = {{"A", {}}, {"B", {}}};
  CHECK(code_of([&] { build(n2, {{"AB", "A", "B", 0.0, 10, true}}, z2); }) == ErrorCode::kValidationError);
  CHECK(code_of([&] { build(n2, {{"AB", "A", "A", 1.0, 10, true}}, z2); }) == ErrorCode::kValidationError);
  CHECK(code_of([&] { build(n2, {{"AB", "A", "B", 1.0, 0.0, true}}, z2); }) == ErrorCode::kValidationError);
  CHECK(code_of([&] { build(n2, {{"AB", "A", "B", 1.0, 10, false}}, z2); }) == ErrorCode::kIslandedNetwork);
  CHECK(code_of([&] { build(n2, {{"AB", "A", "B", 1.0, 10, true}}, z2, {}, "Q"); }) == ErrorCode::kValidationError);
  CHECK(code_of([&] { build({{"A", "A", {}}, {"B", "Q", {}}}, {{"AB", "A", "B", 1.0, 10, true}}, z2); }) ==
        ErrorCode::kValidationError);
  CHECK(code_of([&] { build(n2, {{"AB", "A", "B", 1.0, 10, true}}, {{"A", {}}, {"B", {}}, {"C", {}}}); }) ==
        ErrorCode::kMissingGsk);
  CHECK(code_of([&] {
          build({{"A", "A", {}}, {"A2", "A", {}}, {"B", "B", {}}},
                {{"AB", "A", "B", 1.0, 10, true}, {"A2B", "A2", "B", 1.0, 10, true}},
                {{"A", {{"A", 0.5}, {"A2", 0.4}}}, {"B", {}}});
        }) == ErrorCode::kValidationError);
  CHECK(code_of([&] { build(n2, {{"AB", "A", "B", 1.0, 10, true}}, z2, {{"H", "A", "B", 60, 50}}); }) ==
        ErrorCode::kValidationError);
  CHECK(code_of([&] { build(n2, {{"AB", "A", "B", 1.0, 10, true}, {"AB", "A", "B", 1.0, 10, true}}, z2); }) ==
        ErrorCode::kValidationError);
}

TEST_CASE("hvdc setpoints enter as fixed injections") {
  const NetworkSnapshot net({{"A", "A", {}}, {"B", "B", {}}, {"C", "C", {}}},
                            {{"AB", "A", "B", 1, 100, true}, {"BC", "B", "C", 1, 100, true},
                             {"AC", "A", "C", 1, 100, true}},
                            {{"A", {}}, {"B", {}}, {"C", {}}}, {{"H", "C", "A", 30, 100}}, "C");
  // 30 MW carried from C to A by the link returns over the AC grid.
  const BranchFlows with = dc_load_flow(net, {});
  const BranchFlows plain = dc_load_flow(trizone(), {{"A", 30.0}, {"C", -30.0}});
  for (const auto& [id, f] : plain) CHECK(with.at(id) == doctest::Approx(f));
}

TEST_CASE("post-contingency ptdf") {
  const NetworkSnapshot net = trizone();
  const PtdfMatrix p = post_contingency_ptdf(net, fbc::test::outage("AB"));
  CHECK(p.at("AC", "A") == doctest::Approx(1.0));
  CHECK_FALSE(p.row_of("AB").has_value());
  CHECK(code_of([&] { post_contingency_ptdf(net, {"AB+AC", {"AB", "AC"}}); }) == ErrorCode::kIslandedNetwork);
  CHECK(code_of([&] { post_contingency_ptdf(net, {"X", {"XX"}}); }) == ErrorCode::kUnknownElement);

  // Equal to a network built without the branch.
  const NetworkSnapshot direct({{"A", "A", {}}, {"B", "B", {}}, {"C", "C", {}}},
                               {{"BC", "B", "C", 1.0, 100, true}, {"AC", "A", "C", 1.0, 100, true}},
                               {{"A", {{"A", 1.0}}}, {"B", {{"B", 1.0}}}, {"C", {{"C", 1.0}}}}, {}, "C");
  const PtdfMatrix fresh = zonal_ptdf(direct);
  CHECK(fresh.row_ids == p.row_ids);
  CHECK(fresh.values == p.values);
}

TEST_CASE("randomized grids: linearity, superposition, KCL, slack invariance") {
  std::mt19937 rng(20241106);
  for (int trial = 0; trial < 30; ++trial) {
    const NetworkSnapshot net = fbc::test::random_grid(rng);
    const PtdfMatrix ptdf = nodal_ptdf(net);
    const NetworkSnapshot other_slack = net.with_slack(net.nodes()[(trial + 1) % net.nodes().size()].id);
    for (int k = 0; k < 5; ++k) {
      const Injections p1 = fbc::test::random_balanced(net, rng);
      const Injections p2 = fbc::test::random_balanced(net, rng);
      Injections sum = p1;
      for (const auto& [n, v] : p2) sum[n] += v;
      const BranchFlows f1 = dc_load_flow(net, p1), f2 = dc_load_flow(net, p2), fs = dc_load_flow(net, sum);
      const BranchFlows oracle = oracle_flows(net, p1);
      const BranchFlows slack2 = dc_load_flow(other_slack, p1);
      for (std::size_t r = 0; r < ptdf.row_ids.size(); ++r) {
        const std::string& b = ptdf.row_ids[r];
        double lin = 0.0;
        for (std::size_t c = 0; c < ptdf.col_ids.size(); ++c)
          lin += ptdf.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * p1.at(ptdf.col_ids[c]);
        CHECK(std::abs(lin - f1.at(b)) <= 1e-9);
        CHECK(std::abs(oracle.at(b) - f1.at(b)) <= 1e-9);
        CHECK(std::abs(fs.at(b) - f1.at(b) - f2.at(b)) <= 1e-9);
        CHECK(std::abs(slack2.at(b) - f1.at(b)) <= 1e-9);
      }
      std::map<std::string, double> balance = p1;
      for (const Branch& b : net.branches()) {
        balance[b.from_node] -= f1.at(b.id);
        balance[b.to_node] += f1.at(b.id);
      }
      for (const auto& [n, v] : balance) CHECK(std::abs(v) <= 1e-9);
    }
  }
}

TEST_CASE("net positions and injections through gsk") {
  const NetworkSnapshot net({{"a1", "X", 1.0}, {"a2", "X", 3.0}, {"b", "Y", {}}},
                            {{"l1", "a1", "b", 1, 100, true}, {"l2", "a2", "b", 1, 100, true}},
                            {{"X", {}}, {"Y", {}}}, {}, "b");
  const Injections inj = injections_from_net_positions(net, {{"X", 40.0}, {"Y", -40.0}});
  CHECK(inj.at("a1") == doctest::Approx(10.0));
  CHECK(inj.at("a2") == doctest::Approx(30.0));
  const auto np = net_positions_from_injections(net, inj);
  CHECK(np.at("X") == doctest::Approx(40.0));
  CHECK(np.at("Y") == doctest::Approx(-40.0));
}
