#include "fbc/market_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "fbc/error.hpp"
#include "fbc/lp_solver.hpp"

namespace fbc {

void OrderBook::validate() const {
  if (bids.empty()) throw Error(ErrorCode::kValidationError, "order book needs at least one bid");
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const Bid& b = bids[i];
    if (b.zone.empty()) throw Error(ErrorCode::kValidationError, "bid " + std::to_string(i) + " has no zone");
    if (!(b.quantity > 0.0) || !std::isfinite(b.quantity))
      throw Error(ErrorCode::kValidationError, "bid " + std::to_string(i) + " quantity must be > 0");
    if (!std::isfinite(b.price))
      throw Error(ErrorCode::kValidationError, "bid " + std::to_string(i) + " price must be finite");
  }
}

namespace {

constexpr double kPrimalTolerance = 1e-7;

struct CouplingModel {
  lp::LinearProgram lp;
  std::vector<int> bid_cols;
  std::map<std::string, int> zone_rows;
  std::vector<int> capacity_rows;  // one per CNEC / border, in domain order
  std::vector<std::string> capacity_ids;
  std::vector<int> capacity_cols;  // NTC border flow columns
  std::map<std::string, int> np_cols;  // flow-based net positions
  int system_row = -1;
};

void add_bids(CouplingModel& m, const OrderBook& book, const std::vector<std::string>& zones) {
  book.validate();
  for (const Bid& b : book.bids)
    if (std::find(zones.begin(), zones.end(), b.zone) == zones.end())
      throw Error(ErrorCode::kZoneMismatch, "bid zone '" + b.zone + "' is not in the domain");
  for (std::size_t i = 0; i < book.bids.size(); ++i) {
    const Bid& b = book.bids[i];
    const int col = m.lp.add_column(b.side == Side::kDemand ? b.price : -b.price, false,
                                    "bid:" + std::to_string(i));
    m.bid_cols.push_back(col);
    m.lp.add_row({{col, 1.0}}, lp::RowSense::kLessEqual, b.quantity, "bid:" + std::to_string(i));
  }
}

// Zone balance rows: demand - supply + net export = 0.
void add_zone_rows(CouplingModel& m, const OrderBook& book, const std::vector<std::string>& zones,
                   const std::map<std::string, std::vector<std::pair<int, double>>>& export_terms) {
  for (const std::string& z : zones) {
    std::vector<std::pair<int, double>> coefs;
    for (std::size_t i = 0; i < book.bids.size(); ++i)
      if (book.bids[i].zone == z)
        coefs.emplace_back(m.bid_cols[i], book.bids[i].side == Side::kDemand ? 1.0 : -1.0);
    const auto it = export_terms.find(z);
    if (it != export_terms.end()) coefs.insert(coefs.end(), it->second.begin(), it->second.end());
    m.zone_rows[z] = m.lp.add_row(std::move(coefs), lp::RowSense::kEqual, 0.0, "zone:" + z);
  }
}

// Picks, among all optimal dual solutions, the one whose zonal prices sit at
// the midpoint of their optimal interval (zones fixed in order), then the
// smallest total shadow price.
std::vector<double> select_duals(const CouplingModel& m, const lp::Solution& primal,
                                 const std::vector<std::string>& zones) {
  // The optimal dual face is cut out by complementary slackness with the
  // primal optimum: slack rows price at zero, positive columns are tight.
  // Every row here is <= or =, so dual column i is y_i itself.
  lp::LinearProgram dual = lp::dual_of(m.lp);
  const auto& rows = m.lp.rows();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].sense != lp::RowSense::kLessEqual) continue;
    const double slack = rows[i].rhs - m.lp.row_activity(static_cast<int>(i), primal.x);
    if (slack > kPrimalTolerance * std::max(1.0, std::abs(rows[i].rhs)))
      dual.add_row({{static_cast<int>(i), 1.0}}, lp::RowSense::kEqual, 0.0, "slack:" + rows[i].name);
  }
  for (std::size_t j = 0; j < m.lp.columns().size(); ++j)
    if (!m.lp.columns()[j].free && primal.x[j] > kPrimalTolerance) dual.rows()[j].sense = lp::RowSense::kEqual;

  auto solve_with = [&](const std::vector<std::pair<int, double>>& objective) {
    lp::LinearProgram p = dual;
    for (auto& c : p.columns()) c.objective = 0.0;
    for (const auto& [col, v] : objective) p.columns()[static_cast<std::size_t>(col)].objective = v;
    return lp::maximize(p);
  };

  for (const std::string& z : zones) {
    const int col = m.zone_rows.at(z);
    const lp::Solution hi = solve_with({{col, 1.0}});
    const lp::Solution lo = solve_with({{col, -1.0}});
    if (hi.status == lp::Status::kInfeasible || lo.status == lp::Status::kInfeasible) return primal.duals;
    double value = primal.duals[static_cast<std::size_t>(col)];
    const bool hi_ok = hi.status == lp::Status::kOptimal;
    const bool lo_ok = lo.status == lp::Status::kOptimal;
    if (hi_ok && lo_ok) value = 0.5 * (hi.objective - lo.objective);
    else if (hi_ok) value = hi.objective;
    else if (lo_ok) value = -lo.objective;
    dual.add_row({{col, 1.0}}, lp::RowSense::kEqual, value, "fix:" + z);
  }

  std::vector<std::pair<int, double>> shadow_sum;
  for (int row : m.capacity_rows) shadow_sum.emplace_back(row, -1.0);
  const lp::Solution chosen = solve_with(shadow_sum);
  if (chosen.status != lp::Status::kOptimal) return primal.duals;
  return chosen.x;
}

CouplingResult finish(const CouplingModel& m, const OrderBook& book, const std::vector<std::string>& zones,
                      const lp::Solution& sol, const std::vector<double>& capacity_limits,
                      const std::vector<std::map<std::string, double>>& cnec_ptdfs) {
  CouplingResult r;
  r.zones = zones;
  const std::vector<double> y = select_duals(m, sol, zones);

  std::vector<double> volume(book.bids.size());
  for (std::size_t i = 0; i < book.bids.size(); ++i)
    volume[i] = std::clamp(sol.x[static_cast<std::size_t>(m.bid_cols[i])], 0.0, book.bids[i].quantity);

  // Pro-rata among identical bids (same zone, side and price).
  std::map<std::tuple<std::string, int, double>, std::pair<double, double>> groups;
  for (std::size_t i = 0; i < book.bids.size(); ++i) {
    const Bid& b = book.bids[i];
    auto& g = groups[{b.zone, static_cast<int>(b.side), b.price}];
    g.first += volume[i];
    g.second += b.quantity;
  }
  r.accepted.resize(book.bids.size());
  for (std::size_t i = 0; i < book.bids.size(); ++i) {
    const Bid& b = book.bids[i];
    const auto& g = groups[{b.zone, static_cast<int>(b.side), b.price}];
    r.accepted[i] = std::clamp(g.first / g.second, 0.0, 1.0);
  }

  for (const std::string& z : zones) {
    r.np[z] = 0.0;
    r.zonal_price[z] = y[static_cast<std::size_t>(m.zone_rows.at(z))];
  }
  for (std::size_t i = 0; i < book.bids.size(); ++i) {
    const Bid& b = book.bids[i];
    const double q = r.accepted[i] * b.quantity;
    r.np[b.zone] += b.side == Side::kSupply ? q : -q;
    r.total_surplus += b.side == Side::kDemand ? b.price * q : -b.price * q;
  }
  if (m.system_row >= 0) r.system_price = y[static_cast<std::size_t>(m.system_row)];

  for (std::size_t k = 0; k < m.capacity_rows.size(); ++k) {
    const double lambda = std::max(0.0, y[static_cast<std::size_t>(m.capacity_rows[k])]);
    r.shadow_price[m.capacity_ids[k]] = lambda;
    double usage = 0.0;
    if (!cnec_ptdfs.empty()) {
      for (const auto& [zone, f] : cnec_ptdfs[k]) usage += f * r.np.at(zone);
    } else {
      usage = sol.x[static_cast<std::size_t>(m.capacity_cols[k])];
    }
    if (capacity_limits[k] - usage <= kBindingTolerance) r.binding.insert(m.capacity_ids[k]);
  }

  for (std::size_t i = 0; i < m.lp.rows().size(); ++i)
    r.dual_objective += y[i] * m.lp.rows()[i].rhs;

  const SurplusSplit split = surplus_decomposition(r, book);
  r.consumer_surplus = split.consumer;
  r.producer_surplus = split.producer;
  r.congestion_rent = split.congestion;
  return r;
}

lp::Solution solve_or_throw(const lp::LinearProgram& lp) {
  lp::Solution sol = lp::maximize(lp);
  if (sol.status == lp::Status::kInfeasible)
    throw Error(ErrorCode::kInfeasible, "coupling problem is infeasible (domain excludes the origin?)");
  if (sol.status == lp::Status::kUnbounded)
    throw Error(ErrorCode::kInfeasible, "coupling problem is unbounded");
  return sol;
}

}  // namespace

CouplingResult couple(const OrderBook& book, const FlowBasedDomain& domain) {
  if (domain.zones.empty()) throw Error(ErrorCode::kZoneMismatch, "flow-based domain has no zones");
  CouplingModel m;
  add_bids(m, book, domain.zones);

  std::map<std::string, std::vector<std::pair<int, double>>> export_terms;
  std::vector<std::pair<int, double>> system;
  for (const std::string& z : domain.zones) {
    const int col = m.lp.add_column(0.0, true, "np:" + z);
    m.np_cols[z] = col;
    export_terms[z].emplace_back(col, 1.0);
    system.emplace_back(col, -1.0);
  }
  add_zone_rows(m, book, domain.zones, export_terms);
  m.system_row = m.lp.add_row(std::move(system), lp::RowSense::kEqual, 0.0, "system");

  std::vector<double> limits;
  std::vector<std::map<std::string, double>> ptdfs;
  for (const Cnec& c : domain.cnecs) {
    std::vector<std::pair<int, double>> coefs;
    for (const std::string& z : domain.zones) {
      const auto it = c.ptdf.find(z);
      if (it == c.ptdf.end())
        throw Error(ErrorCode::kZoneMismatch, "CNEC '" + c.id + "' has no PTDF for zone '" + z + "'");
      if (it->second != 0.0) coefs.emplace_back(m.np_cols.at(z), it->second);
    }
    m.capacity_rows.push_back(m.lp.add_row(std::move(coefs), lp::RowSense::kLessEqual, c.ram(), c.id));
    m.capacity_ids.push_back(c.id);
    limits.push_back(c.ram());
    ptdfs.push_back(c.ptdf);
  }
  return finish(m, book, domain.zones, solve_or_throw(m.lp), limits, ptdfs);
}

CouplingResult couple(const OrderBook& book, const NtcDomain& domain) {
  domain.validate();
  if (domain.zones.empty()) throw Error(ErrorCode::kZoneMismatch, "NTC domain has no zones");
  CouplingModel m;
  add_bids(m, book, domain.zones);

  std::map<std::string, std::vector<std::pair<int, double>>> export_terms;
  std::vector<double> limits;
  for (const NtcBorder& b : domain.borders) {
    const int col = m.lp.add_column(0.0, false, "flow:" + b.id());
    m.capacity_cols.push_back(col);
    export_terms[b.zone_from].emplace_back(col, 1.0);
    export_terms[b.zone_to].emplace_back(col, -1.0);
  }
  add_zone_rows(m, book, domain.zones, export_terms);
  for (std::size_t k = 0; k < domain.borders.size(); ++k) {
    const NtcBorder& b = domain.borders[k];
    m.capacity_rows.push_back(
        m.lp.add_row({{m.capacity_cols[k], 1.0}}, lp::RowSense::kLessEqual, b.capacity, b.id()));
    m.capacity_ids.push_back(b.id());
    limits.push_back(b.capacity);
  }
  return finish(m, book, domain.zones, solve_or_throw(m.lp), limits, {});
}

SurplusSplit surplus_decomposition(const CouplingResult& result, const OrderBook& book) {
  if (result.accepted.size() != book.bids.size())
    throw Error(ErrorCode::kMismatchedResult, "result has " + std::to_string(result.accepted.size()) +
                                                  " acceptances for " + std::to_string(book.bids.size()) +
                                                  " bids");
  SurplusSplit s;
  for (std::size_t i = 0; i < book.bids.size(); ++i) {
    const Bid& b = book.bids[i];
    const auto price = result.zonal_price.find(b.zone);
    if (price == result.zonal_price.end())
      throw Error(ErrorCode::kMismatchedResult, "result has no price for zone '" + b.zone + "'");
    const double q = result.accepted[i] * b.quantity;
    if (b.side == Side::kDemand) s.consumer += q * (b.price - price->second);
    else s.producer += q * (price->second - b.price);
  }
  for (const auto& [zone, np] : result.np) {
    const auto price = result.zonal_price.find(zone);
    if (price == result.zonal_price.end())
      throw Error(ErrorCode::kMismatchedResult, "result has no price for zone '" + zone + "'");
    s.congestion += price->second * -np;
  }
  return s;
}

}  // namespace fbc
