#include "hmpc/thermal.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "hmpc/error.hpp"

namespace hmpc {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::ConfigInvalid, what); }

std::map<std::string, int> room_index(const BuildingConfig& cfg) {
  std::map<std::string, int> idx;
  for (std::size_t r = 0; r < cfg.rooms.size(); ++r) idx[cfg.rooms[r].id] = static_cast<int>(r);
  return idx;
}

double wall_conductance(const BuildingConfig& cfg, const Room& a, const Room& b) {
  return a.apartment == b.apartment ? cfg.k2t : cfg.k1t;
}

}  // namespace

int BuildingConfig::apartments() const {
  int count = 0;
  for (const auto& r : rooms) count = std::max(count, r.apartment);
  return count;
}

void BuildingConfig::validate() const {
  if (rooms.empty()) invalid("building has no rooms");
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) invalid(std::string(what) + " must be positive");
  };
  auto nonnegative = [](double v, const char* what) {
    if (!(v >= 0.0)) invalid(std::string(what) + " must be nonnegative");
  };
  positive(wall_height, "wall_height");
  positive(density, "density");
  positive(heat_capacity, "heat_capacity");
  positive(dt, "dt");
  positive(input_limit, "input_limit");
  nonnegative(k1t, "k1t");
  nonnegative(k2t, "k2t");
  nonnegative(ket, "ket");

  std::set<std::string> ids;
  std::set<int> apts;
  for (const auto& r : rooms) {
    if (r.id.empty()) invalid("room with empty id");
    if (!ids.insert(r.id).second) invalid("duplicate room id " + r.id);
    if (r.apartment < 1) invalid("room " + r.id + ": apartment numbers start at 1");
    if (!(r.floor_area > 0.0)) invalid("room " + r.id + ": floor_area must be positive");
    if (!(r.exterior_wall_length >= 0.0)) invalid("room " + r.id + ": exterior_wall_length must be nonnegative");
    apts.insert(r.apartment);
  }
  for (int a = 1; a <= apartments(); ++a) {
    if (!apts.count(a)) invalid("apartment " + std::to_string(a) + " has no rooms");
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& w : walls) {
    if (!ids.count(w.a) || !ids.count(w.b)) invalid("wall " + w.a + "-" + w.b + " names an unknown room");
    if (w.a == w.b) invalid("wall " + w.a + "-" + w.b + " joins a room to itself");
    if (!(w.length >= 0.0)) invalid("wall " + w.a + "-" + w.b + ": length must be nonnegative");
    const auto key = std::minmax(w.a, w.b);
    if (!seen.insert({key.first, key.second}).second) invalid("wall " + w.a + "-" + w.b + " listed twice");
  }
  std::set<std::string> heated;
  for (const auto& h : heaters) {
    if (!ids.count(h)) invalid("heater in unknown room " + h);
    if (!heated.insert(h).second) invalid("two heaters in room " + h);
  }
  if (q_bar.size() != static_cast<Eigen::Index>(heaters.size())) invalid("q_bar needs one entry per heater");
}

ThermalModel build_thermal(const BuildingConfig& cfg) {
  cfg.validate();
  const auto idx = room_index(cfg);
  const int M = cfg.apartments();
  const int n = static_cast<int>(cfg.rooms.size());

  // State order: apartments in turn, rooms in config order inside each.
  ThermalModel out;
  std::vector<int> order;
  std::vector<IndexRange> blocks;
  for (int a = 1; a <= M; ++a) {
    const int start = static_cast<int>(order.size());
    for (int r = 0; r < n; ++r)
      if (cfg.rooms[r].apartment == a) order.push_back(r);
    blocks.push_back({start, static_cast<int>(order.size()) - start});
  }
  std::vector<int> pos(n);
  for (int s = 0; s < n; ++s) {
    pos[order[s]] = s;
    out.state_rooms.push_back(cfg.rooms[order[s]].id);
  }
  // Inputs: heaters grouped by apartment, config order inside each.
  std::vector<int> input_order;
  std::vector<IndexRange> input_blocks;
  for (int a = 1; a <= M; ++a) {
    const int start = static_cast<int>(input_order.size());
    for (std::size_t h = 0; h < cfg.heaters.size(); ++h)
      if (cfg.rooms[idx.at(cfg.heaters[h])].apartment == a) input_order.push_back(static_cast<int>(h));
    input_blocks.push_back({start, static_cast<int>(input_order.size()) - start});
  }
  const int m = static_cast<int>(input_order.size());

  Vector cap(n);
  for (int s = 0; s < n; ++s) {
    const auto& r = cfg.rooms[order[s]];
    cap(s) = cfg.density * cfg.heat_capacity * cfg.wall_height * r.floor_area;
  }
  Matrix g = Matrix::Zero(n, n);
  for (const auto& w : cfg.walls) {
    const int i = pos[idx.at(w.a)], j = pos[idx.at(w.b)];
    const double c = wall_conductance(cfg, cfg.rooms[idx.at(w.a)], cfg.rooms[idx.at(w.b)]) * cfg.wall_height * w.length;
    g(i, j) += c;
    g(j, i) += c;
    g(i, i) -= c;
    g(j, j) -= c;
  }
  for (int s = 0; s < n; ++s) g(s, s) -= cfg.ket * cfg.wall_height * cfg.rooms[order[s]].exterior_wall_length;
  out.A_c = cap.cwiseInverse().asDiagonal() * g;
  out.B_c = Matrix::Zero(n, m);
  for (int k = 0; k < m; ++k) {
    const int s = pos[idx.at(cfg.heaters[input_order[k]])];
    out.B_c(s, k) = 1.0 / cap(s);
  }
  std::tie(out.A_d, out.B_d) = zoh_discretize(out.A_c, out.B_c, cfg.dt);

  const double rho = spectral_radius(out.A_d);
  if (!(rho < 1.0 - 1e-9)) {
    std::ostringstream msg;
    msg << "discrete building model has spectral radius " << rho << " (rooms without heat exchange keep their "
        << "temperature forever)";
    throw Error(ErrorKind::UnstableDiscretization, msg.str());
  }

  std::vector<SubsystemModel> subs;
  for (int a = 0; a < M; ++a) {
    const auto& sb = blocks[a];
    const auto& ib = input_blocks[a];
    SubsystemModel s;
    s.A = out.A_d.block(sb.offset, sb.offset, sb.size, sb.size);
    s.B = out.B_d.block(sb.offset, ib.offset, sb.size, ib.size);
    s.E = Matrix::Identity(sb.size, sb.size);
    s.C = Matrix::Identity(sb.size, sb.size);
    s.input_set = BallSet(ib.size, cfg.input_limit);
    subs.push_back(std::move(s));
  }
  CouplingMap l = CouplingMap::zero(subs);
  Matrix dropped = out.B_d;
  for (int a = 0; a < M; ++a) {
    dropped.block(blocks[a].offset, input_blocks[a].offset, blocks[a].size, input_blocks[a].size).setZero();
    for (int b = 0; b < M; ++b) {
      if (a == b) continue;
      l.blocks[a][b] = out.A_d.block(blocks[a].offset, blocks[b].offset, blocks[a].size, blocks[b].size);
    }
  }
  out.dropped_input_coupling = norm2(dropped);
  out.model = assemble(std::move(subs), std::move(l));
  return out;
}

InterconnectedModel build_thermal_model(const BuildingConfig& cfg) { return build_thermal(cfg).model; }

HeatBalance equilibrium_heat(const BuildingConfig& cfg) {
  cfg.validate();
  const auto idx = room_index(cfg);
  const int n = static_cast<int>(cfg.rooms.size());
  Vector flow = Vector::Zero(n);
  for (int r = 0; r < n; ++r) {
    const auto& room = cfg.rooms[r];
    flow(r) = cfg.ket * cfg.wall_height * room.exterior_wall_length * (cfg.T_ext - room.T_bar);
  }
  for (const auto& w : cfg.walls) {
    const int i = idx.at(w.a), j = idx.at(w.b);
    const double c = wall_conductance(cfg, cfg.rooms[i], cfg.rooms[j]) * cfg.wall_height * w.length;
    flow(i) += c * (cfg.rooms[j].T_bar - cfg.rooms[i].T_bar);
    flow(j) += c * (cfg.rooms[i].T_bar - cfg.rooms[j].T_bar);
  }
  HeatBalance out;
  out.q_required.resize(static_cast<Eigen::Index>(cfg.heaters.size()));
  out.room_residual = flow;
  for (std::size_t h = 0; h < cfg.heaters.size(); ++h) {
    const int r = idx.at(cfg.heaters[h]);
    out.q_required(static_cast<Eigen::Index>(h)) = -flow(r);
    out.room_residual(r) += cfg.q_bar(static_cast<Eigen::Index>(h));
  }
  return out;
}

BuildingConfig decoupled(BuildingConfig cfg) {
  cfg.k1t = 0.0;
  return cfg;
}

}  // namespace hmpc
