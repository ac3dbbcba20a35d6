#include "hmpc/model_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "hmpc/error.hpp"

namespace hmpc {

namespace {

[[noreturn]] void bad_format(const std::string& what) { throw Error(ErrorKind::FormatError, what); }

/// Rejects keys outside `allowed` so that typos do not silently fall back to defaults.
void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) bad_format(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) bad_format(where + ": unknown key '" + item.key() + "'");
  }
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) bad_format(where + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) bad_format(where + ": expected an integer");
  return j.get<int>();
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const std::string at = where + "." + key;
  if constexpr (std::is_same_v<T, double>) {
    out = number(j.at(key), at);
  } else if constexpr (std::is_same_v<T, int>) {
    out = integer(j.at(key), at);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!j.at(key).is_boolean()) bad_format(at + ": expected true or false");
    out = j.at(key).get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.at(key).is_string()) bad_format(at + ": expected a string");
    out = j.at(key).get<std::string>();
  } else {
    if (!j.at(key).is_number_unsigned()) bad_format(at + ": expected a nonnegative integer");
    out = j.at(key).get<T>();
  }
}

/// Infinity and NaN have no JSON literal; they are written as strings.
Json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json check_list(const std::vector<ChecklistItem>& items) {
  Json out = Json::array();
  for (const auto& it : items) out.push_back({{"name", it.name}, {"done", it.done}, {"detail", it.detail}});
  return out;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(real(m(i, k)));
    rows.push_back(std::move(row));
  }
  // An m x 0 matrix loses its row count as rows of empty arrays; keep it explicit.
  if (m.cols() == 0) return Json{{"rows", m.rows()}, {"cols", 0}};
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (j.is_object()) {
    check_keys(j, {"rows", "cols"}, "matrix");
    if (!j.contains("rows") || !j.contains("cols")) bad_format("matrix: an empty matrix needs rows and cols");
    const int r = integer(j.at("rows"), "matrix.rows");
    const int c = integer(j.at("cols"), "matrix.cols");
    if (r < 0 || c < 0) bad_format("matrix: negative dimension");
    return Matrix::Zero(r, c);
  }
  if (!j.is_array()) bad_format("matrix: expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  if (!j[0].is_array()) bad_format("matrix: expected an array of rows");
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) bad_format("matrix: ragged rows");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = number(row[static_cast<std::size_t>(k)], "matrix entry");
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real(v(i)));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) bad_format("vector: expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], "vector entry");
  return v;
}

Json model_to_json(const InterconnectedModel& model) {
  Json subs = Json::array();
  for (const auto& s : model.subsystems) {
    subs.push_back({{"A", matrix_to_json(s.A)},
                    {"B", matrix_to_json(s.B)},
                    {"E", matrix_to_json(s.E)},
                    {"C", matrix_to_json(s.C)},
                    {"input_radius", s.input_set.radius}});
  }
  Json coupling = Json::array();
  for (int i = 0; i < model.count(); ++i) {
    for (int k = 0; k < model.count(); ++k) {
      const Matrix& l = model.coupling.blocks[i][k];
      if (i == k || l.size() == 0 || l.isZero(0.0)) continue;
      coupling.push_back({{"to", i}, {"from", k}, {"L", matrix_to_json(l)}});
    }
  }
  return {{"format", "hmpc-model v1"}, {"subsystems", subs}, {"coupling", coupling}};
}

static InterconnectedModel model_from_json_unchecked(const Json& j) {
  check_keys(j, {"format", "subsystems", "coupling"}, "model");
  if (j.contains("format") && j.at("format") != "hmpc-model v1") bad_format("model: unsupported format tag");
  if (!j.contains("subsystems") || !j.at("subsystems").is_array()) bad_format("model: missing subsystems");
  std::vector<SubsystemModel> subs;
  for (const auto& js : j.at("subsystems")) {
    check_keys(js, {"A", "B", "E", "C", "input_radius"}, "subsystem");
    SubsystemModel s;
    s.A = matrix_from_json(js.at("A"));
    s.B = matrix_from_json(js.at("B"));
    s.E = matrix_from_json(js.at("E"));
    s.C = matrix_from_json(js.at("C"));
    s.input_set = BallSet(static_cast<int>(s.B.cols()), number(js.at("input_radius"), "subsystem.input_radius"));
    subs.push_back(std::move(s));
  }
  CouplingMap l = CouplingMap::zero(subs);
  if (j.contains("coupling")) {
    for (const auto& jc : j.at("coupling")) {
      check_keys(jc, {"to", "from", "L"}, "coupling");
      const int to = integer(jc.at("to"), "coupling.to");
      const int from = integer(jc.at("from"), "coupling.from");
      if (to < 0 || from < 0 || to >= static_cast<int>(subs.size()) || from >= static_cast<int>(subs.size())) {
        bad_format("coupling: subsystem index out of range");
      }
      l.blocks[to][from] = matrix_from_json(jc.at("L"));
    }
  }
  return assemble(std::move(subs), std::move(l));
}

Json building_to_json(const BuildingConfig& cfg) {
  Json rooms = Json::array();
  for (const auto& r : cfg.rooms) {
    rooms.push_back({{"id", r.id},
                     {"apartment", r.apartment},
                     {"floor_area", r.floor_area},
                     {"exterior_wall_length", r.exterior_wall_length},
                     {"T_bar", r.T_bar}});
  }
  Json walls = Json::array();
  for (const auto& w : cfg.walls) walls.push_back({{"rooms", {w.a, w.b}}, {"length", w.length}});
  Json heaters = Json::array();
  for (std::size_t h = 0; h < cfg.heaters.size(); ++h) {
    heaters.push_back({{"room", cfg.heaters[h]}, {"q_bar", cfg.q_bar(static_cast<Eigen::Index>(h))}});
  }
  return {{"name", cfg.name},         {"wall_height", cfg.wall_height},
          {"k1t", cfg.k1t},           {"k2t", cfg.k2t},
          {"ket", cfg.ket},           {"density", cfg.density},
          {"heat_capacity", cfg.heat_capacity}, {"T_ext", cfg.T_ext},
          {"dt", cfg.dt},             {"input_limit", cfg.input_limit},
          {"rooms", rooms},           {"walls", walls},
          {"heaters", heaters}};
}

static BuildingConfig building_from_json_unchecked(const Json& j) {
  check_keys(j,
             {"name", "description", "wall_height", "k1t", "k2t", "ket", "density", "heat_capacity", "T_ext", "dt",
              "input_limit", "rooms", "walls", "heaters"},
             "building");
  BuildingConfig cfg;
  read_opt(j, "name", cfg.name, "building");
  read_opt(j, "wall_height", cfg.wall_height, "building");
  read_opt(j, "k1t", cfg.k1t, "building");
  read_opt(j, "k2t", cfg.k2t, "building");
  read_opt(j, "ket", cfg.ket, "building");
  read_opt(j, "density", cfg.density, "building");
  read_opt(j, "heat_capacity", cfg.heat_capacity, "building");
  read_opt(j, "T_ext", cfg.T_ext, "building");
  read_opt(j, "dt", cfg.dt, "building");
  read_opt(j, "input_limit", cfg.input_limit, "building");
  if (!j.contains("rooms") || !j.at("rooms").is_array()) bad_format("building: missing rooms array");
  for (const auto& jr : j.at("rooms")) {
    check_keys(jr, {"id", "apartment", "floor_area", "exterior_wall_length", "T_bar"}, "room");
    Room r;
    if (!jr.contains("id")) bad_format("room: missing id");
    read_opt(jr, "id", r.id, "room");
    read_opt(jr, "apartment", r.apartment, "room " + r.id);
    read_opt(jr, "floor_area", r.floor_area, "room " + r.id);
    read_opt(jr, "exterior_wall_length", r.exterior_wall_length, "room " + r.id);
    read_opt(jr, "T_bar", r.T_bar, "room " + r.id);
    cfg.rooms.push_back(std::move(r));
  }
  if (j.contains("walls")) {
    for (const auto& jw : j.at("walls")) {
      check_keys(jw, {"rooms", "length"}, "wall");
      const auto& pair = jw.at("rooms");
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        bad_format("wall: 'rooms' must name two rooms");
      }
      Wall w{pair[0].get<std::string>(), pair[1].get<std::string>(), 0.0};
      read_opt(jw, "length", w.length, "wall " + w.a + "-" + w.b);
      cfg.walls.push_back(std::move(w));
    }
  }
  if (j.contains("heaters")) {
    std::vector<double> q;
    for (const auto& jh : j.at("heaters")) {
      check_keys(jh, {"room", "q_bar"}, "heater");
      std::string room;
      double qb = 0.0;
      read_opt(jh, "room", room, "heater");
      read_opt(jh, "q_bar", qb, "heater " + room);
      cfg.heaters.push_back(room);
      q.push_back(qb);
    }
    cfg.q_bar = Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size()));
  }
  cfg.validate();
  return cfg;
}

Json run_to_json(const RunConfig& cfg) {
  Json j = {{"N_L", cfg.N_L},         {"N_H", cfg.N_H},       {"Q_H", cfg.q_h},
            {"R_H", cfg.r_h},         {"Q_i", cfg.q_ll},      {"R_i", cfg.r_ll},
            {"horizon", cfg.horizon}, {"gamma1", cfg.gamma1}, {"gamma2", cfg.gamma2},
            {"certified", cfg.certified}};
  j["x0"] = cfg.x0 ? vector_to_json(*cfg.x0) : Json(cfg.x0_value);
  if (!cfg.orders.empty()) j["orders"] = cfg.orders;
  if (cfg.rho_delta_u_hat && cfg.rho_u_bar) {
    j["radii"] = {{"rho_delta_u_hat", vector_to_json(*cfg.rho_delta_u_hat)},
                  {"rho_u_bar", vector_to_json(*cfg.rho_u_bar)}};
  }
  j["solver"] = {{"tol_primal", cfg.qp.tol_primal}, {"tol_dual", cfg.qp.tol_dual}, {"max_iters", cfg.qp.max_iters}};
  j["seed"] = cfg.seed;
  j["soak_steps"] = cfg.soak_steps;
  return j;
}

static RunConfig run_from_json_unchecked(const Json& j) {
  check_keys(j,
             {"description", "N_L", "N_H", "Q_H", "R_H", "Q_i", "R_i", "x0", "horizon", "gamma1", "gamma2",
              "certified", "orders", "radii", "solver", "seed", "soak_steps"},
             "run");
  RunConfig cfg;
  read_opt(j, "N_L", cfg.N_L, "run");
  read_opt(j, "N_H", cfg.N_H, "run");
  read_opt(j, "Q_H", cfg.q_h, "run");
  read_opt(j, "R_H", cfg.r_h, "run");
  read_opt(j, "Q_i", cfg.q_ll, "run");
  read_opt(j, "R_i", cfg.r_ll, "run");
  read_opt(j, "horizon", cfg.horizon, "run");
  read_opt(j, "gamma1", cfg.gamma1, "run");
  read_opt(j, "gamma2", cfg.gamma2, "run");
  read_opt(j, "certified", cfg.certified, "run");
  read_opt(j, "seed", cfg.seed, "run");
  read_opt(j, "soak_steps", cfg.soak_steps, "run");
  if (j.contains("x0")) {
    if (j.at("x0").is_number()) {
      cfg.x0_value = j.at("x0").get<double>();
    } else {
      cfg.x0 = vector_from_json(j.at("x0"));
    }
  }
  if (j.contains("orders")) {
    if (!j.at("orders").is_array()) bad_format("run.orders: expected an array");
    for (const auto& o : j.at("orders")) cfg.orders.push_back(integer(o, "run.orders"));
  }
  if (j.contains("radii")) {
    const auto& jr = j.at("radii");
    check_keys(jr, {"rho_delta_u_hat", "rho_u_bar"}, "run.radii");
    if (!jr.contains("rho_delta_u_hat") || !jr.contains("rho_u_bar")) bad_format("run.radii: both radii needed");
    cfg.rho_delta_u_hat = vector_from_json(jr.at("rho_delta_u_hat"));
    cfg.rho_u_bar = vector_from_json(jr.at("rho_u_bar"));
  }
  if (j.contains("solver")) {
    const auto& js = j.at("solver");
    check_keys(js, {"tol_primal", "tol_dual", "max_iters"}, "run.solver");
    read_opt(js, "tol_primal", cfg.qp.tol_primal, "run.solver");
    read_opt(js, "tol_dual", cfg.qp.tol_dual, "run.solver");
    read_opt(js, "max_iters", cfg.qp.max_iters, "run.solver");
  }
  cfg.validate();
  return cfg;
}

namespace {

/// Missing keys and type mismatches inside the json library surface as FormatError.
template <typename F>
auto translate(F&& parse, const char* what) {
  try {
    return parse();
  } catch (const nlohmann::json::exception& e) {
    bad_format(std::string(what) + ": " + e.what());
  }
}

}  // namespace

InterconnectedModel model_from_json(const Json& j) {
  return translate([&] { return model_from_json_unchecked(j); }, "model");
}

BuildingConfig building_from_json(const Json& j) {
  return translate([&] { return building_from_json_unchecked(j); }, "building");
}

RunConfig run_from_json(const Json& j) {
  return translate([&] { return run_from_json_unchecked(j); }, "run");
}

Json report_to_json(const ValidationReport& rep) {
  Json out = Json::array();
  for (const auto& c : rep.checks) {
    Json row = {{"name", c.name}, {"value", real(c.value)}, {"threshold", real(c.threshold)}, {"pass", c.pass}};
    if (!c.note.empty()) row["note"] = c.note;
    out.push_back(std::move(row));
  }
  return out;
}

Json certificate_to_json(const CertificateReport& rep) {
  Json j;
  j["format"] = "hmpc-certificate v1";
  j["pass"] = rep.pass();
  j["N_L"] = rep.N_L;
  j["nbar"] = rep.nbar;
  j["kappa"] = real(rep.kappa);
  j["kappa_bound"] = real(rep.kappa_bound);
  j["A_norm"] = real(rep.A_norm);
  j["R_norm"] = real(rep.R_norm);
  j["AL_N_norm"] = real(rep.AL_N_norm);
  j["sigma_min"] = vector_to_json(rep.sigma_min);
  j["chi"] = vector_to_json(rep.chi);
  j["lambda"] = vector_to_json(rep.lambda);
  j["rho_u"] = real(rep.rho_u);
  j["rho_u_i"] = vector_to_json(rep.rho_u_i);
  j["rho_u_bar"] = real(rep.rho_u_bar);
  j["rho_u_bar_i"] = vector_to_json(rep.rho_u_bar_i);
  j["rho_delta_u_hat"] = vector_to_json(rep.rho_delta_u_hat);
  j["rho_delta_x_hat"] = matrix_to_json(rep.rho_delta_x_hat);
  j["rho_delta_x_hat_total"] = vector_to_json(rep.rho_delta_x_hat_total);
  j["rho_delta_u"] = matrix_to_json(rep.rho_delta_u);
  j["rho_delta_u_bar"] = vector_to_json(rep.rho_delta_u_bar);
  j["rho_w"] = real(rep.rho_w);
  j["kappa_du"] = real(rep.kappa_du);
  j["rho_x"] = real(rep.rho_x);
  j["envelope"] = real(rep.envelope);
  j["x0_norm"] = real(rep.x0_norm);
  j["x0_bound_ok"] = rep.x0_bound_ok;
  j["checks"] = report_to_json(rep.conditions);
  return j;
}

Json allocation_to_json(const RadiusAllocation& alloc) {
  return {{"rho_delta_u_hat", vector_to_json(alloc.rho_delta_u_hat)},
          {"rho_u_bar", vector_to_json(alloc.rho_u_bar)},
          {"lambda_matrix", matrix_to_json(alloc.lambda_matrix)},
          {"objective", real(alloc.objective)},
          {"certified", alloc.certified},
          {"kappa_slack", vector_to_json(alloc.kappa_slack)},
          {"budget_slack", vector_to_json(alloc.budget_slack)}};
}

Json design_to_json(const DesignArtifacts& d) {
  Json j;
  j["format"] = "hmpc-design v1";
  j["complete"] = d.complete();
  j["checklist"] = check_list(d.checklist);
  j["structure"] = report_to_json(d.structure);
  j["run"] = run_to_json(d.run);
  j["reduced"] = {{"orders", d.reduced.orders},
                  {"A_H", matrix_to_json(d.reduced.A_H)},
                  {"B_H", matrix_to_json(d.reduced.B_H)},
                  {"beta", matrix_to_json(d.reduced.beta)}};
  j["slow"] = {{"A", matrix_to_json(d.slow.A_slow)}, {"B", matrix_to_json(d.slow.B_slow)}};
  j["hl_gain"] = {{"K_H", matrix_to_json(d.hl_gain.K_H)},
                  {"F_H", matrix_to_json(d.hl_gain.F_H)},
                  {"F_L_NL", matrix_to_json(d.hl_gain.F_L_NL)},
                  {"rho_F_H", d.hl_gain.rho_F_H},
                  {"rho_F_L_NL", d.hl_gain.rho_F_L_NL},
                  {"detune_rounds", d.hl_gain.detune_rounds}};
  Json k = Json::array();
  for (const auto& ki : d.ll_gain.K_i) k.push_back(matrix_to_json(ki));
  j["ll_gain"] = {{"K_i", k}, {"rho_F_L", d.ll_gain.rho_F_L}, {"detune_rounds", d.ll_gain.detune_rounds}};
  j["radii"] = allocation_to_json(d.radii);
  if (d.hl.K_H.size() > 0 || d.hl.Z_info.horizon_terms > 0) {
    Json ubar = Json::array(), utight = Json::array();
    for (const auto& b : d.hl.U_bar) ubar.push_back(b.radius);
    for (const auto& b : d.hl.U_tight) utight.push_back(b.radius);
    j["hl"] = {{"P_H", matrix_to_json(d.hl.P_H)},
               {"W_radius", d.hl.W.radius},
               {"Z_radius", d.hl.Z.radius},
               {"Z_terms", d.hl.Z_info.horizon_terms},
               {"X_F_level", real(d.hl.X_F.level)},
               {"U_bar", ubar},
               {"U_tight", utight}};
  }
  j["initial_phase1_distance"] = real(d.initial_phase1_distance);
  j["rpi_factor"] = real(d.rpi_factor);
  return j;
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad_format("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    bad_format(path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) bad_format("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

BuildingConfig load_building_config(const std::filesystem::path& path) { return building_from_json(load_json(path)); }

RunConfig load_run_config(const std::filesystem::path& path) { return run_from_json(load_json(path)); }

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace hmpc
