#pragma once

#include <string>
#include <vector>

#include "hmpc/lti_model.hpp"

namespace hmpc {

struct Room {
  std::string id;
  int apartment = 1;  // 1-based; one subsystem per apartment
  double floor_area = 0.0;            // m^2
  double exterior_wall_length = 0.0;  // m
  double T_bar = 0.0;                 // equilibrium temperature, degC
};

/// Shared wall between two rooms. Walls inside an apartment use k2t,
/// walls between apartments use k1t.
struct Wall {
  std::string a;
  std::string b;
  double length = 0.0;  // m
};

struct BuildingConfig {
  std::string name = "building";
  std::vector<Room> rooms;
  std::vector<Wall> walls;
  double wall_height = 4.0;      // m
  double k1t = 1.0;              // W/m^2K, between apartments
  double k2t = 2.5;              // W/m^2K, inside an apartment
  double ket = 0.5;              // W/m^2K, to the exterior
  double density = 1.225;        // kg/m^3
  double heat_capacity = 1005.0; // J/kgK
  double T_ext = 0.0;            // degC
  double dt = 90.0;              // s
  std::vector<std::string> heaters;  // room ids, one input each
  Vector q_bar;                      // equilibrium heater power, W
  double input_limit = 50.0;         // |delta q_i| bound, W

  /// Throws Error(ConfigInvalid) naming the offending entry.
  void validate() const;
  int apartments() const;
};

struct ThermalModel {
  InterconnectedModel model;
  std::vector<std::string> state_rooms;  // room id of each state, subsystem order
  Matrix A_c;                            // continuous-time dynamics in state order
  Matrix B_c;
  Matrix A_d;  // zero-order hold of the full coupled system
  Matrix B_d;
  double dropped_input_coupling = 0.0;  // ||off-diagonal blocks of B_d||
};

/// Room energy balances linearized around the equilibrium, discretized by
/// exact zero-order hold of the whole building, then split per apartment
/// with E_i = C_i = I and L_ij the discrete cross blocks. Throws
/// ConfigInvalid or UnstableDiscretization.
ThermalModel build_thermal(const BuildingConfig& cfg);

InterconnectedModel build_thermal_model(const BuildingConfig& cfg);

struct HeatBalance {
  Vector q_required;    // per heater: power that balances its room at T_bar
  Vector room_residual; // per room (config order): net heat flow at T_bar with q_bar, W
};

HeatBalance equilibrium_heat(const BuildingConfig& cfg);

/// Same building with the walls between apartments insulated (k1t = 0).
BuildingConfig decoupled(BuildingConfig cfg);

}  // namespace hmpc
