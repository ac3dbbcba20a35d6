#include "hmpc/trace.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "hmpc/error.hpp"

namespace hmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad_format(const std::string& what) { throw Error(ErrorKind::FormatError, what); }

/// Shortest text that parses back to the same double.
void put(std::string& line, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const char* version) : out_(path) {
    if (!out_) bad_format("cannot write " + path.string());
    out_ << version << '\n';
  }

  void header(const std::vector<std::pair<std::string, int>>& groups) {
    std::string line;
    for (const auto& [name, count] : groups) {
      if (count < 0) {
        append_name(line, name);
        continue;
      }
      for (int i = 0; i < count; ++i) append_name(line, name + "_" + std::to_string(i));
    }
    out_ << line << '\n';
  }

  CsvWriter& operator<<(double v) {
    if (!line_.empty()) line_ += ',';
    put(line_, v);
    return *this;
  }
  CsvWriter& operator<<(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) *this << v(i);
    return *this;
  }
  CsvWriter& operator<<(const std::vector<double>& v) {
    for (double x : v) *this << x;
    return *this;
  }
  void end_row() {
    out_ << line_ << '\n';
    line_.clear();
  }

 private:
  static void append_name(std::string& line, const std::string& name) {
    if (!line.empty()) line += ',';
    line += name;
  }
  std::ofstream out_;
  std::string line_;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double number_or_inf(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

}  // namespace

std::filesystem::path output_dir(const std::optional<std::string>& override) {
  if (override && !override->empty()) return *override;
  if (const char* env = std::getenv("HMPC_OUT_DIR"); env && *env) return env;
  return "hmpc_out";
}

void write_trace(const std::filesystem::path& dir, const TraceArchive& trace, const DesignArtifacts& design,
                 const Json& config, double wall_seconds) {
  std::filesystem::create_directories(dir);
  const auto& model = design.model;
  const int n = model.n(), m = model.m(), M = model.count(), nb = design.reduced.n();

  {
    CsvWriter csv(dir / "fast.csv", kFastHeader);
    csv.header({{"k", -1}, {"j", -1}, {"h", -1}, {"x", n}, {"x_next", n}, {"u", m}, {"u_bar", m},
                {"delta_u_hat", m}, {"delta_u", m}, {"x_hat", n}, {"delta_x", n}, {"delta_x_hat", n},
                {"input_margin", M}, {"correction_margin", M}});
    for (const auto& f : trace.fast) {
      csv << f.k << f.j << f.h << f.x << f.x_next << f.u << f.u_bar << f.delta_u_hat << f.delta_u << f.x_hat
          << f.delta_x << f.delta_x_hat << f.input_margin << f.correction_margin;
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "slow.csv", kSlowHeader);
    csv.header({{"k", -1}, {"projected", nb}, {"x_nominal", nb}, {"u_nominal", m}, {"u_bar", m}, {"x_bar_pred", nb},
                {"w_bar", nb}, {"w_norm", -1}, {"tube_distance", -1}, {"objective", -1}, {"primal_residual", -1},
                {"dual_residual", -1}, {"x_norm", -1}, {"ll_residual", M}});
    for (const auto& s : trace.slow) {
      csv << s.k << s.projected << s.x_nominal << s.u_nominal << s.u_bar << s.x_bar_pred << s.w_bar << s.w_norm
          << s.tube_distance << s.objective << s.primal_residual << s.dual_residual << s.x_norm << s.ll_residuals;
      csv.end_row();
    }
  }
  save_json(dir / "certificate.json", certificate_to_json(design.certificate));
  save_json(dir / "design.json", design_to_json(design));
  save_json(dir / "model.json", model_to_json(model));

  Json meta;
  meta["format"] = "hmpc-meta v1";
  meta["config_hash"] = config_hash(config);
  meta["config"] = config;
  meta["versions"] = {{"hmpc", HMPC_VERSION},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                    "." + std::to_string(EIGEN_MINOR_VERSION)},
                      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                      {"compiler", __VERSION__}};
  meta["N_L"] = trace.N_L;
  meta["slow_steps"] = trace.steps;
  meta["fast_rows"] = trace.fast.size();
  meta["slow_rows"] = trace.slow.size();
  meta["wall_clock"] = {{"finished_utc", utc_now()}, {"seconds", wall_seconds}};
  save_json(dir / "meta.json", meta);
}

void write_soak(const std::filesystem::path& dir, const std::vector<SoakRecord>& soak) {
  std::filesystem::create_directories(dir);
  const int nb = soak.empty() ? 0 : static_cast<int>(soak.front().projected.size());
  CsvWriter csv(dir / "hl_soak.csv", kSoakHeader);
  csv.header({{"k", -1}, {"projected", nb}, {"w", nb}, {"tube_distance", -1}, {"nominal_norm", -1},
              {"input_use", -1}});
  for (const auto& s : soak) {
    csv << s.k << s.projected << s.w << s.tube_distance << s.nominal_norm << s.input_norm_max;
    csv.end_row();
  }
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return static_cast<int>(c);
  bad_format("csv: no column '" + name + "'");
}

Vector CsvTable::block(std::size_t row, const std::string& prefix) const {
  std::vector<double> vals;
  for (int i = 0;; ++i) {
    const std::string name = prefix + "_" + std::to_string(i);
    int c = -1;
    for (std::size_t q = 0; q < columns.size(); ++q)
      if (columns[q] == name) c = static_cast<int>(q);
    if (c < 0) break;
    vals.push_back(rows.at(row).at(static_cast<std::size_t>(c)));
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad_format("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) bad_format(path.string() + ": missing version line");
  t.version = line;
  if (!std::getline(in, line)) bad_format(path.string() + ": missing header");
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) t.columns.push_back(name);
  }
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) bad_format(path.string() + ":" + std::to_string(lineno) + ": bad number");
      row.push_back(v);
      p = res.ptr;
      if (p < end) {
        if (*p != ',') bad_format(path.string() + ":" + std::to_string(lineno) + ": expected ','");
        ++p;
      }
    }
    if (row.size() != t.columns.size()) bad_format(path.string() + ":" + std::to_string(lineno) + ": column count");
    t.rows.push_back(std::move(row));
  }
  return t;
}

ValidationReport verify_trace(const std::filesystem::path& dir) {
  const InterconnectedModel model = model_from_json(load_json(dir / "model.json"));
  const Json cert = load_json(dir / "certificate.json");
  const Json design = load_json(dir / "design.json");
  const CsvTable fast = read_csv(dir / "fast.csv");
  const CsvTable slow = read_csv(dir / "slow.csv");
  if (fast.version != kFastHeader || slow.version != kSlowHeader) bad_format("trace: unsupported version line");

  const int N = cert.at("N_L").get<int>();
  const int M = model.count();
  const Matrix beta = matrix_from_json(design.at("reduced").at("beta"));
  const Matrix f_l_nl = matrix_from_json(design.at("hl_gain").at("F_L_NL"));
  const double rho_z = design.at("hl").at("Z_radius").get<double>();
  const double rho_w = number_or_inf(cert.at("rho_w"));
  const double envelope = number_or_inf(cert.at("envelope"));
  const Vector rho_dhat = vector_from_json(cert.at("rho_delta_u_hat"));
  const Matrix rho_du = matrix_from_json(cert.at("rho_delta_u"));
  const Vector rho_u = vector_from_json(cert.at("rho_u_i"));

  ValidationReport rep;
  rep.add("certificate_pass", cert.at("pass").get<bool>() ? 1.0 : 0.0, 1.0, cert.at("pass").get<bool>());

  const std::size_t steps = slow.rows.size();
  rep.add("record_counts", static_cast<double>(fast.rows.size()), static_cast<double>(steps * N),
          fast.rows.size() == steps * static_cast<std::size_t>(N));
  if (fast.rows.size() != steps * static_cast<std::size_t>(N)) return rep;

  double transition = 0.0, continuity = 0.0, composition = 0.0;
  double input_excess = -kInf, plan_excess = -kInf, correction_excess = -kInf;
  const int k_col = fast.column("k"), j_col = fast.column("j");
  bool indices_ok = true;
  for (std::size_t h = 0; h < fast.rows.size(); ++h) {
    indices_ok = indices_ok && fast.rows[h][k_col] == static_cast<double>(h / N) &&
                 fast.rows[h][j_col] == static_cast<double>(h % N);
    const Vector x = fast.block(h, "x");
    const Vector x_next = fast.block(h, "x_next");
    const Vector u = fast.block(h, "u");
    transition = std::max(transition, (x_next - model.step(x, u)).lpNorm<Eigen::Infinity>());
    if (h + 1 < fast.rows.size()) {
      continuity = std::max(continuity, (fast.block(h + 1, "x") - x_next).lpNorm<Eigen::Infinity>());
    }
    const Vector du = fast.block(h, "delta_u");
    const Vector dhat = fast.block(h, "delta_u_hat");
    composition = std::max(composition, (u - fast.block(h, "u_bar") - du).lpNorm<Eigen::Infinity>());
    const int j = static_cast<int>(h % N);
    for (int i = 0; i < M; ++i) {
      const auto& ib = model.input_blocks[i];
      input_excess = std::max(input_excess, u.segment(ib.offset, ib.size).norm() - rho_u(i));
      plan_excess = std::max(plan_excess, dhat.segment(ib.offset, ib.size).norm() - rho_dhat(i));
      correction_excess =
          std::max(correction_excess, (du - dhat).segment(ib.offset, ib.size).norm() - rho_du(i, j));
    }
  }
  rep.add("step_indices", indices_ok ? 1.0 : 0.0, 1.0, indices_ok);
  rep.add("transition_residual", transition, 1e-9, transition <= 1e-9, "max |x_next - (A x + B u)|");
  rep.add("state_continuity", continuity, 1e-12, continuity <= 1e-12);
  rep.add("input_composition", composition, 1e-9, composition <= 1e-9, "u = u_bar + delta_u");
  rep.add("input_limits", input_excess, 1e-9, input_excess <= 1e-9, "max ||u_i|| - rho_u_i");
  rep.add("plan_radius", plan_excess, 1e-7, plan_excess <= 1e-7, "max ||delta_u_hat_i|| - rho_dhat_i");
  rep.add("correction_budget", correction_excess, 1e-8, correction_excess <= 1e-8,
          "max ||delta_u_i - delta_u_hat_i|| - rho_du_i(j)");

  double w_max = 0.0, tube_max = 0.0, w_record = 0.0;
  int entered = -1;
  bool stays = true;
  std::vector<double> x_norms;
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector x_end = fast.block((k + 1) * N - 1, "x_next");
    const Vector w = beta * x_end - slow.block(k, "x_bar_pred");
    w_max = std::max(w_max, w.norm());
    w_record = std::max(w_record, (w - slow.block(k, "w_bar")).lpNorm<Eigen::Infinity>());
    tube_max = std::max(tube_max, slow.rows[k][slow.column("tube_distance")]);
    const double p = slow.block(k, "projected").norm();
    if (entered < 0 && p <= rho_z + 1e-9) entered = static_cast<int>(k);
    if (entered >= 0 && p > rho_z + 1e-9) stays = false;
    x_norms.push_back(fast.block(k * N, "x").norm());
  }
  if (steps > 0) x_norms.push_back(fast.block(steps * N - 1, "x_next").norm());
  rep.add("w_bound", w_max, rho_w, w_max <= rho_w + 1e-9, "max ||beta x((k+1)N) - x_bar_pred(k)||");
  rep.add("w_recorded", w_record, 1e-12, w_record <= 1e-12, "recorded w_bar matches the recomputed one");
  rep.add("tube", tube_max, rho_z, tube_max <= rho_z + 1e-7, "max ||beta x - x_bar^o||");
  const double nominal_end = steps ? slow.block(steps - 1, "x_nominal").norm() : kInf;
  rep.add("nominal_converged", nominal_end, 1e-6, nominal_end <= 1e-6, "||x_bar^o|| at the last slow step");
  rep.add("enters_Z", entered, static_cast<double>(steps), entered >= 0, "first slow step with beta x in Z");
  rep.add("remains_in_Z", stays ? 1.0 : 0.0, 1.0, entered >= 0 && stays);

  // Once the nominal layer has settled, x(kN) <= ||F^(k-k0)|| ||x(k0 N)|| + envelope.
  int k0 = -1;
  for (std::size_t k = 0; k < steps && k0 < 0; ++k) {
    if (slow.block(k, "x_nominal").norm() <= 1e-6 && slow.block(k, "u_nominal").norm() <= 1e-6) {
      k0 = static_cast<int>(k);
    }
  }
  double env_excess = -kInf;
  if (k0 >= 0) {
    Matrix p = Matrix::Identity(f_l_nl.rows(), f_l_nl.cols());
    for (std::size_t k = static_cast<std::size_t>(k0); k < x_norms.size(); ++k) {
      const double bound = norm2(p) * x_norms[k0] + envelope;
      env_excess = std::max(env_excess, x_norms[k] - bound);
      p = p * f_l_nl;
    }
  }
  rep.add("settled", k0, static_cast<double>(steps), k0 >= 0, "first slow step with nominal state and input at 0");
  rep.add("envelope", env_excess, 0.0, k0 >= 0 && env_excess <= 1e-9,
          "max ||x(kN)|| - (||F^(k-k0)|| ||x(k0 N)|| + sum_h ||F^h|| rho_x)");
  const double tail = x_norms.empty() ? kInf : x_norms.back();
  rep.add("tail_within_envelope", tail, envelope, tail <= envelope, "||x|| at the end of the run");
  return rep;
}

}  // namespace hmpc
