// locent_cli: batch front end. Every command writes CSV or JSON to stdout or --out.
//
// Exit codes: 0 ok, 1 unexpected error, 2 domain violation, 3 oracle tolerance
// failure, 4 ill-conditioned fit. Usage errors use CLI11's own codes.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "locent/covariance.hpp"
#include "locent/gaussian_core.hpp"
#include "locent/oracle.hpp"
#include "locent/protocols.hpp"

#ifndef LOCENT_VERSION
#define LOCENT_VERSION "0.0.0"
#endif

using json = nlohmann::ordered_json;
using namespace locent;
namespace proto = locent::protocols;

namespace {

constexpr int kExitDomain = 2;
constexpr int kExitTolerance = 3;
constexpr int kExitIllConditioned = 4;

class ToleranceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string format;
  std::string out;
  std::uint64_t seed = 1;
};

using Cell = std::variant<double, std::string, long long>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

std::string render_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << '\n';
  }
  return os.str();
}

double width_cell(const EntanglementWidth& b) {
  return b.is_infinite() ? std::numeric_limits<double>::infinity() : b.value();
}

json width_json(const EntanglementWidth& b) {
  return b.is_infinite() ? json("inf") : json(b.value());
}

json document(const std::string& command, const json& config, json results, const Common& common) {
  json echo{{"command", command}};
  echo.update(config);
  echo["format"] = common.format;
  echo["seed"] = common.seed;
  return json{{"config", echo},
              {"results", std::move(results)},
              {"metadata", {{"seed", common.seed}, {"version", LOCENT_VERSION}}}};
}

void emit(const std::string& text, const Common& common) {
  if (common.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(common.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + common.out + " for writing");
  f << text;
}

void emit(const std::string& command, const json& config, const json& results, const Table& table,
          const Common& common) {
  if (common.format == "csv") {
    emit(render_csv(table), common);
  } else {
    emit(document(command, config, results, common).dump(2) + "\n", common);
  }
}

std::vector<double> linspace(double lo, double hi, int steps) {
  if (steps < 1) throw DomainError("step count must be >= 1");
  if (steps == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) v[i] = lo + (hi - lo) * i / (steps - 1);
  return v;
}

void add_common(CLI::App* cmd, Common& common, const std::string& default_format) {
  common.format = default_format;
  cmd->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", common.out, "Write output to PATH instead of stdout");
  cmd->add_option("--seed", common.seed, "Root RNG seed (recorded in every output)");
}

// -- eof-surface --------------------------------------------------------------

struct EofSurfaceArgs {
  std::optional<double> a;
  std::optional<double> b;
  double a_min = 1.0, a_max = 10.0;
  int a_steps = 10;
  double b_min = 0.5, b_max = 10.0;
  int b_steps = 50;
};

void run_eof_surface(EofSurfaceArgs args, const Common& common) {
  if (args.a) args.a_min = args.a_max = *args.a, args.a_steps = 1;
  if (args.b) args.b_min = args.b_max = *args.b, args.b_steps = 1;
  if (!(args.a_min > 0 && args.a_max > 0 && args.b_min > 0 && args.b_max > 0)) {
    throw DomainError("a and b ranges must be positive");
  }

  Table table{{"a", "b", "eof"}, {}};
  json rows = json::array();
  for (double a : linspace(args.a_min, args.a_max, args.a_steps)) {
    for (double b : linspace(args.b_min, args.b_max, args.b_steps)) {
      const PairParams p(a, EntanglementWidth::finite(b));
      const double e = covariance::eof(covariance::standard_form(p), p.hbar());
      table.rows.push_back({a, b, e});
      rows.push_back({{"a", a}, {"b", b}, {"eof", e}});
    }
  }
  const json config{{"a-min", args.a_min}, {"a-max", args.a_max}, {"a-steps", args.a_steps},
                    {"b-min", args.b_min}, {"b-max", args.b_max}, {"b-steps", args.b_steps}};
  emit("eof-surface", config, json{{"rows", rows}}, table, common);
}

// -- simon --------------------------------------------------------------------

void run_simon(double a, const std::string& b_text, const Common& common) {
  const PairParams p(a, EntanglementWidth::parse(b_text));
  const auto general = covariance::simon_invariant_general(covariance::build_cm(p), p.hbar());
  const double closed = covariance::simon_invariant_closed(p);
  const json results{{"I_general", general.invariant_I}, {"I_closed", closed}, {"separable", general.separable}};
  const Table table{{"a", "b", "I_general", "I_closed", "separable"},
                    {{a, width_cell(p.b()), general.invariant_I, closed,
                      std::string(general.separable ? "true" : "false")}}};
  emit("simon", json{{"a", a}, {"b", width_json(p.b())}}, results, table, common);
}

// -- dispersion-curve ---------------------------------------------------------

struct CurveArgs {
  double u = 1.01;
  std::string b = "1";
  double t_min = 0.0, t_max = 10.0;
  int t_steps = 101;
  std::vector<double> times;
  double offset = 0.0;
};

void run_dispersion_curve(const CurveArgs& args, const Common& common) {
  const EntanglementWidth width = EntanglementWidth::parse(args.b);
  if (width.is_infinite()) throw DomainError("dispersion-curve needs a finite b");
  const double b = width.value();
  if (!(args.offset >= 0.0)) throw DomainError("offset must be >= 0");
  const std::vector<double> times = args.times.empty() ? linspace(args.t_min, args.t_max, args.t_steps) : args.times;
  // Validates u*b > 1 up front, even when every row falls before the offset.
  proto::entanglement_kappa(args.u, b);

  // Lab clock starts at the product state's production; the entangled pair is
  // produced `offset` later and has no dispersion before that.
  Table table{{"t", "dx_separable", "dx_entangled"}, {}};
  json rows = json::array();
  for (double t : times) {
    if (!(t >= 0.0)) throw DomainError("times must be >= 0");
    const double sep = proto::predicted_dx_separable(args.u, t);
    json row{{"t", t}, {"dx_separable", sep}, {"dx_entangled", nullptr}};
    if (t >= args.offset) {
      const double ent = proto::predicted_dx_entangled(args.u, b, t - args.offset);
      row["dx_entangled"] = ent;
      table.rows.push_back({t, sep, ent});
    } else {
      table.rows.push_back({t, sep, std::string()});
    }
    rows.push_back(row);
  }
  json results{{"rows", rows},
               {"critical_time", proto::critical_time(args.u, b)},
               {"ambiguity_time", proto::ambiguity_time(args.u, b)}};
  if (args.offset > 0.0) {
    const auto c = proto::intersection_time(args.u, b, args.offset);
    results["crossing"] = {{"lab_clock", c.lab_clock}, {"entangled_clock", c.entangled_clock}};
  } else {
    results["crossing"] = nullptr;
  }
  const json config{{"u", args.u}, {"b", b}, {"times", times}, {"offset", args.offset}};
  emit("dispersion-curve", config, results, table, common);
}

// -- protocol -----------------------------------------------------------------

struct ProtocolArgs {
  int mode = 2;
  double u = 1.01;
  std::string b = "1";
  double t0 = 0.0;
  std::vector<double> times;
  std::size_t n_samples = 10000;
  int trials = 1;
  double threshold = 3.0;
  bool noiseless = false;
};

json verdict_json(const proto::Verdict& v) {
  return {{"classification", proto::to_string(v.classification)},
          {"b_hat", width_json(v.b_hat)},
          {"confidence", v.confidence}};
}

json series_json(const proto::DispersionSeries& s) {
  json out = json::array();
  for (const auto& e : s.entries) {
    out.push_back({{"t", e.t}, {"dx_hat", e.dx_hat}, {"std_error", e.std_error}, {"n_samples", e.n_samples}});
  }
  return out;
}

json fit_json(const proto::FitOutcome& f) {
  return {{"u_hat", f.u_hat},
          {"u_std_error", f.u_std_error},
          {"alpha", f.alpha},
          {"beta", f.beta},
          {"sigma_alpha", f.sigma_alpha()},
          {"sigma_beta", f.sigma_beta()},
          {"cov_alpha_beta", f.param_cov(0, 1)},
          {"residual_rms", f.residual_rms}};
}

void run_protocol(ProtocolArgs args, const Common& common) {
  const EntanglementWidth width = EntanglementWidth::parse(args.b);
  if (args.mode != 1 && args.mode != 2) throw DomainError("mode must be 1 or 2");
  if (args.trials < 1) throw DomainError("trials must be >= 1");
  if (args.noiseless) args.trials = 1;
  const double a = width.is_infinite() ? proto::mimic_aprime(args.u) : proto::width_for_momentum(args.u, width.value());
  const proto::HiddenScenario scenario(PairParams(a, width), args.t0);

  if (args.times.empty()) {
    if (args.mode == 1) {
      args.times = {1.0};
    } else if (width.is_infinite()) {
      args.times = {0.0, 0.5, 1.0, 1.5, 2.0};
    } else {
      args.times = proto::default_time_grid(args.u, width.value(), 5);
    }
  }
  if (args.mode == 1 && args.times.size() != 1) throw DomainError("mode 1 takes exactly one measurement time");

  const proto::RngStreams streams(common.seed);
  json trials = json::array();
  Table table;
  long long counts[3] = {0, 0, 0};
  if (args.mode == 1) {
    table.header = {"trial", "classification", "b_hat", "confidence", "u_hat", "t", "dx_hat", "std_error"};
  } else {
    table.header = {"trial", "classification", "b_hat", "confidence", "u_hat", "alpha", "beta", "sigma_alpha",
                    "sigma_beta", "t0_hat"};
  }

  for (int k = 0; k < args.trials; ++k) {
    const proto::Campaign c = args.noiseless
                                  ? proto::noiseless_campaign(scenario, args.times)
                                  : proto::simulate_campaign(scenario, args.times, args.n_samples, streams,
                                                             static_cast<std::uint64_t>(k));
    json entry{{"trial", k}};
    proto::Verdict verdict{proto::Classification::inconclusive, EntanglementWidth::infinite(), 0.0};
    if (args.mode == 1) {
      // The production time is known, so the point is re-timed from production.
      proto::DispersionPoint point = c.series.entries.front();
      point.t += args.t0;
      verdict = proto::protocol1(c.u_hat, point, args.threshold);
      entry["verdict"] = verdict_json(verdict);
      entry["u_hat"] = c.u_hat;
      entry["point"] = series_json(proto::DispersionSeries{{point}}).front();
      table.rows.push_back({static_cast<long long>(k), proto::to_string(verdict.classification),
                            width_cell(verdict.b_hat), verdict.confidence, c.u_hat, point.t, point.dx_hat,
                            point.std_error});
    } else {
      const proto::Protocol2Result r = proto::protocol2(c.u_hat, c.series, args.threshold, c.u_std_error);
      verdict = r.verdict;
      entry["verdict"] = verdict_json(verdict);
      entry["fit"] = fit_json(r.fit);
      entry["t0_hat"] = r.t0_hat;
      entry["series"] = series_json(c.series);
      table.rows.push_back({static_cast<long long>(k), proto::to_string(verdict.classification),
                            width_cell(verdict.b_hat), verdict.confidence, c.u_hat, r.fit.alpha, r.fit.beta,
                            r.fit.sigma_alpha(), r.fit.sigma_beta(), r.t0_hat});
    }
    ++counts[static_cast<int>(verdict.classification)];
    trials.push_back(entry);
  }

  const json results{
      {"truth", {{"a", a}, {"b", width_json(width)}, {"u", args.u}, {"t0", args.t0}}},
      {"summary",
       {{"separable", counts[static_cast<int>(proto::Classification::separable)]},
        {"entangled", counts[static_cast<int>(proto::Classification::entangled)]},
        {"inconclusive", counts[static_cast<int>(proto::Classification::inconclusive)]}}},
      {"trials", trials}};
  const json config{{"mode", args.mode},       {"u", args.u},
                    {"b", width_json(width)},  {"t0", args.t0},
                    {"times", args.times},     {"n-samples", args.n_samples},
                    {"trials", args.trials},   {"threshold", args.threshold},
                    {"noiseless", args.noiseless}};
  emit("protocol", config, results, table, common);
}

// -- oracle-check -------------------------------------------------------------

struct OracleArgs {
  double a = 1.0;
  std::string b = "2";
  double kc = 0.0;
  std::vector<double> times{0.0, 0.5, 1.0, 2.0};
  std::size_t grid_n = 512;
  std::optional<double> grid_L;
};

constexpr double kDispersionTol = 1e-3;
constexpr double kCmTol = 1e-4;
constexpr double kCBlockTol = 1e-6;
constexpr double kNormTol = 1e-10;
constexpr double kKurtosisTol = 1e-3;

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

void run_oracle_check(const OracleArgs& args, const Common& common) {
  const PairParams p(args.a, EntanglementWidth::parse(args.b), args.kc);
  double t_max = 0.0;
  for (double t : args.times) {
    if (!(t >= 0.0)) throw DomainError("times must be >= 0");
    t_max = std::max(t_max, t);
  }
  const double L = args.grid_L.value_or(oracle::default_extent(p, t_max));
  const oracle::WaveGrid g0 = oracle::init_grid(p, args.grid_n, L);

  bool pass = true;
  const covariance::CovMatrix4 cm = oracle::numeric_cm(g0);
  const double cm_delta = (cm.full() - covariance::build_cm(p).full()).cwiseAbs().maxCoeff();
  const double c_block = cm.C.cwiseAbs().maxCoeff();
  pass = pass && cm_delta < kCmTol && (!p.is_separable() || c_block < kCBlockTol);

  Table table{{"t", "dx1_closed", "dx1_oracle", "dx1_rel", "dp1_closed", "dp1_oracle", "dp1_rel", "norm_drift",
               "kurtosis_x", "kurtosis_p", "pass"},
              {}};
  json rows = json::array();
  for (double t : args.times) {
    const oracle::WaveGrid g = oracle::evolve_free(g0, t);
    const oracle::MomentSet m = oracle::moments(g);
    const double dx_c = dx1(t, p);
    const double dx_o = std::sqrt(m.var_x1);
    const double dp_c = dp1(p);
    const double dp_o = std::sqrt(m.var_k1) * p.hbar();
    const double drift = std::abs(g.norm() - g0.norm());
    const double kx = oracle::marginal_x1(g).excess_kurtosis();
    const double kp = oracle::marginal_k1(g).excess_kurtosis();
    const bool ok = rel(dx_o, dx_c) < kDispersionTol && rel(dp_o, dp_c) < kDispersionTol && drift < kNormTol &&
                    std::abs(kx) < kKurtosisTol && std::abs(kp) < kKurtosisTol;
    pass = pass && ok;
    table.rows.push_back({t, dx_c, dx_o, rel(dx_o, dx_c), dp_c, dp_o, rel(dp_o, dp_c), drift, kx, kp,
                          std::string(ok ? "true" : "false")});
    rows.push_back({{"t", t},
                    {"dx1_closed", dx_c},
                    {"dx1_oracle", dx_o},
                    {"dx1_rel", rel(dx_o, dx_c)},
                    {"dp1_closed", dp_c},
                    {"dp1_oracle", dp_o},
                    {"dp1_rel", rel(dp_o, dp_c)},
                    {"norm_drift", drift},
                    {"kurtosis_x", kx},
                    {"kurtosis_p", kp},
                    {"pass", ok}});
  }

  const json results{{"rows", rows},
                     {"cm_max_delta", cm_delta},
                     {"c_block_max", c_block},
                     {"tolerances",
                      {{"dispersion_rel", kDispersionTol},
                       {"cm_abs", kCmTol},
                       {"c_block_abs", kCBlockTol},
                       {"norm_abs", kNormTol},
                       {"kurtosis_abs", kKurtosisTol}}},
                     {"pass", pass}};
  const json config{{"a", args.a}, {"b", width_json(p.b())}, {"kc", args.kc},
                    {"times", args.times}, {"grid-n", args.grid_n}, {"grid-L", L}};
  emit("oracle-check", config, results, table, common);
  if (!pass) throw ToleranceFailure("oracle-check: at least one tolerance was violated");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local discrimination of entangled Gaussian pairs"};
  app.set_version_flag("--version", std::string(LOCENT_VERSION));
  app.require_subcommand(1);

  Common eof_common, simon_common, curve_common, proto_common, oracle_common;

  EofSurfaceArgs eof_args;
  auto* eof_cmd = app.add_subcommand("eof-surface", "EoF over an (a, b) grid");
  eof_cmd->add_option("--a", eof_args.a, "Single a value (overrides the a range)");
  eof_cmd->add_option("--b", eof_args.b, "Single b value (overrides the b range)");
  eof_cmd->add_option("--a-min", eof_args.a_min)->capture_default_str();
  eof_cmd->add_option("--a-max", eof_args.a_max)->capture_default_str();
  eof_cmd->add_option("--a-steps", eof_args.a_steps)->capture_default_str();
  eof_cmd->add_option("--b-min", eof_args.b_min)->capture_default_str();
  eof_cmd->add_option("--b-max", eof_args.b_max)->capture_default_str();
  eof_cmd->add_option("--b-steps", eof_args.b_steps)->capture_default_str();
  add_common(eof_cmd, eof_common, "csv");

  double simon_a = 1.0;
  std::string simon_b = "2";
  auto* simon_cmd = app.add_subcommand("simon", "Simon invariant, general and closed form");
  simon_cmd->add_option("--a", simon_a)->capture_default_str();
  simon_cmd->add_option("--b", simon_b, "Entanglement width, or inf")->capture_default_str();
  add_common(simon_cmd, simon_common, "json");

  CurveArgs curve_args;
  auto* curve_cmd = app.add_subcommand("dispersion-curve", "Separable and entangled dispersion curves");
  curve_cmd->add_option("--u", curve_args.u)->capture_default_str();
  curve_cmd->add_option("--b", curve_args.b)->capture_default_str();
  curve_cmd->add_option("--t-min", curve_args.t_min)->capture_default_str();
  curve_cmd->add_option("--t-max", curve_args.t_max)->capture_default_str();
  curve_cmd->add_option("--t-steps", curve_args.t_steps)->capture_default_str();
  curve_cmd->add_option("--times", curve_args.times, "Explicit times, comma separated")->delimiter(',');
  curve_cmd->add_option("--offset", curve_args.offset, "Delay of the entangled production on the lab clock")
      ->capture_default_str();
  add_common(curve_cmd, curve_common, "csv");

  ProtocolArgs proto_args;
  auto* proto_cmd = app.add_subcommand("protocol", "Simulate Bob's discrimination protocol");
  proto_cmd->add_option("--mode", proto_args.mode, "1: known production time, 2: fitted")->capture_default_str();
  proto_cmd->add_option("--u", proto_args.u)->capture_default_str();
  proto_cmd->add_option("--b", proto_args.b)->capture_default_str();
  proto_cmd->add_option("--t0", proto_args.t0, "Production-to-first-measurement delay")->capture_default_str();
  proto_cmd->add_option("--times", proto_args.times, "Measurement times, comma separated")->delimiter(',');
  proto_cmd->add_option("--n-samples", proto_args.n_samples)->capture_default_str();
  proto_cmd->add_option("--trials", proto_args.trials)->capture_default_str();
  proto_cmd->add_option("--threshold", proto_args.threshold, "Decision threshold in sigmas")->capture_default_str();
  proto_cmd->add_flag("--noiseless", proto_args.noiseless, "Exact dispersions instead of samples");
  add_common(proto_cmd, proto_common, "json");

  OracleArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Closed forms against the grid oracle");
  oracle_cmd->add_option("--a", oracle_args.a)->capture_default_str();
  oracle_cmd->add_option("--b", oracle_args.b)->capture_default_str();
  oracle_cmd->add_option("--kc", oracle_args.kc)->capture_default_str();
  oracle_cmd->add_option("--times", oracle_args.times)->delimiter(',');
  oracle_cmd->add_option("--grid-n", oracle_args.grid_n)->capture_default_str();
  oracle_cmd->add_option("--grid-L", oracle_args.grid_L, "Grid extent (default: sized to the packet)");
  add_common(oracle_cmd, oracle_common, "json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eof_cmd) run_eof_surface(eof_args, eof_common);
    if (*simon_cmd) run_simon(simon_a, simon_b, simon_common);
    if (*curve_cmd) run_dispersion_curve(curve_args, curve_common);
    if (*proto_cmd) run_protocol(proto_args, proto_common);
    if (*oracle_cmd) run_oracle_check(oracle_args, oracle_common);
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const ToleranceFailure& e) {
    std::cerr << e.what() << '\n';
    return kExitTolerance;
  } catch (const oracle::ResolutionError& e) {
    std::cerr << "oracle resolution: " << e.what() << '\n';
    return kExitTolerance;
  } catch (const oracle::LeakageError& e) {
    std::cerr << "oracle leakage: " << e.what() << '\n';
    return kExitTolerance;
  } catch (const proto::IllConditionedError& e) {
    std::cerr << "ill-conditioned fit: " << e.what() << '\n';
    return kExitIllConditioned;
  } catch (const proto::DegenerateSampleError& e) {
    std::cerr << "degenerate sample: " << e.what() << '\n';
    return kExitIllConditioned;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
