// Copyright 2026 The ncollapse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ncollapse/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncollapse/embedding.hpp"
#include "ncollapse/losses.hpp"
#include "ncollapse/lpm_solver.hpp"
#include "ncollapse/md_solver.hpp"
#include "ncollapse/metrics.hpp"

namespace ncollapse {

namespace {

using json = nlohmann::ordered_json;

struct Common {
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "json";
  bool strict = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("-o,--output", c.output, "Write to this file instead of stdout");
  sub->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  sub->add_flag("--strict", c.strict, "Exit with status 2 when a hypothesis is violated");
}

json common_json(const Common& c) {
  return json{{"seed", c.seed}, {"format", c.format}, {"strict", c.strict},
              {"output", c.output.empty() ? json(nullptr) : json(c.output)}};
}

json envelope(const std::string& command, json config) {
  json doc;
  doc["tool"] = "ncollapse";
  doc["version"] = kVersion;
  doc["command"] = command;
  doc["config"] = std::move(config);
  return doc;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& rows, const char* name) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw std::invalid_argument(std::string(name) + " must be a nonempty array of rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw std::invalid_argument(std::string(name) + " has ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
  }
  return m;
}

json to_json(const NcReport& r) {
  return json{{"nc1", r.nc1},
              {"variability_collapse", r.variability_collapse},
              {"equinorm_dev", r.equinorm_dev},
              {"orthogonality_dev", r.orthogonality_dev},
              {"negativity_dev", r.negativity_dev},
              {"duality_dev", r.duality_dev},
              {"duality_constant", r.duality_constant},
              {"etf_angle_dev", r.etf_angle_dev},
              {"self_duality_dev", r.self_duality_dev},
              {"ncc_agreement", r.ncc_agreement},
              {"max_deviation", r.max_deviation()}};
}

json to_json(const ClosedForm& cf) {
  return json{{"beta", cf.beta},
              {"t0", std::isfinite(cf.t0) ? json(cf.t0) : json("-inf")},
              {"w_norm", cf.w_norm},
              {"h_norm", cf.h_norm},
              {"objective_at_min", cf.objective_at_min},
              {"condition_ok", cf.condition_ok},
              {"c", cf.c},
              {"delta", cf.delta},
              {"log_argument", cf.log_argument}};
}

json to_json(const LossParams& lp) {
  return json{{"alpha", lp.alpha}, {"lambda_w", lp.lambda_w}, {"lambda_h", lp.lambda_h}};
}

void emit(const Common& c, std::ostream& out, const std::string& text) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.output, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + c.output);
  file << text;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::string csv_value(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_null()) return "nan";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// One header line and one row per entry of `rows`, preceded by comment lines
// carrying the version and the resolved config.
std::string to_csv(const json& config, const std::vector<std::string>& columns,
                   const std::vector<json>& rows) {
  std::ostringstream os;
  os << "# ncollapse " << kVersion << "\n# config: " << config.dump() << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      os << (i ? "," : "") << csv_value(row.at(columns[i]));
    os << "\n";
  }
  return os.str();
}

int worker_count() {
  if (const char* env = std::getenv("NCOLLAPSE_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------- solve-lpm

struct LpmArgs {
  Common common;
  int n = 2, k = 1;
  std::optional<int> m;
  LossParams lp{0.0, 5e-3, 5e-3};
  int restarts = 5;
  double tol = 1e-8;
  int max_iter = 200000;
  double tol_geom = 1e-3;
  double tol_norm = 1e-2;
};

void add_loss_flags(CLI::App* sub, LossParams& lp) {
  sub->add_option("--alpha", lp.alpha, "Label smoothing parameter")->capture_default_str();
  sub->add_option("--lw", lp.lambda_w, "Weight decay on W")->capture_default_str();
  sub->add_option("--lh", lp.lambda_h, "Weight decay on H")->capture_default_str();
}

int run_solve_lpm(const LpmArgs& a, std::ostream& out, std::ostream& err) {
  const int M = a.m.value_or(a.n);
  json config = common_json(a.common);
  config["n"] = a.n;
  config["k"] = a.k;
  config["m"] = M;
  config["loss"] = to_json(a.lp);
  config["restarts"] = a.restarts;
  config["tol"] = a.tol;
  config["max_iter"] = a.max_iter;
  config["tol_geom"] = a.tol_geom;
  config["tol_norm"] = a.tol_norm;

  const bool condition = closed_form_condition(a.n, a.lp);
  if (!condition) {
    err << "warning: hypothesis beta + 2 sqrt((N-1) lambda_W lambda_H) < 1 violated\n";
    if (a.common.strict) return kExitAssumption;
  }

  SolverOptions opts;
  opts.restarts = a.restarts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.seed = a.common.seed;
  const LpmSolution sol = solve_lpm(a.n, a.k, M, a.lp, opts);
  const NcReport report = nc_config_report(sol.params);

  json doc = envelope("solve-lpm", config);
  doc["solution"] = json{{"N", a.n},
                         {"K", a.k},
                         {"objective", sol.objective},
                         {"grad_norm", sol.grad_norm},
                         {"iterations", sol.iterations},
                         {"converged", sol.converged},
                         {"restarts_used", sol.restarts_used},
                         {"best_restart", sol.best_restart},
                         {"w_norm", sol.params.W.norm()},
                         {"h_norm", sol.params.H.norm()},
                         {"W", to_json(sol.params.W)},
                         {"H", to_json(sol.params.H)}};
  doc["nc_report"] = to_json(report);
  json row{{"n", a.n}, {"k", a.k}, {"m", M}, {"alpha", a.lp.alpha},
           {"lambda_w", a.lp.lambda_w}, {"lambda_h", a.lp.lambda_h},
           {"objective", sol.objective}, {"w_norm", sol.params.W.norm()},
           {"h_norm", sol.params.H.norm()}, {"converged", sol.converged},
           {"max_deviation", report.max_deviation()}};
  if (condition) {
    const ClosedForm cf = closed_form_minimizer(a.n, a.k, a.lp);
    const Theorem1Check check = verify_theorem1(sol, cf, a.lp, a.tol_geom, a.tol_norm);
    doc["closed_form"] = to_json(cf);
    doc["comparison"] = json{{"w_rel_err", check.w_rel_err},
                             {"h_rel_err", check.h_rel_err},
                             {"objective_rel_err", check.objective_rel_err},
                             {"geometry_ok", check.geometry_ok},
                             {"norms_ok", check.norms_ok},
                             {"objective_ok", check.objective_ok},
                             {"matches_closed_form", check.ok()}};
    row["w_rel_err"] = check.w_rel_err;
    row["h_rel_err"] = check.h_rel_err;
    row["matches_closed_form"] = check.ok();
  } else {
    doc["closed_form"] = nullptr;
    doc["comparison"] = nullptr;
    row["w_rel_err"] = nullptr;
    row["h_rel_err"] = nullptr;
    row["matches_closed_form"] = false;
  }
  if (a.common.format == "csv") {
    std::vector<std::string> cols;
    for (const auto& [key, value] : row.items()) cols.push_back(key);
    emit(a.common, out, to_csv(config, cols, {row}));
  } else {
    emit(a.common, out, dump(doc));
  }
  return kExitOk;
}

// ----------------------------------------------------------------- check-nc

struct CheckArgs {
  Common common;
  std::string params;
  int n = 2, k = 1;
  std::optional<int> m;
  LossParams lp{0.0, 5e-3, 5e-3};
  std::optional<double> w_norm, h_norm;
  double tol = 1e-6;
};

int run_check_nc(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  json config = common_json(a.common);
  config["loss"] = to_json(a.lp);
  config["tol"] = a.tol;
  ModelParams params;
  std::optional<ClosedForm> cf;
  if (!a.params.empty()) {
    config["params"] = a.params;
    std::ifstream in(a.params);
    if (!in) throw std::runtime_error("cannot open " + a.params);
    json doc = json::parse(in);
    const json& src = doc.contains("solution") ? doc["solution"] : doc;
    Matrix W = matrix_from_json(src.at("W"), "W");
    Matrix H = matrix_from_json(src.at("H"), "H");
    const int N = src.at("N").get<int>();
    const int K = src.at("K").get<int>();
    params = ModelParams(std::move(W), std::move(H), N, K);
  } else {
    const int M = a.m.value_or(a.n);
    config["n"] = a.n;
    config["k"] = a.k;
    config["m"] = M;
    double w = 0.0, h = 0.0;
    if (a.w_norm && a.h_norm) {
      w = *a.w_norm;
      h = *a.h_norm;
    } else {
      cf = closed_form_minimizer(a.n, a.k, a.lp);
      w = cf->w_norm;
      h = cf->h_norm;
    }
    config["w_norm"] = w;
    config["h_norm"] = h;
    params = construct_nc_config(a.n, a.k, M, w, h);
  }

  const NcReport report = nc_config_report(params);
  const bool accepted = report.accepts(a.tol);
  const double wn = params.W.norm(), hn = params.H.norm();
  json doc = envelope("check-nc", config);
  doc["nc_report"] = to_json(report);
  doc["accepted"] = accepted;
  doc["bilinear"] = json{{"P", bilinear_term(params)},
                         {"tight_bound", bilinear_tight_bound(wn, hn, params.N, params.K)},
                         {"weak_bound", bilinear_loose_bound(wn, hn, params.N, params.K)}};
  doc["objective"] = regularized_objective(params, a.lp);
  if (cf) doc["closed_form"] = to_json(*cf);
  doc["W"] = to_json(params.W);
  doc["H"] = to_json(params.H);

  if (a.common.format == "csv") {
    json row = to_json(report);
    row["accepted"] = accepted;
    row["P"] = doc["bilinear"]["P"];
    row["objective"] = doc["objective"];
    std::vector<std::string> cols;
    for (const auto& [key, value] : row.items()) cols.push_back(key);
    emit(a.common, out, to_csv(config, cols, {row}));
  } else {
    emit(a.common, out, dump(doc));
  }
  if (!accepted) {
    err << "configuration rejected: max deviation " << format_double(report.max_deviation())
        << " > " << format_double(a.tol) << "\n";
    if (a.common.strict) return kExitAssumption;
  }
  return kExitOk;
}

// ----------------------------------------------------------------- solve-md

struct MdArgs {
  Common common;
  LossParams lp{0.0, 2.5e-4, 2.5e-4};
  double eta = 1e-3;
  double c_md = 1.0;
  std::string noise = "two-point";
  int nodes = 64;
  int m = 2;
  int grid = 256;
};

void add_md_flags(CLI::App* sub, std::string& noise, int& nodes, int& grid) {
  sub->add_option("--noise", noise, "Clean-feature noise: two-point or circle")
      ->check(CLI::IsMember({"two-point", "circle"}))
      ->capture_default_str();
  sub->add_option("--nodes", nodes, "Quadrature nodes for the circle noise")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--grid", grid, "Coarse grid size for the dilation search")
      ->check(CLI::Range(3, 1000000))
      ->capture_default_str();
}

json md_row(const char* loss, double alpha, double lambda, double eta, double c_md,
            const AssumptionReport* rep, const MdSolution* sol, std::optional<bool> holds) {
  json row{{"loss", loss}, {"eta", eta}, {"alpha", alpha}, {"lambda", lambda}, {"c_md", c_md}};
  row["gamma"] = rep ? json(rep->gamma) : json(nullptr);
  row["r_star"] = sol ? json(sol->r_star) : json(nullptr);
  row["r_max"] = sol ? json(sol->r_max) : json(nullptr);
  row["normalized_dilation"] = sol ? json(sol->normalized_dilation) : json(nullptr);
  row["memorization"] = sol ? json(sol->memorization) : json(nullptr);
  row["assumption_ok"] = rep ? rep->ok() : false;
  row["theorem2_holds"] = holds ? json(*holds) : json(nullptr);
  return row;
}

const std::vector<std::string> kMdColumns = {
    "loss", "eta", "alpha", "lambda", "c_md", "gamma", "r_star", "r_max",
    "normalized_dilation", "memorization", "assumption_ok", "theorem2_holds"};

json md_solution_json(const MdProblem& p, const MdSolution& sol) {
  const auto band = dilation_band(p);
  return json{{"problem",
               {{"W", to_json(p.nc.W)},
                {"h1", to_json(Vector(p.h(0)))},
                {"h2", to_json(Vector(p.h(1)))},
                {"gap", p.gap()},
                {"lambda", p.lambda},
                {"r_max", r_max(p)}}},
              {"solution",
               {{"r_star", sol.r_star},
                {"risk", sol.risk},
                {"normalized_dilation", sol.normalized_dilation},
                {"memorization", sol.memorization},
                {"u1", to_json(sol.u1)},
                {"u2", to_json(sol.u2)},
                {"constraint_active", {sol.constraint_active.first, sol.constraint_active.second}}}},
              {"constants",
               {{"growth_g", growth_constant_g(p)},
                {"growth_f", growth_constant_f(p)},
                {"c_prime", c_prime(p)},
                {"dilation_band", {band.first, band.second}},
                {"in_dilation_band", sol.r_star >= band.first && sol.r_star <= band.second}}}};
}

int run_solve_md(const MdArgs& a, std::ostream& out, std::ostream& err) {
  json config = common_json(a.common);
  config["loss"] = to_json(a.lp);
  config["eta"] = a.eta;
  config["c_md"] = a.c_md;
  config["noise"] = a.noise;
  config["nodes"] = a.nodes;
  config["m"] = a.m;
  config["grid"] = a.grid;

  NoiseDistribution noise;
  noise.kind = parse_noise_kind(a.noise);
  noise.nodes = a.nodes;
  MdProblem p = make_md_problem(a.lp, a.eta, a.c_md, noise, a.m);
  const MdSolution sol = solve_r(p, a.grid);

  json doc = envelope("solve-md", config);
  const json parts = md_solution_json(p, sol);
  for (const auto& [key, value] : parts.items()) doc[key] = value;
  if (a.common.format == "csv") {
    json row = md_row(a.lp.alpha > 0.0 ? "ls" : "ce", a.lp.alpha, a.lp.lambda_h, a.eta,
                      a.c_md, nullptr, &sol, std::nullopt);
    row.erase("gamma");
    row.erase("assumption_ok");
    row.erase("theorem2_holds");
    std::vector<std::string> cols;
    for (const auto& [key, value] : row.items()) cols.push_back(key);
    emit(a.common, out, to_csv(config, cols, {row}));
  } else {
    emit(a.common, out, dump(doc));
  }
  (void)err;
  return kExitOk;
}

// ----------------------------------------------------------------- sweep-md

struct SweepArgs {
  Common common;
  std::string eta;
  std::string alpha0 = "0.1";
  std::string lambda = "2.5e-4";
  std::string c_md = "1";
  std::string noise = "two-point";
  int nodes = 64;
  int grid = 256;
};

struct Cell {
  double eta, alpha0, lambda, c_md;
  std::optional<Comparison> result;
  std::string error;
};

int run_sweep_md(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const auto etas = parse_range(a.eta);
  const auto alphas = parse_range(a.alpha0);
  const auto lambdas = parse_range(a.lambda);
  const auto cmds = parse_range(a.c_md);
  json config = common_json(a.common);
  config["eta"] = a.eta;
  config["alpha0"] = a.alpha0;
  config["lambda"] = a.lambda;
  config["c_md"] = a.c_md;
  config["noise"] = a.noise;
  config["nodes"] = a.nodes;
  config["grid"] = a.grid;

  NoiseDistribution noise;
  noise.kind = parse_noise_kind(a.noise);
  noise.nodes = a.nodes;

  std::vector<Cell> cells;
  for (double eta : etas)
    for (double alpha : alphas)
      for (double lambda : lambdas)
        for (double c : cmds) cells.push_back(Cell{eta, alpha, lambda, c, std::nullopt, {}});

  // Cells are independent; each worker writes only its own slot.
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& cell = cells[i];
      try {
        const LossParams ce{0.0, cell.lambda, cell.lambda};
        const LossParams ls{cell.alpha0, cell.lambda, cell.lambda};
        cell.result = compare_ce_ls(ce, ls, cell.eta, cell.c_md, noise);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const int workers = std::min<int>(worker_count(), static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  bool violated = false;
  std::vector<json> rows;
  json json_cells = json::array();
  for (const Cell& cell : cells) {
    if (!cell.result) {
      violated = true;
      err << "cell eta=" << format_double(cell.eta) << " alpha0=" << format_double(cell.alpha0)
          << " lambda=" << format_double(cell.lambda) << " c_md=" << format_double(cell.c_md)
          << ": " << cell.error << "\n";
      rows.push_back(md_row("ce", 0.0, cell.lambda, cell.eta, cell.c_md, nullptr, nullptr,
                            std::nullopt));
      rows.push_back(md_row("ls", cell.alpha0, cell.lambda, cell.eta, cell.c_md, nullptr,
                            nullptr, std::nullopt));
      json_cells.push_back(json{{"eta", cell.eta}, {"alpha0", cell.alpha0},
                                {"lambda", cell.lambda}, {"c_md", cell.c_md},
                                {"error", cell.error}});
      continue;
    }
    const Comparison& cmp = *cell.result;
    if (!cmp.report.ok()) violated = true;
    rows.push_back(md_row("ce", 0.0, cell.lambda, cell.eta, cell.c_md, &cmp.report, &cmp.ce,
                          cmp.theorem2_holds));
    rows.push_back(md_row("ls", cell.alpha0, cell.lambda, cell.eta, cell.c_md, &cmp.report,
                          &cmp.ls, cmp.theorem2_holds));
    json_cells.push_back(json{
        {"eta", cell.eta}, {"alpha0", cell.alpha0}, {"lambda", cell.lambda},
        {"c_md", cell.c_md},
        {"assumptions",
         {{"gamma", cmp.report.gamma}, {"c_tilde", cmp.report.c_tilde},
          {"eta_bound", cmp.report.eta_bound}, {"alpha_condition", cmp.report.alpha_condition},
          {"eta_condition", cmp.report.eta_condition}, {"c_prime", cmp.report.c_prime},
          {"c_prime_ls", cmp.report.c_prime_ls}}},
        {"ce", rows[rows.size() - 2]},
        {"ls", rows.back()},
        {"theorem2_holds", cmp.theorem2_holds}});
  }

  if (a.common.format == "json") {
    json doc = envelope("sweep-md", config);
    doc["cells"] = std::move(json_cells);
    emit(a.common, out, dump(doc));
  } else {
    emit(a.common, out, to_csv(config, kMdColumns, rows));
  }
  if (violated) {
    err << "warning: some cells violate the noise-level or smoothing hypotheses\n";
    if (a.common.strict) return kExitAssumption;
  }
  return kExitOk;
}

// ------------------------------------------------------------------ metrics

struct MetricsArgs {
  Common common;
  std::string features;
  std::optional<int> classes;
};

template <typename F>
json guarded(F&& f, std::vector<std::string>& notes) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    notes.push_back(e.what());
    return nullptr;
  }
}

int run_metrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
  json config = common_json(a.common);
  config["features"] = a.features;
  config["classes"] = a.classes ? json(*a.classes) : json(nullptr);
  const EmbeddingSet set = load_embeddings(a.features, a.classes);
  set.validate();

  std::vector<std::string> notes;
  json row;
  row["samples"] = set.size();
  row["dim"] = set.dim();
  row["classes"] = set.num_classes;
  row["nc1_train"] = guarded(
      [&] { return json(nc1_metric(set, Split::kTrain, LabelSource::kObserved)); }, notes);
  row["nc1_test"] = guarded(
      [&] { return json(nc1_metric(set, Split::kTest, LabelSource::kTrue)); }, notes);
  row["variability_train"] = guarded(
      [&] { return json(variability_collapse(set, Split::kTrain, LabelSource::kObserved)); },
      notes);
  row["variability_test"] = guarded(
      [&] { return json(variability_collapse(set, Split::kTest, LabelSource::kTrue)); }, notes);
  json geometry = nullptr;
  std::optional<Memorization> mem;
  try {
    const ClassStats test = class_stats(set, Split::kTest, LabelSource::kTrue);
    mem = memorization(set, test);
    const MeanGeometry g = mean_geometry(test.class_means);
    geometry = json{{"equinorm_dev", g.equinorm_dev},
                    {"orthogonality_dev", g.orthogonality_dev},
                    {"negativity_dev", g.negativity_dev},
                    {"etf_angle_dev", g.etf_angle_dev}};
  } catch (const std::invalid_argument& e) {
    notes.push_back(e.what());
  }
  row["mem"] = mem ? json(mem->total) : json(nullptr);
  row["mem_per_sample"] = mem ? json(mem->per_sample()) : json(nullptr);
  row["corrupted_train"] = mem ? json(mem->corrupted_count) : json(nullptr);

  for (const auto& n : notes) err << "note: " << n << "\n";
  if (a.common.format == "csv") {
    std::vector<std::string> cols;
    for (const auto& [key, value] : row.items()) cols.push_back(key);
    emit(a.common, out, to_csv(config, cols, {row}));
  } else {
    json doc = envelope("metrics", config);
    doc["metrics"] = row;
    doc["test_mean_geometry"] = geometry;
    doc["notes"] = notes;
    emit(a.common, out, dump(doc));
  }
  return kExitOk;
}

}  // namespace

std::vector<double> parse_range(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number '" + s + "' in range '" + text + "'");
    }
    if (used != s.size() || !std::isfinite(v))
      throw std::invalid_argument("bad number '" + s + "' in range '" + text + "'");
    return v;
  };
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() == 1 && !text.empty()) return {number(parts[0])};
  if (parts.size() != 3)
    throw std::invalid_argument("range must be start:stop:step, got '" + text + "'");
  const double start = number(parts[0]);
  const double stop = number(parts[1]);
  const double step = number(parts[2]);
  if (!(step > 0.0)) throw std::invalid_argument("range step must be positive");
  if (stop < start) throw std::invalid_argument("range stop is below start");
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> values;
  for (long i = 0; i < count; ++i) values.push_back(start + static_cast<double>(i) * step);
  return values;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural collapse under label smoothing: layer-peeled and "
               "memorization-dilation solvers",
               "ncollapse"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  LpmArgs lpm;
  auto* s_lpm = app.add_subcommand("solve-lpm", "Solve the regularized layer-peeled problem");
  add_common(s_lpm, lpm.common);
  s_lpm->add_option("--n", lpm.n, "Number of classes")->check(CLI::Range(2, 100000))->capture_default_str();
  s_lpm->add_option("--k", lpm.k, "Samples per class")->check(CLI::PositiveNumber)->capture_default_str();
  s_lpm->add_option("--m", lpm.m, "Feature dimension (default N)")->check(CLI::PositiveNumber);
  add_loss_flags(s_lpm, lpm.lp);
  s_lpm->add_option("--restarts", lpm.restarts, "Random restarts")->check(CLI::PositiveNumber)->capture_default_str();
  s_lpm->add_option("--tol", lpm.tol, "Projected-gradient tolerance")->capture_default_str();
  s_lpm->add_option("--max-iter", lpm.max_iter, "Iterations per restart")->check(CLI::PositiveNumber)->capture_default_str();
  s_lpm->add_option("--tol-geom", lpm.tol_geom, "NC deviation tolerance")->capture_default_str();
  s_lpm->add_option("--tol-norm", lpm.tol_norm, "Relative norm tolerance")->capture_default_str();

  CheckArgs chk;
  auto* s_chk = app.add_subcommand("check-nc", "Report distances from an NC configuration");
  add_common(s_chk, chk.common);
  s_chk->add_option("--params", chk.params, "JSON with N, K, W, H (or a solve-lpm output)")
      ->check(CLI::ExistingFile);
  s_chk->add_option("--n", chk.n, "Classes of the constructed configuration")->check(CLI::Range(2, 100000))->capture_default_str();
  s_chk->add_option("--k", chk.k, "Samples per class")->check(CLI::PositiveNumber)->capture_default_str();
  s_chk->add_option("--m", chk.m, "Feature dimension (default N)")->check(CLI::PositiveNumber);
  add_loss_flags(s_chk, chk.lp);
  auto* w_opt = s_chk->add_option("--w-norm", chk.w_norm, "||W|| of the constructed configuration");
  auto* h_opt = s_chk->add_option("--h-norm", chk.h_norm, "||H|| of the constructed configuration");
  w_opt->needs(h_opt);
  h_opt->needs(w_opt);
  s_chk->add_option("--tol", chk.tol, "Acceptance tolerance")->capture_default_str();

  MdArgs md;
  auto* s_md = app.add_subcommand("solve-md", "Solve one memorization-dilation instance");
  add_common(s_md, md.common);
  add_loss_flags(s_md, md.lp);
  s_md->add_option("--eta", md.eta, "Label noise level")->capture_default_str();
  s_md->add_option("--c-md", md.c_md, "Memorization-dilation slope")->capture_default_str();
  s_md->add_option("--m", md.m, "Feature dimension")->check(CLI::Range(2, 100000))->capture_default_str();
  add_md_flags(s_md, md.noise, md.nodes, md.grid);

  SweepArgs sw;
  sw.common.format = "csv";
  auto* s_sw = app.add_subcommand("sweep-md", "Compare CE and LS dilations over a grid");
  add_common(s_sw, sw.common);
  s_sw->add_option("--eta", sw.eta, "Noise levels, start:stop:step or a value")->required();
  s_sw->add_option("--alpha0", sw.alpha0, "LS smoothing values")->capture_default_str();
  s_sw->add_option("--lambda", sw.lambda, "Weight decay (lambda_W = lambda_H)")->capture_default_str();
  s_sw->add_option("--c-md", sw.c_md, "Memorization-dilation slopes")->capture_default_str();
  add_md_flags(s_sw, sw.noise, sw.nodes, sw.grid);

  MetricsArgs mt;
  auto* s_mt = app.add_subcommand("metrics", "NC1 and memorization of a feature CSV");
  add_common(s_mt, mt.common);
  s_mt->add_option("--features", mt.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  s_mt->add_option("--classes", mt.classes, "Class count (default: largest label)")
      ->check(CLI::Range(2, 1000000));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    if (s_lpm->parsed()) return run_solve_lpm(lpm, out, err);
    if (s_chk->parsed()) return run_check_nc(chk, out, err);
    if (s_md->parsed()) return run_solve_md(md, out, err);
    if (s_sw->parsed()) return run_sweep_md(sw, out, err);
    if (s_mt->parsed()) return run_metrics(mt, out, err);
  } catch (const ConditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace ncollapse
