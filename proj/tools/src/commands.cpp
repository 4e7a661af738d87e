#include "khl_cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "khl/diagnostics.hpp"
#include "khl/errors.hpp"
#include "khl/json_io.hpp"
#include "khl/model.hpp"
#include "khl/nystrom.hpp"
#include "khl/sim.hpp"
#include "khl_cli/table.hpp"

namespace khl::cli {

namespace {

using nlohmann::json;

struct RunConfig {
  std::string data_path;
  std::vector<std::string> factors;
  std::string contrast;
  std::string kernel = "gaussian";
  std::optional<double> bandwidth;
  int degree = 2;
  double offset = 0.0;
  std::vector<Eigen::Index> truncations{5};
  double alpha = 0.05;
  std::optional<Eigen::Index> landmarks;
  std::optional<Eigen::Index> anchors;
  std::string strategy = "uniform";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  std::string newdata;
  Eigen::Index axes = 0;
  std::string config_path;
  std::string reps_out;
  std::optional<unsigned> threads;
};

struct Loaded {
  Table table;
  Eigen::MatrixXd y;
  std::vector<std::string> responses;
  DesignBundle design;
  KernelSpec spec = KernelSpec::linear();
  GramMatrix gram;
};

struct ContrastChoice {
  ContrastMatrix l;
  json description;
  std::string factor;  ///< factor under test; empty for custom contrasts on multi-factor designs
};

KernelSpec kernel_spec(const RunConfig& c) {
  if (c.kernel == "gaussian") return KernelSpec::gaussian(c.bandwidth);
  if (c.kernel == "linear") return KernelSpec::linear();
  if (c.kernel == "polynomial") return KernelSpec::polynomial(c.degree, c.offset);
  throw InputError("unknown kernel '" + c.kernel + "'");
}

Loaded load(const RunConfig& c) {
  if (c.factors.empty()) throw InputError("--factors is required");
  if (c.factors.size() > 2) throw InputError("at most two factors are supported");
  for (Eigen::Index t : c.truncations)
    if (t < 1) throw InputError("truncations must be >= 1");
  Loaded d;
  d.table = read_table(c.data_path);
  d.y = response_matrix(d.table, &d.responses);
  if (c.factors.size() == 1) {
    d.design = one_way_design(d.table.strings(c.factors[0]), c.factors[0]);
  } else {
    d.design = two_way_additive_design(d.table.strings(c.factors[0]), d.table.strings(c.factors[1]), c.factors[0],
                                       c.factors[1]);
  }
  d.spec = resolve_bandwidth(kernel_spec(c), d.y);
  d.gram = gram(d.y, d.spec);
  return d;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ContrastChoice resolve_contrast(const RunConfig& c, const DesignBundle& design) {
  const std::string spec = c.contrast.empty() ? "global:" + c.factors.back() : c.contrast;
  const std::vector<std::string> parts = split(spec, ':');
  if (parts.empty()) throw InputError("empty --contrast");
  if (parts[0] == "global" && parts.size() == 2) {
    ContrastMatrix l = factor_contrast(design, parts[1]);
    json desc = {{"type", "global"}, {"factor", parts[1]}, {"d", l.d()}};
    return {std::move(l), std::move(desc), parts[1]};
  }
  if (parts[0] == "pair" && parts.size() == 4) {
    const Factor& f = design.factor(parts[1]);
    ContrastMatrix l = level_pair_contrast(f, f.level_index(parts[2]), f.level_index(parts[3]), design.p());
    json desc = {{"type", "pair"}, {"factor", parts[1]}, {"level_a", parts[2]}, {"level_b", parts[3]}, {"d", 1}};
    return {std::move(l), std::move(desc), parts[1]};
  }
  if (parts[0] == "custom" && parts.size() >= 2) {
    const std::string path = spec.substr(std::string("custom:").size());
    ContrastMatrix l(read_numeric_matrix(path));
    if (l.p() != design.p())
      throw InputError("custom contrast has " + std::to_string(l.p()) + " columns, the design has " +
                       std::to_string(design.p()));
    json desc = {{"type", "custom"}, {"path", path}, {"d", l.d()}, {"matrix", matrix_json(l.matrix())}};
    return {std::move(l), std::move(desc), c.factors.size() == 1 ? c.factors[0] : std::string()};
  }
  throw InputError("invalid --contrast '" + spec + "' (use global:<factor>, pair:<factor>:<a>:<b> or custom:<csv>)");
}

void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (c.out.empty() || c.out == "-") {
    out << text;
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw InputError("cannot write '" + c.out + "'");
  file << text;
}

json result_json(const TestResult& r, double alpha) {
  json j = result_to_json(r);
  j["reject"] = r.p_value < alpha;
  return j;
}

int cmd_test(const RunConfig& c, std::ostream& out) {
  const Loaded d = load(c);
  const ContrastChoice contrast = resolve_contrast(c, d.design);
  Eigen::Index t_max = 0;
  for (Eigen::Index t : c.truncations) t_max = std::max(t_max, t);
  const FittedModel model = fit(d.gram, d.design);

  std::vector<TestResult> results;
  for (Eigen::Index t : c.truncations) results.push_back(tkhl_test(model, contrast.l, t));

  json nystrom_info;
  if (c.landmarks) {
    const Eigen::Index n = d.y.rows();
    std::vector<Eigen::Index> groups;
    if (!contrast.factor.empty()) groups = d.design.factor(contrast.factor).codes;
    const LandmarkStrategy strategy = parse_landmark_strategy(c.strategy);
    const std::uint64_t seed = c.seed.value_or(0);
    const LandmarkPlan plan = sample_landmarks(n, *c.landmarks, groups.empty() ? nullptr : &groups, strategy, seed);
    const DesignBundle landmark_design = d.design.subset(plan.indices);
    const Eigen::Index m = c.anchors.value_or(default_anchor_count(plan.q, landmark_design.rank()));
    const NystromModel ny = nystrom_fit(plan, d.gram.submatrix(plan.indices), d.gram.rows(plan.indices), d.design, m);
    for (Eigen::Index t : c.truncations) results.push_back(nystrom_test(ny, contrast.l, t));
    nystrom_info = {{"landmarks", plan.q},   {"anchors", m},
                    {"strategy", c.strategy}, {"seed", seed},
                    {"lost_columns", ny.anchors.lost_columns}};
  }

  if (c.format == "csv") {
    std::ostringstream csv;
    csv << "method,truncation,requested_truncation,truncation_capped,statistic,df,p_value,reject\n";
    for (const TestResult& r : results)
      csv << to_string(r.method) << ',' << r.truncation << ',' << r.requested_truncation << ','
          << (r.truncation_capped ? "true" : "false") << ',' << format_double(r.statistic) << ',' << r.df << ','
          << format_double(r.p_value) << ',' << (r.p_value < c.alpha ? "true" : "false") << '\n';
    emit(c, csv.str(), out);
    return kExitOk;
  }

  json j = {{"command", "test"},
            {"n", d.y.rows()},
            {"responses", d.responses},
            {"factors", c.factors},
            {"kernel", kernel_to_json(d.spec)},
            {"contrast", contrast.description},
            {"alpha", c.alpha},
            {"residual_rank", model.rank()}};
  j["results"] = json::array();
  for (const TestResult& r : results) j["results"].push_back(result_json(r, c.alpha));
  if (!nystrom_info.is_null()) j["nystrom"] = nystrom_info;
  emit(c, j.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_pairwise(const RunConfig& c, std::ostream& out) {
  const Loaded d = load(c);
  std::string factor = c.factors.back();
  if (!c.contrast.empty()) {
    const std::vector<std::string> parts = split(c.contrast, ':');
    if (parts.size() != 2 || parts[0] != "global")
      throw InputError("pairwise accepts only --contrast global:<factor>");
    factor = parts[1];
  }
  const FittedModel model = fit(d.gram, d.design);
  const Factor& f = d.design.factor(factor);

  std::ostringstream csv;
  csv << "truncation,level_a,level_b,statistic,df,p_value,adjusted_p,truncation_capped\n";
  json tables = json::array();
  for (Eigen::Index t : c.truncations) {
    const std::vector<PairwiseResult> pairs = pairwise_tests(model, factor, t);
    Eigen::MatrixXd stat = Eigen::MatrixXd::Zero(f.level_count(), f.level_count());
    json rows = json::array();
    for (const PairwiseResult& p : pairs) {
      stat(p.index_a, p.index_b) = stat(p.index_b, p.index_a) = p.result.statistic;
      json row = result_json(p.result, c.alpha);
      row["level_a"] = p.level_a;
      row["level_b"] = p.level_b;
      row["adjusted_p"] = p.adjusted_p;
      row["reject_adjusted"] = p.adjusted_p < c.alpha;
      rows.push_back(std::move(row));
      csv << t << ',' << p.level_a << ',' << p.level_b << ',' << format_double(p.result.statistic) << ','
          << p.result.df << ',' << format_double(p.result.p_value) << ',' << format_double(p.adjusted_p) << ','
          << (p.result.truncation_capped ? "true" : "false") << '\n';
    }
    tables.push_back({{"truncation", t}, {"pairs", std::move(rows)}, {"statistic_matrix", matrix_json(stat)}});
  }
  if (c.format == "csv") {
    emit(c, csv.str(), out);
    return kExitOk;
  }
  json j = {{"command", "pairwise"}, {"n", d.y.rows()},        {"factor", factor},
            {"levels", f.levels},    {"kernel", kernel_to_json(d.spec)}, {"alpha", c.alpha},
            {"tables", std::move(tables)}};
  emit(c, j.dump(2) + "\n", out);
  return kExitOk;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot write '" + path.string() + "'");
  file << text;
}

std::string table_csv(const Eigen::MatrixXd& values, const std::string& prefix, const Loaded& d,
                      const std::vector<std::string>& factors) {
  std::ostringstream csv;
  csv << "obs_id";
  for (const std::string& f : factors) csv << ',' << f;
  for (Eigen::Index j = 0; j < values.cols(); ++j) csv << ',' << prefix << (values.cols() == 1 && prefix == "cook" ? "" : std::to_string(j + 1));
  csv << '\n';
  std::vector<std::vector<std::string>> labels;
  for (const std::string& f : factors) labels.push_back(d.table.strings(f));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    csv << i;
    for (const auto& col : labels) csv << ',' << col[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) csv << ',' << format_double(values(i, j));
    csv << '\n';
  }
  return csv.str();
}

int cmd_diagnostics(const RunConfig& c, std::ostream& out) {
  if (c.out.empty()) throw InputError("diagnostics needs --out <directory>");
  const Loaded d = load(c);
  const ContrastChoice contrast = resolve_contrast(c, d.design);
  const FittedModel model = fit(d.gram, d.design);
  const Eigen::Index requested = c.truncations.front();
  const Eigen::Index t = std::min(requested, model.rank());

  const std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  json files = json::array();
  auto save = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    files.push_back(name);
  };

  const DiagnosticsBundle tables = projection_tables(model, t);
  save("response_projection.csv", table_csv(tables.response_proj, "t", d, c.factors));
  save("residual_projection.csv", table_csv(tables.residual_proj, "t", d, c.factors));
  save("prediction_projection.csv", table_csv(tables.prediction_proj, "t", d, c.factors));

  const DiscriminantAxes axes = discriminant_coordinates(model, contrast.l, t, c.axes);
  save("discriminant.csv", table_csv(axes.sample_coords, "axis", d, c.factors));
  save("cook.csv", table_csv(cook_distances(model, contrast.l, t), "cook", d, {c.factors}));

  if (!c.newdata.empty()) {
    const Table fresh = read_table(c.newdata);
    std::vector<std::string> names;
    const Eigen::MatrixXd y0 = response_matrix(fresh, &names);
    if (names != d.responses) throw InputError("--newdata must have the same y_ columns as --data");
    const Eigen::MatrixXd coords = axes.project(cross_gram(d.y, y0, d.spec));
    std::ostringstream csv;
    csv << "obs_id";
    for (Eigen::Index j = 0; j < coords.cols(); ++j) csv << ",axis" << j + 1;
    csv << '\n';
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
      csv << i;
      for (Eigen::Index j = 0; j < coords.cols(); ++j) csv << ',' << format_double(coords(i, j));
      csv << '\n';
    }
    save("newdata_discriminant.csv", csv.str());
  }

  json summary = {{"command", "diagnostics"},
                  {"n", d.y.rows()},
                  {"kernel", kernel_to_json(d.spec)},
                  {"contrast", contrast.description},
                  {"truncation", t},
                  {"requested_truncation", requested},
                  {"truncation_capped", t < requested},
                  {"axes", axes.axes},
                  {"axis_eigenvalues", std::vector<double>(axes.axis_eigvals.data(),
                                                           axes.axis_eigvals.data() + axes.axis_eigvals.size())},
                  {"dropped_axes", axes.dropped_axes},
                  {"directory", dir.string()},
                  {"files", files}};
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  if (c.config_path.empty()) throw InputError("simulate needs --config <file.json>");
  std::ifstream in(c.config_path);
  if (!in) throw InputError("cannot open '" + c.config_path + "'");
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid JSON in simulation config: ") + e.what());
  }
  sim::SimConfig config = sim_config_from_json(raw);
  if (c.seed) config.seed = *c.seed;
  if (c.threads) config.threads = *c.threads;

  bool null = true;
  for (const Eigen::VectorXd& v : config.mean_shift) null = null && v.isZero(0.0);
  const sim::SimReport report = null ? sim::run_level_experiment(config) : sim::run_power_experiment(config);

  json j = sim_report_to_json(report);
  j["config"] = sim_config_to_json(config);
  emit(c, j.dump(2) + "\n", out);
  if (!c.reps_out.empty()) write_file(c.reps_out, sim::records_csv(report, config));
  return kExitOk;
}

void add_data_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--data", c.data_path, "CSV with a header row; response columns start with y_")->required();
  sub->add_option("--factors", c.factors, "Factor column names (one or two)")->delimiter(',')->required();
  sub->add_option("--contrast", c.contrast, "global:<factor> | pair:<factor>:<a>:<b> | custom:<csv>");
  sub->add_option("--kernel", c.kernel, "gaussian | linear | polynomial")
      ->check(CLI::IsMember({"gaussian", "linear", "polynomial"}));
  sub->add_option("--bandwidth", c.bandwidth, "Gaussian bandwidth (default: median heuristic)");
  sub->add_option("--degree", c.degree, "Polynomial degree");
  sub->add_option("--offset", c.offset, "Polynomial offset");
  sub->add_option("--truncation", c.truncations, "Truncation T (comma-separated list allowed)")->delimiter(',');
  sub->add_option("--alpha", c.alpha, "Nominal level for the reject flags");
  sub->add_option("--seed", c.seed, "Seed for landmark sampling");
  sub->add_option("--out", c.out, "Output file (directory for diagnostics)");
  sub->add_option("--format", c.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Kernel Hotelling-Lawley tests for designed experiments", "khl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CLI::App* test = app.add_subcommand("test", "Global or single-contrast TKHL test");
  add_data_options(test, c);
  test->add_option("--nystrom-landmarks", c.landmarks, "Also run the Nystrom test with q landmarks");
  test->add_option("--nystrom-anchors", c.anchors, "Number of Nystrom anchors m");
  test->add_option("--nystrom-strategy", c.strategy, "uniform | stratified")
      ->check(CLI::IsMember({"uniform", "stratified"}));

  CLI::App* pairwise = app.add_subcommand("pairwise", "All level pairs of one factor with BH adjustment");
  add_data_options(pairwise, c);

  CLI::App* diagnostics = app.add_subcommand("diagnostics", "Projection tables, discriminant axes, Cook distances");
  add_data_options(diagnostics, c);
  diagnostics->add_option("--newdata", c.newdata, "CSV of new observations to place on the discriminant axes");
  diagnostics->add_option("--axes", c.axes, "Number of discriminant axes (default min(T, d))");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo level / power experiment");
  simulate->add_option("--config", c.config_path, "Simulation config (JSON)")->required();
  simulate->add_option("--out", c.out, "Report file (JSON, default stdout)");
  simulate->add_option("--reps-out", c.reps_out, "Per-replicate CSV");
  simulate->add_option("--seed", c.seed, "Override the config seed");
  simulate->add_option("--threads", c.threads, "Worker threads (0 = all cores)");

  auto fail = [&](const std::string& kind, const std::string& message, int code) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitValidation);
  }

  try {
    if (test->parsed()) return cmd_test(c, out);
    if (pairwise->parsed()) return cmd_pairwise(c, out);
    if (diagnostics->parsed()) return cmd_diagnostics(c, out);
    return cmd_simulate(c, out);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), e.category() == ErrorCategory::validation ? kExitValidation : kExitNumerical);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("input", e.what(), kExitValidation);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kExitNumerical);
  }
}

}  // namespace khl::cli
