#include "khl/json_io.hpp"

#include <set>

#include "khl/errors.hpp"

namespace khl {

using nlohmann::json;

namespace {

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(std::string(what) + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("invalid value for '") + key + "'");
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* where) {
  if (!j.is_object()) throw InputError(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items())
    if (!allowed.contains(item.key())) throw InputError(std::string("unknown key '") + item.key() + "' in " + where);
}

}  // namespace

json kernel_to_json(const KernelSpec& spec) {
  switch (spec.kind()) {
    case KernelKind::gaussian:
      return {{"kind", "gaussian"}, {"bandwidth", spec.bandwidth() ? json(*spec.bandwidth()) : json(nullptr)}};
    case KernelKind::linear:
      return {{"kind", "linear"}};
    case KernelKind::polynomial:
      return {{"kind", "polynomial"}, {"degree", spec.degree()}, {"offset", spec.offset()}};
  }
  return {};
}

KernelSpec kernel_from_json(const json& j) {
  reject_unknown(j, {"kind", "bandwidth", "degree", "offset"}, "kernel");
  const std::string kind = get_as<std::string>(j, "kind");
  if (kind == "gaussian") {
    if (!j.contains("bandwidth") || j["bandwidth"].is_null()) return KernelSpec::gaussian();
    return KernelSpec::gaussian(get_as<double>(j, "bandwidth"));
  }
  if (kind == "linear") return KernelSpec::linear();
  if (kind == "polynomial")
    return KernelSpec::polynomial(j.contains("degree") ? get_as<int>(j, "degree") : 2,
                                  j.contains("offset") ? get_as<double>(j, "offset") : 0.0);
  throw InputError("unknown kernel kind '" + kind + "'");
}

json result_to_json(const TestResult& r) {
  return {{"statistic", r.statistic},
          {"df", r.df},
          {"p_value", r.p_value},
          {"truncation", r.truncation},
          {"requested_truncation", r.requested_truncation},
          {"truncation_capped", r.truncation_capped},
          {"method", to_string(r.method)}};
}

sim::SimConfig sim_config_from_json(const json& j) {
  reject_unknown(j,
                 {"n_per_group", "dims", "mean_shift", "covariance", "kernel", "truncations", "alpha", "reps", "seed",
                  "nystrom", "threads", "record_timing"},
                 "simulation config");
  sim::SimConfig c;
  if (j.contains("n_per_group")) c.n_per_group = get_as<std::vector<Eigen::Index>>(j, "n_per_group");
  if (j.contains("dims")) c.dims = get_as<Eigen::Index>(j, "dims");
  if (j.contains("mean_shift")) {
    if (!j["mean_shift"].is_array()) throw InputError("mean_shift must be an array of vectors");
    for (const json& v : j["mean_shift"]) c.mean_shift.push_back(vector_from_json(v, "mean_shift"));
  }
  if (j.contains("covariance")) {
    const json& rows = j["covariance"];
    if (!rows.is_array() || rows.empty()) throw InputError("covariance must be a nonempty array of rows");
    c.covariance.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Eigen::VectorXd row = vector_from_json(rows[r], "covariance row");
      if (row.size() != c.covariance.cols()) throw InputError("covariance rows must have equal length");
      c.covariance.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
  }
  if (j.contains("kernel")) c.kernel = kernel_from_json(j["kernel"]);
  if (j.contains("truncations")) c.truncations = get_as<std::vector<Eigen::Index>>(j, "truncations");
  if (j.contains("alpha")) c.alpha = get_as<double>(j, "alpha");
  if (j.contains("reps")) c.reps = get_as<Eigen::Index>(j, "reps");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("threads")) c.threads = get_as<unsigned>(j, "threads");
  if (j.contains("record_timing")) c.record_timing = get_as<bool>(j, "record_timing");
  if (j.contains("nystrom") && !j["nystrom"].is_null()) {
    const json& ny = j["nystrom"];
    reject_unknown(ny, {"q_fraction", "anchors", "strategy"}, "nystrom");
    sim::NystromArm arm;
    if (ny.contains("q_fraction")) arm.q_fraction = get_as<double>(ny, "q_fraction");
    if (ny.contains("anchors")) arm.anchors = get_as<Eigen::Index>(ny, "anchors");
    if (ny.contains("strategy")) arm.strategy = parse_landmark_strategy(get_as<std::string>(ny, "strategy"));
    c.nystrom = arm;
  }
  c.validate();
  return c;
}

json sim_config_to_json(const sim::SimConfig& c) {
  json j;
  j["n_per_group"] = c.n_per_group;
  j["dims"] = c.dims;
  j["mean_shift"] = json::array();
  for (const Eigen::VectorXd& v : c.mean_shift) j["mean_shift"].push_back(vector_to_json(v));
  j["covariance"] = json::array();
  for (Eigen::Index r = 0; r < c.covariance.rows(); ++r)
    j["covariance"].push_back(vector_to_json(c.covariance.row(r).transpose()));
  j["kernel"] = kernel_to_json(c.kernel);
  j["truncations"] = c.truncations;
  j["alpha"] = c.alpha;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["record_timing"] = c.record_timing;
  if (c.nystrom)
    j["nystrom"] = {{"q_fraction", c.nystrom->q_fraction},
                    {"anchors", c.nystrom->anchors},
                    {"strategy", to_string(c.nystrom->strategy)}};
  else
    j["nystrom"] = nullptr;
  return j;
}

json sim_report_to_json(const sim::SimReport& report) {
  json rows = json::array();
  for (const sim::SimRow& r : report.rows) {
    json row = {{"truncation", r.truncation},
                {"df", r.df},
                {"rejection_rate", r.rejection_rate},
                {"ci_low", r.ci_low},
                {"ci_high", r.ci_high},
                {"q95", r.q95},
                {"q99", r.q99},
                {"chi2_q95", r.chi2_q95},
                {"chi2_q99", r.chi2_q99},
                {"ks_distance", r.ks_distance}};
    if (r.nystrom_rejection_rate) {
      row["nystrom_rejection_rate"] = *r.nystrom_rejection_rate;
      row["agreement_rate"] = *r.agreement_rate;
      row["nystrom_reps"] = r.nystrom_reps;
    }
    rows.push_back(std::move(row));
  }
  json j = {{"experiment", report.experiment},
            {"n", report.n},
            {"reps", report.reps},
            {"alpha", report.alpha},
            {"rows", std::move(rows)}};
  if (report.mean_seconds_exact) j["mean_seconds_exact"] = *report.mean_seconds_exact;
  if (report.mean_seconds_nystrom) j["mean_seconds_nystrom"] = *report.mean_seconds_nystrom;
  return j;
}

}  // namespace khl
