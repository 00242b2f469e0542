#include "serialize.hpp"

#include <fstream>
#include <json.hpp>

#include "errors.hpp"

namespace lpvbat {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

json basis_to_json(const SplineBasis& basis) {
  return json{{"degree", basis.degree()}, {"knots", basis.knots()}};
}

SplineBasis basis_from_json(const json& j) {
  return SplineBasis(j.at("degree").get<int>(),
                     j.at("knots").get<std::vector<double>>());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    fail(ErrorCode::ParseError, std::string("invalid JSON in ") + what);
  return j;
}

}  // namespace

std::string curve_to_json(const SplineCurve& curve) {
  json j = basis_to_json(curve.basis);
  j["control_points"] = vector_to_json(curve.control_points);
  return j.dump(2);
}

SplineCurve curve_from_json(const std::string& text) {
  const json j = parse(text, "spline curve");
  SplineCurve c;
  c.basis = basis_from_json(j);
  c.control_points = vector_from_json(j.at("control_points"));
  if (c.control_points.size() != c.basis.size())
    fail(ErrorCode::ParseError, "spline curve: control point count mismatch");
  return c;
}

std::string model_to_json(const IdentifiedModel& model) {
  json j;
  j["format"] = "lpvbat-model-v1";
  j["basis"] = basis_to_json(model.basis);
  j["control_points"] = {{"a1", vector_to_json(model.c_a1)},
                         {"b0", vector_to_json(model.c_b0)},
                         {"b1", vector_to_json(model.c_b1)},
                         {"voc", vector_to_json(model.c_voc)},
                         {"a1voc", vector_to_json(model.c_a1voc)}};
  j["metadata"] = {{"nu", model.meta.nu},
                   {"lambda1", model.meta.lambda1},
                   {"lambda2", model.meta.lambda2},
                   {"lambda3", model.meta.lambda3},
                   {"lambda4", model.meta.lambda4},
                   {"perturb_sigma", model.meta.perturb_sigma},
                   {"seed", model.meta.seed},
                   {"warmup", model.meta.warmup},
                   {"dt", model.meta.dt},
                   {"capacity_ah", model.meta.capacity_ah},
                   {"z0", model.meta.z0}};
  return j.dump(2);
}

IdentifiedModel model_from_json(const std::string& text) {
  const json j = parse(text, "model");
  if (j.value("format", "") != "lpvbat-model-v1")
    fail(ErrorCode::ParseError, "model: unknown or missing format tag");
  IdentifiedModel m;
  m.basis = basis_from_json(j.at("basis"));
  const json& cp = j.at("control_points");
  m.c_a1 = vector_from_json(cp.at("a1"));
  m.c_b0 = vector_from_json(cp.at("b0"));
  m.c_b1 = vector_from_json(cp.at("b1"));
  m.c_voc = vector_from_json(cp.at("voc"));
  m.c_a1voc = vector_from_json(cp.at("a1voc"));
  const Eigen::Index h = m.basis.size();
  if (m.c_a1.size() != h || m.c_b0.size() != h || m.c_b1.size() != h ||
      m.c_voc.size() != h || m.c_a1voc.size() != h)
    fail(ErrorCode::ParseError, "model: control point count mismatch");
  const json& meta = j.at("metadata");
  m.meta.nu = meta.value("nu", 1e-3);
  m.meta.lambda1 = meta.value("lambda1", 3e-5);
  m.meta.lambda2 = meta.value("lambda2", 5e-7);
  m.meta.lambda3 = meta.value("lambda3", 5e-5);
  m.meta.lambda4 = meta.value("lambda4", 2e-5);
  m.meta.perturb_sigma = meta.value("perturb_sigma", 1e-4);
  m.meta.seed = meta.value("seed", std::uint64_t{0});
  m.meta.warmup = meta.value("warmup", 0L);
  m.meta.dt = meta.value("dt", 1.0);
  m.meta.capacity_ah = meta.value("capacity_ah", 2.0);
  m.meta.z0 = meta.value("z0", 0.8);
  return m;
}

void save_model_json(const IdentifiedModel& model, const std::string& path) {
  write_file(path, model_to_json(model) + "\n");
}

IdentifiedModel load_model_json(const std::string& path) {
  return model_from_json(read_file(path));
}

std::string solver_report_to_json(const SolverReport& report) {
  json j;
  j["converged"] = report.converged;
  j["iterations"] = report.iterations;
  j["objective"] = report.objective;
  j["primal_residual"] = report.primal_residual;
  j["dual_residual"] = report.dual_residual;
  j["objective_trace"] = report.objective_trace;
  return j.dump(2);
}

void dump_problem(const RegressionProblem& problem, const std::string& path) {
  json header;
  header["rows"] = problem.A.rows();
  header["cols"] = problem.A.cols();
  header["h"] = problem.h();
  header["blocks"] = {"F0[g v_b]", "F1[g i_b]", "F0[g i_b]", "F1[g]", "F0[g]"};
  header["nu"] = problem.svf.cutoff;
  header["dt"] = problem.svf.dt;
  header["warmup"] = problem.warmup;
  header["layout"] = "y then A row-major, float64 little-endian";

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(problem.y.data()),
            static_cast<std::streamsize>(problem.y.size() * sizeof(double)));
  for (Eigen::Index r = 0; r < problem.A.rows(); ++r) {
    const Eigen::RowVectorXd row = problem.A.row(r);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  out.flush();
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace lpvbat
