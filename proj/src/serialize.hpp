#pragma once

#include <string>

#include "identify.hpp"
#include "regression.hpp"
#include "solver.hpp"
#include "spline.hpp"

namespace lpvbat {

std::string curve_to_json(const SplineCurve& curve);
SplineCurve curve_from_json(const std::string& text);

std::string model_to_json(const IdentifiedModel& model);
IdentifiedModel model_from_json(const std::string& text);

void save_model_json(const IdentifiedModel& model, const std::string& path);
IdentifiedModel load_model_json(const std::string& path);

std::string solver_report_to_json(const SolverReport& report);

/// Binary dump of one regression problem: a single JSON header line
/// (shape, block layout, filter cutoff, warm-up) followed by raw
/// little-endian doubles, y first, then A row-major.
void dump_problem(const RegressionProblem& problem, const std::string& path);

}  // namespace lpvbat
