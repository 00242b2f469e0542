#include "../include/lpvbat.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <new>
#include <span>
#include <string>

#include "csv_io.hpp"
#include "dataset.hpp"
#include "ecm.hpp"
#include "errors.hpp"
#include "fmrls.hpp"
#include "identify.hpp"
#include "metrics.hpp"
#include "serialize.hpp"

using namespace lpvbat;

extern "C" {

struct lpvbat_truth {
  EcmTruth truth;
};
struct lpvbat_profile {
  CurrentProfile profile;
};
struct lpvbat_dataset {
  SampledDataset data;
};
struct lpvbat_model {
  IdentifiedModel model;
};
struct lpvbat_result {
  IdentifyResult result;
};
struct lpvbat_fmrls {
  FmrlsResult result;
  std::vector<double> valid_as_double;
};
struct lpvbat_table {
  CsvTable table;
};

}  // extern "C"

namespace {

thread_local std::string g_last_error;

lpvbat_status status_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ParseError:
      return LPVBAT_ERR_PARSE;
    case ErrorCode::IoError:
      return LPVBAT_ERR_IO;
    case ErrorCode::RankDeficient:
    case ErrorCode::NonpositiveTimeConstant:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::SocOutOfRange:
      return LPVBAT_ERR_NUMERIC;
    default:
      return LPVBAT_ERR_ARGUMENT;
  }
}

template <typename Fn>
lpvbat_status guarded(Fn&& fn) {
  try {
    fn();
    return LPVBAT_OK;
  } catch (const Error& e) {
    g_last_error = std::string(error_code_name(e.code())) + ": " + e.what();
    return status_of(e);
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LPVBAT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LPVBAT_ERR_INTERNAL;
  }
}

lpvbat_status require(bool ok, const char* msg) {
  if (ok) return LPVBAT_OK;
  g_last_error = msg;
  return LPVBAT_ERR_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

PipelineConfig to_pipeline(const lpvbat_config& cfg) {
  PipelineConfig pc;
  pc.n_segments = cfg.n_segments;
  pc.nu = cfg.nu;
  pc.lambda1 = cfg.lambda1;
  pc.lambda2 = cfg.lambda2;
  pc.lambda3 = cfg.lambda3;
  pc.lambda4 = cfg.lambda4;
  pc.perturb_sigma = cfg.perturb_sigma;
  pc.seed = cfg.seed;
  pc.warmup_override = cfg.warmup_override;
  pc.perturb_all_blocks = cfg.perturb_all_blocks != 0;
  pc.z0 = cfg.z0;
  pc.capacity_ah = cfg.capacity_ah;
  pc.basis_z_min = cfg.basis_z_min;
  pc.basis_z_max = cfg.basis_z_max;
  pc.solver.tol = cfg.solver_tol;
  pc.solver.max_iter = static_cast<int>(cfg.solver_max_iter);
  return pc;
}

}  // namespace

extern "C" {

const char* lpvbat_last_error(void) { return g_last_error.c_str(); }
const char* lpvbat_version(void) { return "0.1.0"; }

void lpvbat_string_free(char* s) { std::free(s); }
void lpvbat_buffer_free(double* p) { std::free(p); }

/* ---- truth ---- */

lpvbat_status lpvbat_truth_default(double capacity_ah, lpvbat_truth** out) {
  if (auto rc = require(out != nullptr, "null output pointer")) return rc;
  return guarded([&] { *out = new lpvbat_truth{default_truth(capacity_ah)}; });
}

lpvbat_status lpvbat_truth_constant(double r0, double r1, double tau1,
                                    double voc, double capacity_ah,
                                    lpvbat_truth** out) {
  if (auto rc = require(out != nullptr, "null output pointer")) return rc;
  return guarded(
      [&] { *out = new lpvbat_truth{constant_truth(r0, r1, tau1, voc, capacity_ah)}; });
}

lpvbat_status lpvbat_truth_eval(const lpvbat_truth* t, double z,
                                double out4[4]) {
  if (auto rc = require(t && out4, "null pointer")) return rc;
  return guarded([&] {
    out4[0] = t->truth.r0(z);
    out4[1] = t->truth.r1(z);
    out4[2] = t->truth.tau1(z);
    out4[3] = t->truth.voc(z);
  });
}

lpvbat_status lpvbat_truth_capacity(const lpvbat_truth* t, double* out) {
  if (auto rc = require(t && out, "null pointer")) return rc;
  *out = t->truth.capacity_ah;
  return LPVBAT_OK;
}

lpvbat_status lpvbat_truth_write_csv(const lpvbat_truth* t, double z_lo,
                                     double z_hi, int n_points,
                                     const char* path) {
  if (auto rc = require(t && path, "null pointer")) return rc;
  if (auto rc = require(n_points >= 2 && z_lo < z_hi, "bad truth grid")) return rc;
  return guarded([&] {
    std::vector<double> grid(n_points);
    for (int k = 0; k < n_points; ++k)
      grid[k] = z_lo + (z_hi - z_lo) * k / static_cast<double>(n_points - 1);
    write_truth_csv(t->truth, grid, path);
  });
}

void lpvbat_truth_free(lpvbat_truth* t) { delete t; }

/* ---- profiles ---- */

lpvbat_status lpvbat_profile_dst(double duration_s, double scale,
                                 lpvbat_profile** out) {
  if (auto rc = require(out != nullptr, "null output pointer")) return rc;
  return guarded([&] { *out = new lpvbat_profile{dst_profile(duration_s, scale)}; });
}

lpvbat_status lpvbat_profile_constant(double duration_s, double amps,
                                      lpvbat_profile** out) {
  if (auto rc = require(out != nullptr, "null output pointer")) return rc;
  return guarded(
      [&] { *out = new lpvbat_profile{constant_profile(duration_s, amps)}; });
}

lpvbat_status lpvbat_profile_prbs(double duration_s, double amplitude,
                                  double base_step_s, uint64_t seed,
                                  lpvbat_profile** out) {
  if (auto rc = require(out != nullptr, "null output pointer")) return rc;
  return guarded([&] {
    *out = new lpvbat_profile{prbs_profile(duration_s, amplitude, base_step_s, seed)};
  });
}

lpvbat_status lpvbat_profile_duration(const lpvbat_profile* p, double* out) {
  if (auto rc = require(p && out, "null pointer")) return rc;
  *out = p->profile.duration();
  return LPVBAT_OK;
}

double lpvbat_dst_cycle_charge_as(void) { return dst_cycle_charge_as(); }

void lpvbat_profile_free(lpvbat_profile* p) { delete p; }

/* ---- datasets ---- */

lpvbat_status lpvbat_simulate(const lpvbat_truth* truth,
                              const lpvbat_profile* profile, double z0,
                              double dt, double noise_std, uint64_t seed,
                              lpvbat_dataset** out) {
  if (auto rc = require(truth && profile && out, "null pointer")) return rc;
  return guarded([&] {
    SimulateOptions opts;
    opts.z0 = z0;
    opts.dt = dt;
    opts.noise_std = noise_std;
    opts.seed = seed;
    *out = new lpvbat_dataset{simulate(truth->truth, profile->profile, opts)};
  });
}

lpvbat_status lpvbat_dataset_read_csv(const char* path,
                                      const lpvbat_csv_options* options,
                                      lpvbat_dataset** out) {
  if (auto rc = require(path && out, "null pointer")) return rc;
  return guarded([&] {
    DatasetReadOptions opts;
    if (options) {
      if (options->time_column) opts.column_map["t"] = options->time_column;
      if (options->current_column) opts.column_map["i_b"] = options->current_column;
      if (options->voltage_column) opts.column_map["v_b"] = options->voltage_column;
      if (options->soc_column) opts.column_map["z"] = options->soc_column;
      if (options->soc_true_column)
        opts.column_map["z_true"] = options->soc_true_column;
      opts.discharge_positive = options->discharge_positive != 0;
    }
    *out = new lpvbat_dataset{read_dataset_csv(path, opts)};
  });
}

lpvbat_status lpvbat_dataset_write_csv(const lpvbat_dataset* ds,
                                       const char* path) {
  if (auto rc = require(ds && path, "null pointer")) return rc;
  return guarded([&] { write_dataset_csv(ds->data, path); });
}

lpvbat_status lpvbat_dataset_size(const lpvbat_dataset* ds, size_t* out) {
  if (auto rc = require(ds && out, "null pointer")) return rc;
  *out = ds->data.size();
  return LPVBAT_OK;
}

lpvbat_status lpvbat_dataset_dt(const lpvbat_dataset* ds, double* out) {
  if (auto rc = require(ds && out, "null pointer")) return rc;
  *out = ds->data.dt;
  return LPVBAT_OK;
}

lpvbat_status lpvbat_dataset_column(const lpvbat_dataset* ds,
                                    lpvbat_column which, const double** data,
                                    size_t* len) {
  if (auto rc = require(ds && data && len, "null pointer")) return rc;
  const std::vector<double>* col = nullptr;
  switch (which) {
    case LPVBAT_COL_TIME: col = &ds->data.t; break;
    case LPVBAT_COL_CURRENT: col = &ds->data.i_b; break;
    case LPVBAT_COL_VOLTAGE: col = &ds->data.v_b; break;
    case LPVBAT_COL_SOC: col = &ds->data.z; break;
    case LPVBAT_COL_SOC_TRUE: col = &ds->data.z_true; break;
  }
  if (!col || col->empty()) {
    g_last_error = "dataset column not present";
    return LPVBAT_ERR_ARGUMENT;
  }
  *data = col->data();
  *len = col->size();
  return LPVBAT_OK;
}

lpvbat_status lpvbat_dataset_fill_soc(lpvbat_dataset* ds, double z0,
                                      double capacity_ah) {
  if (auto rc = require(ds != nullptr, "null pointer")) return rc;
  return guarded([&] {
    ds->data.z = coulomb_count(ds->data.i_b, ds->data.dt, z0, capacity_ah);
  });
}

void lpvbat_dataset_free(lpvbat_dataset* ds) { delete ds; }

/* ---- identification ---- */

void lpvbat_config_default(lpvbat_config* cfg) {
  if (!cfg) return;
  PipelineConfig pc;
  cfg->n_segments = pc.n_segments;
  cfg->nu = pc.nu;
  cfg->lambda1 = pc.lambda1;
  cfg->lambda2 = pc.lambda2;
  cfg->lambda3 = pc.lambda3;
  cfg->lambda4 = pc.lambda4;
  cfg->perturb_sigma = pc.perturb_sigma;
  cfg->seed = pc.seed;
  cfg->warmup_override = pc.warmup_override;
  cfg->perturb_all_blocks = pc.perturb_all_blocks ? 1 : 0;
  cfg->z0 = pc.z0;
  cfg->capacity_ah = pc.capacity_ah;
  cfg->basis_z_min = pc.basis_z_min;
  cfg->basis_z_max = pc.basis_z_max;
  cfg->solver_tol = pc.solver.tol;
  cfg->solver_max_iter = pc.solver.max_iter;
}

lpvbat_status lpvbat_identify(const lpvbat_dataset* ds,
                              const lpvbat_config* cfg, lpvbat_result** out) {
  if (auto rc = require(ds && cfg && out, "null pointer")) return rc;
  return guarded([&] {
    SampledDataset data = ds->data;  // the pipeline may fill the SOC series
    IdentifyResult result = run_identification(data, to_pipeline(*cfg));
    *out = new lpvbat_result{std::move(result)};
  });
}

lpvbat_status lpvbat_result_model(const lpvbat_result* res,
                                  lpvbat_model** out) {
  if (auto rc = require(res && out, "null pointer")) return rc;
  return guarded([&] { *out = new lpvbat_model{res->result.model}; });
}

lpvbat_status lpvbat_result_report_json(const lpvbat_result* res, char** out) {
  if (auto rc = require(res && out, "null pointer")) return rc;
  return guarded([&] {
    nlohmann::json j;
    const IdentifyResult& r = res->result;
    j["warmup_rows"] = r.warmup;
    j["kept_rows"] = r.kept_rows;
    j["domain_clamped"] = r.domain_clamped;
    j["training_fit"] = {
        {"voltage_rmse", r.training_rmse},
        {"voltage_rmse_m_denominator", r.training_rmse_m},
        {"voltage_vaf", r.training_vaf},
        {"voltage_vaf_var_reference", r.training_vaf_ref}};
    auto stage = [](const SolverReport& s) {
      return nlohmann::json{{"converged", s.converged},
                            {"iterations", s.iterations},
                            {"objective", s.objective},
                            {"primal_residual", s.primal_residual},
                            {"dual_residual", s.dual_residual}};
    };
    j["stage1"] = stage(r.stage1_report);
    j["stage2"] = stage(r.stage2_report);
    std::vector<double> prov(r.stage1_c_voc.data(),
                             r.stage1_c_voc.data() + r.stage1_c_voc.size());
    j["stage1_provisional_voc"] = prov;
    char* s = dup_string(j.dump(2));
    if (!s) throw std::bad_alloc();
    *out = s;
  });
}

void lpvbat_result_free(lpvbat_result* res) { delete res; }

lpvbat_status lpvbat_model_save_json(const lpvbat_model* m, const char* path) {
  if (auto rc = require(m && path, "null pointer")) return rc;
  return guarded([&] { save_model_json(m->model, path); });
}

lpvbat_status lpvbat_model_load_json(const char* path, lpvbat_model** out) {
  if (auto rc = require(path && out, "null pointer")) return rc;
  return guarded([&] { *out = new lpvbat_model{load_model_json(path)}; });
}

lpvbat_status lpvbat_model_eval(const lpvbat_model* m, double z,
                                double out4[4], int* valid) {
  if (auto rc = require(m && out4, "null pointer")) return rc;
  return guarded([&] {
    const double grid[1] = {z};
    const PhysicalCurves c = recover_physical(m->model, grid);
    out4[0] = c.r0[0];
    out4[1] = c.r1[0];
    out4[2] = c.tau1[0];
    out4[3] = c.voc[0];
    if (valid) *valid = c.valid[0];
  });
}

lpvbat_status lpvbat_model_domain(const lpvbat_model* m, double* z_min,
                                  double* z_max) {
  if (auto rc = require(m && z_min && z_max, "null pointer")) return rc;
  *z_min = m->model.basis.z_min();
  *z_max = m->model.basis.z_max();
  return LPVBAT_OK;
}

lpvbat_status lpvbat_model_meta_json(const lpvbat_model* m, char** out) {
  if (auto rc = require(m && out, "null pointer")) return rc;
  return guarded([&] {
    const ModelMetadata& meta = m->model.meta;
    nlohmann::json j{{"nu", meta.nu},
                     {"dt", meta.dt},
                     {"capacity_ah", meta.capacity_ah},
                     {"z0", meta.z0},
                     {"seed", meta.seed},
                     {"warmup", meta.warmup}};
    char* s = dup_string(j.dump(2));
    if (!s) throw std::bad_alloc();
    *out = s;
  });
}

lpvbat_status lpvbat_model_write_curves_csv(const lpvbat_model* m,
                                            const char* path, int n_points,
                                            double trim) {
  if (auto rc = require(m && path, "null pointer")) return rc;
  if (auto rc = require(n_points >= 2, "need >= 2 grid points")) return rc;
  return guarded([&] {
    const std::vector<double> grid = evaluation_grid(m->model, n_points, trim);
    write_curves_csv(recover_physical(m->model, grid), path);
  });
}

void lpvbat_model_free(lpvbat_model* m) { delete m; }

lpvbat_status lpvbat_predict(const lpvbat_model* m, const lpvbat_dataset* ds,
                             double z0, double capacity_ah, double** v_pred,
                             size_t* len, int* clamped) {
  if (auto rc = require(m && ds && v_pred && len, "null pointer")) return rc;
  return guarded([&] {
    const double z0_use = std::isnan(z0) ? m->model.meta.z0 : z0;
    const double cap_use =
        std::isnan(capacity_ah) ? m->model.meta.capacity_ah : capacity_ah;
    bool was_clamped = false;
    const std::vector<double> v = predict_voltage(
        m->model, ds->data.i_b, ds->data.dt, z0_use, cap_use, &was_clamped);
    double* buf = static_cast<double*>(std::malloc(v.size() * sizeof(double)));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, v.data(), v.size() * sizeof(double));
    *v_pred = buf;
    *len = v.size();
    if (clamped) *clamped = was_clamped ? 1 : 0;
  });
}

lpvbat_status lpvbat_predict_write_csv(const lpvbat_model* m,
                                       const lpvbat_dataset* ds, double z0,
                                       double capacity_ah, const char* path,
                                       int* clamped) {
  if (auto rc = require(m && ds && path, "null pointer")) return rc;
  return guarded([&] {
    const double z0_use = std::isnan(z0) ? m->model.meta.z0 : z0;
    const double cap_use =
        std::isnan(capacity_ah) ? m->model.meta.capacity_ah : capacity_ah;
    bool was_clamped = false;
    const std::vector<double> v = predict_voltage(
        m->model, ds->data.i_b, ds->data.dt, z0_use, cap_use, &was_clamped);
    write_prediction_csv(ds->data, v, path);
    if (clamped) *clamped = was_clamped ? 1 : 0;
  });
}

/* ---- baseline ---- */

lpvbat_status lpvbat_fmrls_run(const lpvbat_dataset* ds, int window,
                               double ridge, lpvbat_fmrls** out) {
  if (auto rc = require(ds && out, "null pointer")) return rc;
  return guarded([&] {
    FmrlsConfig cfg;
    cfg.window = window;
    cfg.ridge = ridge;
    auto* handle = new lpvbat_fmrls{fmrls_identify(ds->data, cfg), {}};
    handle->valid_as_double.assign(handle->result.valid.begin(),
                                   handle->result.valid.end());
    *out = handle;
  });
}

lpvbat_status lpvbat_fmrls_column_data(const lpvbat_fmrls* f,
                                       lpvbat_fmrls_column which,
                                       const double** data, size_t* len) {
  if (auto rc = require(f && data && len, "null pointer")) return rc;
  const std::vector<double>* col = nullptr;
  switch (which) {
    case LPVBAT_FMRLS_R0: col = &f->result.r0; break;
    case LPVBAT_FMRLS_R1: col = &f->result.r1; break;
    case LPVBAT_FMRLS_TAU1: col = &f->result.tau1; break;
    case LPVBAT_FMRLS_VOC: col = &f->result.voc; break;
    case LPVBAT_FMRLS_VALID: col = &f->valid_as_double; break;
  }
  if (!col) {
    g_last_error = "unknown baseline column";
    return LPVBAT_ERR_ARGUMENT;
  }
  *data = col->data();
  *len = col->size();
  return LPVBAT_OK;
}

lpvbat_status lpvbat_fmrls_write_csv(const lpvbat_fmrls* f,
                                     const lpvbat_dataset* ds,
                                     const char* path) {
  if (auto rc = require(f && ds && path, "null pointer")) return rc;
  return guarded([&] { write_baseline_csv(ds->data, f->result, path); });
}

lpvbat_status lpvbat_fmrls_predict(const lpvbat_fmrls* f,
                                   const lpvbat_dataset* train,
                                   const lpvbat_dataset* test, double z0,
                                   double capacity_ah, int grid_points,
                                   double** v_pred, size_t* len) {
  if (auto rc = require(f && train && test && v_pred && len, "null pointer"))
    return rc;
  if (auto rc = require(grid_points >= 2, "need >= 2 grid points")) return rc;
  return guarded([&] {
    if (!train->data.has_soc())
      fail(ErrorCode::InvalidArgument,
           "fmrls_predict: training dataset has no SOC series");
    const auto& z = train->data.z;
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    std::vector<double> grid(grid_points);
    for (int k = 0; k < grid_points; ++k)
      grid[k] = *lo + (*hi - *lo) * k / static_cast<double>(grid_points - 1);
    const GridCurves curves = bin_estimates(z, f->result, grid);
    const std::vector<double> v = predict_voltage_binned(
        curves, test->data.i_b, test->data.dt, z0, capacity_ah);
    double* buf = static_cast<double*>(std::malloc(v.size() * sizeof(double)));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, v.data(), v.size() * sizeof(double));
    *v_pred = buf;
    *len = v.size();
  });
}

void lpvbat_fmrls_free(lpvbat_fmrls* f) { delete f; }

/* ---- metrics and tables ---- */

lpvbat_status lpvbat_rmse(const double* y, const double* yhat, size_t n,
                          int variant, double* out) {
  if (auto rc = require(y && yhat && out, "null pointer")) return rc;
  return guarded([&] {
    *out = rmse(std::span(y, n), std::span(yhat, n),
                variant == 0 ? RmseVariant::SamplesPlusOne : RmseVariant::Samples);
  });
}

lpvbat_status lpvbat_vaf(const double* y, const double* yhat, size_t n,
                         int variant, double* out) {
  if (auto rc = require(y && yhat && out, "null pointer")) return rc;
  return guarded([&] {
    *out = vaf(std::span(y, n), std::span(yhat, n),
               variant == 0 ? VafVariant::VarEstimate : VafVariant::VarReference);
  });
}

lpvbat_status lpvbat_table_read_csv(const char* path, lpvbat_table** out) {
  if (auto rc = require(path && out, "null pointer")) return rc;
  return guarded([&] { *out = new lpvbat_table{read_csv_table(path)}; });
}

lpvbat_status lpvbat_table_rows(const lpvbat_table* t, size_t* out) {
  if (auto rc = require(t && out, "null pointer")) return rc;
  *out = t->table.rows();
  return LPVBAT_OK;
}

lpvbat_status lpvbat_table_column(const lpvbat_table* t, const char* name,
                                  const double** data, size_t* len) {
  if (auto rc = require(t && name && data && len, "null pointer")) return rc;
  const std::vector<double>* col = t->table.find(name);
  if (!col) {
    g_last_error = std::string("no column named '") + name + "'";
    return LPVBAT_ERR_ARGUMENT;
  }
  *data = col->data();
  *len = col->size();
  return LPVBAT_OK;
}

void lpvbat_table_free(lpvbat_table* t) { delete t; }

}  // extern "C"
