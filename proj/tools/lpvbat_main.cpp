// Command-line front end for the lpvbat shared library. All numerics go
// through the C API in lpvbat.h; this translation unit only parses
// arguments, shuffles files and assembles report JSON.

#include <lpvbat.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void fail_config(const std::string& msg) {
  throw CliError{kExitConfig, msg};
}

void check(lpvbat_status rc) {
  if (rc == LPVBAT_OK) return;
  const int code = (rc == LPVBAT_ERR_NUMERIC || rc == LPVBAT_ERR_INTERNAL)
                       ? kExitNumeric
                       : kExitConfig;
  throw CliError{code, lpvbat_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  explicit Handle(T* p) : ptr(p) {}
  ~Handle() { reset(); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Handle& operator=(Handle&& other) noexcept {
    if (this != &other) {
      reset();
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  void reset() {
    if (ptr) Free(ptr);
    ptr = nullptr;
  }
  T** out() {
    reset();
    return &ptr;
  }
  T* get() const { return ptr; }
};

using TruthHandle = Handle<lpvbat_truth, lpvbat_truth_free>;
using ProfileHandle = Handle<lpvbat_profile, lpvbat_profile_free>;
using DatasetHandle = Handle<lpvbat_dataset, lpvbat_dataset_free>;
using ModelHandle = Handle<lpvbat_model, lpvbat_model_free>;
using ResultHandle = Handle<lpvbat_result, lpvbat_result_free>;
using FmrlsHandle = Handle<lpvbat_fmrls, lpvbat_fmrls_free>;
using TableHandle = Handle<lpvbat_table, lpvbat_table_free>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { lpvbat_string_free(s); }
  char** out() { return &s; }
};
struct OwnedBuffer {
  double* p = nullptr;
  ~OwnedBuffer() { lpvbat_buffer_free(p); }
  double** out() { return &p; }
};

/// Full run configuration: the library pipeline settings plus the
/// simulation and reporting knobs the CLI owns.
struct RunConfig {
  lpvbat_config pipeline{};
  double dt = 1.0;
  double noise_std = 0.01;
  double z_floor = 0.001;
  std::string profile_kind = "dst";
  double profile_duration = -1.0;  // < 0: derive from capacity and cycle drain
  double amplitude_scale = 1.0;
  double prbs_base_step = 10.0;
  int grid_points = 1000;
  double grid_trim = 0.02;
  std::vector<long> baseline_windows = {50, 100, 200, 500};
  double baseline_ridge = 1e-8;

  RunConfig() { lpvbat_config_default(&pipeline); }
};

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_config("cannot open config file " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail_config("config file " + path + " is not valid JSON");
  if (!j.is_object()) fail_config("config root must be a JSON object");

  for (const auto& [key, value] : j.items()) {
    if (key == "n_segments") cfg.pipeline.n_segments = value.get<int>();
    else if (key == "nu") cfg.pipeline.nu = value.get<double>();
    else if (key == "lambda1") cfg.pipeline.lambda1 = value.get<double>();
    else if (key == "lambda2") cfg.pipeline.lambda2 = value.get<double>();
    else if (key == "lambda3") cfg.pipeline.lambda3 = value.get<double>();
    else if (key == "lambda4") cfg.pipeline.lambda4 = value.get<double>();
    else if (key == "perturb_sigma") cfg.pipeline.perturb_sigma = value.get<double>();
    else if (key == "seed") cfg.pipeline.seed = value.get<std::uint64_t>();
    else if (key == "warmup_override") cfg.pipeline.warmup_override = value.get<long>();
    else if (key == "perturb_all_blocks") cfg.pipeline.perturb_all_blocks = value.get<bool>() ? 1 : 0;
    else if (key == "z0") cfg.pipeline.z0 = value.get<double>();
    else if (key == "capacity_ah") cfg.pipeline.capacity_ah = value.get<double>();
    else if (key == "basis_z_min") cfg.pipeline.basis_z_min = value.is_null() ? std::nan("") : value.get<double>();
    else if (key == "basis_z_max") cfg.pipeline.basis_z_max = value.is_null() ? std::nan("") : value.get<double>();
    else if (key == "solver_tol") cfg.pipeline.solver_tol = value.get<double>();
    else if (key == "solver_max_iter") cfg.pipeline.solver_max_iter = value.get<long>();
    else if (key == "dt") cfg.dt = value.get<double>();
    else if (key == "noise_std") cfg.noise_std = value.get<double>();
    else if (key == "z_floor") cfg.z_floor = value.get<double>();
    else if (key == "profile_kind") cfg.profile_kind = value.get<std::string>();
    else if (key == "profile_duration") cfg.profile_duration = value.is_string() ? -1.0 : value.get<double>();
    else if (key == "amplitude_scale") cfg.amplitude_scale = value.get<double>();
    else if (key == "prbs_base_step") cfg.prbs_base_step = value.get<double>();
    else if (key == "grid_points") cfg.grid_points = value.get<int>();
    else if (key == "grid_trim") cfg.grid_trim = value.get<double>();
    else if (key == "baseline_ridge") cfg.baseline_ridge = value.get<double>();
    else if (key == "baseline_windows") cfg.baseline_windows = value.get<std::vector<long>>();
    else fail_config("unknown config key '" + key + "' in " + path);
  }
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["n_segments"] = cfg.pipeline.n_segments;
  j["nu"] = cfg.pipeline.nu;
  j["lambda1"] = cfg.pipeline.lambda1;
  j["lambda2"] = cfg.pipeline.lambda2;
  j["lambda3"] = cfg.pipeline.lambda3;
  j["lambda4"] = cfg.pipeline.lambda4;
  j["perturb_sigma"] = cfg.pipeline.perturb_sigma;
  j["seed"] = cfg.pipeline.seed;
  j["warmup_override"] = cfg.pipeline.warmup_override;
  j["perturb_all_blocks"] = cfg.pipeline.perturb_all_blocks != 0;
  j["z0"] = cfg.pipeline.z0;
  j["capacity_ah"] = cfg.pipeline.capacity_ah;
  if (std::isnan(cfg.pipeline.basis_z_min)) j["basis_z_min"] = nullptr;
  else j["basis_z_min"] = cfg.pipeline.basis_z_min;
  if (std::isnan(cfg.pipeline.basis_z_max)) j["basis_z_max"] = nullptr;
  else j["basis_z_max"] = cfg.pipeline.basis_z_max;
  j["solver_tol"] = cfg.pipeline.solver_tol;
  j["solver_max_iter"] = cfg.pipeline.solver_max_iter;
  j["dt"] = cfg.dt;
  j["noise_std"] = cfg.noise_std;
  j["z_floor"] = cfg.z_floor;
  j["profile_kind"] = cfg.profile_kind;
  j["profile_duration"] = cfg.profile_duration;
  j["amplitude_scale"] = cfg.amplitude_scale;
  j["prbs_base_step"] = cfg.prbs_base_step;
  j["grid_points"] = cfg.grid_points;
  j["grid_trim"] = cfg.grid_trim;
  j["baseline_ridge"] = cfg.baseline_ridge;
  j["baseline_windows"] = cfg.baseline_windows;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_config("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) fail_config("write failed for " + path);
}

ProfileHandle make_profile(const RunConfig& cfg) {
  ProfileHandle profile;
  double duration = cfg.profile_duration;
  if (cfg.profile_kind == "dst") {
    if (duration <= 0.0) {
      const double drain = -lpvbat_dst_cycle_charge_as() * cfg.amplitude_scale;
      if (drain <= 0.0) fail_config("cannot derive a duration for a non-draining profile");
      const double need =
          (cfg.pipeline.z0 - cfg.z_floor) * 3600.0 * cfg.pipeline.capacity_ah;
      duration = (std::ceil(need / drain) + 1.0) * 360.0;
    }
    check(lpvbat_profile_dst(duration, cfg.amplitude_scale, profile.out()));
  } else if (cfg.profile_kind == "constant") {
    if (duration <= 0.0) duration = 3600.0;
    check(lpvbat_profile_constant(duration, cfg.amplitude_scale, profile.out()));
  } else if (cfg.profile_kind == "prbs") {
    if (duration <= 0.0) duration = 3600.0;
    check(lpvbat_profile_prbs(duration, cfg.amplitude_scale, cfg.prbs_base_step,
                              cfg.pipeline.seed, profile.out()));
  } else {
    fail_config("unknown profile kind '" + cfg.profile_kind +
                "' (expected dst, constant or prbs)");
  }
  return profile;
}

DatasetHandle read_dataset(const std::string& path,
                           const std::map<std::string, std::string>& col_map,
                           bool discharge_positive) {
  lpvbat_csv_options opts{};
  auto lookup = [&](const char* name) -> const char* {
    auto it = col_map.find(name);
    return it == col_map.end() ? nullptr : it->second.c_str();
  };
  opts.time_column = lookup("t");
  opts.current_column = lookup("i_b");
  opts.voltage_column = lookup("v_b");
  opts.soc_column = lookup("z");
  opts.soc_true_column = lookup("z_true");
  opts.discharge_positive = discharge_positive ? 1 : 0;
  DatasetHandle ds;
  check(lpvbat_dataset_read_csv(path.c_str(), &opts, ds.out()));
  return ds;
}

std::map<std::string, std::string> parse_col_map(const std::vector<std::string>& entries) {
  std::map<std::string, std::string> out;
  for (const auto& e : entries) {
    const auto eq = e.find('=');
    if (eq == std::string::npos)
      fail_config("--col expects canonical=actual, got '" + e + "'");
    const std::string canonical = e.substr(0, eq);
    if (canonical != "t" && canonical != "i_b" && canonical != "v_b" &&
        canonical != "z" && canonical != "z_true")
      fail_config("--col: unknown canonical column '" + canonical + "'");
    out[canonical] = e.substr(eq + 1);
  }
  return out;
}

json metrics_json(const double* y, const double* yhat, std::size_t n) {
  double rmse0 = 0, rmse1 = 0, vaf0 = 0, vaf1 = 0;
  check(lpvbat_rmse(y, yhat, n, 0, &rmse0));
  check(lpvbat_rmse(y, yhat, n, 1, &rmse1));
  check(lpvbat_vaf(y, yhat, n, 0, &vaf0));
  check(lpvbat_vaf(y, yhat, n, 1, &vaf1));
  return json{{"rmse", rmse0},
              {"rmse_m_denominator", rmse1},
              {"vaf", vaf0},
              {"vaf_var_reference", vaf1},
              {"samples", n},
              {"conventions",
               "rmse divides by m+1 and vaf normalizes by var(estimate); "
               "the _m_denominator/_var_reference fields use m and var(reference)"}};
}

/// RMSE of model curves against a truth table over the trimmed SOC range.
json truth_comparison(const lpvbat_model* model, const std::string& truth_path,
                      double trim) {
  TableHandle table;
  check(lpvbat_table_read_csv(truth_path.c_str(), table.out()));
  const double* zs;
  size_t n;
  check(lpvbat_table_column(table.get(), "z", &zs, &n));
  std::map<std::string, const double*> truth_cols;
  for (const char* name : {"r0", "r1", "tau1", "voc"}) {
    const double* col;
    size_t len;
    check(lpvbat_table_column(table.get(), name, &col, &len));
    truth_cols[name] = col;
  }
  double z_lo, z_hi;
  check(lpvbat_model_domain(model, &z_lo, &z_hi));
  const double lo = z_lo + trim, hi = z_hi - trim;

  std::map<std::string, std::vector<double>> want, got;
  int invalid = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (zs[k] < lo || zs[k] > hi) continue;
    double out4[4];
    int valid = 0;
    check(lpvbat_model_eval(model, zs[k], out4, &valid));
    if (!valid) ++invalid;
    const char* names[4] = {"r0", "r1", "tau1", "voc"};
    for (int p = 0; p < 4; ++p) {
      want[names[p]].push_back(truth_cols[names[p]][k]);
      got[names[p]].push_back(out4[p]);
    }
  }
  json j;
  j["trim"] = trim;
  j["grid_points_used"] = want["r0"].size();
  j["invalid_grid_points"] = invalid;
  for (const auto& [name, w] : want) {
    double r = 0;
    check(lpvbat_rmse(w.data(), got[name].data(), w.size(), 0, &r));
    j["rmse"][name] = r;
  }
  return j;
}

int cmd_simulate(const RunConfig& cfg, const std::string& out_path,
                 const std::string& truth_out) {
  TruthHandle truth;
  check(lpvbat_truth_default(cfg.pipeline.capacity_ah, truth.out()));
  ProfileHandle profile = make_profile(cfg);
  DatasetHandle ds;
  check(lpvbat_simulate(truth.get(), profile.get(), cfg.pipeline.z0, cfg.dt,
                        cfg.noise_std, cfg.pipeline.seed, ds.out()));
  check(lpvbat_dataset_write_csv(ds.get(), out_path.c_str()));

  const double* z_true;
  size_t n;
  check(lpvbat_dataset_column(ds.get(), LPVBAT_COL_SOC_TRUE, &z_true, &n));
  double lo = z_true[0], hi = z_true[0];
  for (size_t k = 1; k < n; ++k) {
    lo = std::min(lo, z_true[k]);
    hi = std::max(hi, z_true[k]);
  }
  check(lpvbat_truth_write_csv(truth.get(), lo, hi, cfg.grid_points,
                               truth_out.c_str()));
  std::fprintf(stderr, "lpvbat: wrote %zu samples to %s (truth grid: %s)\n", n,
               out_path.c_str(), truth_out.c_str());
  return kExitOk;
}

int cmd_identify(const RunConfig& cfg, const std::string& data_path,
                 const std::map<std::string, std::string>& col_map,
                 bool discharge_positive, const std::string& out_dir,
                 const std::string& truth_path) {
  std::filesystem::create_directories(out_dir);
  DatasetHandle ds = read_dataset(data_path, col_map, discharge_positive);
  ResultHandle result;
  check(lpvbat_identify(ds.get(), &cfg.pipeline, result.out()));
  ModelHandle model;
  check(lpvbat_result_model(result.get(), model.out()));

  const std::string model_path = out_dir + "/model.json";
  const std::string curves_path = out_dir + "/curves.csv";
  const std::string report_path = out_dir + "/report.json";
  check(lpvbat_model_save_json(model.get(), model_path.c_str()));
  check(lpvbat_model_write_curves_csv(model.get(), curves_path.c_str(),
                                      cfg.grid_points, cfg.grid_trim));

  OwnedString report_text;
  check(lpvbat_result_report_json(result.get(), report_text.out()));
  json report = json::parse(report_text.s);
  report["config"] = config_to_json(cfg);
  report["inputs"] = {{"data", data_path}};
  if (!truth_path.empty())
    report["truth_metrics"] = truth_comparison(model.get(), truth_path, cfg.grid_trim);
  write_text(report_path, report.dump(2) + "\n");
  std::fprintf(stderr, "lpvbat: wrote %s, %s, %s\n", model_path.c_str(),
               curves_path.c_str(), report_path.c_str());
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg, const std::string& model_path,
                const std::string& data_path,
                const std::map<std::string, std::string>& col_map,
                bool discharge_positive, const std::string& out_path,
                const std::string& metrics_path, double z0_flag) {
  ModelHandle model;
  check(lpvbat_model_load_json(model_path.c_str(), model.out()));
  DatasetHandle ds = read_dataset(data_path, col_map, discharge_positive);

  // Warn when the model was fit at a different rate; the data rate wins.
  OwnedString meta_text;
  check(lpvbat_model_meta_json(model.get(), meta_text.out()));
  const json meta = json::parse(meta_text.s);
  double data_dt = 0.0;
  check(lpvbat_dataset_dt(ds.get(), &data_dt));
  const double model_dt = meta.value("dt", data_dt);
  if (std::abs(model_dt - data_dt) > 1e-9 * std::max(1.0, model_dt))
    std::fprintf(stderr,
                 "lpvbat: warning: model was identified at dt = %g s but the "
                 "data is sampled at dt = %g s; using the data rate\n",
                 model_dt, data_dt);

  const double z0 = std::isnan(z0_flag) ? meta.value("z0", 0.8) : z0_flag;
  int clamped = 0;
  check(lpvbat_predict_write_csv(model.get(), ds.get(), z0,
                                 cfg.pipeline.capacity_ah, out_path.c_str(),
                                 &clamped));

  OwnedBuffer pred;
  size_t n = 0;
  check(lpvbat_predict(model.get(), ds.get(), z0, cfg.pipeline.capacity_ah,
                       pred.out(), &n, nullptr));
  const double* v_meas;
  size_t n_meas;
  check(lpvbat_dataset_column(ds.get(), LPVBAT_COL_VOLTAGE, &v_meas, &n_meas));
  json m = metrics_json(v_meas, pred.p, n);
  m["domain_clamped"] = clamped != 0;
  m["z0"] = z0;
  write_text(metrics_path, m.dump(2) + "\n");
  std::fprintf(stderr, "lpvbat: wrote %s and %s\n", out_path.c_str(),
               metrics_path.c_str());
  return kExitOk;
}

int cmd_baseline(const RunConfig& cfg, const std::string& data_path,
                 const std::map<std::string, std::string>& col_map,
                 bool discharge_positive, const std::string& out_dir,
                 const std::string& truth_path, const std::string& curves_path) {
  if (cfg.baseline_windows.empty())
    fail_config("baseline window list is empty");
  std::filesystem::create_directories(out_dir);
  DatasetHandle ds = read_dataset(data_path, col_map, discharge_positive);
  const double* z = nullptr;
  size_t nz = 0;
  if (lpvbat_dataset_column(ds.get(), LPVBAT_COL_SOC, &z, &nz) != LPVBAT_OK) {
    check(lpvbat_dataset_fill_soc(ds.get(), cfg.pipeline.z0,
                                  cfg.pipeline.capacity_ah));
    check(lpvbat_dataset_column(ds.get(), LPVBAT_COL_SOC, &z, &nz));
  }

  std::optional<json> truth_table;
  std::vector<double> tz, tr0, tr1, ttau, tvoc;
  if (!truth_path.empty()) {
    TableHandle table;
    check(lpvbat_table_read_csv(truth_path.c_str(), table.out()));
    auto grab = [&](const char* name, std::vector<double>& dst) {
      const double* col;
      size_t len;
      check(lpvbat_table_column(table.get(), name, &col, &len));
      dst.assign(col, col + len);
    };
    grab("z", tz);
    grab("r0", tr0);
    grab("r1", tr1);
    grab("tau1", ttau);
    grab("voc", tvoc);
  }
  auto truth_at = [&](const std::vector<double>& vals, double zq) {
    // tz descends or ascends depending on the writer; handle both.
    std::size_t best = 0;
    double best_d = std::abs(tz[0] - zq);
    for (std::size_t k = 1; k < tz.size(); ++k) {
      const double d = std::abs(tz[k] - zq);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return vals[best];
  };

  json comparison;
  comparison["windows"] = json::array();
  double best_rmse_voc = std::numeric_limits<double>::infinity();
  json best_entry;

  for (long window : cfg.baseline_windows) {
    FmrlsHandle fm;
    check(lpvbat_fmrls_run(ds.get(), static_cast<int>(window),
                           cfg.baseline_ridge, fm.out()));
    const std::string path = out_dir + "/fmrls_w" + std::to_string(window) + ".csv";
    check(lpvbat_fmrls_write_csv(fm.get(), ds.get(), path.c_str()));

    json entry{{"window", window}, {"csv", path}};
    if (!truth_path.empty()) {
      const double lo = *std::min_element(tz.begin(), tz.end()) + cfg.grid_trim;
      const double hi = *std::max_element(tz.begin(), tz.end()) - cfg.grid_trim;
      const char* names[4] = {"r0", "r1", "tau1", "voc"};
      const std::vector<double>* tcols[4] = {&tr0, &tr1, &ttau, &tvoc};
      const lpvbat_fmrls_column cols[4] = {LPVBAT_FMRLS_R0, LPVBAT_FMRLS_R1,
                                           LPVBAT_FMRLS_TAU1, LPVBAT_FMRLS_VOC};
      const double* valid;
      size_t nv;
      check(lpvbat_fmrls_column_data(fm.get(), LPVBAT_FMRLS_VALID, &valid, &nv));
      for (int p = 0; p < 4; ++p) {
        const double* est;
        size_t ne;
        check(lpvbat_fmrls_column_data(fm.get(), cols[p], &est, &ne));
        std::vector<double> want, got;
        for (size_t k = 0; k < ne; ++k) {
          if (valid[k] == 0.0 || z[k] < lo || z[k] > hi) continue;
          want.push_back(truth_at(*tcols[p], z[k]));
          got.push_back(est[k]);
        }
        if (want.empty()) {
          entry["rmse"][names[p]] = nullptr;
          continue;
        }
        double r = 0;
        check(lpvbat_rmse(want.data(), got.data(), want.size(), 0, &r));
        entry["rmse"][names[p]] = r;
        entry["samples_compared"] = want.size();
      }
      if (entry["rmse"].contains("voc") && !entry["rmse"]["voc"].is_null() &&
          entry["rmse"]["voc"].get<double>() < best_rmse_voc) {
        best_rmse_voc = entry["rmse"]["voc"].get<double>();
        best_entry = entry;
      }
    }
    comparison["windows"].push_back(entry);
  }
  if (!best_entry.is_null()) comparison["best_window"] = best_entry;

  if (!curves_path.empty() && !truth_path.empty()) {
    TableHandle curves;
    check(lpvbat_table_read_csv(curves_path.c_str(), curves.out()));
    const double lo = *std::min_element(tz.begin(), tz.end()) + cfg.grid_trim;
    const double hi = *std::max_element(tz.begin(), tz.end()) - cfg.grid_trim;
    const double* cz;
    size_t nc;
    check(lpvbat_table_column(curves.get(), "z", &cz, &nc));
    json lpv;
    const char* names[4] = {"r0", "r1", "tau1", "voc"};
    const std::vector<double>* tcols[4] = {&tr0, &tr1, &ttau, &tvoc};
    bool all_better = true;
    for (int p = 0; p < 4; ++p) {
      const double* col;
      size_t len;
      check(lpvbat_table_column(curves.get(), names[p], &col, &len));
      std::vector<double> want, got;
      for (size_t k = 0; k < nc; ++k) {
        if (cz[k] < lo || cz[k] > hi) continue;
        want.push_back(truth_at(*tcols[p], cz[k]));
        got.push_back(col[k]);
      }
      double r = 0;
      check(lpvbat_rmse(want.data(), got.data(), want.size(), 0, &r));
      lpv["rmse"][names[p]] = r;
      if (!best_entry.is_null()) {
        const json& b = best_entry["rmse"][names[p]];
        if (!b.is_null() && r >= b.get<double>()) all_better = false;
      }
    }
    comparison["ct_lpv"] = lpv;
    if (!best_entry.is_null()) {
      comparison["ordering"] = {
          {"ct_lpv_beats_baseline_all_parameters", all_better}};
    }
  }

  write_text(out_dir + "/comparison.json", comparison.dump(2) + "\n");
  std::fprintf(stderr, "lpvbat: wrote baseline curves and %s/comparison.json\n",
               out_dir.c_str());
  return kExitOk;
}

int cmd_evaluate(const std::string& ref_path, const std::string& ref_col,
                 const std::string& test_path, const std::string& test_col,
                 const std::string& out_path) {
  TableHandle ref, test;
  check(lpvbat_table_read_csv(ref_path.c_str(), ref.out()));
  check(lpvbat_table_read_csv(test_path.c_str(), test.out()));
  const double *y, *yhat;
  size_t ny, nyh;
  check(lpvbat_table_column(ref.get(), ref_col.c_str(), &y, &ny));
  check(lpvbat_table_column(test.get(), test_col.c_str(), &yhat, &nyh));
  if (ny != nyh) fail_config("column lengths differ between the two files");
  const json m = metrics_json(y, yhat, ny);
  if (out_path.empty())
    std::printf("%s\n", m.dump(2).c_str());
  else
    write_text(out_path, m.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOC-scheduled battery model identification"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override it")
      ->check(CLI::ExistingFile);

  // shared pipeline overrides
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--capacity", cfg.pipeline.capacity_ah, "cell capacity in Ah");
    sub->add_option("--z0", cfg.pipeline.z0, "initial SOC");
    sub->add_option("--seed", cfg.pipeline.seed, "RNG seed");
  };

  // simulate
  std::string sim_out = "dataset.csv", sim_truth_out;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic battery dataset");
  add_common(sim);
  sim->add_option("--dt", cfg.dt, "sampling interval in seconds");
  sim->add_option("--noise", cfg.noise_std, "measurement noise std (A and V)");
  sim->add_option("--profile", cfg.profile_kind, "dst, constant or prbs");
  sim->add_option("--duration", cfg.profile_duration,
                  "profile length in seconds; omit to run to the SOC floor");
  sim->add_option("--amps,--scale", cfg.amplitude_scale,
                  "profile current scale (constant level for 'constant')");
  sim->add_option("--base-step", cfg.prbs_base_step, "prbs switching period");
  sim->add_option("-o,--out", sim_out, "output dataset CSV");
  sim->add_option("--truth-out", sim_truth_out,
                  "ground-truth parameter CSV (default <out>_truth.csv)");

  // identify
  std::string id_data, id_out_dir = ".", id_truth;
  std::vector<std::string> col_entries;
  bool discharge_positive = false;
  auto* ident = app.add_subcommand("identify", "fit the SOC-varying model to a dataset");
  add_common(ident);
  ident->add_option("--data", id_data, "input dataset CSV")->required();
  ident->add_option("--out-dir", id_out_dir, "directory for model/curves/report");
  ident->add_option("--truth", id_truth, "truth grid CSV for error metrics");
  ident->add_option("--segments", cfg.pipeline.n_segments, "spline segment count");
  ident->add_option("--nu", cfg.pipeline.nu, "filter cutoff (rad/s)");
  ident->add_option("--lambda1", cfg.pipeline.lambda1, "smoothing weight for a1");
  ident->add_option("--lambda2", cfg.pipeline.lambda2, "smoothing weight for b0");
  ident->add_option("--lambda3", cfg.pipeline.lambda3, "smoothing weight for b1");
  ident->add_option("--lambda4", cfg.pipeline.lambda4, "smoothing weight for the OCV");
  ident->add_option("--warmup", cfg.pipeline.warmup_override,
                    "rows discarded up front (-1 = automatic)");
  ident->add_option("--perturb-sigma", cfg.pipeline.perturb_sigma,
                    "scheduling perturbation std");
  ident->add_flag("--perturb-all-blocks",
                  [&cfg](std::int64_t) { cfg.pipeline.perturb_all_blocks = 1; },
                  "perturb the modulated-signal blocks too");
  ident->add_option("--col", col_entries,
                    "column mapping canonical=actual (repeatable)");
  ident->add_flag("--discharge-positive", discharge_positive,
                  "input uses discharge-positive current");

  // predict
  std::string pr_model, pr_data, pr_out = "prediction.csv",
              pr_metrics = "prediction_metrics.json";
  double pr_z0 = std::nan("");
  auto* pred = app.add_subcommand("predict", "replay a model over a dataset");
  add_common(pred);
  pred->add_option("--model", pr_model, "model JSON")->required();
  pred->add_option("--data", pr_data, "dataset CSV")->required();
  pred->add_option("-o,--out", pr_out, "prediction CSV");
  pred->add_option("--metrics-out", pr_metrics, "metrics JSON");
  pred->add_option("--predict-z0", pr_z0, "initial SOC for the replay");
  pred->add_option("--col", col_entries, "column mapping canonical=actual");
  pred->add_flag("--discharge-positive", discharge_positive,
                 "input uses discharge-positive current");

  // baseline
  std::string bl_data, bl_out_dir = ".", bl_truth, bl_curves;
  std::vector<long> bl_windows;
  auto* base = app.add_subcommand("baseline", "sliding-window DT identification sweep");
  add_common(base);
  base->add_option("--data", bl_data, "dataset CSV")->required();
  base->add_option("--out-dir", bl_out_dir, "directory for baseline output");
  base->add_option("--truth", bl_truth, "truth grid CSV for error metrics");
  base->add_option("--curves", bl_curves,
                   "model curves CSV to place alongside the baseline");
  base->add_option("--windows", bl_windows, "window lengths to sweep");
  base->add_option("--col", col_entries, "column mapping canonical=actual");
  base->add_flag("--discharge-positive", discharge_positive,
                 "input uses discharge-positive current");

  // evaluate
  std::string ev_ref, ev_test, ev_ref_col = "v_b", ev_test_col = "v_b", ev_out;
  auto* eval = app.add_subcommand("evaluate", "metrics between two CSV columns");
  eval->add_option("--ref", ev_ref, "reference CSV")->required();
  eval->add_option("--test", ev_test, "estimate CSV")->required();
  eval->add_option("--ref-column", ev_ref_col, "column in the reference CSV");
  eval->add_option("--test-column", ev_test_col, "column in the estimate CSV");
  eval->add_option("-o,--out", ev_out, "metrics JSON (stdout when omitted)");

  // Config file must apply before flag overrides; parse in two passes.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!config_path.empty()) {
      apply_config_file(cfg, config_path);
      // re-parse so explicit flags win over the config file
      app.clear();
      app.parse(argc, argv);
    }
    if (!bl_windows.empty()) cfg.baseline_windows = bl_windows;
    const auto col_map = parse_col_map(col_entries);

    if (sim->parsed()) {
      if (sim_truth_out.empty()) {
        const auto dot = sim_out.rfind('.');
        sim_truth_out = (dot == std::string::npos ? sim_out : sim_out.substr(0, dot)) +
                        "_truth.csv";
      }
      return cmd_simulate(cfg, sim_out, sim_truth_out);
    }
    if (ident->parsed())
      return cmd_identify(cfg, id_data, col_map, discharge_positive, id_out_dir,
                          id_truth);
    if (pred->parsed())
      return cmd_predict(cfg, pr_model, pr_data, col_map, discharge_positive,
                         pr_out, pr_metrics, pr_z0);
    if (base->parsed())
      return cmd_baseline(cfg, bl_data, col_map, discharge_positive, bl_out_dir,
                          bl_truth, bl_curves);
    if (eval->parsed())
      return cmd_evaluate(ev_ref, ev_ref_col, ev_test, ev_test_col, ev_out);
    return kExitConfig;
  } catch (const CliError& e) {
    std::fprintf(stderr, "lpvbat: error: %s\n", e.message.c_str());
    return e.exit_code;
  } catch (const CLI::ParseError& e) {
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lpvbat: error: %s\n", e.what());
    return kExitNumeric;
  }
}
