#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "ecm.hpp"
#include "fmrls.hpp"
#include "identify.hpp"

namespace lpvbat {

/// Column-name table read from a CSV file; all cells parsed as doubles.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // column-major

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  const std::vector<double>* find(const std::string& name) const;
};

CsvTable read_csv_table(const std::string& path);

struct DatasetReadOptions {
  /// Overrides for the expected column names (t, i_b, v_b, z, z_true).
  std::map<std::string, std::string> column_map;
  bool discharge_positive = false;  // negate current on ingest
  double jitter_tol = 1e-6;         // relative dt jitter before resampling
};

struct DatasetReadInfo {
  bool resampled = false;
  bool current_negated = false;
  double dt = 0.0;
};

/// Reads a dataset CSV. Requires t, i_b, v_b (after column mapping); z and
/// z_true are optional; extra columns are ignored. Non-uniform sampling
/// beyond jitter_tol is ZOH-resampled onto the median step with a warning.
SampledDataset read_dataset_csv(const std::string& path,
                                const DatasetReadOptions& options = {},
                                DatasetReadInfo* info = nullptr);

/// Header `t,i_b,v_b,z_true` when ground truth is present, else the columns
/// that exist. Full round-trip float precision.
void write_dataset_csv(const SampledDataset& data, const std::string& path);

/// Header `z,r0,r1,tau1,voc,valid`.
void write_curves_csv(const PhysicalCurves& curves, const std::string& path);
PhysicalCurves read_curves_csv(const std::string& path);

/// Header `t,z,r0,r1,tau1,voc,valid`, one row per sample.
void write_baseline_csv(const SampledDataset& data, const FmrlsResult& result,
                        const std::string& path);

/// Header `t,v_b_measured,v_b_predicted,error`.
void write_prediction_csv(const SampledDataset& data,
                          const std::vector<double>& predicted,
                          const std::string& path);

/// Header `z,r0,r1,tau1,voc`: ground-truth parameter curves over a grid.
void write_truth_csv(const EcmTruth& truth, const std::vector<double>& grid,
                     const std::string& path);

std::string format_double(double v);

}  // namespace lpvbat
