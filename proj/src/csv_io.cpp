#include "csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace lpvbat {

namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trimmed(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                  const std::string& path) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    std::ostringstream msg;
    msg << path << ": row " << row + 2 << ", column " << col + 1
        << ": cannot parse '" << cell << "' as a number";
    fail(ErrorCode::ParseError, msg.str());
  }
  return v;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  void header(const std::string& h) { out_ << h << "\n"; }
  template <typename... Args>
  void row(Args... args) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, out_ << format_double(args)), ...);
    out_ << "\n";
  }
  void row_raw(const std::string& line) { out_ << line << "\n"; }
  void close() {
    out_.flush();
    if (!out_) fail(ErrorCode::IoError, "write failed for " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::vector<double>* CsvTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return &data[i];
  return nullptr;
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::ParseError, path + ": empty file");
  CsvTable table;
  table.columns = split_line(line);
  if (table.columns.empty())
    fail(ErrorCode::ParseError, path + ": no header columns");
  table.data.resize(table.columns.size());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trimmed(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != table.columns.size()) {
      std::ostringstream msg;
      msg << path << ": row " << row + 2 << " has " << cells.size()
          << " cells, header has " << table.columns.size();
      fail(ErrorCode::ParseError, msg.str());
    }
    for (std::size_t c = 0; c < cells.size(); ++c)
      table.data[c].push_back(parse_cell(cells[c], row, c, path));
    ++row;
  }
  if (row == 0) fail(ErrorCode::ParseError, path + ": no data rows");
  return table;
}

SampledDataset read_dataset_csv(const std::string& path,
                                const DatasetReadOptions& options,
                                DatasetReadInfo* info) {
  const CsvTable table = read_csv_table(path);
  const auto mapped = [&](const std::string& canonical) {
    auto it = options.column_map.find(canonical);
    return it != options.column_map.end() ? it->second : canonical;
  };
  const auto required = [&](const std::string& canonical) {
    const std::string name = mapped(canonical);
    const std::vector<double>* col = table.find(name);
    if (!col)
      fail(ErrorCode::ParseError,
           path + ": missing required column '" + name + "'");
    return col;
  };

  SampledDataset ds;
  ds.t = *required("t");
  ds.i_b = *required("i_b");
  ds.v_b = *required("v_b");
  if (const auto* z = table.find(mapped("z"))) ds.z = *z;
  if (const auto* zt = table.find(mapped("z_true"))) ds.z_true = *zt;

  if (ds.t.size() < 2) fail(ErrorCode::ParseError, path + ": need >= 2 rows");
  for (std::size_t k = 0; k + 1 < ds.t.size(); ++k)
    if (!(ds.t[k + 1] > ds.t[k]))
      fail(ErrorCode::ParseError,
           path + ": time column not strictly increasing at row " +
               std::to_string(k + 2));

  if (options.discharge_positive)
    for (double& i : ds.i_b) i = -i;

  // Median step, then jitter check.
  std::vector<double> steps(ds.t.size() - 1);
  for (std::size_t k = 0; k + 1 < ds.t.size(); ++k) steps[k] = ds.t[k + 1] - ds.t[k];
  std::vector<double> sorted = steps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double dt = sorted[sorted.size() / 2];
  double max_dev = 0.0;
  for (double s : steps) max_dev = std::max(max_dev, std::abs(s - dt));

  bool resampled = false;
  if (max_dev > options.jitter_tol * dt) {
    // ZOH resample onto a uniform grid at the median step.
    std::fprintf(stderr,
                 "lpvbat: warning: %s has non-uniform sampling (max dev %.3g s); "
                 "resampling onto dt = %.9g s\n",
                 path.c_str(), max_dev, dt);
    const double t0 = ds.t.front();
    const double t_end = ds.t.back();
    const std::size_t n = static_cast<std::size_t>(std::floor((t_end - t0) / dt)) + 1;
    SampledDataset rs;
    rs.dt = dt;
    std::size_t src = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double tk = t0 + k * dt;
      while (src + 1 < ds.t.size() && ds.t[src + 1] <= tk + 1e-12) ++src;
      rs.t.push_back(tk);
      rs.i_b.push_back(ds.i_b[src]);
      rs.v_b.push_back(ds.v_b[src]);
      if (!ds.z.empty()) rs.z.push_back(ds.z[src]);
      if (!ds.z_true.empty()) rs.z_true.push_back(ds.z_true[src]);
    }
    ds = std::move(rs);
    resampled = true;
  } else {
    ds.dt = dt;
  }

  ds.validate();
  if (info) {
    info->resampled = resampled;
    info->current_negated = options.discharge_positive;
    info->dt = ds.dt;
  }
  return ds;
}

void write_dataset_csv(const SampledDataset& data, const std::string& path) {
  CsvWriter w(path);
  const bool truth = !data.z_true.empty();
  const bool soc = !data.z.empty() && !truth;
  if (truth)
    w.header("t,i_b,v_b,z_true");
  else if (soc)
    w.header("t,i_b,v_b,z");
  else
    w.header("t,i_b,v_b");
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (truth)
      w.row(data.t[k], data.i_b[k], data.v_b[k], data.z_true[k]);
    else if (soc)
      w.row(data.t[k], data.i_b[k], data.v_b[k], data.z[k]);
    else
      w.row(data.t[k], data.i_b[k], data.v_b[k]);
  }
  w.close();
}

void write_curves_csv(const PhysicalCurves& curves, const std::string& path) {
  CsvWriter w(path);
  w.header("z,r0,r1,tau1,voc,valid");
  for (std::size_t k = 0; k < curves.z.size(); ++k)
    w.row(curves.z[k], curves.r0[k], curves.r1[k], curves.tau1[k],
          curves.voc[k], static_cast<double>(curves.valid[k]));
  w.close();
}

PhysicalCurves read_curves_csv(const std::string& path) {
  const CsvTable table = read_csv_table(path);
  const auto need = [&](const char* name) {
    const std::vector<double>* col = table.find(name);
    if (!col)
      fail(ErrorCode::ParseError,
           path + ": missing required column '" + std::string(name) + "'");
    return *col;
  };
  PhysicalCurves out;
  out.z = need("z");
  out.r0 = need("r0");
  out.r1 = need("r1");
  out.tau1 = need("tau1");
  out.voc = need("voc");
  if (const auto* valid = table.find("valid")) {
    out.valid.resize(valid->size());
    for (std::size_t k = 0; k < valid->size(); ++k)
      out.valid[k] = (*valid)[k] != 0.0 ? 1 : 0;
  } else {
    out.valid.assign(out.z.size(), 1);
  }
  return out;
}

void write_baseline_csv(const SampledDataset& data, const FmrlsResult& result,
                        const std::string& path) {
  if (result.r0.size() != data.size())
    fail(ErrorCode::LengthMismatch, "write_baseline_csv: result/dataset mismatch");
  CsvWriter w(path);
  w.header("t,z,r0,r1,tau1,voc,valid");
  const bool soc = !data.z.empty();
  for (std::size_t k = 0; k < data.size(); ++k)
    w.row(data.t[k], soc ? data.z[k] : std::nan(""), result.r0[k], result.r1[k],
          result.tau1[k], result.voc[k], static_cast<double>(result.valid[k]));
  w.close();
}

void write_prediction_csv(const SampledDataset& data,
                          const std::vector<double>& predicted,
                          const std::string& path) {
  if (predicted.size() != data.size())
    fail(ErrorCode::LengthMismatch, "write_prediction_csv: length mismatch");
  CsvWriter w(path);
  w.header("t,v_b_measured,v_b_predicted,error");
  for (std::size_t k = 0; k < data.size(); ++k)
    w.row(data.t[k], data.v_b[k], predicted[k], data.v_b[k] - predicted[k]);
  w.close();
}

void write_truth_csv(const EcmTruth& truth, const std::vector<double>& grid,
                     const std::string& path) {
  CsvWriter w(path);
  w.header("z,r0,r1,tau1,voc");
  for (double z : grid)
    w.row(z, truth.r0(z), truth.r1(z), truth.tau1(z), truth.voc(z));
  w.close();
}

}  // namespace lpvbat
