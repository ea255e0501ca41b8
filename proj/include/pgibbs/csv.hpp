#ifndef PGIBBS_CSV_HPP
#define PGIBBS_CSV_HPP

// CSV readers and writers for datasets and experiment outputs. Reals are
// written with 17 significant digits so that every double round-trips.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/poisson_ar1.hpp"

namespace pgibbs::csv {

inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

inline void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

inline void write_dataset(std::ostream& os, const Dataset& data) {
  os << "t,y\n";
  for (std::size_t t = 0; t < data.size(); ++t) os << t << ',' << data.counts[t] << '\n';
}

inline void write_truth(std::ostream& os, const Trajectory<double>& x) {
  os << "t,x\n";
  for (std::size_t t = 0; t < x.size(); ++t) os << t << ',' << format_real(x[t]) << '\n';
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view field, const std::string& where) {
  while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw IoError(where + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

/// Reads a `t,y` file. Rows must be in time order starting at 0; counts must be >= 0.
inline Dataset read_dataset(std::istream& is, const std::string& name = "dataset") {
  std::string line;
  if (!std::getline(is, line)) throw IoError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,y") throw IoError(name + ": expected header 't,y', got '" + line + "'");
  Dataset data;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::string where = name + ":" + std::to_string(row);
    const auto fields = detail::split(line);
    if (fields.size() != 2) throw IoError(where + ": expected 2 fields");
    const auto t = detail::parse_field<std::size_t>(fields[0], where);
    const auto y = detail::parse_field<std::int64_t>(fields[1], where);
    if (t != data.counts.size()) throw IoError(where + ": time index " + std::to_string(t) + " out of order");
    if (y < 0) throw IoError(where + ": negative count");
    data.counts.push_back(y);
  }
  if (data.counts.empty()) throw IoError(name + ": no rows");
  return data;
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  return read_dataset(is, path.string());
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  auto os = open_output(path);
  write_dataset(os, data);
  finish(os, path);
}

inline void write_truth(const std::filesystem::path& path, const Trajectory<double>& x) {
  auto os = open_output(path);
  write_truth(os, x);
  finish(os, path);
}

inline void write_params_header(std::ostream& os) { os << "iter,mu,rho,sigma2\n"; }

inline void write_params_row(std::ostream& os, std::size_t iter, const PoissonAr1Params& p) {
  os << iter << ',' << format_real(p.mu) << ',' << format_real(p.rho) << ',' << format_real(p.sigma2) << '\n';
}

inline void write_paths_header(std::ostream& os) { os << "iter,t,x\n"; }

inline void write_path_rows(std::ostream& os, std::size_t iter, const Trajectory<double>& x) {
  for (std::size_t t = 0; t < x.size(); ++t) os << iter << ',' << t << ',' << format_real(x[t]) << '\n';
}

inline void write_acf_header(std::ostream& os) { os << "variable,lag,acf\n"; }

inline void write_acf_rows(std::ostream& os, std::string_view variable, const std::vector<double>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) os << variable << ',' << k << ',' << format_real(values[k]) << '\n';
}

inline void write_update_rate(std::ostream& os, const std::vector<double>& rates) {
  os << "t,rate\n";
  for (std::size_t t = 0; t < rates.size(); ++t) os << t << ',' << format_real(rates[t]) << '\n';
}

inline void write_coupling_header(std::ostream& os) { os << "N,reps,coupled_fraction,stderr\n"; }

inline void write_coupling_row(std::ostream& os, std::size_t n, std::size_t reps, double fraction, double se) {
  os << n << ',' << reps << ',' << format_real(fraction) << ',' << format_real(se) << '\n';
}

}  // namespace pgibbs::csv

#endif  // PGIBBS_CSV_HPP
