#include "dualfl/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace dualfl {

const char* const kTraceColumns =
    "round,beta,E_err_rel,sq_param_err,grad_norm,zeta_sum_norm,max_gap,"
    "total_local_iters";

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string render_trace(const RunTrace& trace) {
  std::string out;
  for (const auto& line : trace.header) {
    out += "# ";
    out += line;
    out += '\n';
  }
  out += kTraceColumns;
  out += '\n';
  for (const auto& row : trace.rows) {
    out += std::to_string(row.round);
    out += ',';
    out += format_real(row.beta);
    out += ',';
    out += format_real(row.energy_err_rel);
    out += ',';
    out += format_real(row.sq_param_err);
    out += ',';
    out += format_real(row.grad_norm);
    out += ',';
    out += format_real(row.zeta_sum_norm);
    out += ',';
    out += format_real(row.max_gap);
    out += ',';
    out += std::to_string(row.total_local_iters);
    out += '\n';
  }
  return out;
}

void emit_trace(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open trace output: " + path);
  out << render_trace(trace);
  out.flush();
  if (!out) throw DataError("write failed for trace output: " + path);
}

}  // namespace dualfl
