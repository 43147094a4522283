#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "etpf/lyapunov_monitor.hpp"
#include "etpf/sim_engine.hpp"
#include "etpf/tradeoff.hpp"
#include "etpf/types.hpp"

namespace etpf::io {

/// 17 significant digits, enough to round-trip a double.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace_csv(std::ostream& os, const SimTrace& tr) {
  os << "t";
  for (std::size_t j = 1; j <= tr.n; ++j) os << ",x_" << j;
  for (std::size_t j = 1; j <= tr.m; ++j) os << ",u_" << j;
  for (std::size_t j = 1; j <= tr.n; ++j) os << ",p_" << j;
  os << ",e_norm,threshold,V,L,event_flag,delivery_flag\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    os << fmt(tr.t[i]);
    for (Eigen::Index j = 0; j < tr.x[i].size(); ++j) os << ',' << fmt(tr.x[i](j));
    for (Eigen::Index j = 0; j < tr.u[i].size(); ++j) os << ',' << fmt(tr.u[i](j));
    for (Eigen::Index j = 0; j < tr.p[i].size(); ++j) os << ',' << fmt(tr.p[i](j));
    os << ',' << fmt(tr.e_norm[i]) << ',' << fmt(tr.threshold[i]) << ',' << fmt(tr.V[i]) << ','
       << fmt(tr.L[i]) << ',' << int(tr.event_flag[i]) << ',' << int(tr.delivery_flag[i]) << '\n';
  }
}

inline void write_events_csv(std::ostream& os, const SimTrace& tr) {
  os << "k,t_k,dwell,p_norm,e_norm_before_reset";
  for (std::size_t j = 1; j <= tr.m; ++j) os << ",u_" << j;
  os << '\n';
  const EventLog& ev = tr.events;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    const double dwell = k == 0 ? std::nan("") : ev.event_times[k] - ev.event_times[k - 1];
    os << k << ',' << fmt(ev.event_times[k]) << ',' << fmt(dwell) << ',' << fmt(ev.p_norms[k]) << ','
       << fmt(ev.e_pre_reset[k]);
    for (Eigen::Index j = 0; j < ev.event_controls[k].size(); ++j) os << ',' << fmt(ev.event_controls[k](j));
    os << '\n';
  }
}

inline void write_deliveries_csv(std::ostream& os, const SimTrace& tr) {
  os << "l,tau_l,delivery_time,grid_time\n";
  for (const auto& d : tr.deliveries)
    os << d.index << ',' << fmt(d.transmit_time) << ',' << fmt(d.delivery_time) << ',' << fmt(d.grid_time)
       << '\n';
}

inline void write_heatmap_csv(std::ostream& os, const HeatmapResult& hm) {
  os << "delta_tau,D_psi,avg_xT\n";
  for (const auto& c : hm.cells)
    os << fmt(c.delta_tau) << ',' << fmt(c.d_psi) << ',' << fmt(c.avg_final_norm) << '\n';
}

inline void write_tradeoff_nu_csv(std::ostream& os, const TradeoffTables& t) {
  os << "nu,delta,mu\n";
  for (const auto& r : t.by_nu) os << fmt(r.nu) << ',' << fmt(r.delta) << ',' << fmt(r.mu) << '\n';
}

inline void write_tradeoff_lambda_csv(std::ostream& os, const TradeoffTables& t) {
  os << "lambda,nu_star,grid_nu,cubic_residual,boundary,degenerate,theta_above_one\n";
  for (const auto& r : t.by_lambda)
    os << fmt(r.lambda) << ',' << fmt(r.nu) << ',' << fmt(r.grid_nu) << ',' << fmt(r.cubic_residual) << ','
       << int(r.boundary) << ',' << int(r.degenerate) << ',' << int(r.theta_above_one) << '\n';
}

struct TraceTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw ConfigError("column '" + name + "' not found");
  }
};

/// Reads any of the CSV files written above (numeric cells, one header row).
inline TraceTable read_csv(std::istream& is) {
  TraceTable t;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty CSV");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ConfigError("CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw ConfigError("CSV line " + std::to_string(lineno) + ": wrong number of cells");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string summary_text(const std::string& name, const SimTrace& tr, const DecayReport& decay,
                                double mismatch) {
  std::ostringstream os;
  os << "preset: " << name << "\n";
  os << "steps: " << tr.t.size() << "\n";
  os << "t0: " << fmt(tr.t0) << "\n";
  os << "events: " << tr.events.size() << "\n";
  os << "min_dwell_observed: " << fmt(tr.events.min_dwell_observed()) << "\n";
  os << "dwell_bound: " << fmt(tr.dwell_bound) << " (a=" << fmt(tr.dwell.a) << ", c=" << fmt(tr.dwell.c)
     << ", R=" << fmt(tr.dwell.R) << ")\n";
  os << "final_norm: " << fmt(tr.final_norm()) << "\n";
  os << "diverged: " << (tr.diag.diverged ? "yes" : "no") << "\n";
  if (tr.diag.diverged) os << "divergence_time: " << fmt(tr.diag.divergence_time) << "\n";
  os << "max_w_violation: " << fmt(tr.diag.max_w_violation) << "\n";
  os << "max_prediction_mismatch: " << fmt(mismatch) << "\n";
  os << "deliveries: " << tr.deliveries.size() << "\n";
  os << "max_transmit_snap: " << fmt(tr.diag.max_transmit_snap) << "\n";
  os << "max_delivery_snap: " << fmt(tr.diag.max_delivery_snap) << "\n";
  os << decay.text();
  return os.str();
}

/// Three stacked panels: states with prediction, control, and V.
inline std::string trace_plot_script(std::size_t n, std::size_t m) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set multiplot layout 3,1\n"
     << "set ylabel 'state'\n"
     << "plot ";
  for (std::size_t j = 0; j < n; ++j) {
    os << (j ? ", " : "") << "'trace.csv' using 1:" << 2 + j << " with lines";
    os << ", 'trace.csv' using 1:" << 2 + n + m + j << " with lines dt 2";
  }
  os << "\nset ylabel 'u'\nplot ";
  for (std::size_t j = 0; j < m; ++j)
    os << (j ? ", " : "") << "'trace.csv' using 1:" << 2 + n + j << " with steps";
  os << "\nset ylabel 'V'\nset logscale y\n"
     << "plot 'trace.csv' using 1:" << 2 + 2 * n + m + 2 << " with points pt 7 ps 0.3\n"
     << "unset multiplot\n";
  return os.str();
}

inline std::string heatmap_plot_script() {
  return "set datafile separator ','\n"
         "set xlabel 'delta_tau'\nset ylabel 'D_psi'\nset cblabel 'avg |x(T)|'\n"
         "set logscale cb\nset view map\n"
         "plot 'heatmap.csv' using 1:2:3 every ::1 with points pt 5 ps 3 palette notitle\n";
}

inline std::string tradeoff_plot_script() {
  return "set datafile separator ','\nset key autotitle columnhead\n"
         "set multiplot layout 1,2\n"
         "set xlabel 'nu'\nplot 'tradeoff_nu.csv' using 1:2 with lines, '' using 1:3 with lines\n"
         "set xlabel 'lambda'\nplot 'tradeoff_lambda.csv' using 1:2 with linespoints\n"
         "unset multiplot\n";
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

}  // namespace etpf::io
