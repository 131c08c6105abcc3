#include "npsvc/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace npsvc {

namespace {

void write_header(std::ostream& out, std::initializer_list<const char*> head, Index K,
                  std::initializer_list<const char*> tail, bool with_tau = true) {
  bool first = true;
  auto emit = [&](const std::string& s) {
    if (!first) out << ',';
    out << s;
    first = false;
  };
  for (const char* h : head) emit(h);
  for (Index l = 1; l <= K; ++l) emit("J_" + std::to_string(l));
  if (with_tau)
    for (Index l = 1; l <= K; ++l) emit("tau_" + std::to_string(l));
  for (const char* t : tail) emit(t);
  out << '\n';
}

void write_values(std::ostream& out, const Vector& v) {
  for (Index l = 0; l < v.size(); ++l) out << ',' << format_number(v(l));
}

std::vector<double> row_values(const std::vector<double>& row, const std::vector<int>& cols) {
  std::vector<double> out;
  out.reserve(cols.size());
  for (int c : cols) out.push_back(row[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_knpsvc_trace(std::ostream& out, const std::vector<TraceRow>& trace) {
  const Index K = trace.empty() ? 0 : trace.front().J.size();
  write_header(out, {"iter", "primal", "dual", "gap"}, K, {"orth_residual"});
  for (const TraceRow& r : trace) {
    out << r.iter << ',' << format_number(r.primal) << ',' << format_number(r.dual) << ','
        << format_number(r.gap());
    write_values(out, r.J);
    write_values(out, r.tau);
    out << ',' << format_number(r.orth_residual) << '\n';
  }
}

void write_dnpsvc_trace(std::ostream& out, const std::vector<DTraceRow>& trace) {
  const Index K = trace.empty() ? 0 : trace.front().J.size();
  write_header(out, {"epoch", "batch"}, K, {"lr", "gamma"});
  for (const DTraceRow& r : trace) {
    out << r.epoch << ',' << r.batch;
    write_values(out, r.J);
    write_values(out, r.tau);
    out << ',' << format_number(r.lr) << ',' << format_number(r.gamma) << '\n';
  }
}

int CsvTable::find(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::vector<int> CsvTable::numbered(const std::string& prefix) const {
  std::vector<int> cols;
  for (int l = 1;; ++l) {
    const int c = find(prefix + std::to_string(l));
    if (c < 0) break;
    cols.push_back(c);
  }
  return cols;
}

CsvTable read_csv_table(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  auto fields = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.header.empty()) {
      t.header = fields(line);
      continue;
    }
    const auto f = fields(line);
    if (f.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       line_no);
    std::vector<double> row;
    row.reserve(f.size());
    for (const auto& s : f) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("non-numeric field '" + s + "'", line_no);
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(ErrorKind::parse, "trace file is empty");
  return t;
}

CsvTable read_csv_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open trace file '" + path + "'");
  return read_csv_table(in);
}

void write_csv_table(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

CsvTable gap_curve(const CsvTable& trace) {
  const auto J = trace.numbered("J_");
  const auto tau = trace.numbered("tau_");
  if (J.empty() || J.size() != tau.size())
    throw Error(ErrorKind::invalid_argument, "trace lacks matching J_l and tau_l columns");
  const int iter = trace.find("iter");
  CsvTable out;
  out.header = {"step", "primal", "dual", "gap", "relative_gap"};
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    const auto& row = trace.rows[r];
    const auto j = row_values(row, J);
    const auto w = row_values(row, tau);
    const double primal = *std::max_element(j.begin(), j.end());
    double dual = 0.0;
    for (std::size_t l = 0; l < j.size(); ++l) dual += w[l] * j[l];
    const double step = iter >= 0 ? row[static_cast<std::size_t>(iter)] : double(r + 1);
    const double gap = primal - dual;
    out.rows.push_back({step, primal, dual, gap, dual != 0.0 ? gap / std::abs(dual) : 0.0});
  }
  return out;
}

CsvTable objective_table(const CsvTable& trace) {
  const auto J = trace.numbered("J_");
  if (J.empty()) throw Error(ErrorKind::invalid_argument, "trace lacks J_l columns");
  if (trace.rows.empty()) throw Error(ErrorKind::invalid_argument, "trace has no rows");
  CsvTable out;
  out.header = {"class", "J"};
  const auto& last = trace.rows.back();
  for (std::size_t l = 0; l < J.size(); ++l)
    out.rows.push_back({double(l + 1), last[static_cast<std::size_t>(J[l])]});
  return out;
}

CsvTable paired_objectives(const CsvTable& a, const CsvTable& b) {
  const CsvTable ta = objective_table(a);
  const CsvTable tb = objective_table(b);
  if (ta.rows.size() != tb.rows.size())
    throw Error(ErrorKind::dimension_mismatch, "traces cover different class counts");
  CsvTable out;
  out.header = {"class", "J_a", "J_b"};
  for (std::size_t l = 0; l < ta.rows.size(); ++l)
    out.rows.push_back({ta.rows[l][0], ta.rows[l][1], tb.rows[l][1]});
  return out;
}

}  // namespace npsvc
