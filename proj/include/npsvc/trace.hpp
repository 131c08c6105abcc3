#pragma once

#include "npsvc/deep.hpp"
#include "npsvc/knpsvc.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace npsvc {

/// Shortest round-trip decimal text; the basis of byte-identical CSVs.
std::string format_number(double value);

/// iter,primal,dual,gap,J_1..J_K,tau_1..tau_K,orth_residual
void write_knpsvc_trace(std::ostream& out, const std::vector<TraceRow>& trace);
/// epoch,batch,J_1..J_K,tau_1..tau_K,lr,gamma
void write_dnpsvc_trace(std::ostream& out, const std::vector<DTraceRow>& trace);

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a column, or −1.
  int find(const std::string& name) const;
  /// Columns named `<prefix>1`, `<prefix>2`, ... in order.
  std::vector<int> numbered(const std::string& prefix) const;
};

CsvTable read_csv_table(std::istream& in);
CsvTable read_csv_table_file(const std::string& path);
void write_csv_table(std::ostream& out, const CsvTable& table);

/// step,primal,dual,gap,relative_gap from either trace kind. Deep traces
/// use the running row number as step.
CsvTable gap_curve(const CsvTable& trace);

/// class,J (final row of the trace), one row per class.
CsvTable objective_table(const CsvTable& trace);

/// class,J_a,J_b for a radar overlay of two runs over the same classes.
CsvTable paired_objectives(const CsvTable& a, const CsvTable& b);

}  // namespace npsvc
