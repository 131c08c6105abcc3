#include "npsvc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace npsvc {

namespace {

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_index(std::string_view text, long long& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string format_value(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string format_label(double value) { return format_value(value); }

void Dataset::validate() const {
  if (static_cast<Index>(y.size()) != X.cols())
    throw Error(ErrorKind::invalid_dataset, "label count does not match sample count");
  const auto counts = class_counts();
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] == 0)
      throw Error(ErrorKind::invalid_dataset,
                  "class " + format_label(labels[k]) + " has no samples");
}

std::vector<Index> Dataset::class_counts() const {
  std::vector<Index> counts(labels.size(), 0);
  for (int c : y) {
    if (c < 0 || c >= num_classes())
      throw Error(ErrorKind::invalid_dataset, "class index out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

Dataset Dataset::subset(const std::vector<Index>& columns) const {
  Dataset out;
  out.X.resize(X.rows(), static_cast<Index>(columns.size()));
  out.y.reserve(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.X.col(static_cast<Index>(j)) = X.col(columns[j]);
    out.y.push_back(y[static_cast<std::size_t>(columns[j])]);
  }
  out.labels = labels;
  out.feature_names = feature_names;
  return out;
}

Dataset Dataset::with_features(Index m) const {
  if (m < num_features())
    throw Error(ErrorKind::dimension_mismatch,
                "data has " + std::to_string(num_features()) + " features, expected " +
                    std::to_string(m));
  Dataset out = *this;
  out.X = Matrix::Zero(m, X.cols());
  out.X.topRows(X.rows()) = X;
  return out;
}

Dataset make_dataset(Matrix X, const std::vector<double>& raw_labels) {
  if (static_cast<Index>(raw_labels.size()) != X.cols())
    throw Error(ErrorKind::invalid_dataset, "label count does not match sample count");
  Dataset out;
  out.X = std::move(X);
  out.labels = raw_labels;
  std::sort(out.labels.begin(), out.labels.end());
  out.labels.erase(std::unique(out.labels.begin(), out.labels.end()), out.labels.end());
  out.y.reserve(raw_labels.size());
  for (double v : raw_labels)
    out.y.push_back(static_cast<int>(
        std::lower_bound(out.labels.begin(), out.labels.end(), v) - out.labels.begin()));
  return out;
}

Dataset parse_libsvm(std::istream& in, Index min_features) {
  struct Entry {
    Index col;
    Index row;
    double value;
  };
  std::vector<Entry> entries;
  std::vector<double> raw_labels;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;
    double label = 0.0;
    if (!parse_double(tok, label)) throw ParseError("invalid label '" + tok + "'", line_no);
    const Index col = static_cast<Index>(raw_labels.size());
    long long prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected index:value, got '" + tok + "'", line_no);
      long long idx = 0;
      double value = 0.0;
      if (!parse_index(std::string_view(tok).substr(0, colon), idx) || idx < 1)
        throw ParseError("invalid feature index in '" + tok + "'", line_no);
      if (idx <= prev)
        throw ParseError("feature indices must be strictly ascending at '" + tok + "'",
                         line_no);
      if (!parse_double(std::string_view(tok).substr(colon + 1), value))
        throw ParseError("invalid feature value in '" + tok + "'", line_no);
      prev = idx;
      max_index = std::max<Index>(max_index, idx);
      if (value != 0.0) entries.push_back({col, static_cast<Index>(idx - 1), value});
    }
    raw_labels.push_back(label);
  }
  if (in.bad()) throw Error(ErrorKind::io, "read error while parsing LIBSVM data");
  Matrix X = Matrix::Zero(std::max(max_index, min_features),
                          static_cast<Index>(raw_labels.size()));
  for (const auto& e : entries) X(e.row, e.col) = e.value;
  return make_dataset(std::move(X), raw_labels);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (Index j = 0; j < data.num_samples(); ++j) {
    out << format_label(data.original_label(data.y[static_cast<std::size_t>(j)]));
    for (Index i = 0; i < data.num_features(); ++i)
      if (data.X(i, j) != 0.0) out << ' ' << (i + 1) << ':' << format_value(data.X(i, j));
    out << '\n';
  }
}

Dataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto header = split_on(line, ',');
    if (header.empty() || header.front() != "label")
      throw ParseError("CSV header must start with 'label'", line_no);
    for (std::size_t i = 1; i < header.size(); ++i) names.emplace_back(header[i]);
    break;
  }
  const Index m = static_cast<Index>(names.size());
  std::vector<double> raw_labels;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_on(line, ',');
    if (static_cast<Index>(fields.size()) != m + 1)
      throw ParseError("expected " + std::to_string(m + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    double label = 0.0;
    if (!parse_double(fields[0], label))
      throw ParseError("invalid label '" + std::string(fields[0]) + "'", line_no);
    raw_labels.push_back(label);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      if (!parse_double(fields[i], v))
        throw ParseError("invalid value '" + std::string(fields[i]) + "'", line_no);
      values.push_back(v);
    }
  }
  Matrix X(m, static_cast<Index>(raw_labels.size()));
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < m; ++i) X(i, j) = values[static_cast<std::size_t>(j * m + i)];
  Dataset out = make_dataset(std::move(X), raw_labels);
  out.feature_names = std::move(names);
  return out;
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "label";
  for (Index i = 0; i < data.num_features(); ++i) {
    out << ',';
    if (static_cast<std::size_t>(i) < data.feature_names.size())
      out << data.feature_names[static_cast<std::size_t>(i)];
    else
      out << 'f' << (i + 1);
  }
  out << '\n';
  for (Index j = 0; j < data.num_samples(); ++j) {
    out << format_label(data.original_label(data.y[static_cast<std::size_t>(j)]));
    for (Index i = 0; i < data.num_features(); ++i) out << ',' << format_value(data.X(i, j));
    out << '\n';
  }
}

Dataset load_dataset(const std::string& path, Index min_features) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open data file '" + path + "'");
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  if (!csv) return parse_libsvm(in, min_features);
  Dataset d = parse_csv(in);
  return d.num_features() < min_features ? d.with_features(min_features) : d;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed, Stream stream) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorKind::invalid_argument, "train fraction must lie in (0, 1)");
  data.validate();
  std::vector<std::vector<Index>> by_class(data.labels.size());
  for (Index j = 0; j < data.num_samples(); ++j)
    by_class[static_cast<std::size_t>(data.y[static_cast<std::size_t>(j)])].push_back(j);

  std::vector<Index> train, test;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& members = by_class[k];
    const Index count = static_cast<Index>(members.size());
    if (count < 2)
      throw Error(ErrorKind::invalid_dataset,
                  "class " + format_label(data.labels[k]) +
                      " has a single sample and cannot be stratified");
    auto engine = make_engine(seed, stream, k);
    std::shuffle(members.begin(), members.end(), engine);
    const Index n_train = std::clamp<Index>(
        static_cast<Index>(std::llround(train_fraction * static_cast<double>(count))), 1,
        count - 1);
    train.insert(train.end(), members.begin(), members.begin() + n_train);
    test.insert(test.end(), members.begin() + n_train, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {data.subset(train), data.subset(test)};
}

Matrix AffineTransform::apply(const Matrix& X) const {
  if (X.rows() != mean.size())
    throw Error(ErrorKind::dimension_mismatch, "standardizer dimension mismatch");
  return (X.colwise() - mean).array().colwise() / scale.array();
}

AffineTransform fit_standardizer(const Matrix& X) {
  if (X.cols() == 0) throw Error(ErrorKind::invalid_argument, "cannot standardize empty data");
  AffineTransform t;
  t.mean = X.rowwise().mean();
  const Matrix centered = X.colwise() - t.mean;
  t.scale = (centered.rowwise().squaredNorm() / static_cast<double>(X.cols())).cwiseSqrt();
  for (Index i = 0; i < t.scale.size(); ++i)
    if (!(t.scale(i) > 1e-12 * std::max(1.0, std::abs(t.mean(i))))) t.scale(i) = 1.0;
  return t;
}

Standardized standardize(const Dataset& train, const Dataset& test) {
  Standardized out{train, test, fit_standardizer(train.X)};
  out.train.X = out.transform.apply(train.X);
  out.test.X = out.transform.apply(test.X);
  return out;
}

}  // namespace npsvc
