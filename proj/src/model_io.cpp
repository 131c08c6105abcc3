#include "npsvc/model_io.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace npsvc {

namespace {

using nlohmann::json;
namespace b64 = boost::beast::detail::base64;

static_assert(std::endian::native == std::endian::little, "model files assume little endian");

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorKind::corrupt_payload, "corrupt model file: " + what);
}

std::string encode_row(const double* data, std::size_t count) {
  std::string out(b64::encoded_size(count * sizeof(double)), '\0');
  out.resize(b64::encode(out.data(), data, count * sizeof(double)));
  return out;
}

void decode_row(const std::string& text, double* dest, std::size_t count) {
  const std::size_t bytes = count * sizeof(double);
  if (b64::decoded_size(text.size()) < bytes || text.size() != b64::encoded_size(bytes))
    corrupt("matrix row has the wrong length");
  std::string buf(b64::decoded_size(text.size()), '\0');
  const auto [written, read] = b64::decode(buf.data(), text.data(), text.size());
  // The decoder stops at '=' padding, so only padding may follow what it read.
  const bool tail_is_padding = text.find_first_not_of('=', read) == std::string::npos;
  if (written != bytes || !tail_is_padding) corrupt("matrix row is not valid base64");
  std::memcpy(dest, buf.data(), bytes);
}

json encode_matrix(const Matrix& M) {
  json rows = json::array();
  std::vector<double> row(static_cast<std::size_t>(M.cols()));
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) row[static_cast<std::size_t>(j)] = M(i, j);
    rows.push_back(encode_row(row.data(), row.size()));
  }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", rows}};
}

Matrix decode_matrix(const json& j) {
  if (!j.is_object()) corrupt("matrix entry is not an object");
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Index>(data.size()) != rows)
    corrupt("matrix shape does not match its data");
  Matrix M(rows, cols);
  std::vector<double> row(static_cast<std::size_t>(cols));
  for (Index i = 0; i < rows; ++i) {
    decode_row(data[static_cast<std::size_t>(i)].get<std::string>(), row.data(), row.size());
    for (Index j2 = 0; j2 < cols; ++j2) M(i, j2) = row[static_cast<std::size_t>(j2)];
  }
  return M;
}

json encode_vector(const Vector& v) { return encode_matrix(v.transpose()); }

Vector decode_vector(const json& j) {
  const Matrix M = decode_matrix(j);
  if (M.rows() != 1 && M.size() > 0) corrupt("vector entry must have one row");
  return M.reshaped();
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const char* where) {
  if (!obj.is_object()) corrupt(std::string(where) + " is not an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw Error(ErrorKind::version_mismatch, "unknown field '" + item.key() + "' in " + where +
                                                   " for format version " +
                                                   std::to_string(kModelFormatVersion));
}

json encode_kernel_predictor(const KernelPredictor& p) {
  json k = {{"kind", to_string(p.kernel.kind)}, {"bandwidth", p.kernel.bandwidth}};
  if (p.kernel.jitter) k["jitter"] = *p.kernel.jitter;
  return {{"kernel", k},
          {"support", encode_matrix(p.support)},
          {"coef", encode_matrix(p.coef)},
          {"denom", encode_vector(p.denom)}};
}

KernelPredictor decode_kernel_predictor(const json& j) {
  check_keys(j, {"kernel", "support", "coef", "denom"}, "predictor");
  const json& k = j.at("kernel");
  check_keys(k, {"kind", "bandwidth", "jitter"}, "kernel");
  KernelPredictor p;
  p.kernel.kind = kernel_kind_from_string(k.at("kind").get<std::string>());
  p.kernel.bandwidth = k.at("bandwidth").get<double>();
  if (k.contains("jitter")) p.kernel.jitter = k.at("jitter").get<double>();
  p.support = decode_matrix(j.at("support"));
  p.coef = decode_matrix(j.at("coef"));
  p.denom = decode_vector(j.at("denom"));
  return p;
}

json encode_deep(const DModel& m) {
  const MlpEncoder& e = m.encoder;
  return {{"prior", {{"kind", to_string(m.prior.kind)},
                     {"input_dim", m.prior.input_dim},
                     {"projection", encode_matrix(m.prior.projection)}}},
          {"encoder", {{"W1", encode_matrix(e.W1)}, {"b1", encode_vector(e.b1)},
                       {"W2", encode_matrix(e.W2)}, {"b2", encode_vector(e.b2)},
                       {"W3", encode_matrix(e.W3)}, {"b3", encode_vector(e.b3)}}},
          {"W", encode_matrix(m.W)},
          {"tau", encode_vector(m.tau)}};
}

DModel decode_deep(const json& j) {
  check_keys(j, {"prior", "encoder", "W", "tau"}, "deep model");
  DModel m;
  const json& p = j.at("prior");
  check_keys(p, {"kind", "input_dim", "projection"}, "prior");
  m.prior.kind = prior_kind_from_string(p.at("kind").get<std::string>());
  m.prior.input_dim = p.at("input_dim").get<Index>();
  m.prior.projection = decode_matrix(p.at("projection"));
  const json& e = j.at("encoder");
  check_keys(e, {"W1", "b1", "W2", "b2", "W3", "b3"}, "encoder");
  m.encoder.W1 = decode_matrix(e.at("W1"));
  m.encoder.b1 = decode_vector(e.at("b1"));
  m.encoder.W2 = decode_matrix(e.at("W2"));
  m.encoder.b2 = decode_vector(e.at("b2"));
  m.encoder.W3 = decode_matrix(e.at("W3"));
  m.encoder.b3 = decode_vector(e.at("b3"));
  m.W = decode_matrix(j.at("W"));
  m.tau = decode_vector(j.at("tau"));
  return m;
}

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::knpsvc: return "knpsvc";
    case ModelKind::twsvm: return "twsvm";
    case ModelKind::dnpsvc: return "dnpsvc";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "knpsvc") return ModelKind::knpsvc;
  if (name == "twsvm") return ModelKind::twsvm;
  if (name == "dnpsvc") return ModelKind::dnpsvc;
  throw Error(ErrorKind::invalid_argument, "unknown model kind '" + name + "'");
}

Index ModelFile::num_features() const {
  return kind == ModelKind::dnpsvc ? deep.input_dim() : kernel.num_features();
}

void ModelFile::validate() const {
  if (kind == ModelKind::dnpsvc)
    deep.validate();
  else
    kernel.validate();
  const int K = kind == ModelKind::dnpsvc ? deep.num_classes() : kernel.num_classes();
  if (K != num_classes())
    throw Error(ErrorKind::invalid_argument, "label table does not match the class count");
  if (standardizer && (standardizer->mean.size() != num_features() ||
                       standardizer->scale.size() != num_features()))
    throw Error(ErrorKind::invalid_argument, "standardizer does not match the feature count");
}

Matrix ModelFile::decision(const Matrix& X) const {
  if (X.rows() != num_features())
    throw Error(ErrorKind::dimension_mismatch,
                "input has " + std::to_string(X.rows()) + " features, model expects " +
                    std::to_string(num_features()));
  const Matrix Z = standardizer ? standardizer->apply(X) : X;
  return kind == ModelKind::dnpsvc ? decision_dnpsvc(deep, Z) : kernel.decision(Z);
}

std::vector<int> ModelFile::predict(const Matrix& X) const {
  if (X.rows() != num_features())
    throw Error(ErrorKind::dimension_mismatch,
                "input has " + std::to_string(X.rows()) + " features, model expects " +
                    std::to_string(num_features()));
  if (X.cols() == 0) return {};
  const Matrix Z = standardizer ? standardizer->apply(X) : X;
  return kind == ModelKind::dnpsvc ? predict_dnpsvc(deep, Z) : kernel.predict(Z);
}

std::string save_model(const ModelFile& model) {
  model.validate();
  json j;
  j["format"] = "npsvc-model";
  j["format_version"] = kModelFormatVersion;
  j["kind"] = to_string(model.kind);
  j["labels"] = model.labels;
  j["seed"] = model.seed;
  j["num_features"] = model.num_features();
  j["hyperparameters"] = model.hyperparameters;
  if (model.standardizer)
    j["standardizer"] = {{"mean", encode_vector(model.standardizer->mean)},
                         {"scale", encode_vector(model.standardizer->scale)}};
  if (model.kind == ModelKind::dnpsvc)
    j["deep"] = encode_deep(model.deep);
  else
    j["predictor"] = encode_kernel_predictor(model.kernel);
  return j.dump(1) + "\n";
}

ModelFile load_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  if (!j.is_object() || !j.contains("format_version")) corrupt("missing format_version");
  if (!j.at("format_version").is_number_integer() ||
      j.at("format_version").get<long long>() != kModelFormatVersion)
    throw Error(ErrorKind::version_mismatch,
                "model file has format version " + j.at("format_version").dump() +
                    ", this build reads version " + std::to_string(kModelFormatVersion));
  check_keys(j,
             {"format", "format_version", "kind", "labels", "seed", "num_features",
              "hyperparameters", "standardizer", "predictor", "deep"},
             "model file");
  ModelFile m;
  try {
    if (j.at("format").get<std::string>() != "npsvc-model") corrupt("not an npsvc model file");
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.labels = j.at("labels").get<std::vector<double>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.hyperparameters = j.at("hyperparameters").get<std::map<std::string, double>>();
    if (j.contains("standardizer")) {
      const json& s = j.at("standardizer");
      check_keys(s, {"mean", "scale"}, "standardizer");
      m.standardizer = AffineTransform{decode_vector(s.at("mean")), decode_vector(s.at("scale"))};
    }
    if (m.kind == ModelKind::dnpsvc)
      m.deep = decode_deep(j.at("deep"));
    else
      m.kernel = decode_kernel_predictor(j.at("predictor"));
    if (j.at("num_features").get<Index>() != m.num_features())
      corrupt("feature count does not match the stored model");
    m.validate();
  } catch (const json::exception& e) {
    corrupt(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::version_mismatch || e.kind() == ErrorKind::corrupt_payload) throw;
    corrupt(e.what());
  }
  return m;
}

void save_model_file(const ModelFile& model, const std::string& path) {
  const std::string text = save_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write model file '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "failed writing model file '" + path + "'");
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

}  // namespace npsvc
