#include "sz3d/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <zlib.h>

#include "sz3d/errors.hpp"
#include "text_format.hpp"

namespace sz3d {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace {

using Code = FormatError::Code;
constexpr char kMagic[8] = {'S', 'Z', '3', 'D', 'M', 'O', 'D', 'L'};
constexpr std::size_t kHeader = 8 + 4 + 8;

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Cursor {
 public:
  Cursor(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) throw FormatError(Code::Malformed, "record runs past the end of the payload");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const std::uint8_t* data, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

// ------------------------------------------------------------------ record sets

class RecordWriter {
 public:
  void text(const std::string& name, std::string value) { records.push_back({name, std::move(value)}); }
  void array(const std::string& name, std::vector<std::size_t> shape, std::vector<double> values) {
    records.push_back({name, ArrayRecord{std::move(shape), std::move(values)}});
  }
  void tensor(const std::string& name, const Tensor& t) { array(name, t.shape(), t.values()); }
  void matrix(const std::string& name, const Eigen::MatrixXd& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    array(name, {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(v));
  }
  void vector(const std::string& name, const Eigen::VectorXd& x) {
    array(name, {static_cast<std::size_t>(x.size())}, std::vector<double>(x.data(), x.data() + x.size()));
  }
  std::vector<Record> records;
};

class RecordReader {
 public:
  explicit RecordReader(const std::vector<Record>& records) {
    for (const auto& r : records)
      if (!by_name_.emplace(r.name, &r).second)
        throw FormatError(Code::Malformed, "duplicate record '" + r.name + "'");
  }
  bool has(const std::string& name) const { return by_name_.count(name) != 0; }
  const std::string& text(const std::string& name) const {
    const auto* s = std::get_if<std::string>(&find(name).value);
    if (!s) throw FormatError(Code::Malformed, "record '" + name + "' is not text");
    return *s;
  }
  const ArrayRecord& array(const std::string& name) const {
    const auto* a = std::get_if<ArrayRecord>(&find(name).value);
    if (!a) throw FormatError(Code::Malformed, "record '" + name + "' is not an array");
    return *a;
  }
  Tensor tensor(const std::string& name) const {
    const ArrayRecord& a = array(name);
    return Tensor(a.shape, a.values);
  }
  Eigen::MatrixXd matrix(const std::string& name) const {
    const ArrayRecord& a = array(name);
    if (a.shape.size() != 2) throw FormatError(Code::Malformed, "record '" + name + "' is not a matrix");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = a.values[i++];
    return m;
  }
  Eigen::VectorXd vector(const std::string& name) const {
    const ArrayRecord& a = array(name);
    if (a.shape.size() != 1) throw FormatError(Code::Malformed, "record '" + name + "' is not a vector");
    return Eigen::Map<const Eigen::VectorXd>(a.values.data(), static_cast<Eigen::Index>(a.values.size()));
  }
  std::map<std::string, std::string> meta(const std::string& name) const {
    std::map<std::string, std::string> out;
    for (auto& [k, v] : text::parse_key_values(text(name))) out[k] = v;
    return out;
  }

 private:
  const Record& find(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw FormatError(Code::Malformed, "missing record '" + name + "'");
    return *it->second;
  }
  std::map<std::string, const Record*> by_name_;
};

const std::string& meta_get(const std::map<std::string, std::string>& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw FormatError(Code::Malformed, "missing field '" + key + "'");
  return it->second;
}

// ------------------------------------------------------------------ per type

void write_network(RecordWriter& w, const std::string& p, const TrainedModel& model) {
  if (!model.arch) throw ConfigError("cannot save a network without its architecture spec");
  w.text(p + "arch", model.arch->to_text());
  w.text(p + "train", model.config.to_text());
  w.text(p + "final_loss", text::format_double(model.final_loss));
  w.array(p + "loss_history", {model.loss_history.size()}, model.loss_history);
  const auto params = model.network.parameters();
  w.text(p + "param_count", std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) w.tensor(p + "param" + std::to_string(i), params[i]->value);
}

TrainedModel read_network(const RecordReader& r, const std::string& p) {
  TrainedModel model;
  model.arch = ArchSpec::parse(r.text(p + "arch"));
  model.config = TrainConfig::parse(r.text(p + "train"));
  model.final_loss = text::parse_double(r.text(p + "final_loss"), "final_loss");
  model.loss_history = r.array(p + "loss_history").values;
  model.network = build_network(*model.arch, 0);
  auto params = model.network.parameters();
  const auto count = text::parse_uint(r.text(p + "param_count"), "param_count");
  if (count != params.size())
    throw FormatError(Code::Malformed, "container has " + std::to_string(count) + " parameters, architecture has " +
                                           std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = r.tensor(p + "param" + std::to_string(i));
    if (t.shape() != params[i]->value.shape())
      throw FormatError(Code::Malformed, "parameter " + std::to_string(i) + " has shape " + shape_str(t.shape()) +
                                             ", expected " + shape_str(params[i]->value.shape()));
    params[i]->value = std::move(t);
  }
  return model;
}

void write_svm(RecordWriter& w, const std::string& p, const SvmModel& m) {
  w.text(p + "meta", std::string("kernel=") + (m.kernel.kind == KernelKind::Linear ? "linear" : "rbf") +
                         "\ngamma=" + text::format_double(m.kernel.gamma) + "\nC=" + text::format_double(m.C) +
                         "\nbias=" + text::format_double(m.bias) + "\n");
  w.matrix(p + "support_vectors", m.support_vectors);
  w.vector(p + "dual_coef", m.dual_coef);
}

SvmModel read_svm(const RecordReader& r, const std::string& p) {
  const auto meta = r.meta(p + "meta");
  SvmModel m;
  const std::string& kind = meta_get(meta, "kernel");
  if (kind != "linear" && kind != "rbf") throw FormatError(Code::Malformed, "unknown kernel '" + kind + "'");
  m.kernel.kind = kind == "linear" ? KernelKind::Linear : KernelKind::Rbf;
  m.kernel.gamma = text::parse_double(meta_get(meta, "gamma"), "gamma");
  m.C = text::parse_double(meta_get(meta, "C"), "C");
  m.bias = text::parse_double(meta_get(meta, "bias"), "bias");
  m.support_vectors = r.matrix(p + "support_vectors");
  m.dual_coef = r.vector(p + "dual_coef");
  if (m.dual_coef.size() != m.support_vectors.rows())
    throw FormatError(Code::Malformed, "support vector and coefficient counts differ");
  return m;
}

void write_pca(RecordWriter& w, const std::string& p, const PcaModel& m) {
  w.text(p + "meta", "total_variance=" + text::format_double(m.total_variance) +
                         "\ndegenerate=" + (m.degenerate ? "1" : "0") + "\n");
  w.vector(p + "mean", m.mean);
  w.matrix(p + "components", m.components);
  w.vector(p + "eigenvalues", m.eigenvalues);
}

PcaModel read_pca(const RecordReader& r, const std::string& p) {
  const auto meta = r.meta(p + "meta");
  PcaModel m;
  m.total_variance = text::parse_double(meta_get(meta, "total_variance"), "total_variance");
  m.degenerate = text::parse_bool(meta_get(meta, "degenerate"), "degenerate");
  m.mean = r.vector(p + "mean");
  m.components = r.matrix(p + "components");
  m.eigenvalues = r.vector(p + "eigenvalues");
  if (m.components.cols() != m.mean.size() && m.components.rows() > 0)
    throw FormatError(Code::Malformed, "PCA component width differs from the mean length");
  if (m.components.rows() == 0) m.components.resize(0, m.mean.size());
  return m;
}

void write_classifier(RecordWriter& w, const std::string& p, const Classifier& c) {
  if (const auto* cnn = std::get_if<CnnClassifier>(&c)) {
    w.text(p + "kind", "cnn");
    write_network(w, p, cnn->model);
    w.tensor(p + "input_mean", cnn->input_mean);
  } else if (const auto* svm = std::get_if<SvmClassifier>(&c)) {
    w.text(p + "kind", "svm");
    write_svm(w, p + "svm/", svm->svm);
    for (std::size_t m = 0; m < 3; ++m) write_pca(w, p + "pca" + std::to_string(m) + "/", svm->pca[m]);
  } else {
    w.text(p + "kind", "constant");
    w.text(p + "class", std::to_string(std::get<ConstantClassifier>(c).cls));
  }
}

Classifier read_classifier(const RecordReader& r, const std::string& p) {
  const std::string& kind = r.text(p + "kind");
  if (kind == "cnn") {
    CnnClassifier c{read_network(r, p), r.tensor(p + "input_mean")};
    return c;
  }
  if (kind == "svm") {
    SvmClassifier c;
    c.svm = read_svm(r, p + "svm/");
    for (std::size_t m = 0; m < 3; ++m) c.pca[m] = read_pca(r, p + "pca" + std::to_string(m) + "/");
    return c;
  }
  if (kind == "constant") {
    const auto cls = text::parse_uint(r.text(p + "class"), "class");
    if (cls > 1) throw FormatError(Code::Malformed, "constant class must be 0 or 1");
    return ConstantClassifier{static_cast<int>(cls)};
  }
  throw FormatError(Code::Malformed, "unknown model kind '" + kind + "'");
}

std::vector<Record> load_records(const std::filesystem::path& path) {
  try {
    return decode_records(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(e.code(), path.string() + ": " + e.what());
  }
}

void expect_kind(const RecordReader& r, const std::string& want) {
  const std::string& kind = r.text("kind");
  if (kind != want) throw FormatError(Code::Malformed, "container holds a '" + kind + "', expected '" + want + "'");
}

}  // namespace

std::vector<std::uint8_t> encode_records(const std::vector<Record>& records, std::uint32_t version) {
  std::vector<std::uint8_t> payload;
  put<std::uint32_t>(payload, static_cast<std::uint32_t>(records.size()));
  for (const Record& r : records) {
    if (r.name.size() > 0xffff) throw ConfigError("record name too long");
    const bool is_text = std::holds_alternative<std::string>(r.value);
    put<std::uint8_t>(payload, is_text ? 0 : 1);
    put<std::uint16_t>(payload, static_cast<std::uint16_t>(r.name.size()));
    payload.insert(payload.end(), r.name.begin(), r.name.end());
    if (is_text) {
      const auto& s = std::get<std::string>(r.value);
      put<std::uint64_t>(payload, s.size());
      payload.insert(payload.end(), s.begin(), s.end());
    } else {
      const auto& a = std::get<ArrayRecord>(r.value);
      std::size_t n = 1;
      for (std::size_t e : a.shape) n *= e;
      if (n != a.values.size()) throw ShapeError("array record '" + r.name + "' shape does not match its values");
      put<std::uint32_t>(payload, static_cast<std::uint32_t>(a.shape.size()));
      for (std::size_t e : a.shape) put<std::uint64_t>(payload, e);
      const auto* p = reinterpret_cast<const std::uint8_t*>(a.values.data());
      payload.insert(payload.end(), p, p + 8 * a.values.size());
    }
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put<std::uint32_t>(out, version);
  put<std::uint64_t>(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  put<std::uint32_t>(out, crc(out.data(), out.size()));
  return out;
}

std::vector<Record> decode_records(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    if (bytes.size() < 8 && std::memcmp(bytes.data(), kMagic, bytes.size()) == 0)
      throw FormatError(Code::Truncated, "model file truncated inside the header");
    throw FormatError(Code::BadMagic, "not a model container (bad magic)");
  }
  if (bytes.size() < kHeader + 4) throw FormatError(Code::Truncated, "model file truncated inside the header");
  std::uint64_t payload_size;
  std::memcpy(&payload_size, bytes.data() + 12, 8);
  const std::size_t available = bytes.size() - kHeader - 4;
  if (payload_size > available)
    throw FormatError(Code::Truncated, "model file truncated: payload declares " + std::to_string(payload_size) +
                                           " bytes, " + std::to_string(available) + " present");
  if (payload_size < available) throw FormatError(Code::Malformed, "trailing bytes after the checksum");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (crc(bytes.data(), bytes.size() - 4) != stored)
    throw FormatError(Code::ChecksumMismatch, "model file checksum mismatch (file is corrupt)");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 8, 4);
  if (version != kModelFormatVersion)
    throw FormatError(Code::UnknownVersion, "unknown model format version " + std::to_string(version));

  Cursor c(bytes.data() + kHeader, payload_size);
  const auto count = c.get<std::uint32_t>();
  std::vector<Record> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto type = c.get<std::uint8_t>();
    const auto name_len = c.get<std::uint16_t>();
    Record r;
    r.name = c.bytes(name_len);
    if (type == 0) {
      const auto len = c.get<std::uint64_t>();
      r.value = c.bytes(len);
    } else if (type == 1) {
      ArrayRecord a;
      const auto rank = c.get<std::uint32_t>();
      std::size_t n = 1;
      for (std::uint32_t d = 0; d < rank; ++d) {
        a.shape.push_back(c.get<std::uint64_t>());
        n *= a.shape.back();
      }
      const std::string raw = c.bytes(8 * n);
      a.values.resize(n);
      std::memcpy(a.values.data(), raw.data(), raw.size());
      r.value = std::move(a);
    } else {
      throw FormatError(Code::Malformed, "unknown record type " + std::to_string(type));
    }
    out.push_back(std::move(r));
  }
  if (!c.done()) throw FormatError(Code::Malformed, "unused bytes at the end of the payload");
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  RecordWriter w;
  w.text("kind", "network");
  write_network(w, "", model);
  write_file_bytes(path, encode_records(w.records));
}

TrainedModel load_model(const std::filesystem::path& path) {
  const auto records = load_records(path);
  const RecordReader r(records);
  expect_kind(r, "network");
  return read_network(r, "");
}

void save_svm_model(const std::filesystem::path& path, const SvmModel& model) {
  RecordWriter w;
  w.text("kind", "svm_model");
  write_svm(w, "", model);
  write_file_bytes(path, encode_records(w.records));
}

SvmModel load_svm_model(const std::filesystem::path& path) {
  const auto records = load_records(path);
  const RecordReader r(records);
  expect_kind(r, "svm_model");
  return read_svm(r, "");
}

void save_pca_model(const std::filesystem::path& path, const PcaModel& model) {
  RecordWriter w;
  w.text("kind", "pca_model");
  write_pca(w, "", model);
  write_file_bytes(path, encode_records(w.records));
}

PcaModel load_pca_model(const std::filesystem::path& path) {
  const auto records = load_records(path);
  const RecordReader r(records);
  expect_kind(r, "pca_model");
  return read_pca(r, "");
}

void save_classifier(const std::filesystem::path& path, const Classifier& model) {
  RecordWriter w;
  write_classifier(w, "", model);
  write_file_bytes(path, encode_records(w.records));
}

Classifier load_classifier(const std::filesystem::path& path) {
  const auto records = load_records(path);
  return read_classifier(RecordReader(records), "");
}

void save_ensemble(const std::filesystem::path& path, const Ensemble& ensemble) {
  RecordWriter w;
  w.text("kind", "ensemble");
  w.text("members", std::to_string(ensemble.members.size()));
  w.text("repeat", std::to_string(ensemble.repeat));
  std::string ids;
  for (const auto& id : ensemble.training_ids) ids += id + "\n";
  w.text("training_ids", ids);
  for (std::size_t i = 0; i < ensemble.members.size(); ++i)
    write_classifier(w, "m" + std::to_string(i) + "/", ensemble.members[i]);
  write_file_bytes(path, encode_records(w.records));
}

namespace {

Ensemble read_ensemble(const RecordReader& r) {
  Ensemble e;
  const auto n = text::parse_uint(r.text("members"), "members");
  e.repeat = text::parse_uint(r.text("repeat"), "repeat");
  for (auto id : text::split(r.text("training_ids"), '\n'))
    if (!id.empty()) e.training_ids.emplace_back(id);
  for (std::size_t i = 0; i < n; ++i) e.members.push_back(read_classifier(r, "m" + std::to_string(i) + "/"));
  return e;
}

}  // namespace

Ensemble load_ensemble(const std::filesystem::path& path) {
  const auto records = load_records(path);
  const RecordReader r(records);
  expect_kind(r, "ensemble");
  return read_ensemble(r);
}

SavedPredictor load_predictor(const std::filesystem::path& path) {
  const auto records = load_records(path);
  const RecordReader r(records);
  if (r.text("kind") == "ensemble") return read_ensemble(r);
  return read_classifier(r, "");
}

}  // namespace sz3d
