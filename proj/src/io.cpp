#include "ibcolor/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ibcolor {

using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  return fnv1a_hex(read_text_file(path));
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------- JsonWriter

void JsonWriter::comma() {
  if (pending_key_) {
    pending_key_ = false;
    return;
  }
  if (!first_.empty()) {
    if (!first_.back()) out_ += ',';
    first_.back() = false;
  }
}

void JsonWriter::begin_object() {
  comma();
  out_ += '{';
  first_.push_back(true);
}

void JsonWriter::end_object() {
  out_ += '}';
  first_.pop_back();
}

void JsonWriter::begin_array() {
  comma();
  out_ += '[';
  first_.push_back(true);
}

void JsonWriter::end_array() {
  out_ += ']';
  first_.pop_back();
}

void JsonWriter::key(std::string_view name) {
  comma();
  out_ += '"';
  out_ += name;
  out_ += "\":";
  pending_key_ = true;
}

void JsonWriter::value(std::string_view s) {
  comma();
  out_ += '"';
  for (char c : s) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      case '\r': out_ += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out_ += buf;
        } else {
          out_ += c;
        }
    }
  }
  out_ += '"';
}

void JsonWriter::value(double v) {
  comma();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Bare "inf"/"nan" are not JSON; persisted quantities are finite by
  // construction but guard anyway.
  if (std::strstr(buf, "inf") || std::strstr(buf, "nan")) {
    out_ += "null";
  } else {
    out_ += buf;
  }
}

void JsonWriter::value(std::int64_t v) {
  comma();
  out_ += std::to_string(v);
}

void JsonWriter::value(std::uint64_t v) {
  comma();
  out_ += std::to_string(v);
}

void JsonWriter::value(bool v) {
  comma();
  out_ += v ? "true" : "false";
}

void JsonWriter::value_array(const Vec& v) {
  begin_array();
  for (double x : v) value(x);
  end_array();
}

// ---------------------------------------------------------- FileEncoderStore

namespace {
constexpr char kSidecarMagic[8] = {'I', 'B', 'E', 'N', 'C', 'S', '1', '\n'};

void write_u64(std::FILE* f, std::uint64_t v) {
  if (std::fwrite(&v, sizeof(v), 1, f) != 1) throw std::runtime_error("sidecar write failed");
}

std::uint64_t read_u64(std::FILE* f) {
  std::uint64_t v = 0;
  if (std::fread(&v, sizeof(v), 1, f) != 1) throw std::runtime_error("sidecar read failed");
  return v;
}
}  // namespace

FileEncoderStore::FileEncoderStore(const std::filesystem::path& path, char mode)
    : path_(path), file_(nullptr, &std::fclose) {
  if (mode == 'w') {
    writable_ = true;
    file_.reset(std::fopen(path.string().c_str(), "w+b"));
    if (!file_) throw std::runtime_error("cannot create sidecar " + path.string());
    std::fwrite(kSidecarMagic, 1, sizeof(kSidecarMagic), file_.get());
    write_u64(file_.get(), 0);  // record count, patched by finalize()
  } else if (mode == 'r') {
    file_.reset(std::fopen(path.string().c_str(), "rb"));
    if (!file_) throw std::runtime_error("cannot open sidecar " + path.string());
    char magic[8];
    if (std::fread(magic, 1, 8, file_.get()) != 8 || std::memcmp(magic, kSidecarMagic, 8) != 0) {
      throw std::runtime_error("bad sidecar magic in " + path.string());
    }
    std::uint64_t count = read_u64(file_.get());
    offsets_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      long pos = std::ftell(file_.get());
      if (pos < 0) throw std::runtime_error("sidecar tell failed");
      offsets_.push_back(static_cast<std::uint64_t>(pos));
      read_u64(file_.get());  // id
      std::uint64_t dims = read_u64(file_.get());
      (void)dims;
      std::uint64_t nnz = read_u64(file_.get());
      if (std::fseek(file_.get(), static_cast<long>(nnz * 16), SEEK_CUR) != 0) {
        throw std::runtime_error("sidecar seek failed");
      }
    }
    finalized_ = true;
  } else {
    throw std::invalid_argument("FileEncoderStore: mode must be 'r' or 'w'");
  }
}

FileEncoderStore::~FileEncoderStore() {
  if (writable_ && !finalized_ && file_) {
    try {
      finalize();
    } catch (...) {
    }
  }
}

void FileEncoderStore::finalize() {
  if (!writable_ || finalized_) return;
  std::fseek(file_.get(), 8, SEEK_SET);
  write_u64(file_.get(), offsets_.size());
  std::fflush(file_.get());
  finalized_ = true;
}

std::int64_t FileEncoderStore::put(const Matrix& cond) {
  if (!writable_) throw std::runtime_error("sidecar opened read-only");
  std::fseek(file_.get(), 0, SEEK_END);
  long pos = std::ftell(file_.get());
  if (pos < 0) throw std::runtime_error("sidecar tell failed");

  std::int64_t id = static_cast<std::int64_t>(offsets_.size());
  offsets_.push_back(static_cast<std::uint64_t>(pos));

  std::uint64_t nnz = 0;
  for (std::size_t r = 0; r < cond.rows(); ++r) {
    for (double v : cond.row(r)) {
      if (v >= kStoreThreshold) ++nnz;
    }
  }
  write_u64(file_.get(), static_cast<std::uint64_t>(id));
  write_u64(file_.get(), (static_cast<std::uint64_t>(cond.rows()) << 32) |
                             static_cast<std::uint64_t>(cond.cols()));
  write_u64(file_.get(), nnz);
  for (std::size_t r = 0; r < cond.rows(); ++r) {
    auto row = cond.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] >= kStoreThreshold) {
        std::uint64_t cell = (static_cast<std::uint64_t>(r) << 32) | static_cast<std::uint64_t>(c);
        write_u64(file_.get(), cell);
        double v = row[c];
        if (std::fwrite(&v, sizeof(v), 1, file_.get()) != 1) {
          throw std::runtime_error("sidecar write failed");
        }
      }
    }
  }
  finalized_ = false;
  return id;
}

Matrix FileEncoderStore::get(std::int64_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= offsets_.size()) {
    throw std::out_of_range("sidecar: unknown encoder id " + std::to_string(id));
  }
  std::fseek(file_.get(), static_cast<long>(offsets_[static_cast<std::size_t>(id)]), SEEK_SET);
  std::uint64_t stored_id = read_u64(file_.get());
  if (stored_id != static_cast<std::uint64_t>(id)) {
    throw std::runtime_error("sidecar: record id mismatch");
  }
  std::uint64_t dims = read_u64(file_.get());
  std::size_t rows = static_cast<std::size_t>(dims >> 32);
  std::size_t cols = static_cast<std::size_t>(dims & 0xffffffffULL);
  std::uint64_t nnz = read_u64(file_.get());

  Matrix out(rows, cols, 0.0);
  for (std::uint64_t i = 0; i < nnz; ++i) {
    std::uint64_t cell = read_u64(file_.get());
    double v = 0.0;
    if (std::fread(&v, sizeof(v), 1, file_.get()) != 1) {
      throw std::runtime_error("sidecar read failed");
    }
    out(static_cast<std::size_t>(cell >> 32), static_cast<std::size_t>(cell & 0xffffffffULL)) = v;
  }
  normalize_rows(out);
  return out;
}

// ----------------------------------------------------------------- artifacts

std::string curve_to_json(const IBCurve& curve, const std::string& config_digest) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("ibcurve/1");
  w.key("code_version");
  w.value(kCodeVersion);
  w.key("config_digest");
  w.value(config_digest);
  w.key("meta");
  w.begin_object();
  w.key("sigma_sq");
  w.value(curve.meta.sigma_sq);
  w.key("beta_min");
  w.value(curve.meta.beta_min);
  w.key("beta_max");
  w.value(curve.meta.beta_max);
  w.key("beta_steps");
  w.value(curve.meta.beta_steps);
  w.key("tol");
  w.value(curve.meta.tol);
  w.key("max_iter");
  w.value(curve.meta.max_iter);
  w.key("perturbation");
  w.value(curve.meta.perturbation);
  w.key("merge_tol");
  w.value(curve.meta.merge_tol);
  w.key("seed");
  w.value(curve.meta.seed);
  w.key("mode");
  w.value(curve.meta.mode);
  w.key("space_digest");
  w.value(curve.meta.space_digest);
  w.key("prior_digest");
  w.value(curve.meta.prior_digest);
  w.key("units");
  w.value("bits; fixed-point exponent in nats");
  w.end_object();
  w.key("points");
  w.begin_array();
  for (const IBPoint& p : curve.points) {
    w.begin_object();
    w.key("beta");
    w.value(p.beta);
    w.key("complexity");
    w.value(p.complexity);
    w.key("accuracy");
    w.value(p.accuracy);
    w.key("free_energy");
    w.value(p.free_energy);
    w.key("effective_k");
    w.value(p.effective_k);
    w.key("encoder_id");
    w.value(p.encoder_id);
    w.key("converged");
    w.value(p.converged);
    w.key("iterations");
    w.value(p.iterations);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

IBCurve curve_from_json(const std::string& text) {
  json j = json::parse(text);
  IBCurve curve;
  const auto& meta = j.at("meta");
  curve.meta.sigma_sq = meta.at("sigma_sq").get<double>();
  curve.meta.beta_min = meta.at("beta_min").get<double>();
  curve.meta.beta_max = meta.at("beta_max").get<double>();
  curve.meta.beta_steps = meta.at("beta_steps").get<int>();
  curve.meta.tol = meta.at("tol").get<double>();
  curve.meta.max_iter = meta.at("max_iter").get<int>();
  curve.meta.perturbation = meta.at("perturbation").get<double>();
  curve.meta.merge_tol = meta.at("merge_tol").get<double>();
  curve.meta.seed = meta.at("seed").get<std::uint64_t>();
  curve.meta.mode = meta.at("mode").get<std::string>();
  curve.meta.space_digest = meta.at("space_digest").get<std::string>();
  curve.meta.prior_digest = meta.at("prior_digest").get<std::string>();
  for (const auto& jp : j.at("points")) {
    IBPoint p;
    p.beta = jp.at("beta").get<double>();
    p.complexity = jp.at("complexity").get<double>();
    p.accuracy = jp.at("accuracy").get<double>();
    p.free_energy = jp.at("free_energy").get<double>();
    p.effective_k = jp.at("effective_k").get<int>();
    p.encoder_id = jp.at("encoder_id").get<std::int64_t>();
    p.converged = jp.at("converged").get<bool>();
    p.iterations = jp.at("iterations").get<int>();
    curve.points.push_back(p);
  }
  return curve;
}

std::string palette_to_json(const Palette& palette) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("palette/1");
  w.key("chips");
  w.begin_array();
  for (const ColorChip& c : palette.chips) {
    w.begin_object();
    w.key("id");
    w.value(c.id);
    w.key("row");
    w.value(std::string(1, c.grid_row));
    w.key("col");
    w.value(c.grid_col);
    w.key("lab");
    w.begin_array();
    w.value(c.lab[0]);
    w.value(c.lab[1]);
    w.value(c.lab[2]);
    w.end_array();
    w.key("munsell");
    w.value(c.munsell);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

Palette palette_from_json(const std::string& text) {
  json j = json::parse(text);
  Palette palette;
  for (const auto& jc : j.at("chips")) {
    ColorChip c;
    c.id = jc.at("id").get<int>();
    c.grid_row = jc.at("row").get<std::string>().at(0);
    c.grid_col = jc.at("col").get<int>();
    c.lab[0] = jc.at("lab")[0].get<double>();
    c.lab[1] = jc.at("lab")[1].get<double>();
    c.lab[2] = jc.at("lab")[2].get<double>();
    c.munsell = jc.at("munsell").get<std::string>();
    palette.chips.push_back(c);
  }
  palette.validate();
  return palette;
}

std::string encoders_to_json(const std::vector<LanguageEncoder>& encoders) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("encoders/1");
  w.key("languages");
  w.begin_array();
  for (const LanguageEncoder& e : encoders) {
    w.begin_object();
    w.key("language_id");
    w.value(e.language_id);
    w.key("rows");
    w.value(static_cast<std::int64_t>(e.cond.rows()));
    w.key("cols");
    w.value(static_cast<std::int64_t>(e.cond.cols()));
    w.key("terms");
    w.begin_array();
    for (const std::string& t : e.terms) w.value(t);
    w.end_array();
    w.key("matrix");
    w.begin_array();
    for (std::size_t r = 0; r < e.cond.rows(); ++r) {
      for (double v : e.cond.row(r)) w.value(v);
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

std::vector<LanguageEncoder> encoders_from_json(const std::string& text) {
  json j = json::parse(text);
  std::vector<LanguageEncoder> out;
  for (const auto& je : j.at("languages")) {
    LanguageEncoder e;
    e.language_id = je.at("language_id").get<int>();
    std::size_t rows = je.at("rows").get<std::size_t>();
    std::size_t cols = je.at("cols").get<std::size_t>();
    for (const auto& jt : je.at("terms")) e.terms.push_back(jt.get<std::string>());
    const auto& m = je.at("matrix");
    if (m.size() != rows * cols || e.terms.size() != cols) {
      throw std::runtime_error("encoders file: inconsistent matrix shape");
    }
    e.cond = Matrix(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
      e.cond(i / cols, i % cols) = m[i].get<double>();
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string priors_to_json(const std::vector<LanguagePrior>& priors) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("priors/1");
  w.key("priors");
  w.begin_array();
  for (const LanguagePrior& p : priors) {
    w.begin_object();
    w.key("language_id");
    w.value(p.language_id);
    w.key("capacity_bits");
    w.value(p.capacity);
    w.key("converged");
    w.value(p.converged);
    w.key("gap_bits");
    w.value(p.gap);
    w.key("iterations");
    w.value(p.iterations);
    w.key("probs");
    w.value_array(p.probs);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

std::vector<LanguagePrior> priors_from_json(const std::string& text) {
  json j = json::parse(text);
  std::vector<LanguagePrior> out;
  for (const auto& jp : j.at("priors")) {
    LanguagePrior p;
    p.language_id = jp.at("language_id").get<int>();
    p.capacity = jp.at("capacity_bits").get<double>();
    p.converged = jp.at("converged").get<bool>();
    p.gap = jp.at("gap_bits").get<double>();
    p.iterations = jp.at("iterations").get<int>();
    for (const auto& v : jp.at("probs")) p.probs.push_back(v.get<double>());
    out.push_back(std::move(p));
  }
  return out;
}

std::string priors_table_tsv(const std::vector<LanguagePrior>& priors) {
  std::string out = "chip_id";
  for (const LanguagePrior& p : priors) {
    out += "\tlang_" + std::to_string(p.language_id);
  }
  out += '\n';
  if (priors.empty()) return out;
  char buf[32];
  for (std::size_t c = 0; c < priors.front().probs.size(); ++c) {
    out += std::to_string(c + 1);
    for (const LanguagePrior& p : priors) {
      std::snprintf(buf, sizeof(buf), "\t%.17g", p.probs[c]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string source_to_json(const CognitiveSource& source) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("source/1");
  w.key("language_ids");
  w.begin_array();
  for (int id : source.language_ids) w.value(id);
  w.end_array();
  w.key("probs");
  w.value_array(source.probs);
  w.end_object();
  return w.str();
}

CognitiveSource source_from_json(const std::string& text) {
  json j = json::parse(text);
  CognitiveSource s;
  for (const auto& v : j.at("language_ids")) s.language_ids.push_back(v.get<int>());
  for (const auto& v : j.at("probs")) s.probs.push_back(v.get<double>());
  return s;
}

std::string manifest_to_json(const Manifest& m) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("manifest/1");
  w.key("code_version");
  w.value(kCodeVersion);
  w.key("entries");
  w.begin_object();
  for (const auto& [k, v] : m.entries) {
    w.key(k);
    w.value(v);
  }
  w.end_object();
  w.end_object();
  return w.str();
}

Manifest manifest_from_json(const std::string& text) {
  json j = json::parse(text);
  Manifest m;
  for (const auto& [k, v] : j.at("entries").items()) {
    m.entries[k] = v.get<std::string>();
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& out_dir) {
  auto path = out_dir / "manifest.json";
  if (!std::filesystem::exists(path)) return {};
  return manifest_from_json(read_text_file(path));
}

void save_manifest(const std::filesystem::path& out_dir, const Manifest& m) {
  write_text_file(out_dir / "manifest.json", manifest_to_json(m));
}

}  // namespace ibcolor
