#pragma once

// Artifact persistence. Every file written here is deterministic for a given
// config: doubles are printed with %.17g (lossless round-trip), JSON keys
// have a fixed order, and the encoder sidecar stores raw little-endian
// doubles. Rerunning a command with identical inputs reproduces every
// artifact byte for byte.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ibcolor/ib.hpp"
#include "ibcolor/meaning_space.hpp"
#include "ibcolor/priors.hpp"
#include "ibcolor/wcs.hpp"

namespace ibcolor {

inline constexpr const char* kCodeVersion = "ibcolor/0.1.0";

// FNV-1a 64-bit digest as a 16-char hex string.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

// Minimal ordered JSON writer; values print as %.17g for doubles.
class JsonWriter {
 public:
  void begin_object();
  void end_object();
  void begin_array();
  void end_array();
  void key(std::string_view name);
  void value(std::string_view s);
  void value(const char* s) { value(std::string_view(s)); }
  void value(double v);
  void value(std::int64_t v);
  void value(int v) { value(static_cast<std::int64_t>(v)); }
  void value(std::uint64_t v);
  void value(bool v);
  void value_array(const Vec& v);
  std::string str() const { return out_; }

 private:
  void comma();
  std::string out_;
  std::vector<bool> first_;  // per nesting level
  bool pending_key_ = false;
};

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

// Sparse file-backed encoder store. Entries below 1e-10 are dropped at write
// time (rows are renormalized on read), which keeps full-curve sidecars small
// while perturbing downstream similarity scores by well under any reported
// tolerance. The file is usable for get() while still being written; call
// finalize() (or let the destructor do it) to patch the record count.
class FileEncoderStore final : public EncoderStore {
 public:
  static constexpr double kStoreThreshold = 1e-10;

  // mode "w": create new; mode "r": open existing read-only.
  FileEncoderStore(const std::filesystem::path& path, char mode);
  ~FileEncoderStore() override;

  std::int64_t put(const Matrix& cond) override;
  Matrix get(std::int64_t id) const override;
  std::size_t count() const override { return offsets_.size(); }
  void finalize();

 private:
  std::filesystem::path path_;
  mutable std::unique_ptr<std::FILE, int (*)(std::FILE*)> file_;
  std::vector<std::uint64_t> offsets_;
  bool writable_ = false;
  bool finalized_ = false;
};

// Curve persistence: curve.json plus the sidecar written through a
// FileEncoderStore by the caller.
std::string curve_to_json(const IBCurve& curve, const std::string& config_digest);
IBCurve curve_from_json(const std::string& text);

std::string palette_to_json(const Palette& palette);
Palette palette_from_json(const std::string& text);

std::string encoders_to_json(const std::vector<LanguageEncoder>& encoders);
std::vector<LanguageEncoder> encoders_from_json(const std::string& text);

std::string priors_to_json(const std::vector<LanguagePrior>& priors);
std::vector<LanguagePrior> priors_from_json(const std::string& text);
std::string priors_table_tsv(const std::vector<LanguagePrior>& priors);

std::string source_to_json(const CognitiveSource& source);
CognitiveSource source_from_json(const std::string& text);

// Manifest: input digests plus one cache key per command artifact.
struct Manifest {
  std::map<std::string, std::string> entries;
};
std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);
Manifest load_manifest(const std::filesystem::path& out_dir);
void save_manifest(const std::filesystem::path& out_dir, const Manifest& m);

}  // namespace ibcolor
