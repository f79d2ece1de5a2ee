#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "padkit/error.hpp"
#include "padkit/image.hpp"
#include "padkit/nn/train.hpp"
#include "padkit/random.hpp"

namespace padkit::dataset {

enum class Split { unassigned, train, test, validation };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::unassigned: return "unassigned";
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::validation: return "validation";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "unassigned") return Split::unassigned;
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "validation") return Split::validation;
  throw DataError("unknown split '" + std::string(s) + "'");
}

struct Record {
  std::string path;  // relative to the manifest base directory, '/'-separated
  std::string label;
  Split split = Split::unassigned;

  friend bool operator==(const Record&, const Record&) = default;
};

/// Image records kept in canonical (lexicographic path) order. A record in
/// the validation split is also a member of the test split.
struct Manifest {
  std::filesystem::path base;
  std::vector<Record> records;

  std::filesystem::path resolve(const Record& r) const { return base / r.path; }

  std::vector<std::string> classes() const {
    std::set<std::string> set;
    for (const auto& r : records) set.insert(r.label);
    return {set.begin(), set.end()};
  }

  void canonicalize() {
    std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return a.path < b.path; });
  }

  void validate() const {
    if (records.empty()) throw DataError("manifest has no records");
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
      if (r.label.empty()) throw DataError("manifest record '" + r.path + "' has an empty label");
      if (!seen.insert(r.path).second) throw DataError("duplicate manifest path '" + r.path + "'");
    }
  }
};

inline bool is_pnm_file(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

struct ScanStats {
  std::size_t ignored = 0;  // non-image files found inside class directories
};

/// One class per immediate subdirectory of `root`; every PGM/PPM beneath it
/// (recursively) becomes a record of that class.
inline Manifest scan_directory(const std::filesystem::path& root, ScanStats* stats = nullptr) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw DataError("dataset root '" + root.string() + "' is not a directory");
  Manifest manifest{root, {}};
  ScanStats local;
  try {
    for (const auto& cls : fs::directory_iterator(root)) {
      if (!cls.is_directory()) continue;
      const std::string label = cls.path().filename().string();
      for (const auto& entry : fs::recursive_directory_iterator(cls.path())) {
        if (!entry.is_regular_file()) continue;
        if (!is_pnm_file(entry.path())) {
          ++local.ignored;
          continue;
        }
        manifest.records.push_back({fs::relative(entry.path(), root).generic_string(), label, Split::unassigned});
      }
    }
  } catch (const fs::filesystem_error& e) {
    throw DataError(std::string("cannot scan dataset: ") + e.what());
  }
  if (manifest.records.empty()) throw DataError("no PGM/PPM images found under '" + root.string() + "'");
  manifest.canonicalize();
  if (stats) *stats = local;
  return manifest;
}

// ---------------------------------------------------------------------------
// Manifest CSV: "path,label,split"

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline Manifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open manifest " + file.string());
  Manifest manifest{file.parent_path(), {}};
  std::string line;
  if (!std::getline(in, line) || (line != "path,label,split" && line != "path,label,split\r")) {
    throw DataError(file.string() + ": expected header 'path,label,split'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw DataError(file.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    try {
      manifest.records.push_back({f[0], f[1], parse_split(f[2])});
    } catch (const DataError& e) {
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  manifest.validate();
  return manifest;
}

inline std::string format_manifest(const Manifest& manifest) {
  std::string out = "path,label,split\n";
  for (const auto& r : manifest.records) {
    if (r.path.find(',') != std::string::npos || r.label.find(',') != std::string::npos) {
      throw DataError("manifest fields may not contain commas: '" + r.path + "'");
    }
    out += r.path + "," + r.label + "," + to_string(r.split) + "\n";
  }
  return out;
}

/// Writes the manifest; paths are stored relative to the manifest's base,
/// which must be the directory holding `file`.
inline void write_manifest(const std::filesystem::path& file, const Manifest& manifest) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + file.string());
  out << format_manifest(manifest);
  if (!out) throw DataError("failed writing manifest " + file.string());
}

// ---------------------------------------------------------------------------
// Selection and splitting

inline std::map<std::string, std::vector<std::size_t>> indices_by_class(const Manifest& manifest) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) by_class[manifest.records[i].label].push_back(i);
  return by_class;
}

/// Keeps min(count, cap) records per class, chosen by seeded shuffle.
inline Manifest cap_per_class(const Manifest& manifest, std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw ValidationError("per-class cap must be at least 1");
  Manifest out{manifest.base, {}};
  for (const auto& [label, idx] : indices_by_class(manifest)) {
    std::vector<std::size_t> chosen = idx;
    if (chosen.size() > cap) {
      Rng rng(derive_seed(seed, "cap:" + label));
      shuffle(chosen, rng);
      chosen.resize(cap);
    }
    for (std::size_t i : chosen) out.records.push_back(manifest.records[i]);
  }
  out.canonicalize();
  return out;
}

inline constexpr std::size_t kValidationCount = 30;

/// Per class: seeded shuffle, first ceil(n/2) to train, the rest to test.
/// Then the first 30 test records in canonical order become validation
/// (still counted as test).
inline Manifest split_half(const Manifest& manifest, std::uint64_t seed, std::size_t validation_count = kValidationCount) {
  Manifest out = manifest;
  out.canonicalize();
  for (const auto& [label, idx] : indices_by_class(out)) {
    if (idx.size() < 2) throw ValidationError("class '" + label + "' has fewer than 2 records; cannot split");
    std::vector<std::size_t> order = idx;
    Rng rng(derive_seed(seed, "split:" + label));
    shuffle(order, rng);
    const std::size_t n_train = (order.size() + 1) / 2;
    for (std::size_t k = 0; k < order.size(); ++k) {
      out.records[order[k]].split = k < n_train ? Split::train : Split::test;
    }
  }
  std::size_t marked = 0;
  for (auto& r : out.records) {
    if (marked == validation_count) break;
    if (r.split == Split::test) {
      r.split = Split::validation;
      ++marked;
    }
  }
  return out;
}

enum class Selection { train, test, validation, test_holdout };

/// Records in a split. `test` includes validation records; `test_holdout`
/// excludes them.
inline std::vector<Record> select(const Manifest& manifest, Selection sel) {
  std::vector<Record> out;
  for (const auto& r : manifest.records) {
    bool keep = false;
    switch (sel) {
      case Selection::train: keep = r.split == Split::train; break;
      case Selection::test: keep = r.split == Split::test || r.split == Split::validation; break;
      case Selection::validation: keep = r.split == Split::validation; break;
      case Selection::test_holdout: keep = r.split == Split::test; break;
    }
    if (keep) out.push_back(r);
  }
  return out;
}

struct LabelSchema {
  enum class Mode { multiclass, binary } mode = Mode::multiclass;
  std::set<std::string> fake_classes;
};

/// Binary mode merges every fake-set class into "fake"; what remains must be
/// exactly "real".
inline Manifest apply_label_schema(const Manifest& manifest, const LabelSchema& schema) {
  if (schema.mode == LabelSchema::Mode::multiclass) return manifest;
  Manifest out = manifest;
  std::set<std::string> residual;
  for (auto& r : out.records) {
    if (schema.fake_classes.count(r.label)) {
      r.label = "fake";
    } else {
      residual.insert(r.label);
    }
  }
  if (residual != std::set<std::string>{"real"}) {
    std::string names;
    for (const auto& c : residual) names += (names.empty() ? "" : ", ") + c;
    throw ValidationError("binary labels: classes outside the fake set must be exactly {real}, found {" + names + "}");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Crop sidecar: "path,x,y,w,h"

struct CropSidecar {
  std::unordered_map<std::string, Rect> rects;

  const Rect* find(const std::string& path) const {
    auto it = rects.find(path);
    return it == rects.end() ? nullptr : &it->second;
  }
};

inline CropSidecar read_crop_sidecar(const std::filesystem::path& file, const Manifest& manifest) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open crop sidecar " + file.string());
  std::unordered_set<std::string> known;
  for (const auto& r : manifest.records) known.insert(r.path);
  CropSidecar sidecar;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line == "path,x,y,w,h")) continue;
    const auto f = split_csv_line(line);
    const std::string where = file.string() + ":" + std::to_string(lineno);
    if (f.size() != 5) throw DataError(where + ": expected path,x,y,w,h");
    Rect rect;
    try {
      rect = {std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]), std::stoul(f[4])};
    } catch (const std::exception&) {
      throw DataError(where + ": rect fields must be non-negative integers");
    }
    if (rect.w == 0 || rect.h == 0) throw DataError(where + ": empty crop rect");
    if (!known.count(f[0])) throw DataError(where + ": '" + f[0] + "' is not in the manifest");
    sidecar.rects[f[0]] = rect;
  }
  return sidecar;
}

// ---------------------------------------------------------------------------
// Image loading and batch iteration

struct Preprocess {
  std::shared_ptr<const CropSidecar> crops;
  std::optional<std::pair<std::size_t, std::size_t>> center_crop;  // (w, h) applied after the sidecar crop
};

/// Decodes, grayscales and crops one record.
inline Image load_image(const Manifest& manifest, const Record& record, const Preprocess& pre = {}) {
  Image img = to_grayscale(read_pnm(manifest.resolve(record)));
  try {
    if (pre.crops) {
      if (const Rect* r = pre.crops->find(record.path)) img = crop(img, *r);
    }
    if (pre.center_crop) {
      const auto [w, h] = *pre.center_crop;
      img = crop(img, center_rect(img.width(), img.height(), w, h));
    }
  } catch (const ValidationError& e) {
    throw DataError(record.path + ": " + e.what());
  }
  return img;
}

inline std::size_t class_index(const std::vector<std::string>& class_names, const std::string& label) {
  auto it = std::find(class_names.begin(), class_names.end(), label);
  if (it == class_names.end()) throw DataError("label '" + label + "' is not one of the model's classes");
  return static_cast<std::size_t>(it - class_names.begin());
}

/// Streams a split from disk in seeded per-epoch order (seed ^ epoch). Images
/// are decoded lazily as batches are requested; the final short batch is kept.
class ManifestBatches : public nn::BatchProvider {
 public:
  ManifestBatches(Manifest manifest, std::vector<Record> records, std::vector<std::string> class_names,
                  Shape input_shape, std::size_t batch_size, std::uint64_t seed, Preprocess pre = {},
                  bool shuffle = true)
      : manifest_(std::move(manifest)), records_(std::move(records)), class_names_(std::move(class_names)),
        input_shape_(std::move(input_shape)), batch_size_(batch_size), seed_(seed), pre_(pre), shuffle_(shuffle) {
    if (batch_size_ == 0) throw ValidationError("batch size must be at least 1");
  }

  std::size_t size() const override { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }

  /// Index order used for `epoch`.
  std::vector<std::size_t> order(std::uint64_t epoch) const {
    std::vector<std::size_t> idx(records_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (shuffle_) {
      Rng rng(seed_ ^ epoch);
      padkit::shuffle(idx, rng);
    }
    return idx;
  }

  nn::Sample load(std::size_t i) const {
    const Record& r = records_[i];
    Image img = load_image(manifest_, r, pre_);
    Tensor t = to_input_tensor(img);
    if (t.shape() != input_shape_) {
      throw DataError(r.path + ": image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                      " but the model expects " + std::to_string(input_shape_.at(1)) + "x" +
                      std::to_string(input_shape_.at(0)));
    }
    return {std::move(t), class_index(class_names_, r.label)};
  }

  std::unique_ptr<nn::BatchStream> epoch(std::uint64_t epoch) const override {
    return std::make_unique<Stream>(this, order(epoch));
  }

 private:
  class Stream : public nn::BatchStream {
   public:
    Stream(const ManifestBatches* owner, std::vector<std::size_t> order) : owner_(owner), order_(std::move(order)) {}
    bool next(nn::Batch& batch) override {
      batch.samples.clear();
      if (pos_ >= order_.size()) return false;
      const std::size_t end = std::min(order_.size(), pos_ + owner_->batch_size_);
      for (; pos_ < end; ++pos_) batch.samples.push_back(owner_->load(order_[pos_]));
      return true;
    }

   private:
    const ManifestBatches* owner_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
  };

  Manifest manifest_;
  std::vector<Record> records_;
  std::vector<std::string> class_names_;
  Shape input_shape_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  Preprocess pre_;
  bool shuffle_;
};

/// Batches of `split` for a model with the given input shape and classes.
inline ManifestBatches iter_batches(const Manifest& manifest, Selection split, std::size_t batch_size,
                                    std::uint64_t seed, const Shape& input_shape,
                                    const std::vector<std::string>& class_names, const Preprocess& pre = {},
                                    bool shuffle = true) {
  auto records = select(manifest, split);
  if (records.empty()) throw ValidationError("selected split has no records");
  return ManifestBatches(manifest, std::move(records), class_names, input_shape, batch_size, seed, pre, shuffle);
}

}  // namespace padkit::dataset
