#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pixswap/errors.hpp"
#include "pixswap/png_io.hpp"
#include "pixswap/tensor.hpp"

namespace pixswap {

namespace text {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace text

/// Raw parsing-network output: one integer label per pixel, before recombination.
struct RawLabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;
};

/// Total map from raw parsing labels [0, K) onto the six recombined parts.
class LabelRecombinationTable {
 public:
  explicit LabelRecombinationTable(std::vector<std::uint8_t> mapping) : mapping_(std::move(mapping)) {
    if (mapping_.empty()) throw ConfigError("recombination table is empty");
    for (std::size_t raw = 0; raw < mapping_.size(); ++raw) {
      if (mapping_[raw] >= kNumParts) {
        throw ConfigError("raw label " + std::to_string(raw) + " maps to " +
                          std::to_string(mapping_[raw]) + ", outside 0..5");
      }
    }
  }

  /// LIP-style grouping of the first 18 parser labels.
  ///   0 background | 1 hat 2 hair 4 sunglasses 13 face -> head
  ///   5 upper-clothes 6 dress 7 coat 10 jumpsuit 11 scarf -> upper clothes
  ///   9 pants 12 skirt -> pants | 3 glove 14 15 arms -> arms
  ///   8 socks 16 17 legs -> legs
  static LabelRecombinationTable lip18() {
    return LabelRecombinationTable({
        kBackground,    // 0 background
        kHead,          // 1 hat
        kHead,          // 2 hair
        kArms,          // 3 glove
        kHead,          // 4 sunglasses
        kUpperClothes,  // 5 upper-clothes
        kUpperClothes,  // 6 dress
        kUpperClothes,  // 7 coat
        kLegs,          // 8 socks
        kPants,         // 9 pants
        kUpperClothes,  // 10 jumpsuit
        kUpperClothes,  // 11 scarf
        kPants,         // 12 skirt
        kHead,          // 13 face
        kArms,          // 14 left arm
        kArms,          // 15 right arm
        kLegs,          // 16 left leg
        kLegs,          // 17 right leg
    });
  }

  static LabelRecombinationTable identity() {
    return LabelRecombinationTable({0, 1, 2, 3, 4, 5});
  }

  std::size_t num_raw_labels() const { return mapping_.size(); }
  std::uint8_t operator[](std::size_t raw) const { return mapping_.at(raw); }
  std::span<const std::uint8_t> mapping() const { return mapping_; }

 private:
  std::vector<std::uint8_t> mapping_;
};

/// Parses `raw_label = recombined_label` lines. Keys must cover 0..K-1 exactly once.
inline LabelRecombinationTable parse_recombination_table(std::istream& in, const std::string& origin = "<table>") {
  std::map<int, int> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = text::trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 'raw = recombined'");
    }
    const auto key = text::parse_int<int>(body.substr(0, eq));
    const auto value = text::parse_int<int>(body.substr(eq + 1));
    if (!key || !value || *key < 0 || *key > 255) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": malformed pair '" + std::string(body) + "'");
    }
    if (!pairs.emplace(*key, *value).second) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": duplicate raw label " + std::to_string(*key));
    }
  }
  std::vector<std::uint8_t> mapping;
  for (const auto& [key, value] : pairs) {
    if (key != static_cast<int>(mapping.size())) {
      throw ParseError(origin + ": raw label " + std::to_string(mapping.size()) + " missing from table");
    }
    if (value < 0 || value >= kNumParts) {
      throw ParseError(origin + ": raw label " + std::to_string(key) + " maps outside 0..5");
    }
    mapping.push_back(static_cast<std::uint8_t>(value));
  }
  if (mapping.empty()) throw ParseError(origin + ": no label pairs");
  return LabelRecombinationTable(std::move(mapping));
}

inline LabelRecombinationTable load_recombination_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open recombination table " + path.string());
  return parse_recombination_table(in, path.string());
}

inline SemanticMask recombine_labels(const RawLabelMap& raw, const LabelRecombinationTable& table) {
  if (raw.labels.size() != static_cast<std::size_t>(raw.height) * raw.width) {
    throw ShapeError("raw label map size does not match its dimensions");
  }
  std::vector<std::uint8_t> out(raw.labels.size());
  for (std::size_t i = 0; i < raw.labels.size(); ++i) {
    const std::uint8_t v = raw.labels[i];
    if (v >= table.num_raw_labels()) {
      throw DataError("raw label " + std::to_string(v) + " at (" + std::to_string(i / raw.width) + ", " +
                      std::to_string(i % raw.width) + ") outside table range 0.." +
                      std::to_string(table.num_raw_labels() - 1));
    }
    out[i] = table[v];
  }
  return SemanticMask(raw.height, raw.width, std::move(out));
}

enum class Split { kTrain, kGallery, kQuerySame, kQueryCross };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kGallery: return "gallery";
    case Split::kQuerySame: return "query_same";
    case Split::kQueryCross: return "query_cross";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "gallery") return Split::kGallery;
  if (s == "query_same") return Split::kQuerySame;
  if (s == "query_cross") return Split::kQueryCross;
  return std::nullopt;
}

struct SampleRecord {
  std::string image_path;
  std::string mask_path;
  std::string identity;
  std::string camera;
  std::string clothes_id;
  Split split = Split::kTrain;

  bool operator==(const SampleRecord&) const = default;
};

inline constexpr std::string_view kManifestHeader = "image_path,mask_path,identity,camera,clothes_id,split";

/// Manifest records plus an identity index. Images and masks load on demand;
/// relative paths resolve against the manifest's directory.
class Dataset {
 public:
  Dataset(std::vector<SampleRecord> records, LabelRecombinationTable table, std::filesystem::path root)
      : records_(std::move(records)), table_(std::move(table)), root_(std::move(root)) {
    for (std::size_t i = 0; i < records_.size(); ++i) identity_index_[records_[i].identity].push_back(i);
  }

  std::size_t size() const { return records_.size(); }
  const std::vector<SampleRecord>& records() const { return records_; }
  const SampleRecord& record(std::size_t i) const { return records_.at(i); }
  const std::map<std::string, std::vector<std::size_t>>& identity_index() const { return identity_index_; }
  const LabelRecombinationTable& table() const { return table_; }
  const std::filesystem::path& root() const { return root_; }

  std::vector<std::size_t> indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (records_[i].split == split) out.push_back(i);
    }
    return out;
  }

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : root_ / path;
  }

  Image load_image(std::size_t i) const { return png::read_rgb(resolve(record(i).image_path)); }

  SemanticMask load_mask(std::size_t i) const {
    const png::Raster raster = png::read(resolve(record(i).mask_path), 1);
    return recombine_labels(RawLabelMap{raster.height, raster.width, raster.bytes}, table_);
  }

 private:
  std::vector<SampleRecord> records_;
  LabelRecombinationTable table_;
  std::filesystem::path root_;
  std::map<std::string, std::vector<std::size_t>> identity_index_;
};

inline std::vector<SampleRecord> parse_manifest(std::istream& in, const std::string& origin) {
  std::vector<SampleRecord> records;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line != kManifestHeader) {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": expected header '" +
                         std::string(kManifestHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 6) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                       std::to_string(fields.size()));
    }
    for (std::size_t f = 0; f < 5; ++f) {
      if (fields[f].empty()) {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": empty field " + std::to_string(f + 1));
      }
    }
    const auto split = parse_split(fields[5]);
    if (!split) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": unknown split '" + std::string(fields[5]) + "'");
    }
    records.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                       std::string(fields[3]), std::string(fields[4]), *split});
  }
  return records;
}

inline Dataset load_dataset(const std::filesystem::path& manifest_path, const LabelRecombinationTable& table) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  auto records = parse_manifest(in, manifest_path.string());
  Dataset dataset(std::move(records), table, manifest_path.parent_path());
  for (const auto& rec : dataset.records()) {
    for (const auto& p : {rec.image_path, rec.mask_path}) {
      if (!std::filesystem::exists(dataset.resolve(p))) {
        throw IoError("manifest references missing file " + dataset.resolve(p).string());
      }
    }
  }
  return dataset;
}

inline void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& r : records) {
    out << r.image_path << ',' << r.mask_path << ',' << r.identity << ',' << r.camera << ',' << r.clothes_id << ','
        << to_string(r.split) << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

}  // namespace pixswap
