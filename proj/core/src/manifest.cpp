#include "retseg/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "retseg/augment.hpp"
#include "retseg/codec.hpp"
#include "retseg/error.hpp"
#include "retseg/fsutil.hpp"
#include "retseg/rng.hpp"

namespace retseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string lower_ext(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::set<std::string>& exts) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && exts.count(lower_ext(e.path()))) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

fs::path relative_to(const fs::path& p, const fs::path& dir) {
  auto rel = fs::absolute(p).lexically_normal().lexically_relative(fs::absolute(dir).lexically_normal());
  return rel.empty() ? p : rel;
}

fs::path resolve(const fs::path& p, const fs::path& dir) { return p.is_absolute() ? p : (dir / p).lexically_normal(); }

json entries_to_json(const std::vector<ManifestEntry>& entries, const fs::path& dir) {
  json arr = json::array();
  for (const auto& e : entries)
    arr.push_back({{"image", relative_to(e.image, dir).generic_string()},
                   {"mask", relative_to(e.mask, dir).generic_string()},
                   {"origin_id", e.origin_id},
                   {"transform", e.transform}});
  return arr;
}

std::vector<ManifestEntry> entries_from_json(const json& arr, const fs::path& dir) {
  require(arr.is_array(), ErrorCode::UnsupportedFormat, "manifest must be a JSON array");
  std::vector<ManifestEntry> out;
  for (const auto& j : arr)
    out.push_back({resolve(j.at("image").get<std::string>(), dir), resolve(j.at("mask").get<std::string>(), dir),
                   j.at("origin_id").get<int>(), j.value("transform", std::string("orig"))});
  return out;
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::UnreadableFile, "cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::UnsupportedFormat, file.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& file) {
  if (file.has_parent_path()) make_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) fail(ErrorCode::WriteFailure, "cannot write " + file.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::WriteFailure, "short write to " + file.string());
}

}  // namespace

DatasetManifest scan_dataset(const fs::path& root) {
  auto images = list_files(root / "images", {".png", ".pgm", ".ppm"});
  auto masks = list_files(root / "masks", {".png", ".pgm"});
  require(!images.empty(), ErrorCode::DatasetEmpty, "no images under " + (root / "images").string());
  require(images.size() == masks.size(), ErrorCode::PairMismatch,
          std::to_string(images.size()) + " images but " + std::to_string(masks.size()) + " masks under " +
              root.string());
  DatasetManifest m;
  for (std::size_t i = 0; i < images.size(); ++i) m.push_back({images[i], masks[i], static_cast<int>(i), "orig"});
  return m;
}

DatasetManifest augment_dataset(const DatasetManifest& originals, double rotation_degrees, const fs::path& out_dir) {
  make_directories(out_dir / "images");
  make_directories(out_dir / "masks");
  DatasetManifest out;
  out.reserve(originals.size() * 3);
  for (const auto& entry : originals) {
    const GrayImage image = load_image(entry.image);
    const BinaryMask mask = load_mask(entry.mask);
    require(image.width() == mask.width() && image.height() == mask.height(), ErrorCode::PairDimensionMismatch,
            entry.image.string() + " and " + entry.mask.string() + " differ in size");
    const std::string stem = entry.image.stem().string();
    for (auto& variant : augment_pair(image, mask, rotation_degrees)) {
      const std::string name = stem + "__" + variant.transform + ".png";
      ManifestEntry e{out_dir / "images" / name, out_dir / "masks" / name, entry.origin_id, variant.transform};
      save_image(variant.image, e.image);
      save_image(variant.mask, e.mask);
      out.push_back(std::move(e));
    }
  }
  return out;
}

SplitManifest split_dataset(const DatasetManifest& manifest, const SplitCounts& counts, std::uint64_t seed,
                            bool grouped) {
  require(counts.total() == manifest.size(), ErrorCode::CountMismatch,
          "split counts sum to " + std::to_string(counts.total()) + " but manifest has " +
              std::to_string(manifest.size()) + " entries");
  Rng rng(seed);
  std::vector<ManifestEntry> order;
  if (!grouped) {
    order = manifest;
    rng.shuffle(order);
  } else {
    std::map<int, std::vector<ManifestEntry>> groups;
    for (const auto& e : manifest) groups[e.origin_id].push_back(e);
    std::size_t group_size = groups.begin()->second.size();
    for (const auto& [id, g] : groups)
      require(g.size() == group_size, ErrorCode::CountMismatch, "grouped split needs equal-sized origin groups");
    require(counts.train % group_size == 0 && counts.val % group_size == 0 && counts.test % group_size == 0,
            ErrorCode::CountMismatch,
            "grouped split counts must be multiples of the group size " + std::to_string(group_size));
    std::vector<int> ids;
    for (const auto& [id, g] : groups) ids.push_back(id);
    rng.shuffle(ids);
    for (int id : ids) order.insert(order.end(), groups[id].begin(), groups[id].end());
  }
  SplitManifest split;
  split.seed = seed;
  split.grouped = grouped;
  auto it = order.begin();
  split.train.assign(it, it + counts.train);
  it += counts.train;
  split.val.assign(it, it + counts.val);
  it += counts.val;
  split.test.assign(it, it + counts.test);
  return split;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& file) {
  write_json(entries_to_json(manifest, file.parent_path()), file);
}

DatasetManifest load_manifest(const fs::path& file) {
  try {
    return entries_from_json(read_json(file), file.parent_path());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::UnsupportedFormat, file.string() + ": " + e.what());
  }
}

void save_split(const SplitManifest& split, const fs::path& file) {
  const auto dir = file.parent_path();
  json j{{"seed", split.seed},
         {"grouped", split.grouped},
         {"train", entries_to_json(split.train, dir)},
         {"val", entries_to_json(split.val, dir)},
         {"test", entries_to_json(split.test, dir)}};
  write_json(j, file);
}

SplitManifest load_split(const fs::path& file) {
  const json j = read_json(file);
  const auto dir = file.parent_path();
  try {
    SplitManifest s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.grouped = j.value("grouped", false);
    s.train = entries_from_json(j.at("train"), dir);
    s.val = entries_from_json(j.at("val"), dir);
    s.test = entries_from_json(j.at("test"), dir);
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::UnsupportedFormat, file.string() + ": " + e.what());
  }
}

}  // namespace retseg
