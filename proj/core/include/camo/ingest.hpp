#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camo/box.hpp"
#include "camo/dataset.hpp"
#include "camo/image.hpp"

namespace camo {

/// Class names mapped to integer ids; names not listed are dropped.
using ClassMap = std::map<std::string, int>;

/// {"plane": 0}.
ClassMap default_class_map();

/// A full-size source image with its annotations in source pixels.
struct SourceImage {
  std::string id;
  Image image;
  std::vector<Annotation> annotations;
};

/// DOTA-style polygon annotations: one object per line as
/// "x1 y1 x2 y2 x3 y3 x4 y4 class [difficulty]", converted to the
/// axis-aligned min/max envelope. "imagesource:" and "gsd:" header lines
/// are skipped.
std::vector<Annotation> read_dota_annotations(const std::filesystem::path& path,
                                              const std::string& image_id,
                                              const ClassMap& classes = default_class_map());

/// CSV boxes "image,class,x_min,y_min,x_max,y_max" with an optional header
/// row. `class` is either a name from `classes` or an integer id.
std::vector<Annotation> read_csv_annotations(const std::filesystem::path& path,
                                             const ClassMap& classes = default_class_map());

/// Where a tile came from: the window [x, x + width) x [y, y + height) of
/// the source. `padded` marks sources smaller than the tile.
struct TileProvenance {
  std::string source_id;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  bool padded = false;

  friend bool operator==(const TileProvenance&, const TileProvenance&) = default;
};

struct ManifestEntry {
  std::string id;
  std::string image;  // path relative to the manifest's directory
  TileProvenance provenance;
  std::vector<Annotation> annotations;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string split;  // "train", "test" or "all"
  int tile_size = 0;
  std::vector<ManifestEntry> entries;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct TileOptions {
  int tile_size = 1024;
  int overlap = 0;
  /// Clipped boxes keeping less than this fraction of their area are dropped.
  double min_retained = 0.3;
  int target_class = 0;

  void validate() const;
};

struct Tile {
  ManifestEntry entry;
  Image image;
};

/// Start offsets of a regular grid along one axis; the last tile is
/// shifted back to end exactly at the edge.
std::vector<int> tile_offsets(int extent, int tile_size, int overlap);

/// Cuts every source into tiles, clips and translates annotations, and
/// discards tiles without a surviving target-class box. Sources smaller
/// than a tile become one tile padded with zeros. Entry image paths are
/// left empty until written.
std::vector<Tile> tile_images(std::span<const SourceImage> sources, const TileOptions& options);

/// Splits by source image: round(test_fraction * sources) sources, at
/// least one on each side, go to test. Throws with fewer than 2 sources.
std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double test_fraction,
                                                           std::uint64_t seed);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes each tile to `<dir>/images/<id>.png` and fills in entry paths.
DatasetManifest write_tiles(const std::filesystem::path& dir, std::vector<Tile>& tiles,
                            int tile_size);

/// Loads every entry's image (paths resolved against the manifest's
/// directory) into a Dataset.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes a Dataset as PNG images plus `<dir>/manifest.json`.
DatasetManifest save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                             const std::string& split = "all");

}  // namespace camo
