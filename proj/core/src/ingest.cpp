#include "camo/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "camo/error.hpp"
#include "camo/png_io.hpp"
#include "camo/rng.hpp"
#include "json_codec.hpp"

namespace camo {
namespace {

constexpr const char* kManifestFormat = "camopatch-manifest/1";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  return out;
}

bool parse_double(const std::string& text, double& value) {
  try {
    std::size_t used = 0;
    value = std::stod(text, &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::optional<int> resolve_class(const std::string& token, const ClassMap& classes) {
  if (auto it = classes.find(token); it != classes.end()) return it->second;
  double v = 0.0;
  if (parse_double(token, v) && v == std::floor(v)) return static_cast<int>(v);
  return std::nullopt;
}

Json entry_to_json(const ManifestEntry& e) {
  Json anns = Json::array();
  for (const auto& a : e.annotations) anns.push_back(Json{{"class_id", a.class_id}, {"box", to_json(a.box)}});
  return Json{{"id", e.id},
              {"image", e.image},
              {"provenance",
               {{"source", e.provenance.source_id},
                {"x", e.provenance.x},
                {"y", e.provenance.y},
                {"width", e.provenance.width},
                {"height", e.provenance.height},
                {"padded", e.provenance.padded}}},
              {"annotations", anns}};
}

ManifestEntry entry_from_json(const Json& j) {
  ManifestEntry e;
  e.id = j.at("id").get<std::string>();
  e.image = j.at("image").get<std::string>();
  const Json& p = j.at("provenance");
  e.provenance = {p.at("source").get<std::string>(), p.at("x").get<int>(), p.at("y").get<int>(),
                  p.at("width").get<int>(), p.at("height").get<int>(), p.value("padded", false)};
  for (const auto& a : j.at("annotations"))
    e.annotations.push_back({e.id, a.at("class_id").get<int>(), box_from_json(a.at("box"))});
  return e;
}

}  // namespace

ClassMap default_class_map() { return {{"plane", 0}}; }

std::vector<Annotation> read_dota_annotations(const std::filesystem::path& path,
                                              const std::string& image_id,
                                              const ClassMap& classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<Annotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.rfind("imagesource:", 0) == 0 || line.rfind("gsd:", 0) == 0) continue;
    std::istringstream ss(line);
    std::array<double, 8> xy{};
    std::string name;
    for (double& v : xy) {
      if (!(ss >> v)) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 8 coordinates");
    }
    if (!(ss >> name)) throw IoError(path.string() + ":" + std::to_string(line_no) + ": missing class name");
    const auto it = classes.find(name);
    if (it == classes.end()) continue;
    double x0 = xy[0], x1 = xy[0], y0 = xy[1], y1 = xy[1];
    for (int k = 1; k < 4; ++k) {
      x0 = std::min(x0, xy[2 * k]);
      x1 = std::max(x1, xy[2 * k]);
      y0 = std::min(y0, xy[2 * k + 1]);
      y1 = std::max(y1, xy[2 * k + 1]);
    }
    if (x1 <= x0 || y1 <= y0) continue;
    out.push_back({image_id, it->second, Box::from_corners(x0, y0, x1, y1)});
  }
  return out;
}

std::vector<Annotation> read_csv_annotations(const std::filesystem::path& path,
                                             const ClassMap& classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<Annotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto f = split_csv(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 6) throw IoError(where + ": expected 6 fields");
    std::array<double, 4> c{};
    bool numeric = true;
    for (int k = 0; k < 4; ++k) numeric = numeric && parse_double(f[2 + k], c[k]);
    if (!numeric) {
      if (line_no == 1) continue;  // header
      throw IoError(where + ": non-numeric coordinate");
    }
    const auto cls = resolve_class(f[1], classes);
    if (!cls) continue;
    if (c[2] <= c[0] || c[3] <= c[1]) throw IoError(where + ": empty box");
    out.push_back({f[0], *cls, Box::from_corners(c[0], c[1], c[2], c[3])});
  }
  return out;
}

void TileOptions::validate() const {
  require(tile_size >= 64, "tile_size must be at least 64");
  require(overlap >= 0 && overlap < tile_size, "overlap must lie in [0, tile_size)");
  require(min_retained >= 0.0 && min_retained <= 1.0, "min_retained must lie in [0, 1]");
}

std::vector<int> tile_offsets(int extent, int tile_size, int overlap) {
  if (extent <= tile_size) return {0};
  const int step = tile_size - overlap;
  std::vector<int> out;
  for (int x = 0;; x += step) {
    if (x + tile_size >= extent) {
      out.push_back(extent - tile_size);
      break;
    }
    out.push_back(x);
  }
  return out;
}

std::vector<Tile> tile_images(std::span<const SourceImage> sources, const TileOptions& options) {
  options.validate();
  const int t = options.tile_size;
  std::vector<Tile> tiles;
  for (const SourceImage& src : sources) {
    const int w = src.image.width();
    const int h = src.image.height();
    require(w > 0 && h > 0, "source '" + src.id + "' is empty");
    for (int y : tile_offsets(h, t, options.overlap)) {
      for (int x : tile_offsets(w, t, options.overlap)) {
        Tile tile;
        tile.entry.id = src.id + "_x" + std::to_string(x) + "_y" + std::to_string(y);
        tile.entry.provenance = {src.id, x, y, std::min(t, w), std::min(t, h), w < t || h < t};
        // The window that holds real pixels, in source coordinates.
        const Box window = Box::from_corners(x, y, x + std::min(t, w), y + std::min(t, h));
        bool has_target = false;
        for (const Annotation& a : src.annotations) {
          const double kept = intersection_area(a.box, window);
          if (a.box.area() <= 0.0 || kept <= 0.0 || kept < options.min_retained * a.box.area())
            continue;
          const double x0 = std::max(a.box.left(), window.left()) - x;
          const double y0 = std::max(a.box.top(), window.top()) - y;
          const double x1 = std::min(a.box.right(), window.right()) - x;
          const double y1 = std::min(a.box.bottom(), window.bottom()) - y;
          tile.entry.annotations.push_back({tile.entry.id, a.class_id, Box::from_corners(x0, y0, x1, y1)});
          has_target = has_target || a.class_id == options.target_class;
        }
        if (!has_target) continue;
        tile.image = crop(src.image, x, y, t, t, 0.0);
        tiles.push_back(std::move(tile));
      }
    }
  }
  return tiles;
}

std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double test_fraction,
                                                           std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  std::vector<std::string> sources;
  for (const auto& e : manifest.entries) {
    if (std::find(sources.begin(), sources.end(), e.provenance.source_id) == sources.end())
      sources.push_back(e.provenance.source_id);
  }
  require(sources.size() >= 2, "splitting needs at least 2 source images, got " +
                                   std::to_string(sources.size()));
  std::sort(sources.begin(), sources.end());
  Rng rng = make_rng(seed, {0x5b117});
  std::shuffle(sources.begin(), sources.end(), rng);
  const auto n = static_cast<long>(sources.size());
  const long n_test = std::clamp(std::lround(test_fraction * static_cast<double>(n)), 1L, n - 1);
  const std::set<std::string> test_sources(sources.begin(), sources.begin() + n_test);

  DatasetManifest train{"train", manifest.tile_size, {}};
  DatasetManifest test{"test", manifest.tile_size, {}};
  for (const auto& e : manifest.entries)
    (test_sources.count(e.provenance.source_id) ? test : train).entries.push_back(e);
  return {std::move(train), std::move(test)};
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  Json entries = Json::array();
  for (const auto& e : manifest.entries) entries.push_back(entry_to_json(e));
  write_json_file(path, Json{{"format", kManifestFormat},
                             {"split", manifest.split},
                             {"tile_size", manifest.tile_size},
                             {"entries", entries}});
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    if (j.value("format", std::string()) != kManifestFormat)
      throw IoError("'" + path.string() + "' is not a camopatch manifest");
    DatasetManifest m;
    m.split = j.value("split", std::string("all"));
    m.tile_size = j.value("tile_size", 0);
    for (const auto& e : j.at("entries")) m.entries.push_back(entry_from_json(e));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
}

DatasetManifest write_tiles(const std::filesystem::path& dir, std::vector<Tile>& tiles,
                            int tile_size) {
  DatasetManifest m{"all", tile_size, {}};
  std::filesystem::create_directories(dir / "images");
  for (Tile& tile : tiles) {
    tile.entry.image = "images/" + tile.entry.id + ".png";
    write_png(dir / tile.entry.image, tile.image);
    m.entries.push_back(tile.entry);
  }
  return m;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  Dataset d;
  for (const auto& e : m.entries) {
    const auto image_path = base / e.image;
    if (!std::filesystem::exists(image_path))
      throw IoError("missing image '" + image_path.string() + "'");
    d.samples.push_back({e.id, e.provenance.source_id, read_png(image_path), e.annotations});
  }
  return d;
}

DatasetManifest save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                             const std::string& split) {
  DatasetManifest m{split, 0, {}};
  std::filesystem::create_directories(dir / "images");
  for (const Sample& s : dataset.samples) {
    ManifestEntry e;
    e.id = s.id;
    e.image = "images/" + s.id + ".png";
    e.provenance = {s.source_id.empty() ? s.id : s.source_id, 0, 0, s.image.width(),
                    s.image.height(), false};
    e.annotations = s.annotations;
    for (auto& a : e.annotations) a.image_id = s.id;
    write_png(dir / e.image, s.image);
    m.tile_size = std::max({m.tile_size, s.image.width(), s.image.height()});
    m.entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.json", m);
  return m;
}

}  // namespace camo
