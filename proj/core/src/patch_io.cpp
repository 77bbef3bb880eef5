#include <filesystem>

#include "camo/geometry.hpp"
#include "camo/png_io.hpp"
#include "json_codec.hpp"

namespace camo {

std::filesystem::path patch_sidecar_path(const std::filesystem::path& png_path) {
  std::filesystem::path p = png_path;
  p += ".json";
  return p;
}

void save_patch(const std::filesystem::path& png_path, const Patch& patch) {
  patch.validate();
  write_png(png_path, patch.pixels);
  Json meta{{"format", "camopatch-patch/1"},
            {"height", patch.height()},
            {"width", patch.width()},
            {"run_id", patch.meta.run_id},
            {"epoch", patch.meta.epoch},
            {"seed", patch.meta.seed},
            {"attributes", patch.meta.attributes}};
  meta["config"] = patch.meta.config ? to_json(*patch.meta.config) : Json(nullptr);
  write_json_file(patch_sidecar_path(png_path), meta);
}

Patch load_patch(const std::filesystem::path& png_path) {
  if (!std::filesystem::exists(png_path)) {
    throw IoError("patch file '" + png_path.string() + "' does not exist");
  }
  Patch patch{read_png(png_path), {}};
  const auto sidecar = patch_sidecar_path(png_path);
  if (std::filesystem::exists(sidecar)) {
    const Json meta = read_json_file(sidecar);
    try {
      patch.meta.run_id = meta.value("run_id", "");
      patch.meta.epoch = meta.value("epoch", 0);
      patch.meta.seed = meta.value("seed", std::uint64_t{0});
      if (meta.contains("attributes")) {
        patch.meta.attributes = meta.at("attributes").get<std::map<std::string, std::string>>();
      }
      if (meta.contains("config") && !meta.at("config").is_null()) {
        patch.meta.config = patch_config_from_json(meta.at("config"));
      }
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed patch metadata '" + sidecar.string() + "': " + e.what());
    }
  }
  patch.validate();
  return patch;
}

}  // namespace camo
