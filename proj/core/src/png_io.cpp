#include "camo/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "camo/error.hpp"

namespace camo {

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError("cannot decode PNG '" + path.string() + "': " + png.message);
  }
  const int w = static_cast<int>(png.width);
  const int h = static_cast<int>(png.height);
  Image image(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        image.at(c, y, x) = buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
      }
    }
  }
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  require(image.channels() == 1 || image.channels() == 3, "PNG output needs 1 or 3 channels");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int ch = image.channels();
  std::vector<png_byte> buffer(static_cast<std::size_t>(image.width()) * image.height() * ch);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < ch; ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        buffer[(static_cast<std::size_t>(y) * image.width() + x) * ch + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + png.message);
  }
}

}  // namespace camo
