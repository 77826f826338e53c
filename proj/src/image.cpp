#include "sqc/image.h"

#include <png.h>

#include <cstring>
#include <stdexcept>

namespace sqc {

ImageU8 read_png(const std::string& path, int channels) {
  if (channels != 1 && channels != 3) {
    throw std::runtime_error("read_png: channels must be 1 or 3");
  }
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.c_str())) {
    throw std::runtime_error("read_png: cannot open " + path + ": " + im.message);
  }
  im.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  ImageU8 out;
  out.width = static_cast<int>(im.width);
  out.height = static_cast<int>(im.height);
  out.channels = channels;
  out.data.resize(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&im);
    throw std::runtime_error("read_png: decode failed for " + path + ": " + im.message);
  }
  return out;
}

void write_png(const std::string& path, const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::runtime_error("write_png: channels must be 1 or 3");
  }
  if (img.data.size() != size_t(img.width) * img.height * img.channels) {
    throw std::runtime_error("write_png: buffer size mismatch for " + path);
  }
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width);
  im.height = static_cast<png_uint_32>(img.height);
  im.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&im, path.c_str(), 0, img.data.data(), 0, nullptr)) {
    throw std::runtime_error("write_png: encode failed for " + path + ": " + im.message);
  }
}

}  // namespace sqc
