#include "scrublab/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace scrublab {

pixel_rect to_pixels(const bbox& b, int width, int height) {
  pixel_rect r;
  r.x0 = std::clamp(b.x0 * width / 1000, 0, width);
  r.x1 = std::clamp((b.x1 * width + 999) / 1000, 0, width);
  r.y0 = std::clamp(b.y0 * height / 1000, 0, height);
  r.y1 = std::clamp((b.y1 * height + 999) / 1000, 0, height);
  return r;
}

void fill_rect(image& img, const pixel_rect& r, float value) {
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) img.at(x, y) = value;
  }
}

image render(const document& doc, int width, int height) {
  require_data(doc.tokens.size() == doc.boxes.size(), "render: token/box count mismatch");
  image img = image::white(width, height);
  for (size_t i = 0; i < doc.tokens.size(); ++i) {
    const auto tid = static_cast<uint64_t>(doc.tokens[i]);
    pixel_rect r = to_pixels(doc.boxes[i], width, height);
    // Per-token shade keeps the box mean informative about the token id.
    // Quantized to 8-bit levels so PGM round-trips reproduce renders exactly.
    double shade = 0.35 + 0.5 * static_cast<double>(mix64(tid + 1) >> 40) / 16777216.0;
    float dark = static_cast<float>(std::lround((1.0 - shade) * 255.0)) / 255.0f;
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        uint64_t h = mix64(tid * 0x9e3779b97f4a7c15ull ^
                           (static_cast<uint64_t>(x - r.x0) << 32) ^
                           static_cast<uint64_t>(y - r.y0));
        if (h & 1) img.at(x, y) = std::min(img.at(x, y), dark);
      }
    }
  }
  return img;
}

double box_mean(const image& img, const bbox& b) {
  pixel_rect r = to_pixels(b, img.width, img.height);
  if (r.empty()) return 1.0;
  double sum = 0.0;
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) sum += img.at(x, y);
  }
  return sum / (static_cast<double>(r.x1 - r.x0) * (r.y1 - r.y0));
}

void write_pgm(const image& img, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  require_data(out.good(), "cannot write image file: " + file.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.px.size());
  for (size_t i = 0; i < img.px.size(); ++i) {
    float v = std::clamp(img.px[i], 0.0f, 1.0f);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

image read_pgm(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  require_data(in.good(), "cannot read image file: " + file.string());
  std::string magic;
  in >> magic;
  require_data(magic == "P5", "not a P5 graymap: " + file.string());
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  require_data(w > 0 && h > 0 && maxval == 255, "unsupported graymap header: " + file.string());
  in.get();  // single whitespace after header
  std::vector<unsigned char> bytes(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require_data(in.gcount() == static_cast<std::streamsize>(bytes.size()),
               "truncated graymap: " + file.string());
  image img{w, h, std::vector<float>(bytes.size())};
  for (size_t i = 0; i < bytes.size(); ++i) img.px[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

}  // namespace scrublab
