#pragma once

#include <filesystem>

#include "scrublab/document.hpp"

namespace scrublab {

inline constexpr int k_image_size = 128;

// Deterministic rasterization: each token's box is darkened with a texture
// keyed on (token id, position within the box), so a token renders the same
// wherever it appears and renders differ only where tokens differ.
image render(const document& doc, int width = k_image_size, int height = k_image_size);

// Pixel-rect of a box on a w×h grid, clipped; may be empty.
struct pixel_rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open [x0,x1)×[y0,y1)
  bool empty() const { return x0 >= x1 || y0 >= y1; }
};
pixel_rect to_pixels(const bbox& b, int width, int height);

void fill_rect(image& img, const pixel_rect& r, float value);

// Mean pixel value over the box region; 1.0 (white) for empty regions.
double box_mean(const image& img, const bbox& b);

void write_pgm(const image& img, const std::filesystem::path& file);
image read_pgm(const std::filesystem::path& file);

}  // namespace scrublab
