#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "basisgen/tensor.hpp"

namespace basisgen {

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Binary PPM (P6), 8-bit. `rgb` is row-major, 3 bytes per pixel.
void write_ppm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& rgb);

/// [-1,1] -> round(255 (v+1)/2), clamped.
std::uint8_t to_byte(double v);

/// Tile [3,H,W] images into a grid, one row per condition, samples across.
/// All images must share one shape.
void write_sample_grid(const std::string& path,
                       const std::vector<std::vector<Tensor>>& rows_of_images);

/// Render 2-D points as white dots on black, domain [-4,4]^2.
Tensor render_points(const std::vector<std::vector<double>>& points, int side = 64);

}  // namespace basisgen
