#include "basisgen/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace basisgen {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TensorError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw TensorError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_ppm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw TensorError("write_ppm: buffer size does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TensorError("cannot open '" + path + "' for writing");
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) throw TensorError("write failed for '" + path + "'");
}

std::uint8_t to_byte(double v) {
  const double mapped = std::round(255.0 * (v + 1.0) / 2.0);
  return static_cast<std::uint8_t>(std::clamp(mapped, 0.0, 255.0));
}

void write_sample_grid(const std::string& path,
                       const std::vector<std::vector<Tensor>>& rows_of_images) {
  if (rows_of_images.empty() || rows_of_images[0].empty()) {
    throw TensorError("write_sample_grid: no images");
  }
  const Shape& shape = rows_of_images[0][0].shape();
  if (shape.size() != 3 || shape[0] != 3) {
    throw TensorError("write_sample_grid: images must be [3,H,W], got " + shape_str(shape));
  }
  const std::int64_t h = shape[1], w = shape[2];
  const int pad = 2;
  std::size_t cols = 0;
  for (const auto& row : rows_of_images) cols = std::max(cols, row.size());
  const int grid_w = static_cast<int>(cols * (w + pad) + pad);
  const int grid_h = static_cast<int>(rows_of_images.size() * (h + pad) + pad);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(grid_w) * grid_h * 3, 32);

  for (std::size_t r = 0; r < rows_of_images.size(); ++r) {
    for (std::size_t c = 0; c < rows_of_images[r].size(); ++c) {
      const Tensor& img = rows_of_images[r][c];
      if (img.shape() != shape) {
        throw TensorError("write_sample_grid: inconsistent image shapes");
      }
      const int y0 = static_cast<int>(r * (h + pad) + pad);
      const int x0 = static_cast<int>(c * (w + pad) + pad);
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          for (int ch = 0; ch < 3; ++ch) {
            const std::size_t dst =
                (static_cast<std::size_t>(y0 + y) * grid_w + static_cast<std::size_t>(x0 + x)) * 3 +
                static_cast<std::size_t>(ch);
            rgb[dst] = to_byte(img[ch * h * w + y * w + x]);
          }
        }
      }
    }
  }
  write_ppm(path, grid_w, grid_h, rgb);
}

Tensor render_points(const std::vector<std::vector<double>>& points, int side) {
  Tensor img = Tensor::full({3, side, side}, -1.0);
  for (const auto& p : points) {
    if (p.size() < 2) continue;
    const int x = static_cast<int>(std::floor((p[0] + 4.0) / 8.0 * side));
    const int y = static_cast<int>(std::floor((p[1] + 4.0) / 8.0 * side));
    if (x < 0 || x >= side || y < 0 || y >= side) continue;
    for (int ch = 0; ch < 3; ++ch) {
      img[ch * side * side + (side - 1 - y) * side + x] = 1.0;
    }
  }
  return img;
}

}  // namespace basisgen
