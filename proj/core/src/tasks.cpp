#include "basisgen/tasks.hpp"

#include <cmath>
#include <stdexcept>

namespace basisgen {

TaskId task_from_string(const std::string& name) {
  if (name == "gmm") return TaskId::gmm;
  if (name == "shapes") return TaskId::shapes;
  if (name == "autoenc") return TaskId::autoenc;
  throw std::invalid_argument("unknown task '" + name + "' (expected gmm|shapes|autoenc)");
}

std::string task_to_string(TaskId id) {
  switch (id) {
    case TaskId::gmm: return "gmm";
    case TaskId::shapes: return "shapes";
    case TaskId::autoenc: return "autoenc";
  }
  return "?";
}

TaskSpec TaskSpec::make(TaskId id) {
  TaskSpec spec;
  spec.id = id;
  return spec;
}

std::vector<std::vector<double>> TaskSpec::gmm_centers(int condition) const {
  // 40-sigma mode separation keeps collapse unambiguous.
  if (condition == 0) return {{-2.0, 0.0}, {2.0, 0.0}};
  if (condition == 1) return {{0.0, -2.0}, {0.0, 2.0}};
  throw std::invalid_argument("gmm: unknown condition " + std::to_string(condition));
}

std::int64_t TaskSpec::condition_channels() const {
  switch (id) {
    case TaskId::gmm: return n_conditions;
    case TaskId::shapes: return 1;
    case TaskId::autoenc: return 3;
  }
  return 0;
}

std::int64_t TaskSpec::target_channels() const {
  switch (id) {
    case TaskId::gmm: return 2;
    case TaskId::shapes: return 3;
    case TaskId::autoenc: return 3;
  }
  return 0;
}

std::int64_t TaskSpec::spatial_size() const { return id == TaskId::gmm ? 1 : image_size; }

ConditionalSample gmm_sample(int condition, const TaskSpec& spec, Rng& rng) {
  if (condition < 0 || condition >= spec.n_conditions) {
    throw std::invalid_argument("gmm_sample: unknown condition " + std::to_string(condition));
  }
  const auto centers = spec.gmm_centers(condition);
  const std::size_t pick = static_cast<std::size_t>(rng.below(centers.size()));
  ConditionalSample s;
  s.condition_id = condition;
  s.condition = Tensor::zeros({spec.n_conditions, 1, 1});
  s.condition[condition] = 1.0;
  s.target = Tensor::zeros({2, 1, 1});
  s.target[0] = centers[pick][0] + spec.sigma * rng.normal();
  s.target[1] = centers[pick][1] + spec.sigma * rng.normal();
  return s;
}

double gmm_density(int condition, const std::vector<double>& b, const TaskSpec& spec) {
  if (condition < 0 || condition >= spec.n_conditions) {
    throw std::invalid_argument("gmm_density: unknown condition " + std::to_string(condition));
  }
  if (b.size() != 2) throw std::invalid_argument("gmm_density: point must be 2-D");
  const auto centers = spec.gmm_centers(condition);
  const double s2 = spec.sigma * spec.sigma;
  const double norm = 1.0 / (2.0 * 3.14159265358979323846 * s2);
  double density = 0.0;
  for (const auto& c : centers) {
    const double dx = b[0] - c[0];
    const double dy = b[1] - c[1];
    density += 0.5 * norm * std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
  }
  return density;
}

const std::vector<std::vector<double>>& shapes_palette() {
  static const std::vector<std::vector<double>> palette = {
      {1.0, -1.0, -1.0},  // red
      {-1.0, 1.0, -1.0},  // green
      {-1.0, -1.0, 1.0},  // blue
      {1.0, 1.0, -1.0},   // yellow
  };
  return palette;
}

namespace {

// Integer-center inclusion masks for the two shape families.
std::vector<std::uint8_t> rasterize_interior(int n, Rng& rng) {
  std::vector<std::uint8_t> interior(static_cast<std::size_t>(n * n), 0);
  const bool ellipse = rng.below(2) == 1;
  if (!ellipse) {
    const int x0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n / 2 - 1)));
    const int y0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n / 2 - 1)));
    const int x1 = x0 + 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - x0 - 4)));
    const int y1 = y0 + 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - y0 - 4)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) interior[static_cast<std::size_t>(y * n + x)] = 1;
    }
  } else {
    const double cx = n / 2.0 - 2.0 + static_cast<double>(rng.below(5));
    const double cy = n / 2.0 - 2.0 + static_cast<double>(rng.below(5));
    const double rx = 3.0 + static_cast<double>(rng.below(3));
    const double ry = 3.0 + static_cast<double>(rng.below(3));
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double ex = (x - cx) / rx;
        const double ey = (y - cy) / ry;
        if (ex * ex + ey * ey <= 1.0) interior[static_cast<std::size_t>(y * n + x)] = 1;
      }
    }
  }
  return interior;
}

std::vector<std::uint8_t> boundary_of(const std::vector<std::uint8_t>& interior, int n) {
  std::vector<std::uint8_t> edge(interior.size(), 0);
  auto inside = [&](int x, int y) {
    return x >= 0 && x < n && y >= 0 && y < n && interior[static_cast<std::size_t>(y * n + x)];
  };
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (!interior[static_cast<std::size_t>(y * n + x)]) continue;
      if (!inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) || !inside(x, y + 1)) {
        edge[static_cast<std::size_t>(y * n + x)] = 1;
      }
    }
  }
  return edge;
}

}  // namespace

ShapeSample shapes_sample(const TaskSpec& spec, Rng& rng) {
  const int n = spec.image_size;
  if (n < 8) throw std::invalid_argument("shapes_sample: image side must be >= 8");
  ShapeSample out;
  out.interior = rasterize_interior(n, rng);
  const auto edge = boundary_of(out.interior, n);
  out.color_index = static_cast<int>(rng.below(shapes_palette().size()));
  const auto& color = shapes_palette()[static_cast<std::size_t>(out.color_index)];

  out.sample.condition = Tensor::full({1, n, n}, -1.0);
  out.sample.target = Tensor::full({3, n, n}, -1.0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const std::size_t i = static_cast<std::size_t>(y * n + x);
      if (edge[i]) out.sample.condition[y * n + x] = 1.0;
      if (out.interior[i]) {
        for (int c = 0; c < 3; ++c) {
          out.sample.target[c * n * n + y * n + x] = color[static_cast<std::size_t>(c)];
        }
      }
    }
  }
  out.sample.color_index = out.color_index;
  return out;
}

ConditionalSample autoenc_sample(const TaskSpec& spec, Rng& rng) {
  ShapeSample shape = shapes_sample(spec, rng);
  ConditionalSample s;
  s.condition = shape.sample.target;
  s.target = shape.sample.target;
  s.color_index = shape.color_index;
  return s;
}

ConditionalSample draw_sample(const TaskSpec& spec, Rng& rng) {
  switch (spec.id) {
    case TaskId::gmm: {
      const int condition = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_conditions)));
      return gmm_sample(condition, spec, rng);
    }
    case TaskId::shapes: return shapes_sample(spec, rng).sample;
    case TaskId::autoenc: return autoenc_sample(spec, rng);
  }
  throw std::invalid_argument("draw_sample: bad task id");
}

}  // namespace basisgen
