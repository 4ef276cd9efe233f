#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "basisgen/rng.hpp"
#include "basisgen/tensor.hpp"

namespace basisgen {

enum class TaskId { gmm, shapes, autoenc };

TaskId task_from_string(const std::string& name);
std::string task_to_string(TaskId id);

/// Conditional-generation task with known ground truth.
struct TaskSpec {
  TaskId id = TaskId::gmm;

  // gmm: per condition, a two-component isotropic mixture in R^2.
  // Condition 0 puts modes at (-2,0)/(+2,0); condition 1 at (0,-2)/(0,+2).
  int n_conditions = 2;
  double sigma = 0.1;

  // image tasks
  int image_size = 16;

  static TaskSpec make(TaskId id);

  std::vector<std::vector<double>> gmm_centers(int condition) const;

  // Network-facing dims. Conditions and targets are channel-first images;
  // the gmm task uses 1x1 "images" so convs act on channels.
  std::int64_t condition_channels() const;
  std::int64_t target_channels() const;
  std::int64_t spatial_size() const;
};

struct ConditionalSample {
  Tensor condition;  // [Ca,H,W]
  Tensor target;     // [Cb,H,W]
  int condition_id = -1;  // gmm only
  int color_index = -1;   // shapes/autoenc only
};

/// B ~ the condition's two-component mixture; A encoded one-hot over
/// channels.
ConditionalSample gmm_sample(int condition, const TaskSpec& spec, Rng& rng);

/// Exact mixture density at point b = (x, y).
double gmm_density(int condition, const std::vector<double>& b, const TaskSpec& spec);

struct ShapeSample {
  ConditionalSample sample;
  std::vector<std::uint8_t> interior;  // row-major HxW fill mask
  int color_index = 0;
};

/// A = binary edge map of a random rectangle or ellipse; B = the same shape
/// filled with one of four palette colors drawn uniformly. One edge map maps
/// to four possible targets.
ShapeSample shapes_sample(const TaskSpec& spec, Rng& rng);

/// Self-reconstruction pairs: A == B == a colored shapes image.
ConditionalSample autoenc_sample(const TaskSpec& spec, Rng& rng);

/// Task-appropriate draw used by the training loop.
ConditionalSample draw_sample(const TaskSpec& spec, Rng& rng);

/// The four palette colors as RGB triples in [-1,1].
const std::vector<std::vector<double>>& shapes_palette();

}  // namespace basisgen
