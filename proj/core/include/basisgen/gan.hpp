#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "basisgen/checkpoint.hpp"
#include "basisgen/graph.hpp"
#include "basisgen/layers.hpp"
#include "basisgen/optim.hpp"
#include "basisgen/tasks.hpp"

namespace basisgen {

/// Thrown when a loss goes non-finite; the CLI maps it to exit code 2.
class TrainingDivergence : public std::runtime_error {
 public:
  explicit TrainingDivergence(const std::string& msg) : std::runtime_error(msg) {}
};

enum class LatentMode { per_layer, shared };
enum class Objective { saturating, non_saturating };

struct PlainConv {
  Tensor w;     // [Cout,Cin,L,L]
  Tensor bias;  // [Cout]
  int padding = 0;

  static PlainConv init(std::int64_t cin, std::int64_t cout, std::int64_t l, int padding,
                        Rng& rng);
};

/// Layer backed by a direct filter generator (the costly baseline).
struct DirectGenLayer {
  FilterGeneratorParams generator;
  int padding = 0;
};

enum class LayerKind { plain, stochastic, filtergen };

struct GenLayerRef {
  LayerKind kind;
  std::size_t index;
};

/// Generator split into a deterministic sub-model (plain convs, params phi)
/// and a stochastic sub-model (layers whose filters are resampled every
/// forward pass). `topology` orders the layers; hidden activations are the
/// leaky rectifier, the output layer is tanh for image tasks and linear for
/// the point task.
struct GeneratorNet {
  std::vector<PlainConv> deterministic_layers;
  std::vector<StochasticConvLayer> stochastic_layers;
  std::vector<DirectGenLayer> filtergen_layers;
  std::vector<GenLayerRef> topology;
  bool tanh_output = true;
  LatentMode latent_mode = LatentMode::per_layer;

  std::size_t stochastic_slots() const {
    return stochastic_layers.size() + filtergen_layers.size();
  }
  std::int64_t latent_dim(std::size_t slot) const;
  std::vector<Tensor*> parameters();

  /// Latents consumed by the most recent forward, one per stochastic slot.
  mutable std::vector<Tensor> last_latents;
};

struct DiscriminatorNet {
  std::vector<PlainConv> convs;
  Tensor head_w;  // [1, C]
  Tensor head_b;  // [1]

  std::vector<Tensor*> parameters();
};

struct ModelConfig {
  std::int64_t channels = 32;
  std::int64_t d_channels = 32;
  std::int64_t d_z = 64;
  std::int64_t d_h = 64;
  std::int64_t k_basis = 7;
  std::int64_t ksize = 0;  // 0 = task default: 1 for gmm, 3 for images
  int n_stochastic = 2;
  bool filtergen = false;  // back stochastic slots with direct filter generators
};

/// Encoder (2 plain) -> n stochastic -> decoder (2 plain). n_stochastic = 0
/// yields the fully deterministic ablation with the same depth.
GeneratorNet build_generator(const TaskSpec& task, const ModelConfig& cfg, Rng& rng);
DiscriminatorNet build_discriminator(const TaskSpec& task, const ModelConfig& cfg, Rng& rng);

// --- graph-level forwards ---------------------------------------------------

struct GeneratorVars {
  struct PlainVars {
    Var w, bias;
  };
  std::vector<PlainVars> plain;
  std::vector<StochasticConvVars> stoch;
  std::vector<FilterGeneratorVars> fgen;
};

GeneratorVars insert_generator_net(Graph& g, GeneratorNet& net, bool trainable);

/// One latent per stochastic slot, drawn by the caller.
Var generator_forward(Graph& g, const GeneratorVars& vars, const GeneratorNet& net, Var condition,
                      const std::vector<Tensor>& latents);

struct DiscriminatorVars {
  std::vector<GeneratorVars::PlainVars> convs;
  Var head_w, head_b;
};

DiscriminatorVars insert_discriminator_net(Graph& g, DiscriminatorNet& net, bool trainable);

/// D(A,B) in (0,1), scalar node.
Var discriminator_forward(Graph& g, const DiscriminatorVars& vars, const DiscriminatorNet& net,
                          Var condition, Var target);

/// Latents for one forward pass honoring latent_mode (shared draws one z and
/// repeats it across slots).
std::vector<Tensor> draw_latents(const GeneratorNet& net, Rng& rng);

// --- objectives -------------------------------------------------------------

/// -log d_real - log(1 - d_fake); inputs must lie in (0,1).
Var d_loss(Var d_real, Var d_fake);
double d_loss_value(double d_real, double d_fake);

/// saturating: log(1 - d_fake) (the paper-literal form);
/// non_saturating: -log d_fake (default).
Var g_loss(Var d_fake, Objective objective);
double g_loss_value(double d_fake, Objective objective);

/// Mean absolute difference.
Var l1_loss(Var generated, Var target);

/// -|b1 - b2|_1 / (|z1 - z2|_1 + 1e-8), minimized. Throws if z1 == z2
/// exactly.
Var diversity_regularizer(const Tensor& z1, const Tensor& z2, Var b1, Var b2);

// --- training loop ----------------------------------------------------------

struct TrainingConfig {
  double alpha = 2e-4;
  int steps = 5000;
  int batch = 32;
  double lambda_l1 = 0.0;
  double lambda_div = 0.0;
  std::uint64_t seed = 1;
  LatentMode latent_mode = LatentMode::per_layer;
  bool per_sample_latent = false;
  Objective objective = Objective::non_saturating;
  bool plain_sgd = false;  // Algorithm-style plain gradient step instead of Adam
  int log_every = 250;
  int eval_samples = 512;        // per condition, for jsd/coverage
  int eval_diversity_samples = 20;  // per condition, for the diversity score
  int eval_conditions = 8;       // conditions evaluated on image tasks
  ModelConfig model;
};

struct MetricsRow {
  int step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_l1 = 0.0;
  double diversity = 0.0;
  double jsd_est = 0.0;
  double mode_coverage = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

/// Per-tensor optimizer state for one network.
struct NetOptimizer {
  std::vector<AdamState> states;
  double alpha = 2e-4;
  bool plain = false;

  void init(const std::vector<Tensor*>& params, double alpha, bool plain_sgd);
  void step(const std::vector<Tensor*>& params);
};

/// One discriminator update then one generator update (1:1). Latents are
/// redrawn within the step. Returns the step's losses; the evaluation
/// columns are filled by the logging pass in train().
MetricsRow train_step(GeneratorNet& gen, DiscriminatorNet& disc,
                      const std::vector<ConditionalSample>& batch, const TrainingConfig& config,
                      NetOptimizer& opt_g, NetOptimizer& opt_d, Rng& rng);

struct EvalResult {
  double diversity = 0.0;
  double jsd_est = 0.0;
  double mode_coverage = 0.0;
  double l1_to_target = 0.0;
};

/// Frozen-generator evaluation: `samples_per_condition` draws per condition,
/// diversity / histogram JSD / mode coverage, plus mean L1 to the target.
EvalResult evaluate_generator(GeneratorNet& net, const TaskSpec& task,
                              const TrainingConfig& config, int samples_per_condition, Rng rng);

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::string metrics_path;
  std::string checkpoint_path;
  std::string manifest_path;
};

/// Full run: builds nets from (config, task), trains config.steps steps,
/// logs every log_every steps, writes metrics.csv / model.bgt1 /
/// manifest.txt / sample grids under out_dir.
TrainResult train(const TrainingConfig& config, const TaskSpec& task, const std::string& out_dir);

// --- checkpointing ----------------------------------------------------------

/// Stochastic layers serialize as layer{i}.W1/.b1/.W2/.b2/.a; plain ones as
/// conv{i}.w/.b; the discriminator under disc.*.
Checkpoint to_checkpoint(const GeneratorNet& gen, const DiscriminatorNet& disc);
void from_checkpoint(const Checkpoint& cp, GeneratorNet& gen, DiscriminatorNet& disc);

/// Rebuild nets from a run directory (manifest.txt + model.bgt1).
struct LoadedRun {
  TrainingConfig config;
  TaskSpec task;
  GeneratorNet gen;
  DiscriminatorNet disc;
};
LoadedRun load_run(const std::string& run_dir);

}  // namespace basisgen
