#include "basisgen/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "basisgen/config.hpp"
#include "basisgen/divergence.hpp"
#include "basisgen/io.hpp"

namespace basisgen {

namespace fs = std::filesystem;

PlainConv PlainConv::init(std::int64_t cin, std::int64_t cout, std::int64_t l, int padding,
                          Rng& rng) {
  PlainConv c;
  c.w = Tensor::randn({cout, cin, l, l}, rng, 1.0 / std::sqrt(static_cast<double>(cin * l * l)));
  c.bias = Tensor::zeros({cout});
  c.padding = padding;
  return c;
}

std::int64_t GeneratorNet::latent_dim(std::size_t slot) const {
  std::size_t seen = 0;
  for (const auto& ref : topology) {
    if (ref.kind == LayerKind::plain) continue;
    if (seen == slot) {
      return ref.kind == LayerKind::stochastic ? stochastic_layers[ref.index].generator.d_z
                                               : filtergen_layers[ref.index].generator.d_z;
    }
    ++seen;
  }
  throw TensorError("latent_dim: no stochastic slot " + std::to_string(slot));
}

std::vector<Tensor*> GeneratorNet::parameters() {
  std::vector<Tensor*> params;
  for (const auto& ref : topology) {
    switch (ref.kind) {
      case LayerKind::plain: {
        PlainConv& c = deterministic_layers[ref.index];
        params.push_back(&c.w);
        params.push_back(&c.bias);
        break;
      }
      case LayerKind::stochastic: {
        StochasticConvLayer& s = stochastic_layers[ref.index];
        params.push_back(&s.generator.w1);
        params.push_back(&s.generator.b1);
        params.push_back(&s.generator.w2);
        params.push_back(&s.generator.b2);
        params.push_back(&s.coefficients);
        break;
      }
      case LayerKind::filtergen: {
        DirectGenLayer& f = filtergen_layers[ref.index];
        params.push_back(&f.generator.w1);
        params.push_back(&f.generator.b1);
        params.push_back(&f.generator.w2);
        params.push_back(&f.generator.b2);
        break;
      }
    }
  }
  return params;
}

std::vector<Tensor*> DiscriminatorNet::parameters() {
  std::vector<Tensor*> params;
  for (PlainConv& c : convs) {
    params.push_back(&c.w);
    params.push_back(&c.bias);
  }
  params.push_back(&head_w);
  params.push_back(&head_b);
  return params;
}

GeneratorNet build_generator(const TaskSpec& task, const ModelConfig& cfg, Rng& rng) {
  const std::int64_t l = cfg.ksize > 0 ? cfg.ksize : (task.id == TaskId::gmm ? 1 : 3);
  const int pad = static_cast<int>((l - 1) / 2);
  const std::int64_t cin = task.condition_channels();
  const std::int64_t cout = task.target_channels();
  const std::int64_t c = cfg.channels;

  GeneratorNet net;
  net.tanh_output = task.id != TaskId::gmm;

  auto add_plain = [&](std::int64_t in, std::int64_t out) {
    net.deterministic_layers.push_back(PlainConv::init(in, out, l, pad, rng));
    net.topology.push_back({LayerKind::plain, net.deterministic_layers.size() - 1});
  };
  auto add_stochastic = [&](std::int64_t in, std::int64_t out) {
    if (cfg.filtergen) {
      DirectGenLayer layer;
      layer.generator = FilterGeneratorParams::init(cfg.d_z, cfg.d_h, l, in, out, rng);
      layer.padding = pad;
      net.filtergen_layers.push_back(std::move(layer));
      net.topology.push_back({LayerKind::filtergen, net.filtergen_layers.size() - 1});
    } else {
      net.stochastic_layers.push_back(
          StochasticConvLayer::init(in, out, l, cfg.k_basis, cfg.d_z, cfg.d_h, pad, rng));
      net.topology.push_back({LayerKind::stochastic, net.stochastic_layers.size() - 1});
    }
  };

  add_plain(cin, c);
  add_plain(c, c);
  for (int i = 0; i < cfg.n_stochastic; ++i) add_stochastic(c, c);
  // Keep depth fixed across the ablation: zero stochastic slots swap in
  // plain convs instead.
  for (int i = cfg.n_stochastic; i < 2; ++i) add_plain(c, c);
  add_plain(c, c);
  add_plain(c, cout);
  return net;
}

DiscriminatorNet build_discriminator(const TaskSpec& task, const ModelConfig& cfg, Rng& rng) {
  const std::int64_t l = cfg.ksize > 0 ? cfg.ksize : (task.id == TaskId::gmm ? 1 : 3);
  const int pad = static_cast<int>((l - 1) / 2);
  const std::int64_t cin = task.condition_channels() + task.target_channels();
  const std::int64_t c = cfg.d_channels;

  DiscriminatorNet net;
  net.convs.push_back(PlainConv::init(cin, c, l, pad, rng));
  net.convs.push_back(PlainConv::init(c, c, l, pad, rng));
  if (task.id != TaskId::gmm) net.convs.push_back(PlainConv::init(c, c, l, pad, rng));
  net.head_w = Tensor::randn({1, c}, rng, 1.0 / std::sqrt(static_cast<double>(c)));
  net.head_b = Tensor::zeros({1});
  return net;
}

GeneratorVars insert_generator_net(Graph& g, GeneratorNet& net, bool trainable) {
  GeneratorVars vars;
  for (PlainConv& c : net.deterministic_layers) {
    if (trainable) {
      vars.plain.push_back({g.param(c.w), g.param(c.bias)});
    } else {
      vars.plain.push_back({g.leaf(c.w), g.leaf(c.bias)});
    }
  }
  for (StochasticConvLayer& s : net.stochastic_layers) {
    vars.stoch.push_back(insert_layer(g, s, trainable));
  }
  for (DirectGenLayer& f : net.filtergen_layers) {
    vars.fgen.push_back(insert_generator(g, f.generator, trainable));
  }
  return vars;
}

Var generator_forward(Graph& g, const GeneratorVars& vars, const GeneratorNet& net, Var condition,
                      const std::vector<Tensor>& latents) {
  if (latents.size() != net.stochastic_slots()) {
    throw TensorError("generator_forward: expected " + std::to_string(net.stochastic_slots()) +
                      " latents, got " + std::to_string(latents.size()));
  }
  net.last_latents = latents;
  Var x = condition;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < net.topology.size(); ++i) {
    const GenLayerRef& ref = net.topology[i];
    const bool last = (i + 1 == net.topology.size());
    switch (ref.kind) {
      case LayerKind::plain: {
        const PlainConv& c = net.deterministic_layers[ref.index];
        x = add_channel_bias(conv2d(x, vars.plain[ref.index].w, c.padding),
                             vars.plain[ref.index].bias);
        break;
      }
      case LayerKind::stochastic: {
        const StochasticConvLayer& s = net.stochastic_layers[ref.index];
        x = stochastic_conv_forward(g, vars.stoch[ref.index], s, x, latents[slot]);
        ++slot;
        break;
      }
      case LayerKind::filtergen: {
        const DirectGenLayer& f = net.filtergen_layers[ref.index];
        Var w = filters_direct_forward(g, vars.fgen[ref.index], f.generator, latents[slot]);
        x = conv2d(x, w, f.padding);
        ++slot;
        break;
      }
    }
    if (!last) {
      x = leaky_relu(x);
    } else if (net.tanh_output) {
      x = tanh_op(x);
    }
  }
  return x;
}

DiscriminatorVars insert_discriminator_net(Graph& g, DiscriminatorNet& net, bool trainable) {
  DiscriminatorVars vars;
  for (PlainConv& c : net.convs) {
    if (trainable) {
      vars.convs.push_back({g.param(c.w), g.param(c.bias)});
    } else {
      vars.convs.push_back({g.leaf(c.w), g.leaf(c.bias)});
    }
  }
  vars.head_w = trainable ? g.param(net.head_w) : g.leaf(net.head_w);
  vars.head_b = trainable ? g.param(net.head_b) : g.leaf(net.head_b);
  return vars;
}

Var discriminator_forward(Graph&, const DiscriminatorVars& vars, const DiscriminatorNet& net,
                          Var condition, Var target) {
  Var x = concat_channels(condition, target);
  for (std::size_t i = 0; i < net.convs.size(); ++i) {
    x = leaky_relu(add_channel_bias(conv2d(x, vars.convs[i].w, net.convs[i].padding),
                                    vars.convs[i].bias));
  }
  Var features = spatial_mean(x);
  Var logit = add(matvec(vars.head_w, features), vars.head_b);
  return sigmoid(sum(logit));
}

std::vector<Tensor> draw_latents(const GeneratorNet& net, Rng& rng) {
  const std::size_t slots = net.stochastic_slots();
  std::vector<Tensor> latents;
  latents.reserve(slots);
  if (slots == 0) return latents;
  if (net.latent_mode == LatentMode::shared) {
    const std::int64_t d = net.latent_dim(0);
    for (std::size_t s = 1; s < slots; ++s) {
      if (net.latent_dim(s) != d) {
        throw TensorError("shared latent mode requires equal d_z across stochastic layers");
      }
    }
    const Tensor z = sample_latent(rng, d);
    for (std::size_t s = 0; s < slots; ++s) latents.push_back(z);
  } else {
    for (std::size_t s = 0; s < slots; ++s) {
      latents.push_back(sample_latent(rng, net.latent_dim(s)));
    }
  }
  return latents;
}

namespace {

void check_unit_interval(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0)) {
    throw TensorError(std::string(what) + " must lie in (0,1), got " + std::to_string(v));
  }
}

}  // namespace

Var d_loss(Var d_real, Var d_fake) {
  check_unit_interval(d_real.item(), "d_loss: d_real");
  check_unit_interval(d_fake.item(), "d_loss: d_fake");
  Var term_real = neg(log_guarded(d_real));
  Var term_fake = neg(log_guarded(add_const(neg(d_fake), 1.0)));
  return add(term_real, term_fake);
}

double d_loss_value(double d_real, double d_fake) {
  check_unit_interval(d_real, "d_loss: d_real");
  check_unit_interval(d_fake, "d_loss: d_fake");
  return -std::log(d_real) - std::log(1.0 - d_fake);
}

Var g_loss(Var d_fake, Objective objective) {
  check_unit_interval(d_fake.item(), "g_loss: d_fake");
  if (objective == Objective::saturating) {
    return log_guarded(add_const(neg(d_fake), 1.0));
  }
  return neg(log_guarded(d_fake));
}

double g_loss_value(double d_fake, Objective objective) {
  check_unit_interval(d_fake, "g_loss: d_fake");
  if (objective == Objective::saturating) {
    return std::log(std::max(1.0 - d_fake, 1e-12));
  }
  return -std::log(std::max(d_fake, 1e-12));
}

Var l1_loss(Var generated, Var target) {
  check_same_shape(generated.value(), target.value(), "l1_loss");
  return mean(abs_op(sub(generated, target)));
}

Var diversity_regularizer(const Tensor& z1, const Tensor& z2, Var b1, Var b2) {
  check_same_shape(z1, z2, "diversity_regularizer latents");
  check_same_shape(b1.value(), b2.value(), "diversity_regularizer outputs");
  double z_dist = 0.0;
  for (std::int64_t i = 0; i < z1.size(); ++i) z_dist += std::fabs(z1[i] - z2[i]);
  if (z_dist == 0.0) {
    throw TensorError("diversity_regularizer: identical latents give a degenerate ratio");
  }
  Var out_dist = sum(abs_op(sub(b1, b2)));
  return scale(neg(out_dist), 1.0 / (z_dist + 1e-8));
}

void NetOptimizer::init(const std::vector<Tensor*>& params, double alpha_in, bool plain_sgd) {
  alpha = alpha_in;
  plain = plain_sgd;
  states.clear();
  for (const Tensor* p : params) states.push_back(AdamState::for_tensor(*p, alpha_in));
}

void NetOptimizer::step(const std::vector<Tensor*>& params) {
  if (params.size() != states.size()) {
    throw TensorError("optimizer: parameter count changed since init");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const std::vector<double>& g = p.grad();
    if (plain) {
      sgd_step(p, g, alpha);
    } else {
      adam_step(p, g, states[i]);
    }
  }
}

namespace {

std::vector<Tensor> latents_for_sample(const GeneratorNet& net, const TrainingConfig& config,
                                       std::vector<Tensor>& pass_latents, Rng& rng) {
  if (config.per_sample_latent) return draw_latents(net, rng);
  if (pass_latents.empty() && net.stochastic_slots() > 0) pass_latents = draw_latents(net, rng);
  return pass_latents;
}

void zero_param_grads(const std::vector<Tensor*>& params) {
  for (Tensor* p : params) {
    p->grad();  // materialize
    p->zero_grad();
  }
}

}  // namespace

MetricsRow train_step(GeneratorNet& gen, DiscriminatorNet& disc,
                      const std::vector<ConditionalSample>& batch, const TrainingConfig& config,
                      NetOptimizer& opt_g, NetOptimizer& opt_d, Rng& rng) {
  if (batch.empty()) throw TensorError("train_step: empty batch");
  MetricsRow row;

  const auto d_params = disc.parameters();
  const auto g_params = gen.parameters();

  // Discriminator update.
  zero_param_grads(d_params);
  {
    Graph g;
    auto dv = insert_discriminator_net(g, disc, true);
    auto gv = insert_generator_net(g, gen, false);
    std::vector<Tensor> pass_latents;
    std::vector<Var> losses;
    for (const ConditionalSample& s : batch) {
      Var a = g.leaf(s.condition);
      Var b = g.leaf(s.target);
      Var d_real = discriminator_forward(g, dv, disc, a, b);
      const auto zs = latents_for_sample(gen, config, pass_latents, rng);
      Var fake = generator_forward(g, gv, gen, a, zs);
      Var d_fake = discriminator_forward(g, dv, disc, a, fake);
      losses.push_back(d_loss(d_real, d_fake));
    }
    Var loss = mean_of(losses);
    row.loss_d = loss.item();
    if (!std::isfinite(row.loss_d)) {
      throw TrainingDivergence("discriminator loss is not finite: " + std::to_string(row.loss_d));
    }
    g.backward(loss);
  }
  opt_d.step(d_params);

  // Generator update; latents are redrawn.
  zero_param_grads(g_params);
  {
    Graph g;
    auto dv = insert_discriminator_net(g, disc, false);
    auto gv = insert_generator_net(g, gen, true);
    std::vector<Tensor> pass_latents;
    std::vector<Var> gan_terms;
    std::vector<Var> l1_terms;
    for (const ConditionalSample& s : batch) {
      Var a = g.leaf(s.condition);
      const auto zs = latents_for_sample(gen, config, pass_latents, rng);
      Var fake = generator_forward(g, gv, gen, a, zs);
      Var d_fake = discriminator_forward(g, dv, disc, a, fake);
      gan_terms.push_back(g_loss(d_fake, config.objective));
      if (config.lambda_l1 > 0.0) l1_terms.push_back(l1_loss(fake, g.leaf(s.target)));
    }
    Var loss = mean_of(gan_terms);
    if (config.lambda_l1 > 0.0) {
      Var l1 = mean_of(l1_terms);
      row.loss_l1 = l1.item();
      loss = add(loss, scale(l1, config.lambda_l1));
    }
    if (config.lambda_div > 0.0 && gen.stochastic_slots() > 0) {
      // DSGAN-style pairing: both samples share one latent across layers.
      const std::int64_t d = gen.latent_dim(0);
      const Tensor z1 = sample_latent(rng, d);
      const Tensor z2 = sample_latent(rng, d);
      Var a0 = g.leaf(batch[0].condition);
      Var fake1 = generator_forward(g, gv, gen, a0,
                                    std::vector<Tensor>(gen.stochastic_slots(), z1));
      Var fake2 = generator_forward(g, gv, gen, a0,
                                    std::vector<Tensor>(gen.stochastic_slots(), z2));
      loss = add(loss, scale(diversity_regularizer(z1, z2, fake1, fake2), config.lambda_div));
    }
    row.loss_g = loss.item();
    if (!std::isfinite(row.loss_g)) {
      throw TrainingDivergence("generator loss is not finite: " + std::to_string(row.loss_g));
    }
    g.backward(loss);
  }
  opt_g.step(g_params);
  return row;
}

namespace {

std::vector<double> flatten(const Tensor& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

Tensor generate_one(GeneratorNet& net, const Tensor& condition, Rng& rng) {
  Graph g;
  auto gv = insert_generator_net(g, net, false);
  const auto zs = draw_latents(net, rng);
  return generator_forward(g, gv, net, g.leaf(condition), zs).value();
}

}  // namespace

EvalResult evaluate_generator(GeneratorNet& net, const TaskSpec& task,
                              const TrainingConfig& config, int samples_per_condition, Rng rng) {
  EvalResult result;

  if (task.id == TaskId::gmm) {
    Rng rng_true = rng.derive(0x7271);
    double jsd_acc = 0.0, cov_acc = 0.0, div_acc = 0.0;
    const HistogramSpec hist{-4.0, 4.0, 24};
    for (int cond = 0; cond < task.n_conditions; ++cond) {
      Tensor a = Tensor::zeros({task.n_conditions, 1, 1});
      a[cond] = 1.0;
      std::vector<std::vector<double>> generated;
      for (int i = 0; i < samples_per_condition; ++i) {
        generated.push_back(flatten(generate_one(net, a, rng)));
      }
      std::vector<std::vector<double>> truth;
      for (int i = 0; i < samples_per_condition; ++i) {
        truth.push_back(flatten(gmm_sample(cond, task, rng_true).target));
      }
      double jsd_c;
      try {
        jsd_c = jsd_from_samples(generated, truth, hist);
      } catch (const std::exception&) {
        jsd_c = kLog2;  // disjoint supports
      }
      jsd_acc += jsd_c;
      cov_acc += mode_coverage(generated, task.gmm_centers(cond), 3.0 * task.sigma);
      const std::size_t ndiv = std::min<std::size_t>(
          generated.size(), static_cast<std::size_t>(config.eval_diversity_samples));
      div_acc += diversity_score({generated.begin(), generated.begin() + static_cast<std::ptrdiff_t>(ndiv)});
    }
    const double inv = 1.0 / static_cast<double>(task.n_conditions);
    result.jsd_est = jsd_acc * inv;
    result.mode_coverage = cov_acc * inv;
    result.diversity = div_acc * inv;
    result.l1_to_target = 0.0;
    return result;
  }

  // Image tasks: fixed eval conditions, diversity and L1 against targets,
  // pooled pixel-value JSD.
  Rng rng_cond = rng.derive(0xC0ED);
  double div_acc = 0.0, l1_acc = 0.0;
  std::vector<std::vector<double>> gen_pixels, true_pixels;
  const int n_conditions = std::max(1, config.eval_conditions);
  for (int cond = 0; cond < n_conditions; ++cond) {
    const ConditionalSample ref = draw_sample(task, rng_cond);
    std::vector<std::vector<double>> generated;
    for (int i = 0; i < samples_per_condition; ++i) {
      const Tensor out = generate_one(net, ref.condition, rng);
      generated.push_back(flatten(out));
      double l1 = 0.0;
      for (std::int64_t j = 0; j < out.size(); ++j) l1 += std::fabs(out[j] - ref.target[j]);
      l1_acc += l1 / static_cast<double>(out.size());
      gen_pixels.push_back(generated.back());
    }
    true_pixels.push_back(flatten(ref.target));
    const std::size_t ndiv = std::min<std::size_t>(
        generated.size(), static_cast<std::size_t>(config.eval_diversity_samples));
    if (ndiv >= 2) {
      div_acc += diversity_score({generated.begin(), generated.begin() + static_cast<std::ptrdiff_t>(ndiv)});
    }
  }
  result.diversity = div_acc / static_cast<double>(n_conditions);
  result.l1_to_target = l1_acc / static_cast<double>(n_conditions * samples_per_condition);
  try {
    const HistogramSpec hist{-1.0, 1.0, 50};
    result.jsd_est = jsd_from_samples(gen_pixels, true_pixels, hist);
  } catch (const std::exception&) {
    result.jsd_est = kLog2;
  }
  result.mode_coverage = 0.0;
  return result;
}

std::string metrics_csv_header() {
  return "step,loss_d,loss_g,loss_l1,diversity,jsd_est,mode_coverage";
}

std::string metrics_csv_row(const MetricsRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", row.step, row.loss_d,
                row.loss_g, row.loss_l1, row.diversity, row.jsd_est, row.mode_coverage);
  return buf;
}

namespace {

void write_grid_for_step(const std::string& out_dir, int step, GeneratorNet& gen,
                         const TaskSpec& task, Rng rng) {
  char name[64];
  std::snprintf(name, sizeof(name), "samples_%06d.ppm", step);
  const std::string path = out_dir + "/" + name;

  if (task.id == TaskId::gmm) {
    std::vector<std::vector<Tensor>> rows;
    for (int cond = 0; cond < task.n_conditions; ++cond) {
      Tensor a = Tensor::zeros({task.n_conditions, 1, 1});
      a[cond] = 1.0;
      std::vector<std::vector<double>> points;
      for (int i = 0; i < 200; ++i) {
        const Tensor out = generate_one(gen, a, rng);
        points.push_back({out[0], out[1]});
      }
      rows.push_back({render_points(points)});
    }
    write_sample_grid(path, rows);
    return;
  }

  Rng rng_cond = rng.derive(0xC0ED);
  std::vector<std::vector<Tensor>> rows;
  for (int cond = 0; cond < 4; ++cond) {
    const ConditionalSample ref = draw_sample(task, rng_cond);
    std::vector<Tensor> row;
    row.push_back(ref.target);
    for (int i = 0; i < 6; ++i) row.push_back(generate_one(gen, ref.condition, rng));
    rows.push_back(std::move(row));
  }
  write_sample_grid(path, rows);
}

}  // namespace

TrainResult train(const TrainingConfig& config, const TaskSpec& task, const std::string& out_dir) {
  fs::create_directories(out_dir);

  Rng root(config.seed);
  Rng rng_init = root.derive(0x1217);
  GeneratorNet gen = build_generator(task, config.model, rng_init);
  gen.latent_mode = config.latent_mode;
  DiscriminatorNet disc = build_discriminator(task, config.model, rng_init);

  TrainResult result;
  result.metrics_path = out_dir + "/metrics.csv";
  result.checkpoint_path = out_dir + "/model.bgt1";
  result.manifest_path = out_dir + "/manifest.txt";

  // Manifest goes first so an aborted run is still reproducible.
  RunSetup setup{config, task};
  write_text_file(result.manifest_path, manifest_text(setup, "metrics.csv", "model.bgt1"));

  NetOptimizer opt_g, opt_d;
  opt_g.init(gen.parameters(), config.alpha, config.plain_sgd);
  opt_d.init(disc.parameters(), config.alpha, config.plain_sgd);

  Rng rng_data = root.derive(0xDA7A);
  Rng rng_step = root.derive(0x57E2);

  std::string csv = metrics_csv_header() + "\n";
  for (int step = 1; step <= config.steps; ++step) {
    std::vector<ConditionalSample> batch;
    batch.reserve(static_cast<std::size_t>(config.batch));
    for (int i = 0; i < config.batch; ++i) batch.push_back(draw_sample(task, rng_data));

    MetricsRow row = train_step(gen, disc, batch, config, opt_g, opt_d, rng_step);
    row.step = step;

    const bool log_now = (step % config.log_every == 0) || step == config.steps;
    if (log_now) {
      Rng rng_eval = root.derive(Rng::mix(0xE7A1, static_cast<std::uint64_t>(step)));
      const EvalResult ev =
          evaluate_generator(gen, task, config, config.eval_samples, rng_eval);
      row.diversity = ev.diversity;
      row.jsd_est = ev.jsd_est;
      row.mode_coverage = ev.mode_coverage;
      csv += metrics_csv_row(row) + "\n";
      result.rows.push_back(row);
      write_grid_for_step(out_dir, step, gen, task,
                          root.derive(Rng::mix(0x62D, static_cast<std::uint64_t>(step))));
    }
  }

  write_text_file(result.metrics_path, csv);
  to_checkpoint(gen, disc).save(result.checkpoint_path);
  return result;
}

Checkpoint to_checkpoint(const GeneratorNet& gen, const DiscriminatorNet& disc) {
  Checkpoint cp;
  for (std::size_t i = 0; i < gen.deterministic_layers.size(); ++i) {
    const PlainConv& c = gen.deterministic_layers[i];
    cp.put("conv" + std::to_string(i) + ".w", c.w);
    cp.put("conv" + std::to_string(i) + ".b", c.bias);
  }
  for (std::size_t i = 0; i < gen.stochastic_layers.size(); ++i) {
    const StochasticConvLayer& s = gen.stochastic_layers[i];
    const std::string prefix = "layer" + std::to_string(i);
    cp.put(prefix + ".W1", s.generator.w1);
    cp.put(prefix + ".b1", s.generator.b1);
    cp.put(prefix + ".W2", s.generator.w2);
    cp.put(prefix + ".b2", s.generator.b2);
    cp.put(prefix + ".a", s.coefficients);
  }
  for (std::size_t i = 0; i < gen.filtergen_layers.size(); ++i) {
    const DirectGenLayer& f = gen.filtergen_layers[i];
    const std::string prefix = "fgen" + std::to_string(i);
    cp.put(prefix + ".W1", f.generator.w1);
    cp.put(prefix + ".b1", f.generator.b1);
    cp.put(prefix + ".W2", f.generator.w2);
    cp.put(prefix + ".b2", f.generator.b2);
  }
  for (std::size_t i = 0; i < disc.convs.size(); ++i) {
    cp.put("disc.conv" + std::to_string(i) + ".w", disc.convs[i].w);
    cp.put("disc.conv" + std::to_string(i) + ".b", disc.convs[i].bias);
  }
  cp.put("disc.head.w", disc.head_w);
  cp.put("disc.head.b", disc.head_b);
  return cp;
}

void from_checkpoint(const Checkpoint& cp, GeneratorNet& gen, DiscriminatorNet& disc) {
  auto load_into = [&](const std::string& name, Tensor& dst) {
    const Tensor& src = cp.get(name);
    if (src.shape() != dst.shape()) {
      throw TensorError("checkpoint tensor '" + name + "' has shape " + shape_str(src.shape()) +
                        ", expected " + shape_str(dst.shape()));
    }
    dst = src;
  };
  for (std::size_t i = 0; i < gen.deterministic_layers.size(); ++i) {
    load_into("conv" + std::to_string(i) + ".w", gen.deterministic_layers[i].w);
    load_into("conv" + std::to_string(i) + ".b", gen.deterministic_layers[i].bias);
  }
  for (std::size_t i = 0; i < gen.stochastic_layers.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    load_into(prefix + ".W1", gen.stochastic_layers[i].generator.w1);
    load_into(prefix + ".b1", gen.stochastic_layers[i].generator.b1);
    load_into(prefix + ".W2", gen.stochastic_layers[i].generator.w2);
    load_into(prefix + ".b2", gen.stochastic_layers[i].generator.b2);
    load_into(prefix + ".a", gen.stochastic_layers[i].coefficients);
  }
  for (std::size_t i = 0; i < gen.filtergen_layers.size(); ++i) {
    const std::string prefix = "fgen" + std::to_string(i);
    load_into(prefix + ".W1", gen.filtergen_layers[i].generator.w1);
    load_into(prefix + ".b1", gen.filtergen_layers[i].generator.b1);
    load_into(prefix + ".W2", gen.filtergen_layers[i].generator.w2);
    load_into(prefix + ".b2", gen.filtergen_layers[i].generator.b2);
  }
  for (std::size_t i = 0; i < disc.convs.size(); ++i) {
    load_into("disc.conv" + std::to_string(i) + ".w", disc.convs[i].w);
    load_into("disc.conv" + std::to_string(i) + ".b", disc.convs[i].bias);
  }
  load_into("disc.head.w", disc.head_w);
  load_into("disc.head.b", disc.head_b);
}

LoadedRun load_run(const std::string& run_dir) {
  const RunSetup setup = setup_from_manifest(run_dir + "/manifest.txt");
  LoadedRun run;
  run.config = setup.train;
  run.task = setup.task;
  Rng rng_init = Rng(setup.train.seed).derive(0x1217);
  run.gen = build_generator(run.task, run.config.model, rng_init);
  run.gen.latent_mode = run.config.latent_mode;
  run.disc = build_discriminator(run.task, run.config.model, rng_init);
  from_checkpoint(Checkpoint::load(run_dir + "/model.bgt1"), run.gen, run.disc);
  return run;
}

}  // namespace basisgen
