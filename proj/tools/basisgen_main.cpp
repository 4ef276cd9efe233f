// basisgen: train/evaluate stochastic-basis conditional GANs and run the
// numerical verification harnesses.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "basisgen/checkpoint.hpp"
#include "basisgen/config.hpp"
#include "basisgen/divergence.hpp"
#include "basisgen/gan.hpp"
#include "basisgen/gradcheck.hpp"
#include "basisgen/io.hpp"
#include "basisgen/layers.hpp"
#include "basisgen/lowrank.hpp"
#include "basisgen/tasks.hpp"

namespace fs = std::filesystem;
using namespace basisgen;

namespace {

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const RunSetup setup = resolve_run_setup(Config::parse_file(config_path));
  const TrainResult result = train(setup.train, setup.task, out_dir);
  std::printf("trained %d steps on task %s\n", setup.train.steps,
              task_to_string(setup.task.id).c_str());
  std::printf("metrics:    %s\n", result.metrics_path.c_str());
  std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
  if (!result.rows.empty()) {
    const MetricsRow& last = result.rows.back();
    std::printf("final: loss_d=%.4f loss_g=%.4f diversity=%.4f jsd=%.4f coverage=%.2f\n",
                last.loss_d, last.loss_g, last.diversity, last.jsd_est, last.mode_coverage);
  }
  return 0;
}

std::string run_dir_from_model(const std::string& model) {
  fs::path p(model);
  if (fs::is_directory(p)) return p.string();
  return p.parent_path().string();
}

int cmd_eval(const std::string& model, int samples_per_condition) {
  LoadedRun run = load_run(run_dir_from_model(model));
  Rng rng(Rng::mix(run.config.seed, 0xE7A1));
  const EvalResult ev =
      evaluate_generator(run.gen, run.task, run.config, samples_per_condition, rng);
  std::printf("task:            %s\n", task_to_string(run.task.id).c_str());
  std::printf("samples/cond:    %d\n", samples_per_condition);
  std::printf("diversity:       %.6f\n", ev.diversity);
  std::printf("jsd_est:         %.6f\n", ev.jsd_est);
  std::printf("mode_coverage:   %.6f\n", ev.mode_coverage);
  std::printf("l1_to_target:    %.6f\n", ev.l1_to_target);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int instances) {
  const auto rows = run_gradcheck(seed, instances);
  bool all_pass = true;
  std::printf("%-32s %10s %14s  %s\n", "op", "instances", "max_rel_err", "result");
  for (const auto& row : rows) {
    std::printf("%-32s %10d %14.3e  %s\n", row.op.c_str(), row.instances, row.max_rel_error,
                row.pass ? "PASS" : "FAIL");
    all_pass = all_pass && row.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_verify_theorem(std::int64_t k, std::int64_t cin, std::int64_t cout, std::int64_t samples,
                       std::int64_t l, bool dependent, std::uint64_t seed) {
  Rng rng(seed);
  const PlantedData data = plant_instance(k, cin, cout, l, samples, !dependent, rng);
  const RecoveryResult rec = recover_basis_coefficients(data.instance, data.f);
  std::printf("case:                 %s (K=%lld, Cin=%lld, Cout=%lld, samples=%lld)\n",
              dependent ? "dependent (a_K = a_1 + a_2)" : "independent",
              static_cast<long long>(k), static_cast<long long>(cin),
              static_cast<long long>(cout), static_cast<long long>(samples));
  std::printf("reconstruction residual (inf-norm): %.3e\n", rec.residual);
  std::printf("solver path:          %s\n",
              rec.used_pseudo_inverse ? "pseudo-inverse" : "normal equations");

  bool ok = rec.residual < 1e-8;
  if (!dependent) {
    double max_err = 0.0;
    for (std::int64_t i = 0; i < data.instance.b.size(); ++i) {
      max_err = std::max(max_err, std::fabs(rec.b_hat[i] - data.instance.b[i]));
    }
    std::printf("max |b_hat - b|:      %.3e\n", max_err);
    ok = ok && max_err < 1e-8;

    if (samples >= 500) {
      // Fresh batch recovered independently for the distributional comparison.
      const PlantedData fresh = plant_instance(k, cin, cout, l, samples, true, rng);
      const RecoveryResult rec_fresh = recover_basis_coefficients(fresh.instance, fresh.f);
      const KsReport ks = distribution_match(data.instance.b, rec_fresh.b_hat);
      double worst = 0.0;
      for (double d : ks.statistics) worst = std::max(worst, d);
      std::printf("KS: %zu coordinates, max statistic %.4f, critical(0.01) %.4f -> %s\n",
                  ks.statistics.size(), worst, ks.critical_value,
                  ks.all_pass ? "PASS" : "FAIL");
      ok = ok && ks.all_pass;
    } else {
      std::printf("KS comparison skipped (needs --samples >= 500)\n");
    }
  }
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

int cmd_analyze_rank(const std::string& model, int draws, double tau, std::uint64_t seed) {
  LoadedRun run = load_run(run_dir_from_model(model));
  Rng rng(seed);
  if (run.gen.stochastic_slots() == 0) {
    std::printf("model has no stochastic layers\n");
    return 0;
  }
  for (std::size_t i = 0; i < run.gen.stochastic_layers.size(); ++i) {
    const StochasticConvLayer& layer = run.gen.stochastic_layers[i];
    std::vector<Tensor> banks;
    for (int d = 0; d < draws; ++d) {
      const Tensor z = sample_latent(rng, layer.generator.d_z);
      banks.push_back(reconstruct_filters(generate_basis(layer.generator, z), layer.coefficients));
    }
    const Tensor f = stack_filters(banks);
    const int rank = effective_rank(f, tau);
    std::printf("layer%zu: K=%lld, %d draws, effective_rank(tau=%.1e) = %d\n", i,
                static_cast<long long>(layer.generator.k), draws, tau, rank);
  }
  for (std::size_t i = 0; i < run.gen.filtergen_layers.size(); ++i) {
    const DirectGenLayer& layer = run.gen.filtergen_layers[i];
    std::vector<Tensor> banks;
    for (int d = 0; d < draws; ++d) {
      const Tensor z = sample_latent(rng, layer.generator.d_z);
      banks.push_back(generate_filters_direct(layer.generator, z));
    }
    const Tensor f = stack_filters(banks);
    const int rank = effective_rank(f, tau);
    std::printf("fgen%zu: direct generator, %d draws, effective_rank(tau=%.1e) = %d\n", i, draws,
                tau, rank);
  }
  return 0;
}

int cmd_cost_sweep(const std::string& config_path, const std::string& out_dir) {
  const Config cfg = Config::parse_file(config_path);
  const RunSetup base = resolve_run_setup(cfg);

  std::vector<std::int64_t> k_values;
  {
    std::string spec = cfg.get_str("sweep.k_values", "7,16,32");
    std::size_t pos = 0;
    while (pos < spec.size()) {
      const std::size_t comma = spec.find(',', pos);
      const std::string tok = spec.substr(pos, comma == std::string::npos ? spec.npos : comma - pos);
      k_values.push_back(std::stoll(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  const bool include_filtergen = cfg.get_bool("sweep.include_filtergen", true);

  fs::create_directories(out_dir);
  std::vector<SweepRecord> records;
  auto run_variant = [&](const std::string& name, TrainingConfig train_cfg) {
    const std::string dir = out_dir + "/" + name;
    const TrainResult tr = train(train_cfg, base.task, dir);
    const MetricsRow& last = tr.rows.back();
    const std::int64_t l =
        train_cfg.model.ksize > 0 ? train_cfg.model.ksize : (base.task.id == TaskId::gmm ? 1 : 3);
    const ParamCounts pc = count_params(l, train_cfg.model.channels, train_cfg.model.channels,
                                        train_cfg.model.k_basis, train_cfg.model.d_z,
                                        train_cfg.model.d_h);
    SweepRecord rec;
    rec.variant = train_cfg.model.filtergen ? "filtergen" : "basis";
    rec.l = l;
    rec.cin = train_cfg.model.channels;
    rec.cout = train_cfg.model.channels;
    rec.k = train_cfg.model.k_basis;
    rec.d_z = train_cfg.model.d_z;
    rec.d_h = train_cfg.model.d_h;
    rec.params = train_cfg.model.filtergen ? pc.filtergen : pc.basis;
    rec.quality = last.mode_coverage;
    rec.jsd_est = last.jsd_est;
    records.push_back(rec);
    std::printf("%-12s K=%-4lld params=%-10lld coverage=%.2f jsd=%.4f\n", rec.variant.c_str(),
                static_cast<long long>(rec.k), static_cast<long long>(rec.params), rec.quality,
                rec.jsd_est);
  };

  for (const std::int64_t k : k_values) {
    TrainingConfig v = base.train;
    v.model.k_basis = k;
    v.model.filtergen = false;
    run_variant("basis_k" + std::to_string(k), v);
  }
  if (include_filtergen) {
    TrainingConfig v = base.train;
    v.model.filtergen = true;
    run_variant("filtergen", v);
  }

  const std::string csv_path = out_dir + "/sweep.csv";
  write_text_file(csv_path, sweep_csv(records));
  std::printf("sweep written to %s\n", csv_path.c_str());
  return 0;
}

int cmd_gen_data(const std::string& task_name, int n, std::uint64_t seed,
                 const std::string& out_dir) {
  const TaskSpec task = TaskSpec::make(task_from_string(task_name));
  if (n < 1) throw ConfigError("gen-data: --n must be >= 1");
  Rng rng(seed);
  Checkpoint cp;
  for (int i = 0; i < n; ++i) {
    const ConditionalSample s = draw_sample(task, rng);
    cp.put("sample" + std::to_string(i) + ".condition", s.condition);
    cp.put("sample" + std::to_string(i) + ".target", s.target);
  }
  fs::create_directories(out_dir);
  cp.save(out_dir + "/data.bgt1");
  std::string manifest;
  manifest += "task = " + task_name + "\n";
  manifest += "count = " + std::to_string(n) + "\n";
  manifest += "seed = " + std::to_string(seed) + "\n";
  write_text_file(out_dir + "/dataset.txt", manifest);
  std::printf("wrote %d samples to %s\n", n, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic basis-generation GAN workbench"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/out", model_path, task_name = "gmm";
  int samples_per_condition = 20;
  std::uint64_t seed = 7;
  int instances = 20;
  std::int64_t k = 3, cin = 4, cout = 4, samples = 50, l = 3;
  bool dependent = false;
  int draws = 200;
  double tau = 1e-3;
  int n_data = 1000;

  auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", config_path, "key=value config file")->required();
  train_cmd->add_option("--out", out_dir, "output directory");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained run");
  eval_cmd->add_option("--model", model_path, "run directory or model.bgt1 path")->required();
  eval_cmd->add_option("--samples-per-condition", samples_per_condition, "samples per condition");

  auto* grad_cmd = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  grad_cmd->add_option("--seed", seed, "rng seed");
  grad_cmd->add_option("--instances", instances, "random instances per op");

  auto* thm_cmd = app.add_subcommand("verify-theorem", "span-recovery harness");
  thm_cmd->add_option("--k", k, "number of channel transforms");
  thm_cmd->add_option("--cin", cin, "input channels");
  thm_cmd->add_option("--cout", cout, "output channels");
  thm_cmd->add_option("--samples", samples, "draws");
  thm_cmd->add_option("--l", l, "kernel side");
  thm_cmd->add_flag("--dependent", dependent, "force a_K = a_1 + a_2");
  thm_cmd->add_option("--seed", seed, "rng seed");

  auto* rank_cmd = app.add_subcommand("analyze-rank", "effective rank of sampled filter stacks");
  rank_cmd->add_option("--model", model_path, "run directory or model.bgt1 path")->required();
  rank_cmd->add_option("--draws", draws, "filter bank draws");
  rank_cmd->add_option("--tau", tau, "singular value threshold");
  rank_cmd->add_option("--seed", seed, "rng seed");

  auto* sweep_cmd = app.add_subcommand("cost-sweep", "parameter cost vs quality sweep");
  sweep_cmd->add_option("--config", config_path, "key=value config file")->required();
  sweep_cmd->add_option("--out", out_dir, "output directory");

  auto* data_cmd = app.add_subcommand("gen-data", "write a dataset");
  data_cmd->add_option("--task", task_name, "gmm|shapes|autoenc")->required();
  data_cmd->add_option("--n", n_data, "sample count");
  data_cmd->add_option("--seed", seed, "rng seed");
  data_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, out_dir);
    if (eval_cmd->parsed()) return cmd_eval(model_path, samples_per_condition);
    if (grad_cmd->parsed()) return cmd_gradcheck(seed, instances);
    if (thm_cmd->parsed()) {
      return cmd_verify_theorem(k, cin, cout, samples, l, dependent, seed);
    }
    if (rank_cmd->parsed()) return cmd_analyze_rank(model_path, draws, tau, seed);
    if (sweep_cmd->parsed()) return cmd_cost_sweep(config_path, out_dir);
    if (data_cmd->parsed()) return cmd_gen_data(task_name, n_data, seed, out_dir);
  } catch (const TrainingDivergence& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
