// Acceptance suite: every release criterion as one PASS/FAIL line.
// Run with no arguments for the full gate, or pass criterion numbers to run
// a subset (e.g. `basisgen_acceptance 1 2 7`).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "basisgen/divergence.hpp"
#include "basisgen/gan.hpp"
#include "basisgen/gradcheck.hpp"
#include "basisgen/io.hpp"
#include "basisgen/layers.hpp"
#include "basisgen/lowrank.hpp"
#include "basisgen/tasks.hpp"

using namespace basisgen;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string g_workdir;

std::vector<double> random_distribution(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (auto& v : p) v /= total;
  double s = 0.0;
  for (double v : p) s += v;
  p.back() += 1.0 - s;
  return p;
}

TrainingConfig gmm_acceptance_config(std::uint64_t seed) {
  TrainingConfig cfg;
  cfg.steps = 5000;
  cfg.batch = 64;
  cfg.alpha = 1e-3;
  cfg.seed = seed;
  cfg.log_every = 2500;
  cfg.eval_samples = 512;
  cfg.per_sample_latent = true;
  cfg.model.channels = 32;
  cfg.model.d_channels = 64;
  return cfg;
}

// --- criterion 1: gradient suite -------------------------------------------

bool criterion_gradients(std::string& detail) {
  const double t0 = now_seconds();
  const auto rows = run_gradcheck(907, 20, 1e-4);
  const double elapsed = now_seconds() - t0;
  bool ok = elapsed < 120.0;
  double worst = 0.0;
  for (const auto& row : rows) {
    ok = ok && row.pass && row.instances >= 20;
    worst = std::max(worst, row.max_rel_error);
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu ops, worst rel err %.2e, %.1fs", rows.size(), worst,
                elapsed);
  detail = buf;
  return ok;
}

// --- criterion 2: optimal-discriminator identity ----------------------------

bool criterion_eq3(std::string& detail) {
  Rng rng(2024);
  std::vector<DiscreteDistributionPair> pairs;
  for (int t = 0; t < 100; ++t) {
    pairs.emplace_back(random_distribution(16, rng), random_distribution(16, rng));
  }
  const Eq3Report report = verify_eq3(pairs);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max |V(D*) - (-log4 + 2 JSD)| = %.2e, argmin offset %.4f",
                report.max_identity_deviation, report.argmin_distance);
  detail = buf;
  return report.max_identity_deviation < 1e-12 && report.argmin_distance <= 1e-3;
}

// --- criterion 3: span-recovery harness -------------------------------------

bool criterion_theorem(std::string& detail) {
  const double t0 = now_seconds();
  Rng rng(3033);

  const PlantedData indep = plant_instance(3, 4, 4, 3, 500, true, rng);
  const RecoveryResult rec = recover_basis_coefficients(indep.instance, indep.f);
  double max_err = 0.0;
  for (std::int64_t i = 0; i < indep.instance.b.size(); ++i) {
    max_err = std::max(max_err, std::fabs(rec.b_hat[i] - indep.instance.b[i]));
  }

  const PlantedData fresh = plant_instance(3, 4, 4, 3, 500, true, rng);
  const RecoveryResult rec_fresh = recover_basis_coefficients(fresh.instance, fresh.f);
  const KsReport ks = distribution_match(indep.instance.b, rec_fresh.b_hat);

  const PlantedData dep = plant_instance(3, 4, 4, 3, 500, false, rng);
  const RecoveryResult rec_dep = recover_basis_coefficients(dep.instance, dep.f);

  const double elapsed = now_seconds() - t0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "recovery err %.2e, KS max %.4f < %.4f, dependent residual %.2e (pinv=%d), %.1fs",
                max_err, *std::max_element(ks.statistics.begin(), ks.statistics.end()),
                ks.critical_value, rec_dep.residual, rec_dep.used_pseudo_inverse ? 1 : 0, elapsed);
  detail = buf;
  return max_err < 1e-8 && ks.all_pass && rec_dep.used_pseudo_inverse &&
         rec_dep.residual < 1e-8 && elapsed < 30.0;
}

// --- criterion 4: low effective rank of sampled filters ---------------------

bool criterion_rank(std::string& detail) {
  // Trained K=7 basis layer from a short GMM run.
  const TaskSpec task = TaskSpec::make(TaskId::gmm);
  TrainingConfig cfg = gmm_acceptance_config(404);
  cfg.steps = 800;
  cfg.log_every = 800;
  const TrainResult tr = train(cfg, task, g_workdir + "/rank_run");
  LoadedRun run = load_run(g_workdir + "/rank_run");

  const StochasticConvLayer& layer = run.gen.stochastic_layers[0];
  Rng draw(405);
  std::vector<Tensor> basis_banks;
  for (int i = 0; i < 200; ++i) {
    const Tensor z = sample_latent(draw, layer.generator.d_z);
    basis_banks.push_back(
        reconstruct_filters(generate_basis(layer.generator, z), layer.coefficients));
  }
  const int basis_rank = effective_rank(stack_filters(basis_banks), 1e-6);

  // Direct filter generator at the same channel width, generic position.
  Rng init(406);
  FilterGeneratorParams fgen = FilterGeneratorParams::init(64, 64, 1, 32, 32, init);
  std::vector<Tensor> direct_banks;
  for (int i = 0; i < 200; ++i) {
    direct_banks.push_back(generate_filters_direct(fgen, sample_latent(draw, 64)));
  }
  const int direct_rank = effective_rank(stack_filters(direct_banks), 1e-6);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "basis rank %d (<= 7), filtergen rank %d (> 7)", basis_rank,
                direct_rank);
  detail = buf;
  return basis_rank <= 7 && direct_rank > 7 && !tr.rows.empty();
}

// --- criterion 5: multi-mode training ---------------------------------------

bool criterion_multimode(std::string& detail) {
  const TaskSpec task = TaskSpec::make(TaskId::gmm);
  int passes = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TrainingConfig cfg = gmm_acceptance_config(seed);
    const TrainResult tr =
        train(cfg, task, g_workdir + "/multimode_seed" + std::to_string(seed));
    const MetricsRow& last = tr.rows.back();
    const bool ok = last.mode_coverage == 1.0 && last.jsd_est < 0.15;
    passes += ok ? 1 : 0;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%s s%llu(cov %.2f jsd %.3f)", ok ? "+" : "-",
                  static_cast<unsigned long long>(seed), last.mode_coverage, last.jsd_est);
    per_seed += buf;
  }

  int ablation_passes = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainingConfig cfg = gmm_acceptance_config(seed);
    cfg.steps = 500;
    cfg.log_every = 500;
    cfg.model.n_stochastic = 0;
    const TrainResult tr =
        train(cfg, task, g_workdir + "/ablation_seed" + std::to_string(seed));
    if (tr.rows.back().diversity < 1e-6) ++ablation_passes;
  }

  char buf[640];
  std::snprintf(buf, sizeof(buf), "stochastic %d/10 seeds, deterministic ablation %d/10;%s",
                passes, ablation_passes, per_seed.c_str());
  detail = buf;
  return passes >= 8 && ablation_passes == 10;
}

// --- criterion 6: stochastic autoencoder ------------------------------------

bool criterion_autoencoder(std::string& detail) {
  const TaskSpec task = TaskSpec::make(TaskId::autoenc);

  TrainingConfig cfg;
  cfg.steps = 800;
  cfg.batch = 8;
  cfg.alpha = 2e-4;
  cfg.lambda_l1 = 10.0;
  cfg.seed = 606;
  cfg.log_every = 800;
  cfg.eval_samples = 20;
  cfg.eval_conditions = 8;
  cfg.model.channels = 16;
  cfg.model.d_channels = 24;

  train(cfg, task, g_workdir + "/autoenc_basis");
  LoadedRun basis_run = load_run(g_workdir + "/autoenc_basis");
  const EvalResult basis_ev =
      evaluate_generator(basis_run.gen, task, cfg, 20, Rng(617));

  TrainingConfig det = cfg;
  det.model.n_stochastic = 0;
  train(det, task, g_workdir + "/autoenc_det");
  LoadedRun det_run = load_run(g_workdir + "/autoenc_det");
  const EvalResult det_ev = evaluate_generator(det_run.gen, task, det, 20, Rng(617));

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "stochastic: L1 %.3f (<0.15) diversity %.4f (>0.02); deterministic: L1 %.3f "
                "(<0.05) diversity %.2e (<1e-6)",
                basis_ev.l1_to_target, basis_ev.diversity, det_ev.l1_to_target, det_ev.diversity);
  detail = buf;
  return basis_ev.l1_to_target < 0.15 && basis_ev.diversity > 0.02 &&
         det_ev.l1_to_target < 0.05 && det_ev.diversity < 1e-6;
}

// --- criterion 7: parameter accounting --------------------------------------

bool criterion_params(std::string& detail) {
  bool ok = true;
  for (const std::int64_t c : {128, 129, 192, 256, 384, 512, 1024}) {
    const ParamCounts pc = count_params(3, c, c, 7, 64, 64);
    ok = ok && pc.basis < pc.baseline;
  }
  const ParamCounts big = count_params(3, 256, 256, 7, 64, 64);
  const double ratio = static_cast<double>(big.filtergen) / static_cast<double>(big.basis);
  ok = ok && ratio > 50.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "basis %lld < baseline %lld at 256 channels; filtergen/basis ratio %.1fx",
                static_cast<long long>(big.basis), static_cast<long long>(big.baseline), ratio);
  detail = buf;
  return ok;
}

// --- criterion 8: K ablation under equal budget ------------------------------

bool criterion_k_ablation(std::string& detail) {
  const TaskSpec task = TaskSpec::make(TaskId::gmm);
  std::vector<SweepRecord> records;
  for (const std::int64_t k : {7, 16, 32}) {
    TrainingConfig cfg = gmm_acceptance_config(808);
    cfg.model.k_basis = k;
    const TrainResult tr =
        train(cfg, task, g_workdir + "/kablation_" + std::to_string(k));
    const ParamCounts pc = count_params(1, cfg.model.channels, cfg.model.channels, k,
                                        cfg.model.d_z, cfg.model.d_h);
    SweepRecord rec;
    rec.variant = "basis";
    rec.k = k;
    rec.params = pc.basis;
    rec.quality = tr.rows.back().mode_coverage;
    rec.jsd_est = tr.rows.back().jsd_est;
    records.push_back(rec);
  }

  bool coverage_identical = true;
  bool params_monotone = true;
  double jsd_lo = records[0].jsd_est, jsd_hi = records[0].jsd_est;
  for (std::size_t i = 0; i < records.size(); ++i) {
    coverage_identical = coverage_identical && records[i].quality == records[0].quality;
    if (i > 0) params_monotone = params_monotone && records[i].params > records[i - 1].params;
    jsd_lo = std::min(jsd_lo, records[i].jsd_est);
    jsd_hi = std::max(jsd_hi, records[i].jsd_est);
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "coverage {%.2f,%.2f,%.2f}, jsd spread %.3f (<=0.05), params {%lld,%lld,%lld}",
                records[0].quality, records[1].quality, records[2].quality, jsd_hi - jsd_lo,
                static_cast<long long>(records[0].params), static_cast<long long>(records[1].params),
                static_cast<long long>(records[2].params));
  detail = buf;
  return coverage_identical && (jsd_hi - jsd_lo) <= 0.05 && params_monotone;
}

// --- criterion 9: reproducibility --------------------------------------------

bool criterion_reproducibility(std::string& detail) {
  const TaskSpec task = TaskSpec::make(TaskId::gmm);
  TrainingConfig cfg = gmm_acceptance_config(909);
  cfg.steps = 300;
  cfg.log_every = 150;
  const TrainResult a = train(cfg, task, g_workdir + "/repro_a");
  const TrainResult b = train(cfg, task, g_workdir + "/repro_b");
  const bool metrics_equal = read_text_file(a.metrics_path) == read_text_file(b.metrics_path);
  const bool model_equal =
      read_text_file(a.checkpoint_path) == read_text_file(b.checkpoint_path);
  detail = std::string("metrics.csv ") + (metrics_equal ? "byte-identical" : "DIFFER") +
           ", model.bgt1 " + (model_equal ? "byte-identical" : "DIFFER");
  return metrics_equal && model_equal;
}

}  // namespace

int main(int argc, char** argv) {
  g_workdir = std::getenv("BASISGEN_ACCEPT_DIR") ? std::getenv("BASISGEN_ACCEPT_DIR")
                                                 : std::string("acceptance_runs");

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient suite vs finite differences", criterion_gradients},
      {2, "optimal-discriminator identity and argmin", criterion_eq3},
      {3, "span recovery, independent and dependent", criterion_theorem},
      {4, "low effective rank of sampled filters", criterion_rank},
      {5, "multi-mode coverage on the gmm task", criterion_multimode},
      {6, "stochastic autoencoder fidelity/diversity", criterion_autoencoder},
      {7, "parameter accounting", criterion_params},
      {8, "K ablation under equal budget", criterion_k_ablation},
      {9, "byte-identical reproducibility", criterion_reproducibility},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!selected.empty() && selected.count(criterion.id) == 0) continue;
    std::string detail;
    bool ok = false;
    const double t0 = now_seconds();
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s (%s) [%.1fs]\n", ok ? "PASS" : "FAIL", criterion.id,
                criterion.name, detail.c_str(), now_seconds() - t0);
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
