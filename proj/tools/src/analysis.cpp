// diagnose, mc-validate, bench-kernel and synth.

#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "lordba/io.hpp"
#include "lordba/kernel.hpp"
#include "lordba/theory.hpp"
#include "report.hpp"

namespace lordba::cli {
namespace {

// ---------------------------------------------------------------- diagnose

struct DiagnoseOptions {
  std::string input;
  std::string report;
};

void run_diagnose(const DiagnoseOptions& o) {
  const LoRAFactors factors = load_factors(o.input);
  const DiagnosticsReport d = diagnose(factors);
  const DenseMatrix target = factors.product();
  const DenseMatrix canonical = reconstruct(canonical_reconstruction(factors, d.mu_A, d.mu_B));

  Json report = report_header("diagnose", Json::object(), Json::array({file_entry(o.input)}));
  report["shape"] = {{"N", factors.in_features()}, {"M", factors.out_features()}, {"r0", factors.rank()}};
  report["result"] = {{"mu_A", d.mu_A},
                      {"mu_B", d.mu_B},
                      {"zeta_A", d.zeta_A},
                      {"zeta_B", d.zeta_B},
                      {"zeta", d.zeta},
                      {"ratio", d.ratio},
                      {"excluded_pairs", d.excluded_pairs},
                      {"canonical_relative_error",
                       frobenius_norm(subtract(target, canonical)) / frobenius_norm(target)}};
  emit_json(report, o.report);
}

// ---------------------------------------------------------------- mc-validate

struct ValidateOptions {
  std::string which;
  SignNoiseModel model;
  std::string noise = "gaussian";
  double zeta_ratio = -1.0;  // negative: use noise_scale as given
  std::size_t trials = 1000;
  double delta = 0.1;
  std::vector<double> ratios;
  std::vector<double> t_grid{0.1, 0.25, 0.5, 1.0, 2.0};
  std::string report;
};

Json to_json(const MCReport& r) {
  Json j = {{"quantity", r.quantity},
            {"trials", r.trials},
            {"passed", r.passed},
            {"violation_rate", r.violation_rate},
            {"scalars", r.scalars},
            {"notes", r.notes}};
  if (!r.grid.empty()) j["grid"] = r.grid;
  if (!r.bound.empty()) j["bound"] = r.bound;
  if (r.slope) j["slope"] = *r.slope;
  if (r.intercept) j["intercept"] = *r.intercept;
  // per-trial samples are long; grid-indexed ones are the useful part
  j["empirical"] = r.grid.empty() ? series_stats(r.empirical) : Json(r.empirical);
  return j;
}

void run_mc_validate(ValidateOptions o) {
  SignNoiseModel& m = o.model;
  m.noise = o.noise == "uniform" ? NoiseKind::uniform : NoiseKind::gaussian;
  if (o.zeta_ratio >= 0.0) {
    const double zeta = o.zeta_ratio * std::min(m.mu_A, m.mu_B);
    m.noise_scale = m.noise == NoiseKind::uniform ? zeta : SignNoiseModel::gaussian_scale_for_zeta(zeta);
  }
  m.validate();

  Json results;
  if (o.which == "theorem1") {
    results["bound"] = to_json(check_reconstruction_bound(m, o.trials, o.delta));
    if (!o.ratios.empty()) results["scaling"] = to_json(noise_scaling_regression(m, o.ratios, o.trials));
  } else if (o.which == "signcons") {
    results["sign_consistency"] = to_json(check_sign_consistency(m, o.trials));
  } else if (o.which == "signal") {
    results["signal"] = to_json(check_signal_lowerbound(m.N, m.M, m.r, o.trials, m.seed));
  } else {
    results["tail"] = to_json(check_entry_tail(m, o.trials, o.t_grid));
  }

  Json cfg = {{"which", o.which},
              {"N", m.N},
              {"M", m.M},
              {"r", m.r},
              {"mu_A", m.mu_A},
              {"mu_B", m.mu_B},
              {"noise", o.noise},
              {"noise_scale", m.noise_scale},
              {"zeta", m.zeta()},
              {"trials", o.trials},
              {"delta", o.delta},
              {"ratios", o.ratios},
              {"t_grid", o.t_grid},
              {"seed", m.seed}};
  Json report = report_header("mc-validate", cfg, Json::array());
  report["results"] = results;
  emit_json(report, o.report);
}

// ---------------------------------------------------------------- bench-kernel

struct BenchOptions {
  std::vector<std::string> shapes;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  std::string output;
};

KernelShape parse_shape(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::size_t> v;
  std::string field;
  while (std::getline(in, field, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(field, &used);
      if (used != field.size() || x == 0) throw std::invalid_argument(field);
      v.push_back(static_cast<std::size_t>(x));
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "shape field '" + field + "' in '" + text + "'");
    }
  }
  if (v.size() != 5) throw Error(Errc::invalid_argument, "shape '" + text + "' needs T,N,R,M,l");
  return KernelShape{v[0], v[1], v[2], v[3], v[4]};
}

void run_bench(const BenchOptions& o) {
  std::vector<KernelShape> shapes;
  for (const auto& s : o.shapes) shapes.push_back(parse_shape(s));
  if (shapes.empty()) shapes = default_bench_shapes();
  const auto reports = bench(shapes, o.trials, o.seed);
  if (o.output.empty() || o.output == "-") {
    write_csv(std::cout, reports);
    return;
  }
  std::ofstream out(o.output);
  if (!out) throw Error(Errc::io_open_failed, "cannot write " + o.output);
  write_csv(out, reports);
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string kind = "planted";
  std::size_t n = 64;
  std::size_t m = 64;
  std::size_t r = 4;
  double mu_a = 1.0;
  double mu_b = 1.0;
  std::string noise = "gaussian";
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
  std::string output;
  std::string adapter_output;
  std::string report;
};

// Carrier weights fall off geometrically and every scale is a multiple of
// 1/8 in [0.5, 1.5], so the factors are exact in binary32 and the scales
// exact in binary16.
LoRDBAAdapter planted_adapter(const SynthOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> eighths(4, 12);
  std::bernoulli_distribution coin;
  LoRDBAAdapter a;
  a.B1 = SignMatrix(o.n, o.r);
  a.B2 = SignMatrix(o.r, o.m);
  for (std::size_t i = 0; i < o.n; ++i)
    for (std::size_t k = 0; k < o.r; ++k) a.B1.set(i, k, coin(rng));
  for (std::size_t k = 0; k < o.r; ++k)
    for (std::size_t j = 0; j < o.m; ++j) a.B2.set(k, j, coin(rng));
  ScaleEnvelope e = ScaleEnvelope::zeros(o.n, o.r, o.m);
  for (double& v : e.alpha) v = eighths(rng) / 8.0;
  for (double& v : e.gamma) v = eighths(rng) / 8.0;
  for (std::size_t k = 0; k < o.r; ++k) e.beta[k] = std::ldexp(eighths(rng) / 8.0, -static_cast<int>(k));
  a.envelopes = {e};
  a.r0_ref = o.r;
  return a;
}

void run_synth(const SynthOptions& o) {
  LoRAFactors factors;
  Json outputs = Json::array();
  if (o.kind == "planted") {
    const LoRDBAAdapter a = planted_adapter(o);
    const ScaleEnvelope& e = a.envelopes[0];
    factors.A = diag_scale(e.alpha, a.B1.to_dense(), e.beta);
    factors.B = transpose(diag_scale({}, a.B2.to_dense(), e.gamma));
    if (!o.adapter_output.empty()) {
      save_adapter(o.adapter_output, a);
      outputs.push_back(file_entry(o.adapter_output));
    }
  } else {
    SignNoiseModel model;
    model.N = o.n;
    model.M = o.m;
    model.r = o.r;
    model.mu_A = o.mu_a;
    model.mu_B = o.mu_b;
    model.noise = o.noise == "uniform" ? NoiseKind::uniform : NoiseKind::gaussian;
    model.noise_scale = o.noise_scale;
    model.seed = o.seed;
    model.validate();
    factors = sample_factors(model, 0).factors;
  }
  save_factors(o.output, factors);
  outputs.insert(outputs.begin(), file_entry(o.output));

  Json cfg = {{"kind", o.kind}, {"N", o.n}, {"M", o.m}, {"r", o.r}, {"seed", o.seed}};
  if (o.kind == "model") {
    cfg["mu_A"] = o.mu_a;
    cfg["mu_B"] = o.mu_b;
    cfg["noise"] = o.noise;
    cfg["noise_scale"] = o.noise_scale;
  }
  Json report = report_header("synth", cfg, Json::array());
  report["outputs"] = outputs;
  emit_json(report, o.report);
}

void add_model_flags(CLI::App* sub, SignNoiseModel& m) {
  sub->add_option("--N", m.N, "Input features")->capture_default_str();
  sub->add_option("--M", m.M, "Output features")->capture_default_str();
  sub->add_option("-r,--rank", m.r, "LoRA rank")->capture_default_str();
  sub->add_option("--mu-a", m.mu_A, "Sign magnitude of A")->capture_default_str();
  sub->add_option("--mu-b", m.mu_B, "Sign magnitude of B")->capture_default_str();
  sub->add_option("--noise-scale", m.noise_scale, "Gaussian std or uniform half-width")
      ->capture_default_str();
  sub->add_option("--seed", m.seed)->capture_default_str();
}

}  // namespace

void add_diagnose(CLI::App& app) {
  auto o = std::make_shared<DiagnoseOptions>();
  CLI::App* sub = app.add_subcommand("diagnose", "Sign-noise diagnostics of LRF1 factors");
  sub->add_option("input", o->input, "LRF1 factor file")->required()->check(CLI::ExistingFile);
  sub->add_option("--report", o->report, "JSON report path (default: stdout)");
  sub->callback([o] { run_diagnose(*o); });
}

void add_mc_validate(CLI::App& app) {
  auto o = std::make_shared<ValidateOptions>();
  CLI::App* sub = app.add_subcommand("mc-validate", "Monte-Carlo checks of the concentration bounds");
  sub->add_option("which", o->which, "theorem1, signcons, signal or tail")
      ->required()
      ->check(CLI::IsMember({"theorem1", "signcons", "signal", "tail"}));
  add_model_flags(sub, o->model);
  sub->add_option("--noise", o->noise, "gaussian or uniform")
      ->check(CLI::IsMember({"gaussian", "uniform"}))
      ->capture_default_str();
  sub->add_option("--zeta-ratio", o->zeta_ratio,
                  "Set the noise so that zeta / min(mu_A, mu_B) equals this value");
  sub->add_option("--trials", o->trials)->capture_default_str();
  sub->add_option("--delta", o->delta, "Failure probability for theorem1")->capture_default_str();
  sub->add_option("--ratios", o->ratios, "zeta/mu grid for the theorem1 slope fit")->delimiter(',');
  sub->add_option("--t-grid", o->t_grid, "Thresholds for the tail check")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--report", o->report, "JSON report path (default: stdout)");
  sub->callback([o] { run_mc_validate(*o); });
}

void add_bench_kernel(CLI::App& app) {
  auto o = std::make_shared<BenchOptions>();
  CLI::App* sub = app.add_subcommand("bench-kernel", "Time the packed kernel and emit a CSV table");
  sub->add_option("--shape", o->shapes, "T,N,R,M,l (repeatable; default: built-in set)");
  sub->add_option("--trials", o->trials)->capture_default_str();
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("-o,--output", o->output, "CSV path (default: stdout)");
  sub->callback([o] { run_bench(*o); });
}

void add_synth(CLI::App& app) {
  auto o = std::make_shared<SynthOptions>();
  CLI::App* sub = app.add_subcommand("synth", "Write synthetic LRF1 factors");
  sub->add_option("--kind", o->kind, "planted (exact adapter) or model (signs plus noise)")
      ->check(CLI::IsMember({"planted", "model"}))
      ->capture_default_str();
  sub->add_option("--N", o->n)->capture_default_str();
  sub->add_option("--M", o->m)->capture_default_str();
  sub->add_option("-r,--rank", o->r)->capture_default_str();
  sub->add_option("--mu-a", o->mu_a)->capture_default_str();
  sub->add_option("--mu-b", o->mu_b)->capture_default_str();
  sub->add_option("--noise", o->noise)
      ->check(CLI::IsMember({"gaussian", "uniform"}))
      ->capture_default_str();
  sub->add_option("--noise-scale", o->noise_scale)->capture_default_str();
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("-o,--output", o->output, "LRF1 path")->required();
  sub->add_option("--adapter-output", o->adapter_output, "Also write the planted LBA1 adapter");
  sub->add_option("--report", o->report, "JSON summary path (default: stdout)");
  sub->callback([o] { run_synth(*o); });
}

}  // namespace lordba::cli
