// compress, train-toy and reconstruct: the commands that produce or consume
// adapter files.

#include <algorithm>
#include <memory>
#include <optional>

#include "commands.hpp"
#include "lordba/admm.hpp"
#include "lordba/io.hpp"
#include "lordba/qat.hpp"
#include "report.hpp"

namespace lordba::cli {
namespace {

std::string default_report_path(const std::string& output, const std::string& report) {
  return report.empty() ? output + ".json" : report;
}

double relative_error(const DenseMatrix& target, const DenseMatrix& approx) {
  return frobenius_norm(subtract(target, approx)) / frobenius_norm(target);
}

// ---------------------------------------------------------------- compress

struct CompressOptions {
  std::string input;
  std::string output;
  std::string report;
  std::size_t carrier_rank = 0;
  ADMMConfig admm;
  std::uint64_t seed = 0;
};

Json to_json(const ADMMConfig& c) {
  return Json{{"carrier_rank", c.carrier_rank},
              {"envelope_rank", c.envelope_rank},
              {"sweeps", c.max_sweeps},
              {"tau", c.tau},
              {"mu", c.mu},
              {"freeze_detect", c.freeze_detect},
              {"final_scale_sweeps", c.final_scale_sweeps},
              {"rho0_scale", c.rho0_scale},
              {"scales_on_binary", c.scales_on_binary},
              {"r0_ref", c.r0_ref}};
}

void add_admm_flags(CLI::App* sub, ADMMConfig& c) {
  sub->add_option("-l,--envelope-rank", c.envelope_rank, "Envelope rank l")->capture_default_str();
  sub->add_option("--sweeps", c.max_sweeps, "Maximum ADMM sweeps K")->capture_default_str();
  sub->add_option("--tau", c.tau, "Penalty multiplier")->capture_default_str();
  sub->add_option("--mu", c.mu, "Residual-ratio trigger for the penalty")->capture_default_str();
  sub->add_option("--rho0-scale", c.rho0_scale, "Multiplier on the warm-start penalty")
      ->capture_default_str();
  sub->add_option("--scales-on-binary", c.scales_on_binary,
                  "Fit scales against the upcoming binary carriers")
      ->capture_default_str();
  sub->add_option("--final-scale-sweeps", c.final_scale_sweeps,
                  "Scale refits on the exported carriers")
      ->capture_default_str();
  sub->add_option("--freeze-detect", c.freeze_detect, "Stop once the carriers stop changing")
      ->capture_default_str();
}

void run_compress(const CompressOptions& o) {
  const LoRAFactors factors = load_factors(o.input);
  const Json inputs = Json::array({file_entry(o.input)});

  ADMMConfig config = o.admm;
  config.carrier_rank = o.carrier_rank;
  config.r0_ref = factors.rank();
  config.validate(factors.in_features(), factors.out_features());

  const LoRAFactors balanced = gauge_fix(factors);
  const DenseMatrix target = balanced.product();
  const ThinSVD warm = factored_svd(balanced, config.carrier_rank);
  const ADMMResult result = run_admm(target, config, &warm);

  save_adapter(o.output, result.adapter);
  const LoRDBAAdapter stored = load_adapter(o.output);
  const SignMarginReport margin = sign_margin(result.state);
  const BitsPerWeight b = bpw(result.adapter);
  const auto& st = result.state;

  Json cfg = to_json(config);
  cfg["seed"] = o.seed;
  cfg["output"] = o.output;
  Json report = report_header("compress", cfg, inputs);
  report["shape"] = {{"N", factors.in_features()},
                     {"M", factors.out_features()},
                     {"r0", factors.rank()}};
  report["result"] = {
      {"relative_error", result.relative_error},
      {"relative_error_binary16", relative_error(target, reconstruct(stored))},
      {"initial_objective", st.initial_objective},
      {"final_objective", result.final_objective},
      {"sweeps_run", result.sweeps_run},
      {"frozen", result.frozen},
      {"freeze_sweep", st.freeze_sweep ? Json(*st.freeze_sweep) : Json(nullptr)},
      {"sign_margin", {{"eta", margin.eta}, {"positive", margin.positive}}},
      {"max_dual_identity_residual", series_stats(st.dual_identity_history).value("max", 0.0)},
      {"storage_bits", storage_bits(result.adapter)},
      {"bpw", {{"carriers_only", b.carriers_only}, {"total", b.total}}},
  };
  report["history"] = {{"objective", st.objective_history},
                       {"rho", st.rho_history},
                       {"sign_margin", st.sign_margin_history},
                       {"dual_identity", st.dual_identity_history}};
  report["output"] = file_entry(o.output);
  emit_json(report, default_report_path(o.output, o.report));
}

// ---------------------------------------------------------------- train-toy

// Step size for the desk-scale toy; the library default targets much larger
// models and barely moves a 32 x 32 problem in 2000 steps.
constexpr double kToyLearningRate = 3e-3;

struct TrainOptions {
  PlantedToySpec toy;
  QATConfig qat;
  std::string mode = "full";
  std::string init;
  std::string output;
  std::string report;
  std::size_t ptq_sweeps = 100;
};

void run_train_toy(TrainOptions o) {
  o.qat.mode = parse_qat_mode(o.mode);
  o.qat.seed = o.toy.seed;
  o.qat.validate();
  const PlantedToy toy = make_planted_toy(o.toy);
  const double base = base_loss(toy.task);

  Json inputs = Json::array();
  Json ptq = nullptr;
  std::optional<LoRDBAAdapter> init;
  if (o.qat.mode != QATMode::scratch) {
    if (!o.init.empty()) {
      init = load_adapter(o.init);
      inputs.push_back(file_entry(o.init));
      if (init->in_features() != o.toy.in_features || init->out_features() != o.toy.out_features)
        throw Error(Errc::shape_mismatch, "initial adapter shape does not match the toy task");
    } else {
      ADMMConfig c;
      c.carrier_rank = o.toy.carrier_rank;
      c.envelope_rank = o.toy.envelope_rank;
      c.max_sweeps = o.ptq_sweeps;
      const ADMMResult r = run_admm(toy.warmup_delta, c);
      init = r.adapter;
      ptq = {{"relative_error", r.relative_error}, {"frozen", r.frozen}, {"sweeps_run", r.sweeps_run}};
    }
  }

  const QATResult res = train(toy.task, init, o.qat, o.toy.carrier_rank, o.toy.envelope_rank);
  save_adapter(o.output, res.adapter);

  Json cfg = {{"in_features", o.toy.in_features},
              {"out_features", o.toy.out_features},
              {"carrier_rank", o.toy.carrier_rank},
              {"envelope_rank", o.toy.envelope_rank},
              {"samples", o.toy.samples},
              {"base_scale", o.toy.base_scale},
              {"warmup_noise", o.toy.warmup_noise},
              {"seed", o.toy.seed},
              {"mode", qat_mode_name(o.qat.mode)},
              {"steps", o.qat.steps},
              {"kappa", o.qat.kappa},
              {"lr", o.qat.lr},
              {"warmup_frac", o.qat.warmup_frac},
              {"weight_decay", o.qat.weight_decay},
              {"kappa_ramp", o.qat.kappa_ramp},
              {"kappa_start", o.qat.kappa_start},
              {"ptq_sweeps", o.ptq_sweeps},
              {"init", o.init},
              {"output", o.output}};
  Json report = report_header("train-toy", cfg, inputs);
  report["ptq"] = ptq;
  report["result"] = {
      {"base_loss", base},
      {"initial_loss", res.initial_loss},
      {"final_loss", res.final_loss},
      {"final_over_initial", res.initial_loss > 0.0 ? res.final_loss / res.initial_loss : 0.0},
      {"trainable_parameters",
       trainable_parameter_count(o.qat.mode, o.toy.in_features, o.toy.carrier_rank,
                                 o.toy.out_features, o.toy.envelope_rank)},
  };
  report["history"] = {{"loss", res.state.loss_history}};
  report["output"] = file_entry(o.output);
  emit_json(report, default_report_path(o.output, o.report));
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructOptions {
  std::string input;
  std::string output;
  std::string format = "auto";
  std::string report;
};

void run_reconstruct(const ReconstructOptions& o) {
  const LoRDBAAdapter adapter = load_adapter(o.input);
  const DenseMatrix dw = reconstruct(adapter);
  std::string format = o.format;
  if (format == "auto") format = o.output.ends_with(".csv") ? "csv" : "npy";
  write_matrix(o.output, dw, format);

  Json report = report_header("reconstruct",
                              {{"output", o.output}, {"format", format}},
                              Json::array({file_entry(o.input)}));
  report["result"] = {{"rows", dw.rows()},
                      {"cols", dw.cols()},
                      {"carrier_rank", adapter.carrier_rank()},
                      {"envelope_rank", adapter.envelope_rank()},
                      {"frobenius_norm", frobenius_norm(dw)}};
  report["output"] = file_entry(o.output);
  emit_json(report, o.report);
}

}  // namespace

void add_compress(CLI::App& app) {
  auto o = std::make_shared<CompressOptions>();
  CLI::App* sub = app.add_subcommand("compress", "Compress LRF1 LoRA factors into an LBA1 adapter");
  sub->add_option("input", o->input, "LRF1 factor file")->required()->check(CLI::ExistingFile);
  sub->add_option("-R,--carrier-rank", o->carrier_rank, "Carrier rank R")->required();
  add_admm_flags(sub, o->admm);
  sub->add_option("--seed", o->seed, "Recorded in the report; the solver itself is deterministic")
      ->capture_default_str();
  sub->add_option("-o,--output", o->output, "LBA1 adapter to write")->required();
  sub->add_option("--report", o->report, "JSON report path (default: <output>.json, '-' for stdout)");
  sub->callback([o] { run_compress(*o); });
}

void add_train_toy(CLI::App& app) {
  auto o = std::make_shared<TrainOptions>();
  o->qat.lr = kToyLearningRate;
  CLI::App* sub = app.add_subcommand("train-toy", "Straight-through training on a planted toy task");
  sub->add_option("--in-features", o->toy.in_features)->capture_default_str();
  sub->add_option("--out-features", o->toy.out_features)->capture_default_str();
  sub->add_option("-R,--carrier-rank", o->toy.carrier_rank)->capture_default_str();
  sub->add_option("-l,--envelope-rank", o->toy.envelope_rank)->capture_default_str();
  sub->add_option("--samples", o->toy.samples)->capture_default_str();
  sub->add_option("--base-scale", o->toy.base_scale, "Std of the frozen base weights")
      ->capture_default_str();
  sub->add_option("--warmup-noise", o->toy.warmup_noise,
                  "Relative error of the PTQ input delta")
      ->capture_default_str();
  sub->add_option("--mode", o->mode, "full, freeze or scratch")
      ->check(CLI::IsMember({"full", "freeze", "scratch"}))
      ->capture_default_str();
  sub->add_option("--steps", o->qat.steps)->capture_default_str();
  sub->add_option("--kappa", o->qat.kappa, "Surrogate temperature")->capture_default_str();
  sub->add_option("--lr", o->qat.lr)->capture_default_str();
  sub->add_option("--warmup-frac", o->qat.warmup_frac)->capture_default_str();
  sub->add_option("--weight-decay", o->qat.weight_decay)->capture_default_str();
  sub->add_flag("--kappa-ramp", o->qat.kappa_ramp, "Ramp kappa linearly from --kappa-start");
  sub->add_option("--kappa-start", o->qat.kappa_start)->capture_default_str();
  sub->add_option("--ptq-sweeps", o->ptq_sweeps, "ADMM sweeps for the built-in initialisation")
      ->capture_default_str();
  sub->add_option("--seed", o->toy.seed)->capture_default_str();
  sub->add_option("--init", o->init, "LBA1 adapter to start from instead of running ADMM")
      ->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output, "LBA1 adapter to write")->required();
  sub->add_option("--report", o->report, "JSON report path (default: <output>.json, '-' for stdout)");
  sub->callback([o] { run_train_toy(*o); });
}

void add_reconstruct(CLI::App& app) {
  auto o = std::make_shared<ReconstructOptions>();
  CLI::App* sub = app.add_subcommand("reconstruct", "Write the dense delta W of an LBA1 adapter");
  sub->add_option("input", o->input, "LBA1 adapter")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output, "Matrix file (.npy or .csv)")->required();
  sub->add_option("--format", o->format, "auto, npy or csv")
      ->check(CLI::IsMember({"auto", "npy", "csv"}))
      ->capture_default_str();
  sub->add_option("--report", o->report, "JSON summary path (default: stdout)");
  sub->callback([o] { run_reconstruct(*o); });
}

}  // namespace lordba::cli
