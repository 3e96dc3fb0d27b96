#include "cfacar/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace cfacar {

using nlohmann::json;

void Hyperparameters::validate(Index n_samples) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0,1)");
  if (!(v0 > 0.0 && v0 < 1.0)) throw Error("v0 must lie in (0,1)");
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error("kappa must lie in (0,1)");
  if (!(lambda_prior_var > 0.0)) throw Error("lambda_prior_var must be positive");
  if (!(s2 > 0.0)) throw Error("s2 must be positive");
  if (!(delta_gamma > 0.0)) throw Error("delta_gamma must be positive");
  if (!(ig_shape > 0.0 && ig_rate > 0.0)) throw Error("inverse-gamma prior must be positive");
  if (n_samples > 0 && zeta(n_samples) <= 1.0)
    throw Error("gene-variance prior needs kappa*n/2 > 1; too few samples (n=" +
                std::to_string(n_samples) + ")");
}

int SamplerConfig::temper_sweeps_per_rung() const {
  return std::max(1, static_cast<int>(std::lround(temper_fraction * burn_in)));
}

void SamplerConfig::validate() const {
  if (iterations <= 0) throw Error("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw Error("need 0 <= burn_in < iterations");
  if (thin < 1) throw Error("thin must be >= 1");
  if (chains < 1) throw Error("chains must be >= 1");
  if (!(metropolis_sd > 0.0)) throw Error("metropolis_sd must be positive");
  if (!(adapt_target_accept > 0.0 && adapt_target_accept < 1.0))
    throw Error("adapt_target_accept must lie in (0,1)");
  if (temper_schedule.empty() || temper_schedule.back() != 1.0)
    throw Error("temper_schedule must end at exactly 1.0");
  for (std::size_t i = 1; i < temper_schedule.size(); ++i)
    if (!(temper_schedule[i] < temper_schedule[i - 1]))
      throw Error("temper_schedule must be strictly decreasing");
  if (temper_schedule.front() < 1.0) throw Error("temperatures must be >= 1");
  if (!(temper_fraction >= 0.0 && temper_fraction <= 1.0))
    throw Error("temper_fraction must lie in [0,1]");
  if (audit_interval < 1) throw Error("audit_interval must be >= 1");
}

RunConfig default_run_config() { return {}; }

namespace {

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  json j = json::parse(text);
  RunConfig c;
  maybe(j, "alpha", c.hyper.alpha);
  maybe(j, "v0", c.hyper.v0);
  maybe(j, "kappa", c.hyper.kappa);
  maybe(j, "lambda_prior_var", c.hyper.lambda_prior_var);
  maybe(j, "s2", c.hyper.s2);
  maybe(j, "delta_gamma", c.hyper.delta_gamma);
  maybe(j, "ig_shape", c.hyper.ig_shape);
  maybe(j, "ig_rate", c.hyper.ig_rate);

  maybe(j, "iterations", c.sampler.iterations);
  maybe(j, "burn_in", c.sampler.burn_in);
  maybe(j, "thin", c.sampler.thin);
  maybe(j, "chains", c.sampler.chains);
  maybe(j, "seed", c.sampler.seed);
  maybe(j, "metropolis_sd", c.sampler.metropolis_sd);
  maybe(j, "adapt_target_accept", c.sampler.adapt_target_accept);
  maybe(j, "adapt_window", c.sampler.adapt_window);
  maybe(j, "temper_schedule", c.sampler.temper_schedule);
  maybe(j, "temper_fraction", c.sampler.temper_fraction);
  maybe(j, "audit_interval", c.sampler.audit_interval);
  maybe(j, "store_scalar_draws", c.sampler.store_scalar_draws);

  maybe(j, "bfdr_level", c.bfdr_level);
  c.sampler.validate();
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["alpha"] = c.hyper.alpha;
  j["v0"] = c.hyper.v0;
  j["kappa"] = c.hyper.kappa;
  j["lambda_prior_var"] = c.hyper.lambda_prior_var;
  j["s2"] = c.hyper.s2;
  j["delta_gamma"] = c.hyper.delta_gamma;
  j["ig_shape"] = c.hyper.ig_shape;
  j["ig_rate"] = c.hyper.ig_rate;
  j["iterations"] = c.sampler.iterations;
  j["burn_in"] = c.sampler.burn_in;
  j["thin"] = c.sampler.thin;
  j["chains"] = c.sampler.chains;
  j["seed"] = c.sampler.seed;
  j["metropolis_sd"] = c.sampler.metropolis_sd;
  j["adapt_target_accept"] = c.sampler.adapt_target_accept;
  j["adapt_window"] = c.sampler.adapt_window;
  j["temper_schedule"] = c.sampler.temper_schedule;
  j["temper_fraction"] = c.sampler.temper_fraction;
  j["audit_interval"] = c.sampler.audit_interval;
  j["store_scalar_draws"] = c.sampler.store_scalar_draws;
  j["bfdr_level"] = c.bfdr_level;
  return j.dump(2) + "\n";
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(read_text_file(path));
}

}  // namespace cfacar
