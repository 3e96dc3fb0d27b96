#pragma once

#include "cfacar/io.hpp"
#include "cfacar/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cfacar {

// Model priors and fixed constants. s2 = 1 and lambda_prior_var = 0.1 double
// as identifiability constraints; override only if you know why.
struct Hyperparameters {
  double alpha = 0.1;             // prior perturbation probability
  double v0 = 0.01;               // spike fraction of the slab variance
  double kappa = 0.5;             // gene-variance prior strength: zeta = kappa*n/2
  double lambda_prior_var = 0.1;  // prior variance of free loading entries
  double s2 = 1.0;                // common factor scale
  double delta_gamma = 0.005;     // trim applied to the coupling support
  double ig_shape = 0.001;        // sigma2 / tau2 prior shape
  double ig_rate = 0.001;         // sigma2 / tau2 prior rate

  double zeta(Index n_samples) const { return kappa * static_cast<double>(n_samples) / 2.0; }

  void validate(Index n_samples) const;
};

// Chain schedule. `iterations` counts post-tempering sweeps; the tempering
// ladder runs before them and its sweeps are always discarded.
struct SamplerConfig {
  int iterations = 4000;
  int burn_in = 2000;
  int thin = 1;
  int chains = 2;
  std::uint64_t seed = 20260801;

  double metropolis_sd = 0.1;        // initial xi
  double adapt_target_accept = 0.44;
  double adapt_window = 50.0;        // Robbins-Monro gain decay scale

  std::vector<double> temper_schedule = {32.0, 16.0, 8.0, 4.0, 2.0, 1.0};
  double temper_fraction = 0.1;      // burn-in fraction spent on each hot rung

  int audit_interval = 500;          // sweeps between indicator-cache audits
  bool store_scalar_draws = true;    // keep gamma/sigma2/tau2 series in memory

  int retained() const { return (iterations - burn_in + thin - 1) / thin; }
  int temper_sweeps_per_rung() const;

  void validate() const;
};

// Fit-level settings shared by CLI and library entry points.
struct RunConfig {
  Hyperparameters hyper;
  SamplerConfig sampler;
  double bfdr_level = 0.05;
};

RunConfig default_run_config();
RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const fs::path& path);

}  // namespace cfacar
