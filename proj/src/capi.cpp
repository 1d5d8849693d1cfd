#include <cstring>
#include <string>

#include "relclock/errors.hpp"
#include "relclock/gkls.hpp"
#include "relclock/hybridcq.hpp"
#include "relclock/rates.hpp"
#include "relclock/relclock.h"
#include "relclock/scenario.hpp"
#include "relclock/specfun.hpp"

struct relclock_config {
  relclock::ScenarioConfig config;
  std::string hash;
};

struct relclock_kernel {
  relclock::ClockKernel kernel;
};

struct relclock_model {
  relclock::GKLSModel model;
  relclock::Superoperator generator;
};

namespace {

thread_local std::string last_error;

relclock_status fail(relclock_status s, const std::string& message) {
  last_error = message;
  return s;
}

// Runs f, translating library exceptions into status codes.
template <class F>
relclock_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return RELCLOCK_OK;
  } catch (const relclock::DomainError& e) {
    return fail(RELCLOCK_ERR_DOMAIN, e.what());
  } catch (const relclock::RangeError& e) {
    return fail(RELCLOCK_ERR_RANGE, e.what());
  } catch (const relclock::AccuracyError& e) {
    return fail(RELCLOCK_ERR_ACCURACY, e.what());
  } catch (const relclock::PositivityError& e) {
    return fail(RELCLOCK_ERR_POSITIVITY, e.what());
  } catch (const relclock::UnsupportedError& e) {
    return fail(RELCLOCK_ERR_UNSUPPORTED, e.what());
  } catch (const relclock::ConstructionError& e) {
    return fail(RELCLOCK_ERR_CONSTRUCTION, e.what());
  } catch (const relclock::StepSizeError& e) {
    return fail(RELCLOCK_ERR_STEPSIZE, e.what());
  } catch (const relclock::ParseError& e) {
    return fail(RELCLOCK_ERR_PARSE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(RELCLOCK_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(RELCLOCK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RELCLOCK_ERR_INTERNAL, "unknown exception");
  }
}

#define RELCLOCK_REQUIRE(p) \
  if ((p) == nullptr) return fail(RELCLOCK_ERR_NULL_ARG, #p " is NULL")

relclock::EnvironmentSpec environment(const relclock_environment* e) {
  relclock::EnvironmentSpec env;
  env.mass_E = e->mass_E;
  env.coupling_g = e->coupling_g;
  env.beta = e->beta;
  env.rapidity = e->rapidity;
  env.validate();
  return env;
}

relclock::CMatrix read_density(const double* data, std::size_t dim) {
  relclock::CMatrix rho(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      const double* z = data + 2 * (i * dim + j);
      rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = relclock::Complex(z[0], z[1]);
    }
  return rho;
}

}  // namespace

extern "C" {

const char* relclock_last_error(void) { return last_error.c_str(); }

const char* relclock_version(void) { return relclock::version_string(); }

const char* relclock_status_name(relclock_status s) {
  switch (s) {
    case RELCLOCK_OK: return "ok";
    case RELCLOCK_ERR_DOMAIN: return "domain";
    case RELCLOCK_ERR_RANGE: return "range";
    case RELCLOCK_ERR_ACCURACY: return "accuracy";
    case RELCLOCK_ERR_POSITIVITY: return "positivity";
    case RELCLOCK_ERR_UNSUPPORTED: return "unsupported";
    case RELCLOCK_ERR_CONSTRUCTION: return "construction";
    case RELCLOCK_ERR_STEPSIZE: return "step_size";
    case RELCLOCK_ERR_PARSE: return "parse";
    case RELCLOCK_ERR_IO: return "io";
    case RELCLOCK_ERR_NULL_ARG: return "null_argument";
    case RELCLOCK_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

relclock_status relclock_config_parse(const char* text, relclock_config** out) {
  RELCLOCK_REQUIRE(text);
  RELCLOCK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new relclock_config{relclock::parse_config(text), {}}; });
}

relclock_status relclock_config_load(const char* path, relclock_config** out) {
  RELCLOCK_REQUIRE(path);
  RELCLOCK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new relclock_config{relclock::load_config(path), {}}; });
}

void relclock_config_free(relclock_config* c) { delete c; }

relclock_status relclock_config_set_seed(relclock_config* c, uint64_t seed) {
  RELCLOCK_REQUIRE(c);
  c->config.seed = seed;
  return RELCLOCK_OK;
}

relclock_status relclock_config_scenario(const relclock_config* c, const char** out) {
  RELCLOCK_REQUIRE(c);
  RELCLOCK_REQUIRE(out);
  *out = c->config.scenario.c_str();
  return RELCLOCK_OK;
}

relclock_status relclock_config_hash(relclock_config* c, const char** out) {
  RELCLOCK_REQUIRE(c);
  RELCLOCK_REQUIRE(out);
  return guarded([&] {
    c->hash = c->config.hash();
    *out = c->hash.c_str();
  });
}

relclock_status relclock_run_scenario(const relclock_config* c, const char* output_dir, int quiet, int* exit_code) {
  RELCLOCK_REQUIRE(c);
  RELCLOCK_REQUIRE(exit_code);
  return guarded([&] {
    relclock::RunOptions options;
    if (output_dir != nullptr) options.output_dir = output_dir;
    options.quiet = quiet != 0;
    const auto outcome = relclock::run_scenario(c->config, options);
    *exit_code = outcome.exit_code;
    last_error = outcome.error;
    if (outcome.exit_code == 1) throw relclock::Error(outcome.error);
  });
}

relclock_status relclock_dawson(double z, double* out) {
  RELCLOCK_REQUIRE(out);
  return guarded([&] { *out = relclock::specfun::dawson(z); });
}

relclock_status relclock_bose_occupation(double energy, double beta, double* out) {
  RELCLOCK_REQUIRE(out);
  return guarded([&] { *out = relclock::specfun::bose_occupation(energy, beta); });
}

relclock_status relclock_kernel_gaussian(double sigma, relclock_kernel** out) {
  RELCLOCK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new relclock_kernel{relclock::ClockKernel::gaussian(sigma)}; });
}

relclock_status relclock_kernel_coherent(double amplitude, double omega_c, relclock_kernel** out) {
  RELCLOCK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new relclock_kernel{relclock::ClockKernel::coherent_readout(amplitude, omega_c)}; });
}

void relclock_kernel_free(relclock_kernel* k) { delete k; }

relclock_status relclock_kappa_markov(const relclock_environment* env, double omega, double* out) {
  RELCLOCK_REQUIRE(env);
  RELCLOCK_REQUIRE(out);
  return guarded([&] { *out = relclock::kappa_markov(environment(env), omega); });
}

relclock_status relclock_kappa_tcl(const relclock_environment* env, const relclock_kernel* k, double omega,
                                   double* out) {
  RELCLOCK_REQUIRE(env);
  RELCLOCK_REQUIRE(k);
  RELCLOCK_REQUIRE(out);
  return guarded([&] { *out = relclock::kappa_tcl(relclock::RateQuery(omega, k->kernel, environment(env))); });
}

relclock_status relclock_model_load(const char* path, relclock_model** out) {
  RELCLOCK_REQUIRE(path);
  RELCLOCK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto m = relclock::load_model(path);
    m.validate();
    auto s = relclock::build_generator(m);
    *out = new relclock_model{std::move(m), std::move(s)};
  });
}

void relclock_model_free(relclock_model* m) { delete m; }

relclock_status relclock_model_dim(const relclock_model* m, size_t* out) {
  RELCLOCK_REQUIRE(m);
  RELCLOCK_REQUIRE(out);
  *out = m->model.dim();
  return RELCLOCK_OK;
}

relclock_status relclock_model_evolve(const relclock_model* m, const double* rho0, double t, double* rho_out) {
  RELCLOCK_REQUIRE(m);
  RELCLOCK_REQUIRE(rho0);
  RELCLOCK_REQUIRE(rho_out);
  return guarded([&] {
    const std::size_t d = m->model.dim();
    const relclock::CMatrix rho = relclock::evolve(m->generator, read_density(rho0, d), t);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const auto z = rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        rho_out[2 * (i * d + j)] = z.real();
        rho_out[2 * (i * d + j) + 1] = z.imag();
      }
  });
}

relclock_status relclock_model_cp_check(const relclock_model* m, double dt, int* completely_positive,
                                        double* min_choi_eigenvalue) {
  RELCLOCK_REQUIRE(m);
  RELCLOCK_REQUIRE(completely_positive);
  return guarded([&] {
    const auto v = relclock::cp_choi_check(m->generator, dt);
    *completely_positive = v.completely_positive ? 1 : 0;
    if (min_choi_eigenvalue != nullptr) *min_choi_eigenvalue = v.min_choi_eigenvalue;
  });
}

relclock_status relclock_tradeoff_scalar(double d0, double d1, double d2, double* margin, int* verdict) {
  RELCLOCK_REQUIRE(margin);
  RELCLOCK_REQUIRE(verdict);
  return guarded([&] {
    const auto one = [](double v) { return relclock::CMatrix::Constant(1, 1, v); };
    const auto r = relclock::tradeoff_check({one(d0), one(d1), one(d2)});
    *margin = r.margin;
    *verdict = static_cast<int>(r.verdict);
  });
}

}  // extern "C"
