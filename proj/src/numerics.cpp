#include "mcdetect/numerics.hpp"

#include <cmath>
#include <exception>
#include <memory>
#include <mutex>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace mcdetect::numerics {

void QuadratureSpec::validate() const {
  if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0)) {
    throw std::invalid_argument("quadrature tolerances must be positive");
  }
  if (max_subdivisions < 8) {
    throw std::invalid_argument("quadrature max_subdivisions must be at least 8");
  }
  if (!(tail_truncation_threshold > 0.0 && tail_truncation_threshold < 1.0)) {
    throw std::invalid_argument("tail_truncation_threshold must lie in (0, 1)");
  }
}

double erfc(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("erfc: argument must be finite");
  }
  return std::erfc(x);
}

double erfcx(double x) {
  if (std::isnan(x)) {
    throw std::domain_error("erfcx: argument is NaN");
  }
  if (x < 5.0) {
    // exp(x^2) overflows below about -26.6; the result is +inf there anyway.
    return std::exp(x * x) * std::erfc(x);
  }
  // Continued fraction 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), evaluated
  // backwards. Sixty levels are plenty for x >= 5.
  double f = x;
  for (int n = 60; n >= 1; --n) {
    f = x + 0.5 * n / f;
  }
  return 1.0 / (f * std::sqrt(kPi));
}

double exp_erfc(double y, double z) {
  if (std::isnan(y) || std::isnan(z)) {
    throw std::domain_error("exp_erfc: NaN argument");
  }
  if (z == kInfinity) {
    return 0.0;
  }
  if (z == -kInfinity) {
    return 2.0 * std::exp(y);
  }
  if (z < 5.0 && y < 700.0) {
    return std::exp(y) * std::erfc(z);
  }
  return std::exp(y - z * z) * erfcx(z);
}

namespace {

struct Trampoline {
  const std::function<double(double)>* f;
  std::exception_ptr error;
};

double call_integrand(double x, void* params) {
  auto* t = static_cast<Trampoline*>(params);
  if (t->error) {
    return 0.0;
  }
  try {
    return (*t->f)(x);
  } catch (...) {
    t->error = std::current_exception();
    return 0.0;
  }
}

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

std::once_flag gsl_handler_flag;

}  // namespace

double integrate(const std::function<double(double)>& f, double lower, double upper,
                 const QuadratureSpec& spec) {
  spec.validate();
  if (std::isnan(lower) || std::isnan(upper) || !std::isfinite(lower)) {
    throw std::domain_error("integrate: lower bound must be finite and bounds non-NaN");
  }
  if (upper == lower) {
    return 0.0;
  }
  if (upper < lower) {
    return -integrate(f, upper, lower, spec);
  }
  std::call_once(gsl_handler_flag, [] { gsl_set_error_handler_off(); });

  const auto limit = static_cast<std::size_t>(spec.max_subdivisions);
  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> workspace(
      gsl_integration_workspace_alloc(limit));
  if (!workspace) {
    throw std::bad_alloc();
  }

  Trampoline trampoline{&f, nullptr};
  gsl_function gf{&call_integrand, &trampoline};
  double result = 0.0;
  double abserr = 0.0;
  int status = 0;
  if (std::isinf(upper)) {
    status = gsl_integration_qagiu(&gf, lower, spec.absolute_tolerance, spec.relative_tolerance,
                                   limit, workspace.get(), &result, &abserr);
  } else {
    status = gsl_integration_qag(&gf, lower, upper, spec.absolute_tolerance,
                                 spec.relative_tolerance, limit, GSL_INTEG_GAUSS21,
                                 workspace.get(), &result, &abserr);
  }
  if (trampoline.error) {
    std::rethrow_exception(trampoline.error);
  }
  if (status != GSL_SUCCESS || !std::isfinite(result)) {
    throw ConvergenceError(std::string("integrate: ") + gsl_strerror(status), result, abserr);
  }
  return result;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32),
                    0x6d63u};
  engine_.seed(seq);
}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::normal() { return normal_(engine_); }

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) {
    throw std::domain_error("exponential: rate must be positive");
  }
  return std::exponential_distribution<double>(rate)(engine_);
}

std::uint64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::domain_error("poisson: mean must be finite and non-negative");
  }
  if (mean == 0.0) {
    return 0;
  }
  return std::poisson_distribution<std::uint64_t>(mean)(engine_);
}

}  // namespace mcdetect::numerics
