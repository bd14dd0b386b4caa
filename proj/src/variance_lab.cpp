#include "dppo/variance_lab.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dppo {

void SupportDistribution::validate() const {
  if (probabilities.size() < 1)
    throw InputError("SupportDistribution: empty support");
  if (probabilities.size() != surrogate_values.size())
    throw InputError("SupportDistribution: probability/value length mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] >= 0.0))
      throw InputError("SupportDistribution: negative probability at index " +
                       std::to_string(i));
    sum += probabilities[i];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InputError("SupportDistribution: probabilities sum to " +
                     std::to_string(sum) + ", expected 1");
  if (!surrogate_values.allFinite())
    throw InputError("SupportDistribution: surrogate values must be finite");
}

double empirical_variance(const ConstVectorRef& surrogates) {
  if (surrogates.size() < 1) throw InputError("empirical_variance: empty input");
  const double mean_sq = mean_ordered(surrogates.array().square());
  const double mean = mean_ordered(surrogates);
  return mean_sq - mean * mean;
}

double direct_variance(const SupportDistribution& dist) {
  dist.validate();
  const auto& p = dist.probabilities;
  const auto& o = dist.surrogate_values;
  const double second_moment = sum_ordered(p.array() * o.array().square());
  const double first_moment = sum_ordered(p.array() * o.array());
  return second_moment - first_moment * first_moment;
}

double decomposed_variance(const SupportDistribution& dist, Vector* self_excluded_squares) {
  dist.validate();
  const auto& p = dist.probabilities;
  const auto& o = dist.surrogate_values;
  const double weighted_sum = sum_ordered(p.array() * o.array());

  if (self_excluded_squares != nullptr)
    *self_excluded_squares = (1.0 - p.array()) * o.array().square();

  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double own_excluded = (1.0 - p[i]) * o[i] * o[i];
    const double cross = o[i] * (weighted_sum - p[i] * o[i]);
    total += p[i] * (own_excluded - cross);
  }
  return total;
}

double variance_upper_bound(const SupportDistribution& dist) {
  dist.validate();
  const auto& p = dist.probabilities;
  const auto& o = dist.surrogate_values;
  const double weighted_sum = sum_ordered(p.array() * o.array());

  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double cross = o[i] * (weighted_sum - p[i] * o[i]);
    total += p[i] * (o[i] * o[i] - cross);
  }
  return total;
}

namespace {

std::string dump_distribution(const SupportDistribution& dist) {
  std::ostringstream out;
  char buffer[64];
  out << "P = [";
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%.17g", dist.probabilities[i]);
    out << (i > 0 ? ", " : "") << buffer;
  }
  out << "], O = [";
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%.17g", dist.surrogate_values[i]);
    out << (i > 0 ? ", " : "") << buffer;
  }
  out << "]";
  return out.str();
}

}  // namespace

VarianceReport verify_identities(const SupportDistribution& dist, double tolerance) {
  if (!(tolerance > 0.0)) throw InputError("verify_identities: tolerance must be > 0");
  dist.validate();

  VarianceReport report;
  report.direct_variance = direct_variance(dist);
  report.decomposed_variance = decomposed_variance(dist, &report.self_excluded_squares);
  report.variance_upper_bound = variance_upper_bound(dist);

  const double identity_error =
      relative_error(report.decomposed_variance, report.direct_variance, 1e-12);

  const double slack = report.variance_upper_bound - report.direct_variance;
  const double closed_form_slack = sum_ordered(
      dist.probabilities.array().square() * dist.surrogate_values.array().square());
  const double slack_error = relative_error(slack, closed_form_slack, 1e-12);

  report.max_rel_error = std::max(identity_error, slack_error);

  if (identity_error > tolerance)
    throw VerificationError(
        "variance identity violated: rewritten form " +
        std::to_string(report.decomposed_variance) + " vs direct " +
        std::to_string(report.direct_variance) + " (rel err " +
        std::to_string(identity_error) + ") on " + dump_distribution(dist));
  if (slack_error > tolerance || closed_form_slack < 0.0)
    throw VerificationError(
        "bound slack mismatch: bound - variance = " + std::to_string(slack) +
        " vs sum P_i^2 O_i^2 = " + std::to_string(closed_form_slack) +
        " (rel err " + std::to_string(slack_error) + ") on " +
        dump_distribution(dist));
  const double scale = std::max({1.0, std::abs(report.variance_upper_bound),
                                 std::abs(report.decomposed_variance)});
  if (report.variance_upper_bound < report.decomposed_variance - tolerance * scale)
    throw VerificationError("bound below variance on " + dump_distribution(dist));
  return report;
}

}  // namespace dppo
