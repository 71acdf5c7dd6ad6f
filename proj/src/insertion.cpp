#include "covren/insertion.hpp"

#include <cmath>
#include <optional>

namespace covren {

namespace {

void check_unit_interval(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in (0, 1)");
  }
}

}  // namespace

double standalone_buffering_rho(std::int64_t n_packets, double epsilon, double c) {
  if (n_packets < 1) throw std::invalid_argument("n_packets must be >= 1");
  check_unit_interval(epsilon, "epsilon");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  return epsilon / std::sqrt(c * static_cast<double>(n_packets));
}

InsertionPlan plan(std::int64_t n_packets, double epsilon, double zeta,
                   const RenewalSpec& spec, const PlanOptions& options) {
  if (n_packets < 100) {
    throw std::invalid_argument("plan: need at least 100 packets");
  }
  check_unit_interval(epsilon, "epsilon");
  check_unit_interval(zeta, "zeta");
  const double c = fisher_constant(spec);  // throws RegularityError if unfit

  const double factor = options.psi_rule == PsiRule::kFisherScaled
                            ? std::sqrt(32.0 * c) / epsilon
                            : 2.0 / epsilon;
  const double root = factor * erf_inv(1.0 - zeta);
  const double odds = root * root;  // psi / (1 - psi)
  const double psi = odds / (1.0 + odds);

  InsertionPlan p;
  p.N = n_packets;
  p.epsilon = epsilon;
  p.zeta = zeta;
  p.c = c;
  p.psi = psi;
  const double n_real = static_cast<double>(n_packets);
  p.rho_buffer = epsilon / std::sqrt(c * psi * n_real);
  p.rho_insert = epsilon / std::sqrt(2.0 * c * n_real * (1.0 - psi));

  const std::int64_t phase2 = std::llround(n_real * (1.0 - psi));
  if (options.enforce_min_phase2 && phase2 < 10) {
    throw InfeasibleError("plan: budget infeasible at this N (phase 2 holds " +
                          std::to_string(phase2) + " packets)");
  }
  if (!(p.rho_buffer < 1.0) || !(p.rho_insert < 1.0)) {
    throw InfeasibleError("plan: budget infeasible at this N (scaling factor >= 1)");
  }
  return p;
}

BufferingResult buffering_phase(const Eigen::ArrayXd& arrivals, double rho) {
  if (arrivals.size() == 0) {
    throw std::invalid_argument("buffering_phase: empty arrival stream");
  }
  check_unit_interval(rho, "rho");
  for (Eigen::Index i = 1; i < arrivals.size(); ++i) {
    if (!(arrivals[i] > arrivals[i - 1])) {
      throw std::invalid_argument(
          "buffering_phase: arrivals must be strictly increasing");
    }
  }
  const double horizon = arrivals[arrivals.size() - 1];
  // tau_i / (1 - rho) <= horizon  <=>  tau_i <= horizon * (1 - rho).
  const double cutoff = horizon * (1.0 - rho);
  Eigen::Index released = 0;
  while (released < arrivals.size() && arrivals[released] <= cutoff) ++released;

  BufferingResult out;
  out.released.arrivals = arrivals.head(released) / (1.0 - rho);
  out.released.labels.assign(static_cast<std::size_t>(released),
                             PacketLabel::kOvert);
  out.buffered_count = arrivals.size() - released;
  return out;
}

PhaseTrace transmission_phase(const Eigen::ArrayXd& incoming,
                              std::int64_t initial_buffer,
                              const RenewalSpec& spec, double rho,
                              double duration, std::uint64_t seed) {
  if (initial_buffer < 0) {
    throw std::invalid_argument("transmission_phase: negative buffer");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("transmission_phase: rho must lie in [0, 1)");
  }
  PhaseTrace trace;
  if (rho == 0.0) {
    // Degenerate pass-through: the sender does nothing to the stream.
    trace.output.arrivals = incoming;
    trace.output.labels.assign(static_cast<std::size_t>(incoming.size()),
                               PacketLabel::kOvert);
    trace.overt_sent = incoming.size();
    trace.final_buffer = initial_buffer;
    return trace;
  }
  if (!(duration > 0.0)) return trace;

  const RenewalSpec oc = scale_compress(spec, rho);
  Rng rng(seed);
  std::vector<double> times;
  std::vector<PacketLabel> labels;
  std::int64_t buffer = initial_buffer;
  Eigen::Index next_arrival = 0;
  double t = 0.0;
  for (;;) {
    t += sample_one(oc, rng);
    if (t > duration) break;
    // Replenishing arrivals strictly in the past or simultaneous land first.
    while (next_arrival < incoming.size() && incoming[next_arrival] <= t) {
      ++buffer;
      ++next_arrival;
    }
    if (rng.uniform() < rho) {
      times.push_back(t);
      labels.push_back(PacketLabel::kCovert);
      ++trace.covert_sent;
    } else if (buffer > 0) {
      --buffer;
      times.push_back(t);
      labels.push_back(PacketLabel::kOvert);
      ++trace.overt_sent;
    } else {
      trace.failed = true;  // overt slot, empty buffer; slot is skipped
      ++trace.skipped;
    }
  }
  while (next_arrival < incoming.size() && incoming[next_arrival] <= duration) {
    ++buffer;
    ++next_arrival;
  }
  trace.final_buffer = buffer;
  trace.output.arrivals =
      Eigen::Map<const Eigen::ArrayXd>(times.data(), times.size());
  trace.output.labels = std::move(labels);
  return trace;
}

namespace {

InsertionResult run_insertion_impl(const RenewalSpec& spec,
                                   std::int64_t n_packets, double epsilon,
                                   double zeta,
                                   std::optional<double> rho_override,
                                   std::uint64_t seed,
                                   const PlanOptions& options) {
  const InsertionPlan p = plan(n_packets, epsilon, zeta, spec, options);
  const double rho_insert = rho_override.value_or(p.rho_insert);

  const Eigen::ArrayXd gaps =
      sample_interarrivals(spec, n_packets, derive_seed(seed, 1));
  const Eigen::ArrayXd tau = cumulative_sum(gaps);

  const std::int64_t phase2 =
      std::llround(static_cast<double>(n_packets) * (1.0 - p.psi));
  const std::int64_t phase1 = n_packets - phase2;  // residual goes to phase 1

  InsertionResult result;
  result.N = n_packets;
  result.epsilon = epsilon;
  result.zeta = zeta;
  result.psi = p.psi;
  result.rho_insert = rho_insert;
  result.seed = seed;

  BufferingResult buffered = buffering_phase(tau.head(phase1), p.rho_buffer);
  result.buffered_m = buffered.buffered_count;

  const double phase2_start = tau[phase1 - 1];
  const double duration = tau[n_packets - 1] - phase2_start;
  const Eigen::ArrayXd incoming = tau.tail(phase2) - phase2_start;

  PhaseTrace trace =
      transmission_phase(incoming, buffered.buffered_count, spec, rho_insert,
                         duration, derive_seed(seed, 2));
  result.covert_inserted_Nc = trace.covert_sent;
  result.overt_sent_No = trace.overt_sent;
  result.total_second_phase_Noc = trace.covert_sent + trace.overt_sent;
  result.walk_steps_K = phase2 + trace.overt_sent;
  result.failed = trace.failed;
  result.phase1_released = buffered.released.arrivals.size();

  const Eigen::Index n1 = buffered.released.arrivals.size();
  const Eigen::Index n2 = trace.output.arrivals.size();
  result.output.arrivals = Eigen::ArrayXd(n1 + n2);
  result.output.arrivals.head(n1) = buffered.released.arrivals;
  result.output.arrivals.tail(n2) = trace.output.arrivals + phase2_start;
  result.output.labels = std::move(buffered.released.labels);
  result.output.labels.insert(result.output.labels.end(),
                              trace.output.labels.begin(),
                              trace.output.labels.end());
  return result;
}

}  // namespace

InsertionResult run_insertion(const RenewalSpec& spec, std::int64_t n_packets,
                              double epsilon, double zeta, std::uint64_t seed,
                              const PlanOptions& options) {
  return run_insertion_impl(spec, n_packets, epsilon, zeta, std::nullopt, seed,
                            options);
}

InsertionResult run_insertion_with_rho(const RenewalSpec& spec,
                                       std::int64_t n_packets, double epsilon,
                                       double zeta, double rho_insert,
                                       std::uint64_t seed,
                                       const PlanOptions& options) {
  if (!(rho_insert > 0.0 && rho_insert < 1.0)) {
    throw std::domain_error("run_insertion_with_rho: rho must lie in (0, 1)");
  }
  return run_insertion_impl(spec, n_packets, epsilon, zeta, rho_insert, seed,
                            options);
}

Eigen::ArrayXd second_phase_interarrivals(const InsertionResult& result) {
  const Eigen::Index n2 = result.output.arrivals.size() - result.phase1_released;
  if (n2 < 2) return Eigen::ArrayXd();
  const auto phase2 = result.output.arrivals.tail(n2);
  return phase2.tail(n2 - 1) - phase2.head(n2 - 1);
}

}  // namespace covren
