#include "covren/timing.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace covren {

QueueTrace gm1_simulate(const Eigen::ArrayXd& interarrivals, double mu,
                        std::uint64_t seed, double declared_rate) {
  if (!(mu > 0.0)) throw std::invalid_argument("gm1_simulate: mu must be positive");
  if (declared_rate > 0.0 && !(mu > declared_rate)) {
    throw StabilityError("gm1_simulate: service rate must exceed the arrival rate");
  }
  for (Eigen::Index i = 0; i < interarrivals.size(); ++i) {
    if (!(interarrivals[i] > 0.0)) {
      throw std::invalid_argument("gm1_simulate: inter-arrivals must be positive");
    }
  }
  const Eigen::Index n = interarrivals.size();
  QueueTrace trace;
  trace.mu = mu;
  trace.arrivals = interarrivals;
  trace.services.resize(n);
  trace.waits.resize(n);
  trace.departures.resize(n);

  Rng rng(seed);
  trace.d0 = rng.exponential(mu);  // packet 0 sees an empty queue
  double arrival = 0.0;
  double departure = trace.d0;
  for (Eigen::Index i = 0; i < n; ++i) {
    arrival += interarrivals[i];
    const double wait = std::max(0.0, arrival - departure);
    const double service = rng.exponential(mu);
    const double gap = wait + service;
    trace.services[i] = service;
    trace.waits[i] = wait;
    trace.departures[i] = gap;
    departure += gap;
  }
  return trace;
}

bool verify_queue_trace(const QueueTrace& trace) {
  const Eigen::Index n = trace.arrivals.size();
  if (trace.services.size() != n || trace.waits.size() != n ||
      trace.departures.size() != n || !(trace.d0 >= 0.0)) {
    return false;
  }
  double arrival = 0.0;
  double departure = trace.d0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(trace.services[i] > 0.0) || trace.waits[i] < 0.0) return false;
    arrival += trace.arrivals[i];
    const double wait = std::max(0.0, arrival - departure);
    const double gap = wait + trace.services[i];
    if (wait != trace.waits[i]) return false;
    if (gap != trace.departures[i]) return false;
    departure += gap;
  }
  return true;
}

double mean_sojourn(const QueueTrace& trace, std::int64_t skip) {
  const Eigen::Index n = trace.arrivals.size();
  double arrival = 0.0;
  double departure = trace.d0;
  double sum = 0.0;
  std::int64_t count = 0;
  if (skip <= 0) {
    sum += trace.d0;
    ++count;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    arrival += trace.arrivals[i];
    departure += trace.departures[i];
    if (i + 1 >= skip) {
      sum += departure - arrival;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("mean_sojourn: nothing left after skip");
  return sum / static_cast<double>(count);
}

Codebook generate_codebook(const RenewalSpec& spec, std::int64_t n,
                           std::int64_t M, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_codebook: n must be >= 1");
  if (M < 2) throw std::invalid_argument("generate_codebook: M must be >= 2");
  if (M > 1000000000ll / n) {
    throw std::length_error("generate_codebook: M*n exceeds 1e9 entries");
  }
  Codebook cb{n, M, Eigen::MatrixXd(M, n), spec, 0.0, seed};
  Rng rng(seed);
  for (std::int64_t i = 0; i < M; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      cb.codewords(i, j) = sample_one(spec, rng);
    }
  }
  cb.rate_nats_per_sec =
      rate(spec) * std::log(static_cast<double>(M)) / static_cast<double>(n);
  return cb;
}

void save_codebook(const Codebook& codebook, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_codebook: cannot open " + path);
  nlohmann::json header;
  header["n"] = codebook.n;
  header["M"] = codebook.M;
  header["family"] = family_name(codebook.source_spec.family());
  header["params"] = codebook.source_spec.params();
  header["scale_factor"] = codebook.source_spec.scale_factor();
  header["seed"] = codebook.seed;
  out << header.dump() << '\n';
  out.precision(17);
  for (std::int64_t i = 0; i < codebook.M; ++i) {
    for (std::int64_t j = 0; j < codebook.n; ++j) {
      out << codebook.codewords(i, j) << (j + 1 == codebook.n ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("save_codebook: write failed for " + path);
}

Codebook load_codebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_codebook: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_codebook: missing header in " + path);
  }
  const nlohmann::json header = nlohmann::json::parse(line);
  RenewalSpec spec(family_from_name(header.at("family").get<std::string>()),
                   header.at("params").get<std::vector<double>>(),
                   header.at("scale_factor").get<double>());
  const auto n = header.at("n").get<std::int64_t>();
  const auto M = header.at("M").get<std::int64_t>();
  Codebook cb{n, M, Eigen::MatrixXd(M, n), spec, 0.0,
              header.at("seed").get<std::uint64_t>()};
  for (std::int64_t i = 0; i < M; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      if (!(in >> cb.codewords(i, j))) {
        throw std::runtime_error("load_codebook: truncated matrix in " + path);
      }
    }
  }
  cb.rate_nats_per_sec =
      rate(spec) * std::log(static_cast<double>(M)) / static_cast<double>(n);
  return cb;
}

double conditional_log_likelihood(const Eigen::ArrayXd& codeword, double d0,
                                  const Eigen::ArrayXd& departures, double mu) {
  if (codeword.size() != departures.size()) {
    throw std::invalid_argument(
        "conditional_log_likelihood: codeword/departure length mismatch");
  }
  if (!(mu > 0.0)) throw std::invalid_argument("conditional_log_likelihood: mu > 0");
  double arrival = 0.0;
  double departure = d0;
  double total_service = 0.0;
  const Eigen::Index n = codeword.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    arrival += codeword[i];
    const double wait = std::max(0.0, arrival - departure);
    const double service = departures[i] - wait;
    if (!(service > 0.0)) return -kInf;  // candidate cannot have produced this
    total_service += service;
    departure += departures[i];
  }
  return static_cast<double>(n) * std::log(mu) - mu * total_service;
}

std::int64_t ml_decode(double d0, const Eigen::ArrayXd& departures,
                       const Codebook& codebook, double mu) {
  if (departures.size() != codebook.n) {
    throw std::invalid_argument("ml_decode: trace length differs from codebook n");
  }
  std::int64_t best = kDecodeFailure;
  double best_ll = -kInf;
  Eigen::ArrayXd row(codebook.n);
  for (std::int64_t i = 0; i < codebook.M; ++i) {
    row = codebook.codewords.row(i).transpose().array();
    const double ll = conditional_log_likelihood(row, d0, departures, mu);
    if (ll > best_ll) {  // strict: ties stay at the lowest index
      best_ll = ll;
      best = i;
    }
  }
  return best;
}

std::int64_t ml_decode(const QueueTrace& trace, const Codebook& codebook) {
  return ml_decode(trace.d0, trace.departures, codebook, trace.mu);
}

CapacityBound capacity_bound(const RenewalSpec& spec, double mu) {
  const double lambda = rate(spec);
  if (!(mu > lambda)) {
    throw StabilityError("capacity_bound: need mu > arrival rate");
  }
  CapacityBound b;
  b.log_ratio_term = lambda * std::log(mu / lambda);
  b.kl_penalty = lambda * kl_divergence(spec, RenewalSpec::exponential(lambda));
  b.value = b.log_ratio_term - b.kl_penalty;
  b.vacuous = !(b.value > 0.0);
  return b;
}

TimingResult run_timing(const RenewalSpec& spec, std::int64_t n_packets,
                        double epsilon, double zeta, double mu, std::int64_t n,
                        std::int64_t M, std::uint64_t seed,
                        const PlanOptions& options) {
  const InsertionPlan p = plan(n_packets, epsilon, zeta, spec, options);
  const CapacityBound bound = capacity_bound(spec, mu);
  if (bound.vacuous) {
    throw InfeasibleError("run_timing: capacity bound is vacuous at this mu");
  }
  const std::int64_t phase2 =
      std::llround(static_cast<double>(n_packets) * (1.0 - p.psi));
  const std::int64_t phase1 = n_packets - phase2;
  if (n > phase2) {
    throw InfeasibleError("run_timing: blocklength exceeds the transmission phase");
  }

  TimingResult result;
  result.N = n_packets;
  result.epsilon = epsilon;
  result.zeta = zeta;
  result.mu = mu;
  result.n = n;
  result.M = M;
  result.seed = seed;
  result.plan = p;

  const Eigen::ArrayXd gaps =
      sample_interarrivals(spec, n_packets, derive_seed(seed, 1));
  const Eigen::ArrayXd tau = cumulative_sum(gaps);
  const BufferingResult buffered =
      buffering_phase(tau.head(phase1), p.rho_buffer);
  result.buffered_m = buffered.buffered_count;

  const Codebook codebook = generate_codebook(spec, n, M, derive_seed(seed, 3));
  Rng message_rng(derive_seed(seed, 4));
  result.message = static_cast<std::int64_t>(message_rng.next_u64() %
                                             static_cast<std::uint64_t>(M));
  const Eigen::ArrayXd codeword =
      codebook.codewords.row(result.message).transpose().array();
  result.released_interarrivals = codeword;

  // Buffer walk across the n+1 release instants. A starved release records
  // the failure and the walk continues on the nominal schedule so the
  // decode statistics stay measurable.
  {
    const Eigen::ArrayXd incoming = tau.tail(phase2) - tau[phase1 - 1];
    const Eigen::ArrayXd offsets = cumulative_sum(codeword);
    std::int64_t buffer = buffered.buffered_count;
    Eigen::Index ptr = 0;
    for (std::int64_t k = 0; k <= n; ++k) {
      const double when = k == 0 ? 0.0 : offsets[k - 1];
      while (ptr < incoming.size() && incoming[ptr] <= when) {
        ++buffer;
        ++ptr;
      }
      if (buffer == 0) {
        result.failed_buffer = true;
      } else {
        --buffer;
      }
    }
  }

  // Receiver queue: spec-distributed warm-up traffic deep enough to mix
  // (50/(mu - lambda) time units), one fresh gap, then the codeword.
  const double lambda = rate(spec);
  const double warm_span = 50.0 / (mu - lambda);
  std::vector<double> all_gaps;
  {
    Rng warm_rng(derive_seed(seed, 5));
    double elapsed = 0.0;
    while (elapsed < warm_span) {
      const double g = sample_one(spec, warm_rng);
      all_gaps.push_back(g);
      elapsed += g;
    }
    // The last warm-up gap doubles as the gap in front of the codeword's
    // first packet, so the codeword rides the same arrival law.
    for (std::int64_t j = 0; j < n; ++j) all_gaps.push_back(codeword[j]);
  }
  const Eigen::Index head_packet =
      static_cast<Eigen::Index>(all_gaps.size()) - n;  // codeword packet 0
  const Eigen::Map<const Eigen::ArrayXd> gap_view(all_gaps.data(),
                                                  static_cast<Eigen::Index>(all_gaps.size()));
  const QueueTrace trace =
      gm1_simulate(gap_view, mu, derive_seed(seed, 6), lambda);

  double arrival = 0.0;
  double departure = trace.d0;
  double head_d0 = 0.0;
  for (Eigen::Index i = 0; i < trace.arrivals.size(); ++i) {
    arrival += trace.arrivals[i];
    departure += trace.departures[i];
    if (i + 1 == head_packet) {
      head_d0 = departure - arrival;
      break;
    }
  }
  const Eigen::ArrayXd segment = trace.departures.segment(head_packet, n);
  result.decoded = ml_decode(head_d0, segment, codebook, mu);
  result.decoded_ok = result.decoded == result.message;
  result.bits_sent = (result.decoded_ok && !result.failed_buffer)
                         ? std::log2(static_cast<double>(M))
                         : 0.0;
  return result;
}

}  // namespace covren
