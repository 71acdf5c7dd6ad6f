// Timing channel through a FIFO queue with exponential service: queue
// simulation, codebooks drawn from the overt traffic law, exact ML decoding
// from departures, the capacity lower bound and the end-to-end two-phase
// scheme.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "covren/insertion.hpp"
#include "covren/renewal.hpp"

namespace covren {

class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One simulated queue pass over packets 0..n (packet 0 arrives at time 0,
// the queue starts empty). Entries are indexed by packet 1..n:
//   arrivals[i-1]   A_i  inter-arrival between packets i-1 and i
//   services[i-1]   S_i  service duration
//   waits[i-1]      W_i  server idle gap before packet i enters service
//   departures[i-1] D_i  inter-departure between packets i-1 and i
// with D_i = W_i + S_i and W_i = max(0, arr_i - dep_{i-1}); d0 is packet 0's
// sojourn (its service, since the queue starts empty).
struct QueueTrace {
  Eigen::ArrayXd arrivals;
  Eigen::ArrayXd services;
  Eigen::ArrayXd waits;
  Eigen::ArrayXd departures;
  double d0 = 0.0;
  double mu = 0.0;
};

// FIFO recursion with i.i.d. exponential(mu) services. `declared_rate` is
// the nominal arrival rate; a positive value enables the stability check
// mu > rate (checked against the declaration, not the realization).
QueueTrace gm1_simulate(const Eigen::ArrayXd& interarrivals, double mu,
                        std::uint64_t seed, double declared_rate = 0.0);

// Independent checker pass: re-derives waits and departures from
// (arrivals, services, d0) and compares bitwise.
bool verify_queue_trace(const QueueTrace& trace);

// Mean sojourn (wait-in-system) over packets 1..n, skipping a warm-up prefix.
double mean_sojourn(const QueueTrace& trace, std::int64_t skip = 0);

struct Codebook {
  std::int64_t n = 0;  // blocklength (inter-arrival count per codeword)
  std::int64_t M = 0;  // codeword count
  Eigen::MatrixXd codewords;  // M x n, row per codeword, entries > 0
  RenewalSpec source_spec = RenewalSpec::exponential(1.0);
  double rate_nats_per_sec = 0.0;  // rate(spec) * log(M) / n
  std::uint64_t seed = 0;
};

// M codewords of n i.i.d. draws from spec. Guarded against M*n > 1e9 entries.
Codebook generate_codebook(const RenewalSpec& spec, std::int64_t n,
                           std::int64_t M, std::uint64_t seed);

void save_codebook(const Codebook& codebook, const std::string& path);
Codebook load_codebook(const std::string& path);

// Log-likelihood of observing (d0, departures) given the candidate
// codeword's inter-arrival times: waits are reconstructed through the queue
// recursion, the implied services s_i = D_i - W_i must all be positive and
// contribute sum(log mu - mu s_i); an infeasible candidate yields -inf.
double conditional_log_likelihood(const Eigen::ArrayXd& codeword, double d0,
                                  const Eigen::ArrayXd& departures, double mu);

inline constexpr std::int64_t kDecodeFailure = -1;

// Argmax of conditional_log_likelihood over the codebook, ties to the
// lowest index; kDecodeFailure when every codeword is infeasible.
std::int64_t ml_decode(double d0, const Eigen::ArrayXd& departures,
                       const Codebook& codebook, double mu);
std::int64_t ml_decode(const QueueTrace& trace, const Codebook& codebook);

struct CapacityBound {
  double value = 0.0;           // nats per second; may be <= 0 (vacuous)
  double kl_penalty = 0.0;      // rate * D(p0 || exponential of equal rate)
  double log_ratio_term = 0.0;  // rate * log(mu / rate)
  bool vacuous = false;
};

// value = lambda log(mu/lambda) - lambda D(p0 || e_lambda).
CapacityBound capacity_bound(const RenewalSpec& spec, double mu);

struct TimingResult {
  std::int64_t N = 0;
  double epsilon = 0.0;
  double zeta = 0.0;
  double mu = 0.0;
  std::int64_t n = 0;
  std::int64_t M = 0;
  std::uint64_t seed = 0;
  InsertionPlan plan;
  std::int64_t buffered_m = 0;
  std::int64_t message = 0;  // transmitted codeword index
  std::int64_t decoded = kDecodeFailure;
  bool decoded_ok = false;
  bool failed_buffer = false;
  double bits_sent = 0.0;  // log2(M) when decoded and never starved
  Eigen::ArrayXd released_interarrivals;  // the codeword actually released
};

// End-to-end run: buffer over the first psi N packets, then release a fresh
// codeword's timings while arrivals replenish the buffer, push the released
// stream through the queue behind spec-distributed warm-up traffic
// (50/(mu-lambda) time units deep) and ML-decode the codeword segment.
TimingResult run_timing(const RenewalSpec& spec, std::int64_t n_packets,
                        double epsilon, double zeta, double mu, std::int64_t n,
                        std::int64_t M, std::uint64_t seed,
                        const PlanOptions& options = {});

}  // namespace covren
