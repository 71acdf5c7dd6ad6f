// Covert packet insertion over a renewal channel (the sender's side).
//
// The scheme runs in two phases against a stream of N packets arriving as a
// renewal process of rate lambda:
//
//   1. Buffering: every arrival is re-released at tau_i / (1 - rho_buffer),
//      a slightly slowed copy of the stream, until the phase horizon; the
//      packets whose release slot falls past the horizon stay in the buffer.
//   2. Transmission: the sender generates her own compressed renewal process
//      (rate lambda / (1 - rho_insert)) and fills each slot with a covert
//      packet with probability rho_insert, otherwise an overt packet drawn
//      from the buffer. Arrivals keep replenishing the buffer; an overt slot
//      with an empty buffer is the failure event.
//
// The planner sizes rho_buffer, rho_insert and the phase split psi from the
// covertness budget epsilon and the failure budget zeta.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "covren/renewal.hpp"

namespace covren {

// Raised when a requested operating point cannot be realized (e.g. the
// phase split leaves too few packets, or a bound is vacuous).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Choice of constant in the phase-split rule
//   psi / (1 - psi) = (factor * erfinv(1 - zeta))^2.
// kFisherScaled uses factor = sqrt(32 c) / epsilon (the default); kPlain
// uses factor = 2 / epsilon. Both are exposed because the two scenarios'
// source analyses disagree on the constant.
enum class PsiRule { kFisherScaled, kPlain };

struct PlanOptions {
  PsiRule psi_rule = PsiRule::kFisherScaled;
  // When true (default), reject plans whose transmission phase would hold
  // fewer than 10 packets. Scaling-law experiments disable this to reach
  // small N at fixed (epsilon, zeta).
  bool enforce_min_phase2 = true;
};

struct InsertionPlan {
  std::int64_t N = 0;
  double epsilon = 0.0;
  double zeta = 0.0;
  double c = 0.0;           // curvature constant of the distribution family
  double psi = 0.0;         // fraction of the stream spent buffering
  double rho_buffer = 0.0;  // epsilon / sqrt(c psi N)
  double rho_insert = 0.0;  // epsilon / sqrt(2 c N (1 - psi))
};

// rho for a standalone buffering run over all N packets: epsilon / sqrt(c N).
double standalone_buffering_rho(std::int64_t n_packets, double epsilon, double c);

InsertionPlan plan(std::int64_t n_packets, double epsilon, double zeta,
                   const RenewalSpec& spec, const PlanOptions& options = {});

enum class PacketLabel : std::uint8_t { kOvert, kCovert };

struct PacketStream {
  Eigen::ArrayXd arrivals;  // strictly increasing timestamps (seconds)
  std::vector<PacketLabel> labels;
};

struct BufferingResult {
  PacketStream released;         // all overt, at times tau_i / (1 - rho)
  std::int64_t buffered_count = 0;
};

// Releases every packet whose slowed slot tau_i / (1 - rho) falls no later
// than the last input arrival; the rest are buffered.
BufferingResult buffering_phase(const Eigen::ArrayXd& arrivals, double rho);

struct PhaseTrace {
  PacketStream output;  // times relative to the phase start
  bool failed = false;
  std::int64_t covert_sent = 0;
  std::int64_t overt_sent = 0;
  std::int64_t skipped = 0;  // overt slots that found an empty buffer
  std::int64_t final_buffer = 0;
};

// Runs the transmission phase over [0, duration]. `incoming` holds the
// replenishing arrival times relative to the phase start. rho = 0 is the
// degenerate pass-through diagnostic (incoming forwarded unchanged, no
// covert traffic, failure impossible).
PhaseTrace transmission_phase(const Eigen::ArrayXd& incoming,
                              std::int64_t initial_buffer,
                              const RenewalSpec& spec, double rho,
                              double duration, std::uint64_t seed);

struct InsertionResult {
  std::int64_t N = 0;
  double epsilon = 0.0;
  double zeta = 0.0;
  double psi = 0.0;
  double rho_insert = 0.0;
  std::uint64_t seed = 0;
  std::int64_t buffered_m = 0;            // buffer size entering phase 2
  std::int64_t covert_inserted_Nc = 0;
  std::int64_t overt_sent_No = 0;
  std::int64_t total_second_phase_Noc = 0;  // Nc + No
  std::int64_t walk_steps_K = 0;            // phase-2 arrivals + overt sends
  bool failed = false;
  std::int64_t phase1_released = 0;  // leading entries of `output` from phase 1
  PacketStream output;               // both phases merged, absolute timestamps
};

// One full two-phase realization driven by a fresh length-N arrival stream.
InsertionResult run_insertion(const RenewalSpec& spec, std::int64_t n_packets,
                              double epsilon, double zeta, std::uint64_t seed,
                              const PlanOptions& options = {});

// Variant with an explicit transmission-phase rho replacing the planned one
// (used to drive the scheme outside its covert operating regime).
InsertionResult run_insertion_with_rho(const RenewalSpec& spec,
                                       std::int64_t n_packets, double epsilon,
                                       double zeta, double rho_insert,
                                       std::uint64_t seed,
                                       const PlanOptions& options = {});

// Inter-arrival times of the phase-2 slice of a result's output stream
// (what a watcher of the transmission phase observes).
Eigen::ArrayXd second_phase_interarrivals(const InsertionResult& result);

}  // namespace covren
