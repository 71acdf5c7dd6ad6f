#include "covren/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "covren/detectors.hpp"
#include "covren/harness.hpp"
#include "covren/insertion.hpp"
#include "covren/timing.hpp"

namespace covren {

namespace {

std::string fmt6g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt6f(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Shared output conventions: text prints 6 significant digits, json full
// precision, csv one header row plus one value row.
void print_record(const nlohmann::ordered_json& record, const std::string& format,
                  std::ostream& out) {
  if (format == "json") {
    out << record.dump() << '\n';
    return;
  }
  if (format == "csv") {
    bool first = true;
    for (const auto& [key, _] : record.items()) {
      out << (first ? "" : ",") << key;
      first = false;
    }
    out << '\n';
    first = true;
    for (const auto& [_, value] : record.items()) {
      out << (first ? "" : ",") << value.dump();
      first = false;
    }
    out << '\n';
    return;
  }
  for (const auto& [key, value] : record.items()) {
    if (value.is_number_float()) {
      out << key << " = " << fmt6g(value.get<double>()) << '\n';
    } else {
      out << key << " = " << value.dump() << '\n';
    }
  }
}

struct SpecFlags {
  std::string family = "exponential";
  std::vector<double> params = {1.0};
  double scale_factor = 1.0;

  RenewalSpec build() const {
    return RenewalSpec(family_from_name(family), params, scale_factor);
  }
};

void add_spec_flags(CLI::App* cmd, SpecFlags* flags) {
  cmd->add_option("--family", flags->family,
                  "distribution family (exponential, gamma, weibull, "
                  "generalized_gamma, rayleigh, erlang, chi_squared, uniform)");
  cmd->add_option("--params", flags->params, "family parameters")
      ->delimiter(',');
  cmd->add_option("--scale-factor", flags->scale_factor,
                  "extra multiplicative scale on inter-arrivals");
}

// --config <path>: JSON object whose entries override the matching flags.
void apply_config_overrides(const std::string& path, CLI::App* cmd) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) continue;
    opt->clear();
    if (value.is_array()) {
      std::vector<std::string> parts;
      for (const auto& v : value) parts.push_back(v.dump());
      opt->add_result(parts);
    } else if (value.is_string()) {
      opt->add_result(value.get<std::string>());
    } else {
      opt->add_result(value.dump());
    }
    opt->run_callback();
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"covert communication on renewal packet channels"};
  app.require_subcommand(1);

  std::string format = "text";
  app.add_option("--format", format, "output format: text, json or csv")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  // Flag storage shared across subcommands (each gets its own spec block).
  struct {
    SpecFlags spec;
    double rho = 0.1;
    std::string direction = "stretch";
    SpecFlags spec2;
    bool has_spec2 = false;
    std::string config;
  } kl_args;
  struct {
    SpecFlags spec;
    std::string config;
  } fisher_args, regcheck_args;
  struct {
    SpecFlags spec;
    std::int64_t N = 10000;
    double epsilon = 0.1;
    double zeta = 0.1;
    std::string psi_rule = "fisher_scaled";
    std::string config;
  } plan_args;
  struct {
    SpecFlags spec;
    std::int64_t N = 10000;
    double epsilon = 0.1;
    double zeta = 0.1;
    std::uint64_t seed = 1;
    std::string psi_rule = "fisher_scaled";
    std::string config;
  } insert_args;
  struct {
    SpecFlags spec;
    std::int64_t N = 100000;
    double epsilon = 0.2;
    double zeta = 0.1;
    double mu = 2.0;
    std::int64_t n = 20;
    std::int64_t M = 32;
    std::uint64_t seed = 1;
    std::string psi_rule = "fisher_scaled";
    std::string config;
  } timing_args;
  struct {
    SpecFlags spec;
    std::string detector = "sum_threshold";
    std::string variant = "stretch";
    double rho = 0.1;
    std::int64_t n_obs = 1000;
    double alpha = 0.05;
    std::int64_t trials = 1000;
    std::uint64_t seed = 1;
    std::string config;
  } detect_args;
  struct {
    SpecFlags spec;
    double mu = 2.0;
    std::string config;
  } capacity_args;
  struct {
    std::string config;
    std::string output;
  } sweep_args;

  CLI::App* kl = app.add_subcommand(
      "kl", "divergence between a spec and its scaled family (or two specs)");
  add_spec_flags(kl, &kl_args.spec);
  kl->add_option("--rho", kl_args.rho, "scaling factor in (0,1)");
  kl->add_option("--direction", kl_args.direction, "stretch or compress")
      ->check(CLI::IsMember({"stretch", "compress"}));
  kl->add_option("--family2", kl_args.spec2.family, "explicit second family");
  kl->add_option("--params2", kl_args.spec2.params, "second family parameters")
      ->delimiter(',');
  kl->add_option("--scale-factor2", kl_args.spec2.scale_factor,
                 "second family scale");
  kl->add_option("--config", kl_args.config, "JSON file overriding flags");

  CLI::App* fisher =
      app.add_subcommand("fisher", "curvature constant of the scaling family");
  add_spec_flags(fisher, &fisher_args.spec);
  fisher->add_option("--config", fisher_args.config, "JSON file overriding flags");

  CLI::App* regcheck =
      app.add_subcommand("regcheck", "verify the scaling-family regularity conditions");
  add_spec_flags(regcheck, &regcheck_args.spec);
  regcheck->add_option("--config", regcheck_args.config,
                       "JSON file overriding flags");

  CLI::App* plan_cmd =
      app.add_subcommand("plan", "size the two-phase insertion scheme");
  add_spec_flags(plan_cmd, &plan_args.spec);
  plan_cmd->add_option("--N", plan_args.N, "packet stream length");
  plan_cmd->add_option("--epsilon", plan_args.epsilon, "covertness budget");
  plan_cmd->add_option("--zeta", plan_args.zeta, "failure budget");
  plan_cmd->add_option("--psi-rule", plan_args.psi_rule,
                       "phase split rule: fisher_scaled or plain")
      ->check(CLI::IsMember({"fisher_scaled", "plain"}));
  plan_cmd->add_option("--config", plan_args.config, "JSON file overriding flags");

  CLI::App* insert =
      app.add_subcommand("insert", "one two-phase insertion realization");
  add_spec_flags(insert, &insert_args.spec);
  insert->add_option("--N", insert_args.N, "packet stream length");
  insert->add_option("--epsilon", insert_args.epsilon, "covertness budget");
  insert->add_option("--zeta", insert_args.zeta, "failure budget");
  insert->add_option("--seed", insert_args.seed, "random seed");
  insert->add_option("--psi-rule", insert_args.psi_rule,
                     "phase split rule: fisher_scaled or plain")
      ->check(CLI::IsMember({"fisher_scaled", "plain"}));
  insert->add_option("--config", insert_args.config, "JSON file overriding flags");

  CLI::App* timing =
      app.add_subcommand("timing", "one end-to-end timing-channel realization");
  add_spec_flags(timing, &timing_args.spec);
  timing->add_option("--N", timing_args.N, "packet stream length");
  timing->add_option("--epsilon", timing_args.epsilon, "covertness budget");
  timing->add_option("--zeta", timing_args.zeta, "failure budget");
  timing->add_option("--mu", timing_args.mu, "queue service rate");
  timing->add_option("--n", timing_args.n, "codeword blocklength");
  timing->add_option("--M", timing_args.M, "codebook size");
  timing->add_option("--seed", timing_args.seed, "random seed");
  timing->add_option("--psi-rule", timing_args.psi_rule,
                     "phase split rule: fisher_scaled or plain")
      ->check(CLI::IsMember({"fisher_scaled", "plain"}));
  timing->add_option("--config", timing_args.config, "JSON file overriding flags");

  CLI::App* detect = app.add_subcommand(
      "detect", "Monte Carlo error estimate for a detector against a scaled alternative");
  add_spec_flags(detect, &detect_args.spec);
  detect->add_option("--detector", detect_args.detector,
                     "sum_threshold, lrt or glrt_grid")
      ->check(CLI::IsMember({"sum_threshold", "lrt", "glrt_grid"}));
  detect->add_option("--variant", detect_args.variant, "stretch or compress")
      ->check(CLI::IsMember({"stretch", "compress"}));
  detect->add_option("--rho", detect_args.rho, "alternative's scaling factor");
  detect->add_option("--n", detect_args.n_obs, "observations per trial");
  detect->add_option("--alpha", detect_args.alpha, "sum-test false alarm target");
  detect->add_option("--trials", detect_args.trials, "Monte Carlo trials");
  detect->add_option("--seed", detect_args.seed, "random seed");
  detect->add_option("--config", detect_args.config, "JSON file overriding flags");

  CLI::App* capacity =
      app.add_subcommand("capacity", "timing-channel capacity lower bound");
  add_spec_flags(capacity, &capacity_args.spec);
  capacity->add_option("--mu", capacity_args.mu, "queue service rate");
  capacity->add_option("--config", capacity_args.config,
                       "JSON file overriding flags");

  CLI::App* sweep = app.add_subcommand("sweep", "run an experiment sweep");
  sweep->add_option("--config", sweep_args.config, "experiment config (JSON)")
      ->required();
  sweep->add_option("--output", sweep_args.output,
                    "override the config's output_path");

  // Global flags (e.g. --format) may appear after the subcommand name.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (kl->parsed()) {
      apply_config_overrides(kl_args.config, kl);
      kl_args.has_spec2 = kl->count("--family2") > 0 || kl->count("--params2") > 0;
      const RenewalSpec spec = kl_args.spec.build();
      nlohmann::ordered_json record;
      if (kl_args.has_spec2) {
        const RenewalSpec other = kl_args.spec2.build();
        record["kl"] = kl_divergence(spec, other);
      } else {
        const RenewalSpec scaled = kl_args.direction == "stretch"
                                       ? scale_stretch(spec, kl_args.rho)
                                       : scale_compress(spec, kl_args.rho);
        const double exact = kl_divergence(spec, scaled);
        const double small = kl_small_rho(spec, kl_args.rho);
        record["kl"] = exact;
        record["kl_small_rho"] = small;
        record["ratio"] = small > 0.0 ? exact / small : 0.0;
      }
      print_record(record, format, out);
      return 0;
    }
    if (fisher->parsed()) {
      apply_config_overrides(fisher_args.config, fisher);
      const double c = fisher_constant(fisher_args.spec.build());
      if (format == "text") {
        out << "c = " << fmt6f(c) << '\n';
      } else {
        print_record({{"c", c}}, format, out);
      }
      return 0;
    }
    if (regcheck->parsed()) {
      apply_config_overrides(regcheck_args.config, regcheck);
      const RegularityReport report = check_regularity(regcheck_args.spec.build());
      nlohmann::ordered_json record;
      record["smoothness"] = report.smoothness;
      record["dominated"] = report.dominated;
      record["vanishing_integrals"] = report.vanishing_integrals;
      record["support_ok"] = report.support_ok;
      record["all_met"] = report.all_met();
      record["vanishing_first"] = report.vanishing_first;
      record["vanishing_second"] = report.vanishing_second;
      record["note"] = report.note;
      print_record(record, format, out);
      return 0;
    }
    if (plan_cmd->parsed()) {
      apply_config_overrides(plan_args.config, plan_cmd);
      PlanOptions options;
      options.psi_rule = plan_args.psi_rule == "plain" ? PsiRule::kPlain
                                                       : PsiRule::kFisherScaled;
      // Reporting a plan is side-effect free, so the phase-2 size guard that
      // protects actual runs is not applied here.
      options.enforce_min_phase2 = false;
      const InsertionPlan p = plan(plan_args.N, plan_args.epsilon, plan_args.zeta,
                                   plan_args.spec.build(), options);
      nlohmann::ordered_json record;
      record["N"] = p.N;
      record["epsilon"] = p.epsilon;
      record["zeta"] = p.zeta;
      record["c"] = p.c;
      record["psi"] = p.psi;
      record["rho_buffer"] = p.rho_buffer;
      record["rho_insert"] = p.rho_insert;
      print_record(record, format, out);
      return 0;
    }
    if (insert->parsed()) {
      apply_config_overrides(insert_args.config, insert);
      PlanOptions options;
      options.psi_rule = insert_args.psi_rule == "plain" ? PsiRule::kPlain
                                                         : PsiRule::kFisherScaled;
      const InsertionResult r =
          run_insertion(insert_args.spec.build(), insert_args.N,
                        insert_args.epsilon, insert_args.zeta, insert_args.seed,
                        options);
      nlohmann::ordered_json record;
      record["N"] = r.N;
      record["epsilon"] = r.epsilon;
      record["zeta"] = r.zeta;
      record["psi"] = r.psi;
      record["rho_insert"] = r.rho_insert;
      record["seed"] = r.seed;
      record["m"] = r.buffered_m;
      record["Nc"] = r.covert_inserted_Nc;
      record["No"] = r.overt_sent_No;
      record["Noc"] = r.total_second_phase_Noc;
      record["K"] = r.walk_steps_K;
      record["failed"] = r.failed;
      print_record(record, format, out);
      return 0;
    }
    if (timing->parsed()) {
      apply_config_overrides(timing_args.config, timing);
      PlanOptions options;
      options.psi_rule = timing_args.psi_rule == "plain" ? PsiRule::kPlain
                                                         : PsiRule::kFisherScaled;
      const TimingResult r =
          run_timing(timing_args.spec.build(), timing_args.N, timing_args.epsilon,
                     timing_args.zeta, timing_args.mu, timing_args.n,
                     timing_args.M, timing_args.seed, options);
      nlohmann::ordered_json record;
      record["N"] = r.N;
      record["epsilon"] = r.epsilon;
      record["zeta"] = r.zeta;
      record["mu"] = r.mu;
      record["n"] = r.n;
      record["M"] = r.M;
      record["seed"] = r.seed;
      record["psi"] = r.plan.psi;
      record["m"] = r.buffered_m;
      record["message"] = r.message;
      record["decoded"] = r.decoded;
      record["decoded_ok"] = r.decoded_ok;
      record["failed_buffer"] = r.failed_buffer;
      record["bits_sent"] = r.bits_sent;
      print_record(record, format, out);
      return 0;
    }
    if (detect->parsed()) {
      apply_config_overrides(detect_args.config, detect);
      const RenewalSpec spec = detect_args.spec.build();
      const RenewalSpec alt = detect_args.variant == "stretch"
                                  ? scale_stretch(spec, detect_args.rho)
                                  : scale_compress(spec, detect_args.rho);
      DetectorConfig dc;
      dc.alpha = detect_args.alpha;
      dc.n_obs = detect_args.n_obs;
      dc.lambda0 = rate(spec);
      dc.sigma2 = variance(spec);
      const ScalingVariant variant = detect_args.variant == "stretch"
                                         ? ScalingVariant::kStretch
                                         : ScalingVariant::kCompress;
      Detector test;
      if (detect_args.detector == "sum_threshold") {
        test = [dc, variant](const Eigen::ArrayXd& x) {
          return sum_threshold_test(x, dc, variant);
        };
      } else if (detect_args.detector == "lrt") {
        test = [spec, alt](const Eigen::ArrayXd& x) {
          return likelihood_ratio_test(x, spec, alt);
        };
      } else {
        std::vector<double> grid;
        for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) {
          const double r = detect_args.rho * f;
          if (r > 0.0 && r < 1.0) grid.push_back(r);
        }
        test = [spec, grid, variant](const Eigen::ArrayXd& x) {
          return glrt_grid_test(x, spec, grid, variant);
        };
      }
      const std::int64_t n_obs = detect_args.n_obs;
      const SampleGenerator gen0 = [spec, n_obs](std::uint64_t s) {
        return sample_interarrivals(spec, n_obs, s);
      };
      const SampleGenerator gen1 = [alt, n_obs](std::uint64_t s) {
        return sample_interarrivals(alt, n_obs, s);
      };
      const ErrorEstimate e =
          estimate_errors(test, gen0, gen1, detect_args.trials, detect_args.seed);
      nlohmann::ordered_json record;
      record["detector"] = detect_args.detector;
      record["variant"] = detect_args.variant;
      record["rho"] = detect_args.rho;
      record["n_obs"] = detect_args.n_obs;
      record["alpha"] = detect_args.alpha;
      record["trials"] = e.trials;
      record["seed"] = detect_args.seed;
      record["p_fa"] = e.p_fa;
      record["p_md"] = e.p_md;
      record["ci_halfwidth"] = e.ci_halfwidth;
      print_record(record, format, out);
      return 0;
    }
    if (capacity->parsed()) {
      apply_config_overrides(capacity_args.config, capacity);
      const CapacityBound b =
          capacity_bound(capacity_args.spec.build(), capacity_args.mu);
      if (format == "text") {
        out << fmt6f(b.value) << " nats/s" << (b.vacuous ? " (vacuous)" : "")
            << '\n';
      } else {
        nlohmann::ordered_json record;
        record["value"] = b.value;
        record["kl_penalty"] = b.kl_penalty;
        record["log_ratio_term"] = b.log_ratio_term;
        record["vacuous"] = b.vacuous;
        print_record(record, format, out);
      }
      return 0;
    }
    if (sweep->parsed()) {
      ExperimentConfig config = load_config(sweep_args.config);
      if (!sweep_args.output.empty()) config.output_path = sweep_args.output;
      if (config.output_path.empty()) {
        throw std::invalid_argument("sweep: no output_path in config or --output");
      }
      const std::vector<ResultRecord> records = run_sweep_to_file(config);
      out << records.size() << " records -> " << config.output_path << '\n';
      return 0;
    }
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const StabilityError& e) {
    err << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const RegularityError& e) {
    err << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "error: no subcommand\n";
  return 1;
}

}  // namespace covren
