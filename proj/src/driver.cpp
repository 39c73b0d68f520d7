#include "prodtest/driver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prodtest/bounds.hpp"
#include "prodtest/ensembles.hpp"
#include "prodtest/errors.hpp"
#include "prodtest/protocol.hpp"
#include "prodtest/qcore.hpp"
#include "prodtest/report.hpp"
#include "prodtest/verify.hpp"

#ifndef PRODTEST_VERSION_STRING
#define PRODTEST_VERSION_STRING "v0.0.0-unknown"
#endif

namespace prodtest::driver {

namespace {

using ensembles::EnsembleSpec;
using qcore::PureState;

nlohmann::json report_json(const ExperimentReport& r, bool timing) {
  nlohmann::json j = r;
  if (!timing) j["wall_time_ms"] = 0.0;
  return j;
}

nlohmann::json top_level(const RunConfig& config) {
  return nlohmann::json{{"schema", 1},
                        {"version", version_string()},
                        {"command", config.command},
                        {"config", config_to_json(config)}};
}

std::string render_csv_row(std::initializer_list<std::string> cells) {
  std::string row;
  for (const auto& c : cells) {
    if (!row.empty()) row += ',';
    row += c;
  }
  row += '\n';
  return row;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

struct TrialRecord {
  bool accept = false;
  std::vector<double> estimates;
};

struct PairedRates {
  double rate = 0;
  double radius = 0;
  std::uint64_t copies_per_trial = 0;
  std::vector<TrialRecord> records;
};

PairedRates run_tester_trials(const EnsembleSpec& spec, double eps, std::uint64_t trials,
                              std::uint64_t seed, std::uint64_t tag, unsigned threads) {
  PairedRates out;
  out.records.resize(trials);
  parallel_for(trials, threads, [&](std::uint64_t i) {
    RandomStream rng = RandomStream::derive(seed, (tag << 32) | i);
    const PureState psi = ensembles::sample_pure(spec, rng);
    protocol::StateCopySource source{psi};
    const protocol::TesterVerdict verdict = protocol::mp_test(source, eps, rng);
    out.records[i].accept = verdict.accept;
    out.records[i].estimates = verdict.per_site_estimates;
    if (i == 0) out.copies_per_trial = verdict.copies_used;
  });
  std::uint64_t accepted = 0;
  for (const auto& r : out.records) accepted += r.accept ? 1 : 0;
  out.rate = static_cast<double>(accepted) / static_cast<double>(trials);
  out.radius = binomial_radius(accepted, trials);
  return out;
}

RunResult cmd_verify(const RunConfig& config) {
  const verify::VerifySummary summary =
      verify::run_verification(config.seed, config.inject_defect, config.threads);
  RunResult result;
  result.passed = summary.all_pass;
  result.exit_code = summary.all_pass ? kExitOk : kExitFailed;
  if (config.format == "csv") {
    std::string csv = render_csv_row({"suite", "instances", "failures", "min_slack", "pass", "failure_kind"});
    for (const auto& s : summary.suites)
      csv += render_csv_row({s.name, std::to_string(s.instances), std::to_string(s.failures),
                             fmt(s.min_slack), s.pass ? "1" : "0", s.failure_kind});
    result.output = std::move(csv);
    return result;
  }
  nlohmann::json top = top_level(config);
  top["passed"] = summary.all_pass;
  top["suites"] = summary.suites;
  result.output = top.dump(2) + "\n";
  return result;
}

RunResult cmd_mp_test(const RunConfig& config) {
  if (config.trials == 0) throw std::invalid_argument("mp-test: trials must be positive");
  if (!(config.eps > 0.0 && config.eps <= ensembles::kFarEpsMax + 1e-12))
    throw std::invalid_argument("mp-test: eps must be in (0, 1/sqrt(2)]");
  const EnsembleSpec product = EnsembleSpec::multipartite_product_haar(config.n, config.d);
  const EnsembleSpec far = EnsembleSpec::far_from_mp(config.n, config.d, config.eps);
  const PairedRates complete =
      run_tester_trials(product, config.eps, config.trials, config.seed, 1, config.threads);
  const PairedRates sound =
      run_tester_trials(far, config.eps, config.trials, config.seed, 2, config.threads);

  const double bias = complete.rate - sound.rate;
  const bool passed =
      complete.rate >= 2.0 / 3.0 - complete.radius && sound.rate <= 1.0 / 3.0 + sound.radius;
  const double eps_purity = config.eps * config.eps * (1.0 - config.eps * config.eps) / config.n;

  RunResult result;
  result.passed = passed;
  result.exit_code = passed ? kExitOk : kExitFailed;
  if (config.format == "csv") {
    std::string csv = render_csv_row({"ensemble", "trial", "accept", "min_estimate", "site_estimates"});
    const auto emit = [&](const char* name, const PairedRates& rates) {
      for (std::size_t i = 0; i < rates.records.size(); ++i) {
        const auto& r = rates.records[i];
        std::string joined;
        for (double e : r.estimates) {
          if (!joined.empty()) joined += '|';
          joined += fmt(e);
        }
        csv += render_csv_row({name, std::to_string(i), r.accept ? "1" : "0",
                               fmt(*std::min_element(r.estimates.begin(), r.estimates.end())), joined});
      }
    };
    emit("multipartite_product_haar", complete);
    emit("far_from_mp", sound);
    result.output = std::move(csv);
    return result;
  }
  nlohmann::json top = top_level(config);
  top["passed"] = passed;
  top["completeness"] = {{"ensemble", product},
                         {"accept_rate", complete.rate},
                         {"confidence_radius", complete.radius},
                         {"target", "rate >= 2/3"}};
  top["soundness"] = {{"ensemble", far},
                      {"accept_rate", sound.rate},
                      {"confidence_radius", sound.radius},
                      {"target", "rate <= 1/3"}};
  top["bias"] = bias;
  top["thresholds"] = {{"eps_purity", eps_purity}, {"delta", 1.0 / (3.0 * config.n)}};
  top["copies_per_trial"] = complete.copies_per_trial;
  result.output = top.dump(2) + "\n";
  return result;
}

RunResult cmd_distinguish(const RunConfig& config) {
  if (config.trials == 0) throw std::invalid_argument("distinguish: trials must be positive");
  if (config.rounds == 0) throw std::invalid_argument("distinguish: T must be positive");
  const double total_dim = static_cast<double>(qcore::checked_pow(config.d, config.n));
  const double tt = static_cast<double>(config.rounds);

  EnsembleSpec spec_a = EnsembleSpec::global_haar(config.n, config.d);
  EnsembleSpec spec_b = EnsembleSpec::maximally_mixed(config.n, config.d);
  double bound = 0;
  if (config.pair == "haar-vs-mixed") {
    bound = tt * (tt - 1.0) / (2.0 * total_dim);
  } else if (config.pair == "product-vs-mixed") {
    spec_a = EnsembleSpec::bipartite_product_haar(config.n, config.d);
    const double small_block = std::pow(static_cast<double>(config.d), spec_a.cut.size());
    bound = tt * (tt - 1.0) / small_block;
  } else if (config.pair == "local-product-vs-mixed") {
    spec_a = EnsembleSpec::multipartite_product_haar(config.n, config.d);
    bound = config.n * tt * (tt - 1.0) / (2.0 * config.d);
  } else if (config.pair == "haar-vs-product") {
    spec_b = EnsembleSpec::bipartite_product_haar(config.n, config.d);
    const double small_block = std::pow(static_cast<double>(config.d), spec_b.cut.size());
    bound = tt * (tt - 1.0) / (2.0 * total_dim) + tt * (tt - 1.0) / small_block;
  } else {
    throw std::invalid_argument("distinguish: unknown ensemble pair '" + config.pair + "'");
  }

  RandomStream strategy_rng = RandomStream::derive(config.seed, 0x5f3);
  const protocol::Strategy strategy = protocol::Strategy::random_global_basis(
      static_cast<std::size_t>(total_dim), config.rounds, strategy_rng);
  const ExperimentReport report = protocol::empirical_tv(spec_a, spec_b, strategy, config.rounds,
                                                         config.trials, config.seed, config.threads);
  const bool passed = report.estimate <= bound + report.confidence_radius + bounds::kSlackTol;

  RunResult result;
  result.passed = passed;
  result.exit_code = passed ? kExitOk : kExitFailed;
  if (config.format == "csv") {
    std::string csv =
        render_csv_row({"pair", "rounds", "tv_estimate", "confidence_radius", "bound", "method"});
    csv += render_csv_row({config.pair, std::to_string(config.rounds), fmt(report.estimate),
                           fmt(report.confidence_radius), fmt(bound),
                           report.details.at("method").get<std::string>()});
    result.output = std::move(csv);
    return result;
  }
  nlohmann::json top = top_level(config);
  top["passed"] = passed;
  top["report"] = report_json(report, config.timing);
  top["bound"] = bound;
  result.output = top.dump(2) + "\n";
  return result;
}

RunResult cmd_far_fraction(const RunConfig& config) {
  if (config.trials == 0) throw std::invalid_argument("far-fraction: trials must be positive");
  if (!(config.eps > 0.0 && config.eps < 1.0))
    throw std::invalid_argument("far-fraction: eps must be in (0, 1)");
  const ExperimentReport report = ensembles::far_fraction_experiment(
      config.n, config.d, config.eps, config.trials, config.seed, config.threads);
  RunResult result;
  if (config.format == "csv") {
    std::string csv = render_csv_row(
        {"row", "cut", "estimate", "confidence_radius", "mean_lambda1", "max_lambda1", "frac_at_least_threshold"});
    csv += render_csv_row(
        {"summary", "", fmt(report.estimate), fmt(report.confidence_radius), "", "", ""});
    for (const auto& c : report.details.at("cuts")) {
      std::string cut_str;
      for (const auto& f : c.at("cut")) {
        if (!cut_str.empty()) cut_str += '|';
        cut_str += std::to_string(f.get<std::uint32_t>());
      }
      csv += render_csv_row({"cut", cut_str, "", "", fmt(c.at("mean_lambda1").get<double>()),
                             fmt(c.at("max_lambda1").get<double>()),
                             fmt(c.at("frac_at_least_threshold").get<double>())});
    }
    result.output = std::move(csv);
    return result;
  }
  nlohmann::json top = top_level(config);
  top["passed"] = true;
  top["report"] = report_json(report, config.timing);
  result.output = top.dump(2) + "\n";
  return result;
}

RunResult cmd_purity(const RunConfig& config) {
  if (config.trials == 0) throw std::invalid_argument("purity: trials must be positive");
  if (!(config.eps > 0.0 && config.eps < 1.0))
    throw std::invalid_argument("purity: eps must be in (0, 1)");
  if (!(config.delta > 0.0 && config.delta < 1.0))
    throw std::invalid_argument("purity: delta must be in (0, 1)");
  const std::size_t dim = config.d;
  if (dim < 2) throw std::invalid_argument("purity: dimension must be at least 2");

  qcore::Matrix m = qcore::Matrix::Zero(dim, dim);
  double truth = 0;
  if (config.state == "pure") {
    m(0, 0) = 1.0;
    truth = 1.0;
  } else if (config.state == "rank2") {
    m(0, 0) = 0.5;
    m(1, 1) = 0.5;
    truth = 0.5;
  } else if (config.state == "maximally-mixed") {
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0 / static_cast<double>(dim);
    truth = 1.0 / static_cast<double>(dim);
  } else {
    throw std::invalid_argument("purity: unknown state '" + config.state + "'");
  }
  const qcore::DensityMatrix rho(std::move(m), static_cast<std::uint32_t>(dim), 1);

  std::vector<double> estimates(config.trials);
  std::vector<std::uint64_t> copies(config.trials);
  parallel_for(config.trials, config.threads, [&](std::uint64_t i) {
    RandomStream rng = RandomStream::derive(config.seed, i);
    protocol::CopySource source{rho};
    const protocol::PurityEstimate est =
        protocol::estimate_purity_single_copy(source, config.eps, config.delta, rng);
    estimates[i] = est.value;
    copies[i] = est.copies_used;
  });
  double mean = 0;
  std::uint64_t within = 0;
  for (std::uint64_t i = 0; i < config.trials; ++i) {
    mean += estimates[i];
    if (std::abs(estimates[i] - truth) <= config.eps) ++within;
  }
  mean /= static_cast<double>(config.trials);
  const double frac_within = static_cast<double>(within) / static_cast<double>(config.trials);

  RunResult result;
  if (config.format == "csv") {
    std::string csv = render_csv_row({"run", "estimate", "abs_error", "within_eps", "copies"});
    for (std::uint64_t i = 0; i < config.trials; ++i)
      csv += render_csv_row({std::to_string(i), fmt(estimates[i]), fmt(std::abs(estimates[i] - truth)),
                             std::abs(estimates[i] - truth) <= config.eps ? "1" : "0",
                             std::to_string(copies[i])});
    result.output = std::move(csv);
    return result;
  }
  nlohmann::json top = top_level(config);
  top["passed"] = true;
  top["dimension"] = dim;
  top["state"] = config.state;
  top["true_purity"] = truth;
  top["mean_estimate"] = mean;
  top["fraction_within_eps"] = frac_within;
  top["copies_per_run"] = copies.empty() ? 0 : copies.front();
  result.output = top.dump(2) + "\n";
  return result;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.n = j.value("n", c.n);
  c.d = j.value("d", c.d);
  c.rounds = j.value("T", c.rounds);
  c.eps = j.value("eps", c.eps);
  c.delta = j.value("delta", c.delta);
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  c.out_path = j.value("out", c.out_path);
  c.format = j.value("format", c.format);
  c.threads = j.value("threads", c.threads);
  c.timing = j.value("timing", c.timing);
  c.pair = j.value("pair", c.pair);
  c.state = j.value("state", c.state);
  c.inject_defect = j.value("inject_defect", c.inject_defect);
  if (c.format != "json" && c.format != "csv")
    throw std::invalid_argument("format must be 'json' or 'csv'");
  if (c.threads == 0) c.threads = 1;
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{{"command", c.command}, {"n", c.n},
                        {"d", c.d},             {"T", c.rounds},
                        {"eps", c.eps},         {"delta", c.delta},
                        {"trials", c.trials},   {"seed", c.seed},
                        {"out", c.out_path},    {"format", c.format},
                        {"threads", c.threads}, {"timing", c.timing},
                        {"pair", c.pair},       {"state", c.state},
                        {"inject_defect", c.inject_defect}};
}

const char* version_string() { return PRODTEST_VERSION_STRING; }

RunResult run(const RunConfig& config) {
  if (config.command == "verify") return cmd_verify(config);
  if (config.command == "mp-test") return cmd_mp_test(config);
  if (config.command == "distinguish") return cmd_distinguish(config);
  if (config.command == "far-fraction") return cmd_far_fraction(config);
  if (config.command == "purity") return cmd_purity(config);
  throw std::invalid_argument("unknown command '" + config.command + "'");
}

}  // namespace prodtest::driver
