// Command-line driver. Links against the C API only; all functionality lives
// in the shared library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prodtest.h"

namespace {

struct Options {
  std::uint32_t n = 2;
  std::uint32_t d = 2;
  std::uint32_t rounds = 2;
  double eps = 0.5;
  double delta = 0.1;
  std::uint64_t trials = 200;
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "json";
  unsigned threads = 1;
  bool timing = false;
  std::string pair = "haar-vs-mixed";
  std::string state = "maximally-mixed";
  bool inject_defect = false;
};

void add_common_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--n", opt.n, "number of qudit factors");
  cmd->add_option("--d", opt.d, "local dimension");
  cmd->add_option("--T", opt.rounds, "measurement rounds");
  cmd->add_option("--eps", opt.eps, "distance / accuracy parameter");
  cmd->add_option("--delta", opt.delta, "failure probability");
  cmd->add_option("--trials", opt.trials, "trials or samples");
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--out", opt.out, "output file (stdout when omitted)");
  cmd->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--threads", opt.threads, "worker threads (does not affect results)");
  cmd->add_flag("--timing", opt.timing, "embed wall times in the report");
}

int run_command(const std::string& command, const Options& opt) {
  nlohmann::json config{{"command", command}, {"n", opt.n},
                        {"d", opt.d},         {"T", opt.rounds},
                        {"eps", opt.eps},     {"delta", opt.delta},
                        {"trials", opt.trials}, {"seed", opt.seed},
                        {"out", opt.out},     {"format", opt.format},
                        {"threads", opt.threads}, {"timing", opt.timing},
                        {"pair", opt.pair},   {"state", opt.state},
                        {"inject_defect", opt.inject_defect}};
  char* output = nullptr;
  int exit_code = 0;
  const pt_status status = pt_run(config.dump().c_str(), &output, &exit_code);
  if (status != PT_OK) {
    std::cerr << "error: " << pt_last_error() << "\n";
    return status == PT_ERR_INVALID_ARGUMENT || status == PT_ERR_LIMIT ? 2 : 1;
  }
  if (opt.out.empty()) {
    std::cout << output;
  } else {
    std::ofstream file(opt.out, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot write " << opt.out << "\n";
      pt_buffer_free(output);
      return 2;
    }
    file << output;
  }
  pt_buffer_free(output);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-copy product-testing simulator and inequality checker"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pt_version()));

  Options opt;

  CLI::App* verify = app.add_subcommand("verify", "run every inequality suite on seeded instances");
  add_common_flags(verify, opt);
  verify->add_flag("--inject-defect", opt.inject_defect,
                   "feed one corrupted Gram matrix through the suite (test mode)");

  CLI::App* mp_test = app.add_subcommand(
      "mp-test", "paired accept-rate trials of the single-copy local product tester");
  add_common_flags(mp_test, opt);

  CLI::App* distinguish =
      app.add_subcommand("distinguish", "outcome-distribution TV distance between two ensembles");
  add_common_flags(distinguish, opt);
  distinguish->add_option("--pair", opt.pair, "ensemble pair")
      ->check(CLI::IsMember(
          {"haar-vs-mixed", "product-vs-mixed", "local-product-vs-mixed", "haar-vs-product"}));

  CLI::App* far_fraction = app.add_subcommand(
      "far-fraction", "fraction of Haar states close to a cut-product state");
  add_common_flags(far_fraction, opt);

  CLI::App* purity =
      app.add_subcommand("purity", "single-copy purity estimator on a built-in source");
  add_common_flags(purity, opt);
  purity->add_option("--state", opt.state, "source state")
      ->check(CLI::IsMember({"pure", "rank2", "maximally-mixed"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return run_command(app.get_subcommands().front()->get_name(), opt);
}
