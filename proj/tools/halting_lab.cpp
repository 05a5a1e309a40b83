#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "halting/harness.hpp"

namespace {

using halting::ConfigError;
using halting::ExperimentConfig;
using halting::ResultBundle;
using halting::Study;

struct CommonOpts {
  std::string config, out_dir, formats;
  std::uint64_t seed = 0;
  int workers = 0;
  CLI::Option* o_config = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_formats = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_workers = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  c.o_config = sub->add_option("--config", c.config,
                               "JSON config file; its study field, when "
                               "present, must match the subcommand");
  c.o_seed = sub->add_option("--seed", c.seed, "master seed override");
  c.o_workers =
      sub->add_option("--workers", c.workers, "worker thread count override");
  c.o_out = sub->add_option("--out", c.out_dir, "output directory override");
  c.o_formats = sub->add_option(
      "--format", c.formats, "comma-separated output formats (csv,json)");
}

std::vector<std::string> split_formats(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

ExperimentConfig default_config(Study study) {
  ExperimentConfig cfg;
  cfg.study = study;
  if (study == Study::validate) {
    cfg.ensembles = {"LOE", "BE"};
    cfg.sizes = {50};
    cfg.ds = {0.5};
    cfg.num_samples = 200;
  }
  return cfg;
}

void apply_quick_preset(ExperimentConfig& cfg) {
  cfg.ensembles = {"LOE", "BE"};
  cfg.sizes = {30};
  cfg.ds = {0.5};
  cfg.num_samples = 40;
  cfg.quick = true;
}

void print_outputs(const ExperimentConfig& cfg) {
  const std::string stem = cfg.out_dir + "/" + halting::study_name(cfg.study);
  for (const auto& f : cfg.formats) {
    if (f == "csv") std::printf("wrote %s_samples.csv\n", stem.c_str());
    if (f == "json") std::printf("wrote %s_summary.json\n", stem.c_str());
  }
}

void print_totals(const ExperimentConfig& cfg, const ResultBundle& b) {
  const double secs = b.summary.at("timing").at("seconds").get<double>();
  std::printf("%s: runs=%ld included=%ld capped=%ld degenerate=%ld (%.1f s)\n",
              halting::study_name(cfg.study), b.total_runs, b.included,
              b.capped, b.degenerate, secs);
}

void print_validate_verdict(const ResultBundle& b) {
  const auto& cp = b.summary.at("cross_path");
  const long mism = cp.at("mismatches").get<long>();
  const long maxdiff = cp.at("max_tau_diff").get<long>();
  const double parseval = b.summary.at("parseval_max_dev").get<double>();
  const double trace = b.summary.at("qr_trace_max_rel_dev").get<double>();
  std::printf("cross-path halting agreement (|diff| <= 1): %s "
              "(mismatches=%ld, max diff=%ld)\n",
              mism == 0 ? "PASS" : "FAIL", mism, maxdiff);
  std::printf("projection weights sum to 1: %s (max dev %.3g)\n",
              parseval <= 1e-12 ? "PASS" : "FAIL", parseval);
  std::printf("closed-form QR error vs iterated rows: max rel dev %.3g\n",
              trace);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "halting-lab: halting-time experiments for QR, power, and inverse "
      "power iterations on random sample covariance matrices"};
  app.require_subcommand(1);

  // one option set per subcommand; a shared set would leave the stored
  // option pointers bound to whichever subcommand was added last
  std::map<std::string, CommonOpts> opts;
  bool quick = false;
  const std::pair<const char*, const char*> studies[] = {
      {"halting", "halting-time distributions under the small-residual stop"},
      {"gap-law", "extreme eigenvalue gaps and their rescaled law"},
      {"zeta", "log-gap centering constants"},
      {"deflation", "first off-diagonal block deflation times"},
      {"projections", "edge eigenvector projection statistics"},
      {"conditions", "regularity condition frequencies over s and p grids"},
      {"validate", "cross-checks of closed forms against direct iteration"}};
  for (const auto& [name, desc] : studies) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common(sub, opts[name]);
    if (std::string(name) == "validate")
      sub->add_flag("--quick", quick, "reduced preset: LOE/BE, N=30, 40 "
                                      "samples (overrides size fields)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Study study = halting::study_from_name(sub->get_name());
    const CommonOpts& common = opts.at(sub->get_name());

    ExperimentConfig cfg =
        common.o_config->count()
            ? ExperimentConfig::from_file(common.config, study)
            : default_config(study);
    if (common.o_seed->count()) cfg.master_seed = common.seed;
    if (common.o_workers->count()) cfg.workers = common.workers;
    if (common.o_out->count()) cfg.out_dir = common.out_dir;
    if (common.o_formats->count()) cfg.formats = split_formats(common.formats);
    if ((quick || cfg.quick) && study == Study::validate)
      apply_quick_preset(cfg);
    cfg.validate();

    ResultBundle bundle = halting::run_study(cfg);
    halting::emit(bundle, cfg);
    print_totals(cfg, bundle);
    if (study == Study::validate) print_validate_verdict(bundle);
    print_outputs(cfg);
    return halting::exit_code_for(bundle);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
