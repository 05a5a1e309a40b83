#include "halting/harness.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "halting/kernels.hpp"
#include "halting/mp_law.hpp"

namespace halting {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) { return format_double(x); }
std::string fmt(long x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "1" : "0"; }

void append_row(std::string& csv, const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) csv += ',';
    csv += cells[i];
  }
  csv += '\n';
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json quartiles_json(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  EmpiricalDistribution e(v);
  return json::array(
      {e.quantile(0.25), e.quantile(0.5), e.quantile(0.75)});
}

// One (ensemble, N, d) grid point; index fixes the RNG stream block.
struct Cell {
  EnsembleSpec spec;
  double d_config = 0;
  long index = 0;
};

std::vector<Cell> make_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  long idx = 0;
  for (const auto& name : cfg.ensembles)
    for (int n : cfg.sizes)
      for (double d : cfg.ds) {
        Cell c;
        c.spec = ensemble_from_name(name, n, d);
        c.d_config = d;
        c.index = idx++;
        cells.push_back(c);
      }
  return cells;
}

void apply_workers(const ExperimentConfig& cfg) {
  int w = cfg.workers;
  if (w <= 0) {
    if (const char* env = std::getenv("HALTING_LAB_WORKERS")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 1 || v > 4096)
        throw ConfigError("HALTING_LAB_WORKERS is not a valid worker count");
      w = static_cast<int>(v);
    }
  }
  if (w > 0) kernels::set_worker_count(w);
}

int checked_sample_count(const ExperimentConfig& cfg) {
  if (cfg.num_samples > INT_MAX)
    throw ConfigError("num_samples too large");
  return static_cast<int>(cfg.num_samples);
}

json convention_json(const RescaleConvention& conv) {
  return json{{"include_2pow", conv.include_2pow},
              {"d_exponent", conv.d_exponent}};
}

json cell_header_json(const Cell& cell) {
  return json{{"ensemble", cell.spec.name()},   {"beta", cell.spec.beta},
              {"N", cell.spec.N},               {"M", cell.spec.M()},
              {"d", cell.d_config},             {"d_N", cell.spec.d_N()}};
}

json zeta_json(const ZetaEstimate& z) {
  return json{{"qr", z.zeta_qr},     {"ip", z.zeta_ip},  {"p", z.zeta_p},
              {"se_qr", z.se_qr},    {"se_ip", z.se_ip}, {"se_p", z.se_p},
              {"samples", z.samples}};
}

double zeta_for(Algorithm a, const ZetaEstimate& z) {
  switch (a) {
    case Algorithm::QR: return z.zeta_qr;
    case Algorithm::P: return z.zeta_p;
    default: return z.zeta_ip;
  }
}

double edge_for(Algorithm a, double lam_minus, double lam_plus) {
  return a == Algorithm::P ? lam_plus : lam_minus;
}

// KS matrix over a family of sample sets; null when a set is empty.
json ks_matrix_json(const std::vector<const std::vector<double>*>& sets) {
  const size_t k = sets.size();
  std::vector<std::optional<EmpiricalDistribution>> dists(k);
  for (size_t i = 0; i < k; ++i)
    if (!sets[i]->empty()) dists[i].emplace(*sets[i]);
  json m = json::array();
  for (size_t i = 0; i < k; ++i) {
    json row = json::array();
    for (size_t j = 0; j < k; ++j) {
      if (i == j && dists[i])
        row.push_back(0.0);
      else if (dists[i] && dists[j])
        row.push_back(ks_distance(*dists[i], *dists[j]));
      else
        row.push_back(nullptr);
    }
    m.push_back(row);
  }
  return m;
}

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void attach_common(json& summary, const ExperimentConfig& cfg,
                   const Timer& timer, const ResultBundle& b) {
  summary["study"] = study_name(cfg.study);
  summary["config"] = cfg.echo();
  summary["convention"] = convention_json(cfg.rescale);
  summary["totals"] = json{{"runs", b.total_runs},
                           {"included", b.included},
                           {"capped", b.capped},
                           {"degenerate", b.degenerate}};
  // run environment, not experiment definition; results never depend on it
  summary["timing"] =
      json{{"seconds", timer.seconds()}, {"workers", kernels::worker_count()}};
}

// ---------------------------------------------------------------- halting

struct AlgOut {
  bool ok = false, capped = false, degenerate = false;
  long tau = -1;
  double T = kNaN, t_star = kNaN, true_err = kNaN, rescaled = kNaN;
  bool in_R = false;
};

struct HaltOut {
  bool valid = false;  // sample-level failure -> all algorithms degenerate
  AlgOut alg[3];       // indexed by Algorithm enum value
  bool in_U = false, in_L = false, scaling_ok = false;
  double gap_lo = 0, gap_hi = 0;
};

int alg_slot(Algorithm a) { return static_cast<int>(a); }

template <typename T>
HaltOut halting_sample(const Cell& cell, const ExperimentConfig& cfg,
                       std::uint64_t stream,
                       const std::vector<double>& quantiles, double eps,
                       long cap) {
  const EnsembleSpec& spec = cell.spec;
  HaltOut out;
  RngStream rng(cfg.master_seed, stream);
  Mat<T> v = sample_entry_matrix<T>(spec, rng);
  Mat<T> h = build_scm(v);
  std::vector<T> vec = sample_unit_vector<T>(spec.N, rng);

  SpectralProfile prof = spectral_profile(h, vec);
  const int n = spec.N;
  out.gap_lo = prof.eigenvalues[1] - prof.eigenvalues[0];
  out.gap_hi = prof.eigenvalues[n - 1] - prof.eigenvalues[n - 2];

  SpectralCoefficients c_qr, c_ip, c_p;
  try {
    c_qr = coefficients_for_qr(prof);
    c_ip = coefficients_for_projection(prof);
    c_p = inverted_reversed(c_ip);
  } catch (const std::invalid_argument&) {
    return out;  // nonpositive or unnormalized spectrum: skip the sample
  }
  out.valid = true;

  ConditionFlags f_qr = check_conditions(prof.eigenvalues, prof.beta_qr,
                                         quantiles, eps, cfg.cond);
  ConditionFlags f_proj = check_conditions(prof.eigenvalues, prof.beta_proj,
                                           quantiles, eps, cfg.cond);
  out.in_U = f_qr.in_U;
  out.in_L = f_qr.in_L;
  out.scaling_ok = f_qr.scaling_ok;

  for (Algorithm a : cfg.algorithms) {
    AlgOut& ao = out.alg[alg_slot(a)];
    ao.in_R = a == Algorithm::QR ? f_qr.in_R : f_proj.in_R;
    const SpectralCoefficients& c = a == Algorithm::QR ? c_qr
                                    : a == Algorithm::P ? c_p
                                                        : c_ip;
    if (c.degenerate) {
      ao.degenerate = true;
      continue;
    }
    const auto err = [&](double t) {
      switch (a) {
        case Algorithm::QR: return e_qr(c, t).total;
        case Algorithm::P: return e_p(c, t).total;
        default: return e_ip(c, t).total;
      }
    };
    ContinuousHalt ch = halting_time_continuous(err, eps, cap);
    if (ch.capped) {
      ao.capped = true;
      continue;
    }
    ao.T = ch.T;
    ao.tau = static_cast<long>(std::ceil(ch.T));
    switch (a) {
      case Algorithm::QR:
        ao.t_star = t_star_qr(c_qr, n, cfg.alpha);
        ao.true_err = true_error(Algorithm::QR, c_qr,
                                 static_cast<double>(ao.tau));
        break;
      case Algorithm::P:
        ao.t_star = t_star_ip(c_p, n, cfg.alpha);  // = t_star_p on original
        ao.true_err = true_error(Algorithm::P, c_ip,
                                 static_cast<double>(ao.tau));
        break;
      default:
        ao.t_star = t_star_ip(c_ip, n, cfg.alpha);
        ao.true_err = true_error(Algorithm::IP, c_ip,
                                 static_cast<double>(ao.tau));
    }

    if (!cfg.spectral_path) {
      HaltingRecord rec;
      switch (a) {
        case Algorithm::QR: rec = run_qr_halting(h, eps, cap); break;
        case Algorithm::P: rec = run_power(h, vec, eps, cap); break;
        default: rec = run_inverse_power(h, vec, eps, cap);
      }
      if (rec.capped) {
        ao.capped = true;
        continue;
      }
      ao.tau = rec.tau;
    }
    ao.ok = true;
  }
  return out;
}

}  // namespace

ResultBundle run_halting_study(const ExperimentConfig& cfg) {
  Timer timer;
  apply_workers(cfg);
  const int num = checked_sample_count(cfg);
  const auto cells = make_cells(cfg);

  ResultBundle bundle;
  bundle.csv =
      "sample_index,ensemble,beta,N,M,d_N,algorithm,alpha,tau,T_continuous,"
      "T_star,true_error,rescaled_tau,in_R,in_U,in_L\n";

  json cells_json = json::array();
  // (cell, algorithm) -> rescaled samples, for the KS tables
  std::map<std::pair<long, int>, std::vector<double>> rescaled_sets;

  for (const auto& cell : cells) {
    const EnsembleSpec& spec = cell.spec;
    const double eps = epsilon_for(spec.N, cfg.alpha);
    const long cap =
        cfg.cap > 0 ? cfg.cap : default_iteration_cap(spec.N, cfg.alpha);
    const auto quantiles = mp_quantiles(spec.d_N(), spec.N);
    const auto [lam_minus, lam_plus] = mp_edges(spec.d_N());

    std::vector<HaltOut> outs(num);
    const std::uint64_t base =
        static_cast<std::uint64_t>(cell.index) * cfg.num_samples;
    kernels::parallel_for_samples(num, [&](int i) {
      const std::uint64_t stream = base + static_cast<std::uint64_t>(i);
      try {
        outs[i] = spec.beta == 1
                      ? halting_sample<double>(cell, cfg, stream, quantiles,
                                               eps, cap)
                      : halting_sample<cplx>(cell, cfg, stream, quantiles,
                                             eps, cap);
      } catch (const std::exception&) {
        outs[i] = {};  // exceptions must not escape the worker threads
      }
    });

    std::vector<double> gap_lo, gap_hi;
    for (const auto& o : outs)
      if (o.valid && o.gap_lo > 0 && o.gap_hi > 0) {
        gap_lo.push_back(o.gap_lo);
        gap_hi.push_back(o.gap_hi);
      }
    ZetaEstimate zeta;
    const bool have_zeta = gap_lo.size() >= 2;
    if (have_zeta)
      zeta = estimate_zeta(gap_lo, gap_hi, spec.N, spec.d_N());

    json cell_json = cell_header_json(cell);
    cell_json["epsilon"] = eps;
    cell_json["cap"] = cap;
    cell_json["zeta"] = have_zeta ? zeta_json(zeta) : json(nullptr);
    json algs_json;

    for (Algorithm a : cfg.algorithms) {
      const int slot = alg_slot(a);
      const double lam_edge = edge_for(a, lam_minus, lam_plus);
      std::vector<double> taus, rescaled;
      long capped = 0, degenerate = 0;
      for (auto& o : outs) {
        AlgOut& ao = o.alg[slot];
        if (!o.valid || ao.degenerate) {
          ++degenerate;
          continue;
        }
        if (ao.capped) {
          ++capped;
          continue;
        }
        if (have_zeta) {
          ao.rescaled = rescale_halting(static_cast<double>(ao.tau), spec.N,
                                        eps, lam_edge, spec.d_N(),
                                        zeta_for(a, zeta), cfg.rescale);
          rescaled.push_back(ao.rescaled);
        }
        taus.push_back(static_cast<double>(ao.tau));
      }
      const long included = static_cast<long>(taus.size());
      bundle.total_runs += cfg.num_samples;
      bundle.included += included;
      bundle.capped += capped;
      bundle.degenerate += degenerate;
      rescaled_sets[{cell.index, slot}] = rescaled;

      algs_json[algorithm_name(a)] =
          json{{"num_samples", cfg.num_samples},
               {"included", included},
               {"capped", capped},
               {"degenerate", degenerate},
               {"tau_mean", mean_of(taus)},
               {"tau_variance", variance_of(taus)},
               {"tau_quartiles", quartiles_json(taus)},
               {"rescaled_quartiles", quartiles_json(rescaled)}};
    }
    cell_json["algorithms"] = algs_json;
    cells_json.push_back(cell_json);

    for (int i = 0; i < num; ++i) {
      const HaltOut& o = outs[i];
      for (Algorithm a : cfg.algorithms) {
        const AlgOut& ao = o.alg[alg_slot(a)];
        if (!ao.ok) continue;
        append_row(bundle.csv,
                   {fmt(i), spec.name(), fmt(spec.beta), fmt(spec.N),
                    fmt(spec.M()), fmt(spec.d_N()), algorithm_name(a),
                    fmt(cfg.alpha), fmt(ao.tau), fmt(ao.T), fmt(ao.t_star),
                    fmt(ao.true_err), fmt(ao.rescaled), fmt(ao.in_R),
                    fmt(o.in_U), fmt(o.in_L)});
      }
    }
  }

  // pairwise KS across ensembles at fixed (N, d, algorithm)
  json ks_ens = json::array();
  for (int n : cfg.sizes)
    for (double d : cfg.ds)
      for (Algorithm a : cfg.algorithms) {
        std::vector<const std::vector<double>*> sets;
        for (const auto& cell : cells)
          if (cell.spec.N == n && cell.d_config == d)
            sets.push_back(&rescaled_sets[{cell.index, alg_slot(a)}]);
        ks_ens.push_back(json{{"N", n},
                              {"d", d},
                              {"algorithm", algorithm_name(a)},
                              {"ensembles", cfg.ensembles},
                              {"matrix", ks_matrix_json(sets)}});
      }

  // pairwise KS across algorithms within one cell
  json ks_alg = json::array();
  for (const auto& cell : cells) {
    std::vector<const std::vector<double>*> sets;
    json names = json::array();
    for (Algorithm a : cfg.algorithms) {
      sets.push_back(&rescaled_sets[{cell.index, alg_slot(a)}]);
      names.push_back(algorithm_name(a));
    }
    ks_alg.push_back(json{{"ensemble", cell.spec.name()},
                          {"N", cell.spec.N},
                          {"d", cell.d_config},
                          {"algorithms", names},
                          {"matrix", ks_matrix_json(sets)}});
  }

  bundle.summary["cells"] = cells_json;
  bundle.summary["ks_ensembles"] = ks_ens;
  bundle.summary["ks_algorithms"] = ks_alg;
  attach_common(bundle.summary, cfg, timer, bundle);
  return bundle;
}

// ---------------------------------------------------------------- gap law

namespace {

struct GapOut {
  bool valid = false;
  ExtremeEigs ex = {};
};

}  // namespace

ResultBundle run_gap_law_study(const ExperimentConfig& cfg) {
  Timer timer;
  apply_workers(cfg);
  const int num = checked_sample_count(cfg);
  const auto cells = make_cells(cfg);
  const bool want_lower = cfg.edge == "lower" || cfg.edge == "both";
  const bool want_upper = cfg.edge == "upper" || cfg.edge == "both";

  ResultBundle bundle;
  bundle.csv =
      "sample_index,ensemble,beta,N,M,d_N,edge,eig1,eig2,eig3,xi1,xi2,xi3,"
      "gap,rescaled_gap\n";

  json cells_json = json::array();
  std::map<std::pair<long, int>, std::vector<double>> rescaled_sets;

  for (const auto& cell : cells) {
    const EnsembleSpec& spec = cell.spec;
    const bool fast = cfg.fast && spec.law == EntryLaw::gaussian;
    const auto [lam_minus, lam_plus] = mp_edges(spec.d_N());
    const double n23 = std::pow(static_cast<double>(spec.N), 2.0 / 3.0);

    std::vector<GapOut> outs(num);
    const std::uint64_t base =
        static_cast<std::uint64_t>(cell.index) * cfg.num_samples;
    kernels::parallel_for_samples(num, [&](int i) {
      try {
        RngStream rng(cfg.master_seed, base + static_cast<std::uint64_t>(i));
        GapOut o;
        o.ex = fast ? sample_extreme_eigs_bidiagonal(spec, rng)
                    : sample_extreme_eigs_dense(spec, rng);
        o.valid = true;
        outs[i] = o;
      } catch (const std::exception&) {
        outs[i] = {};
      }
    });

    json cell_json = cell_header_json(cell);
    json edges_json;
    for (int e = 0; e < 2; ++e) {
      const Edge edge = e == 0 ? Edge::lower : Edge::upper;
      if (edge == Edge::lower && !want_lower) continue;
      if (edge == Edge::upper && !want_upper) continue;
      const double lam_edge = edge == Edge::lower ? lam_minus : lam_plus;
      std::vector<double> gaps, rescaled;
      long degenerate = 0;
      for (int i = 0; i < num; ++i) {
        const GapOut& o = outs[i];
        const double* eigs = edge == Edge::lower ? o.ex.low : o.ex.high;
        const double gap =
            edge == Edge::lower ? eigs[1] - eigs[0] : eigs[2] - eigs[1];
        if (!o.valid || gap <= 0) {
          ++degenerate;
          continue;
        }
        const double r =
            rescale_gap(gap, spec.N, lam_edge, spec.d_N(), cfg.rescale);
        gaps.push_back(gap);
        rescaled.push_back(r);
        append_row(bundle.csv,
                   {fmt(i), spec.name(), fmt(spec.beta), fmt(spec.N),
                    fmt(spec.M()), fmt(spec.d_N()),
                    edge == Edge::lower ? "lower" : "upper", fmt(eigs[0]),
                    fmt(eigs[1]), fmt(eigs[2]),
                    fmt(n23 * (eigs[0] - lam_edge)),
                    fmt(n23 * (eigs[1] - lam_edge)),
                    fmt(n23 * (eigs[2] - lam_edge)), fmt(gap), fmt(r)});
      }
      bundle.total_runs += cfg.num_samples;
      bundle.included += static_cast<long>(gaps.size());
      bundle.degenerate += degenerate;
      rescaled_sets[{cell.index, e}] = rescaled;
      edges_json[edge == Edge::lower ? "lower" : "upper"] =
          json{{"num_samples", cfg.num_samples},
               {"included", static_cast<long>(gaps.size())},
               {"degenerate", degenerate},
               {"fast_path", fast},
               {"gap_quartiles", quartiles_json(gaps)},
               {"rescaled_quartiles", quartiles_json(rescaled)}};
    }
    cell_json["edges"] = edges_json;
    cells_json.push_back(cell_json);
  }

  json ks_ens = json::array();
  for (int n : cfg.sizes)
    for (double d : cfg.ds)
      for (int e = 0; e < 2; ++e) {
        if (e == 0 && !want_lower) continue;
        if (e == 1 && !want_upper) continue;
        std::vector<const std::vector<double>*> sets;
        for (const auto& cell : cells)
          if (cell.spec.N == n && cell.d_config == d)
            sets.push_back(&rescaled_sets[{cell.index, e}]);
        ks_ens.push_back(json{{"N", n},
                              {"d", d},
                              {"edge", e == 0 ? "lower" : "upper"},
                              {"ensembles", cfg.ensembles},
                              {"matrix", ks_matrix_json(sets)}});
      }

  json ks_edges = json::array();
  if (want_lower && want_upper)
    for (const auto& cell : cells) {
      const auto& lo = rescaled_sets[{cell.index, 0}];
      const auto& hi = rescaled_sets[{cell.index, 1}];
      json v = nullptr;
      if (!lo.empty() && !hi.empty())
        v = ks_distance(EmpiricalDistribution(lo), EmpiricalDistribution(hi));
      ks_edges.push_back(json{{"ensemble", cell.spec.name()},
                              {"N", cell.spec.N},
                              {"d", cell.d_config},
                              {"ks_lower_upper", v}});
    }

  bundle.summary["cells"] = cells_json;
  bundle.summary["ks_ensembles"] = ks_ens;
  bundle.summary["ks_edges"] = ks_edges;
  attach_common(bundle.summary, cfg, timer, bundle);
  return bundle;
}

// ------------------------------------------------------------------- zeta

ResultBundle run_zeta_study(const ExperimentConfig& cfg) {
  Timer timer;
  apply_workers(cfg);
  const int num = checked_sample_count(cfg);
  const auto cells = make_cells(cfg);

  ResultBundle bundle;
  bundle.csv = "sample_index,ensemble,beta,N,M,d_N,lower_gap,upper_gap\n";
  json cells_json = json::array();

  for (const auto& cell : cells) {
    const EnsembleSpec& spec = cell.spec;
    const bool fast = cfg.fast && spec.law == EntryLaw::gaussian;

    std::vector<GapOut> outs(num);
    const std::uint64_t base =
        static_cast<std::uint64_t>(cell.index) * cfg.num_samples;
    kernels::parallel_for_samples(num, [&](int i) {
      try {
        RngStream rng(cfg.master_seed, base + static_cast<std::uint64_t>(i));
        GapOut o;
        o.ex = fast ? sample_extreme_eigs_bidiagonal(spec, rng)
                    : sample_extreme_eigs_dense(spec, rng);
        o.valid = true;
        outs[i] = o;
      } catch (const std::exception&) {
        outs[i] = {};
      }
    });

    std::vector<double> lo, hi;
    long degenerate = 0;
    for (int i = 0; i < num; ++i) {
      const GapOut& o = outs[i];
      const double gl = o.ex.low[1] - o.ex.low[0];
      const double gh = o.ex.high[2] - o.ex.high[1];
      if (!o.valid || gl <= 0 || gh <= 0) {
        ++degenerate;
        continue;
      }
      lo.push_back(gl);
      hi.push_back(gh);
      append_row(bundle.csv,
                 {fmt(i), spec.name(), fmt(spec.beta), fmt(spec.N),
                  fmt(spec.M()), fmt(spec.d_N()), fmt(gl), fmt(gh)});
    }
    bundle.total_runs += cfg.num_samples;
    bundle.included += static_cast<long>(lo.size());
    bundle.degenerate += degenerate;

    json cell_json = cell_header_json(cell);
    cell_json["fast_path"] = fast;
    cell_json["zeta"] = lo.size() >= 2
                            ? zeta_json(estimate_zeta(lo, hi, spec.N,
                                                      spec.d_N()))
                            : json(nullptr);
    cells_json.push_back(cell_json);
  }

  bundle.summary["cells"] = cells_json;
  attach_common(bundle.summary, cfg, timer, bundle);
  return bundle;
}

// -------------------------------------------------------------- deflation

namespace {

struct DefOut {
  bool valid = false, capped = false;
  long t_def = -1;
  int k_hat = -1;
};

template <typename T>
DefOut deflation_sample(const EnsembleSpec& spec, const ExperimentConfig& cfg,
                        std::uint64_t stream, double eps, long cap) {
  DefOut out;
  RngStream rng(cfg.master_seed, stream);
  Mat<T> v = sample_entry_matrix<T>(spec, rng);
  Mat<T> h = build_scm(v);
  try {
    DeflationRecord rec = deflation_times(h, eps, cap, true);
    out.valid = true;
    out.capped = rec.capped;
    out.t_def = rec.t_def;
    out.k_hat = rec.k_hat;
  } catch (const std::exception&) {
    out.valid = false;  // singular iterate; count as degenerate
  }
  return out;
}

}  // namespace

ResultBundle run_deflation_study(const ExperimentConfig& cfg) {
  Timer timer;
  apply_workers(cfg);
  const int num = checked_sample_count(cfg);
  const auto cells = make_cells(cfg);

  ResultBundle bundle;
  bundle.csv = "sample_index,ensemble,beta,N,M,d_N,alpha,t_def,k_hat\n";
  json cells_json = json::array();
  std::map<long, std::vector<double>> normalized_sets;

  for (const auto& cell : cells) {
    const EnsembleSpec& spec = cell.spec;
    const double eps = epsilon_for(spec.N, cfg.alpha);
    const long cap =
        cfg.cap > 0 ? cfg.cap : default_iteration_cap(spec.N, cfg.alpha);

    std::vector<DefOut> outs(num);
    const std::uint64_t base =
        static_cast<std::uint64_t>(cell.index) * cfg.num_samples;
    kernels::parallel_for_samples(num, [&](int i) {
      const std::uint64_t stream = base + static_cast<std::uint64_t>(i);
      try {
        outs[i] = spec.beta == 1
                      ? deflation_sample<double>(spec, cfg, stream, eps, cap)
                      : deflation_sample<cplx>(spec, cfg, stream, eps, cap);
      } catch (const std::exception&) {
        outs[i] = {};
      }
    });

    std::vector<double> t_defs;
    std::map<int, long> k_freq;
    long capped = 0, degenerate = 0;
    for (int i = 0; i < num; ++i) {
      const DefOut& o = outs[i];
      if (!o.valid) {
        ++degenerate;
        continue;
      }
      if (o.capped || o.t_def < 0) {
        ++capped;
        continue;
      }
      t_defs.push_back(static_cast<double>(o.t_def));
      ++k_freq[o.k_hat];
      append_row(bundle.csv,
                 {fmt(i), spec.name(), fmt(spec.beta), fmt(spec.N),
                  fmt(spec.M()), fmt(spec.d_N()), fmt(cfg.alpha),
                  fmt(o.t_def), fmt(o.k_hat)});
    }
    bundle.total_runs += cfg.num_samples;
    bundle.included += static_cast<long>(t_defs.size());
    bundle.capped += capped;
    bundle.degenerate += degenerate;

    json freq_json;
    int k_mode = -1;
    long best = -1;
    for (const auto& [k, c] : k_freq) {
      freq_json[std::to_string(k)] = c;
      if (c >= best) {  // ties resolve to the largest k
        best = c;
        k_mode = k;
      }
    }
    if (capped > 0) freq_json["capped"] = capped;

    json norm_json = nullptr;
    try {
      auto normalized = normalize_mean_var(t_defs);
      normalized_sets[cell.index] = normalized;
      norm_json = quartiles_json(normalized);
    } catch (const std::invalid_argument&) {
      normalized_sets[cell.index] = {};
    }

    json cell_json = cell_header_json(cell);
    cell_json["epsilon"] = eps;
    cell_json["num_samples"] = cfg.num_samples;
    cell_json["included"] = static_cast<long>(t_defs.size());
    cell_json["capped"] = capped;
    cell_json["degenerate"] = degenerate;
    cell_json["t_def_mean"] = mean_of(t_defs);
    cell_json["t_def_variance"] = variance_of(t_defs);
    cell_json["t_def_quartiles"] = quartiles_json(t_defs);
    cell_json["k_hat_freq"] = freq_json;
    cell_json["k_hat_mode"] = k_mode;
    cell_json["normalized_quartiles"] = norm_json;
    cells_json.push_back(cell_json);
  }

  json ks_ens = json::array();
  for (int n : cfg.sizes)
    for (double d : cfg.ds) {
      std::vector<const std::vector<double>*> sets;
      for (const auto& cell : cells)
        if (cell.spec.N == n && cell.d_config == d)
          sets.push_back(&normalized_sets[cell.index]);
      ks_ens.push_back(json{{"N", n},
                            {"d", d},
                            {"ensembles", cfg.ensembles},
                            {"matrix", ks_matrix_json(sets)}});
    }

  bundle.summary["cells"] = cells_json;
  bundle.summary["ks_ensembles"] = ks_ens;
  attach_common(bundle.summary, cfg, timer, bundle);
  return bundle;
}

// ------------------------------------------------------------ projections

namespace {

struct ProjOut {
  bool valid = false;
  double val[4] = {kNaN, kNaN, kNaN, kNaN};  // j in {1, 2, N-1, N}
  bool deloc = false, floor = false;         // rigidity items 1 and 2
};

template <typename T>
ProjOut projection_sample(const EnsembleSpec& spec,
                          const ExperimentConfig& cfg, std::uint64_t stream,
                          const std::vector<double>& quantiles, double eps) {
  ProjOut out;
  RngStream rng(cfg.master_seed, stream);
  Mat<T> v = sample_entry_matrix<T>(spec, rng);
  Mat<T> h = build_scm(v);
  std::vector<T> vec = sample_unit_vector<T>(spec.N, rng);
  SpectralProfile prof = spectral_profile(h, vec);
  const int n = spec.N;
  const double root_n = std::sqrt(static_cast<double>(n));
  out.val[0] = root_n * prof.beta_proj[0];
  out.val[1] = root_n * prof.beta_proj[1];
  out.val[2] = root_n * prof.beta_proj[n - 2];
  out.val[3] = root_n * prof.beta_proj[n - 1];
  ConditionFlags f = check_conditions(prof.eigenvalues, prof.beta_proj,
                                      quantiles, eps, cfg.cond);
  out.deloc = f.r_items[0];
  out.floor = f.r_items[1];
  out.valid = true;
  return out;
}

double half_normal_cdf(double x) {
  return x <= 0 ? 0.0 : std::erf(x * M_SQRT1_2);
}

double rayleigh_cdf(double x) {
  return x <= 0 ? 0.0 : 1.0 - std::exp(-x * x);
}

}  // namespace

ResultBundle run_projection_study(const ExperimentConfig& cfg) {
  Timer timer;
  apply_workers(cfg);
  const int num = checked_sample_count(cfg);
  const auto cells = make_cells(cfg);

  ResultBundle bundle;
  bundle.csv = "sample_index,ensemble,beta,N,M,d_N,j,sqrt_n_beta\n";
  json cells_json = json::array();

  for (const auto& cell : cells) {
    const EnsembleSpec& spec = cell.spec;
    const double eps = epsilon_for(spec.N, cfg.alpha);
    const auto quantiles = mp_quantiles(spec.d_N(), spec.N);
    const int js[4] = {1, 2, spec.N - 1, spec.N};

    std::vector<ProjOut> outs(num);
    const std::uint64_t base =
        static_cast<std::uint64_t>(cell.index) * cfg.num_samples;
    kernels::parallel_for_samples(num, [&](int i) {
      const std::uint64_t stream = base + static_cast<std::uint64_t>(i);
      try {
        outs[i] = spec.beta == 1
                      ? projection_sample<double>(spec, cfg, stream,
                                                  quantiles, eps)
                      : projection_sample<cplx>(spec, cfg, stream, quantiles,
                                                eps);
      } catch (const std::exception&) {
        outs[i] = {};
      }
    });

    std::vector<double> vals[4];
    long deloc_hits = 0, floor_hits = 0, degenerate = 0;
    for (int i = 0; i < num; ++i) {
      const ProjOut& o = outs[i];
      if (!o.valid) {
        ++degenerate;
        continue;
      }
      for (int q = 0; q < 4; ++q) {
        vals[q].push_back(o.val[q]);
        append_row(bundle.csv, {fmt(i), spec.name(), fmt(spec.beta),
                                fmt(spec.N), fmt(spec.M()), fmt(spec.d_N()),
                                fmt(js[q]), fmt(o.val[q])});
      }
      deloc_hits += o.deloc;
      floor_hits += o.floor;
    }
    const long included = static_cast<long>(vals[0].size());
    bundle.total_runs += cfg.num_samples;
    bundle.included += included;
    bundle.degenerate += degenerate;

    double (*ref)(double) = spec.beta == 1 ? half_normal_cdf : rayleigh_cdf;
    json per_j;
    for (int q = 0; q < 4; ++q) {
      json e = json{{"quartiles", quartiles_json(vals[q])}, {"ks", nullptr}};
      if (!vals[q].empty())
        e["ks"] = ks_distance_to_cdf(EmpiricalDistribution(vals[q]), ref);
      per_j[std::to_string(js[q])] = e;
    }

    json cell_json = cell_header_json(cell);
    cell_json["num_samples"] = cfg.num_samples;
    cell_json["included"] = included;
    cell_json["degenerate"] = degenerate;
    cell_json["reference"] = spec.beta == 1 ? "half_normal" : "rayleigh";
    cell_json["projections"] = per_j;
    cell_json["delocalization_freq"] =
        included ? static_cast<double>(deloc_hits) / included : kNaN;
    cell_json["weight_floor_freq"] =
        included ? static_cast<double>(floor_hits) / included : kNaN;
    cells_json.push_back(cell_json);
  }

  bundle.summary["cells"] = cells_json;
  attach_common(bundle.summary, cfg, timer, bundle);
  return bundle;
}

// ------------------------------------------------------------- conditions

namespace {

struct CondOut {
  bool valid = false;
  std::vector<std::uint8_t> in_R;        // per s
  std::vector<std::uint8_t> in_U, in_L;  // per p
  bool scaling_ok = false;
};

template <typename T>
CondOut conditions_sample(const EnsembleSpec& spec,
                          const ExperimentConfig& cfg, std::uint64_t stream,
                          const std::vector<double>& quantiles, double eps) {
  CondOut out;
  RngStream rng(cfg.master_seed, stream);
  Mat<T> v = sample_entry_matrix<T>(spec, rng);
  Mat<T> h = build_scm(v);
  std::vector<T> vec = sample_unit_vector<T>(spec.N, rng);
  SpectralProfile prof = spectral_profile(h, vec);

  out.in_R.resize(cfg.s_grid.size());
  for (size_t si = 0; si < cfg.s_grid.size(); ++si) {
    ConditionParams params = cfg.cond;
    params.s = cfg.s_grid[si];
    ConditionFlags f = check_conditions(prof.eigenvalues, prof.beta_qr,
                                        quantiles, eps, params);
    out.in_R[si] = f.in_R;
    if (si == 0) out.scaling_ok = f.scaling_ok;
  }
  out.in_U.resize(cfg.p_grid.size());
  out.in_L.resize(cfg.p_grid.size());
  for (size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
    ConditionParams params = cfg.cond;
    params.p = cfg.p_grid[pi];
    ConditionFlags f = check_conditions(prof.eigenvalues, prof.beta_qr,
                                        quantiles, eps, params);
    out.in_U[pi] = f.in_U;
    out.in_L[pi] = f.in_L;
  }
  out.valid = true;
  return out;
}

}  // namespace

ResultBundle run_conditions_study(const ExperimentConfig& cfg) {
  Timer timer;
  apply_workers(cfg);
  const int num = checked_sample_count(cfg);
  const auto cells = make_cells(cfg);

  ResultBundle bundle;
  bundle.csv =
      "sample_index,ensemble,beta,N,M,d_N,s,p,in_R,in_U,in_L,scaling_ok\n";
  json cells_json = json::array();

  for (const auto& cell : cells) {
    const EnsembleSpec& spec = cell.spec;
    const double eps = epsilon_for(spec.N, cfg.alpha);
    const auto quantiles = mp_quantiles(spec.d_N(), spec.N);

    std::vector<CondOut> outs(num);
    const std::uint64_t base =
        static_cast<std::uint64_t>(cell.index) * cfg.num_samples;
    kernels::parallel_for_samples(num, [&](int i) {
      const std::uint64_t stream = base + static_cast<std::uint64_t>(i);
      try {
        outs[i] = spec.beta == 1
                      ? conditions_sample<double>(spec, cfg, stream,
                                                  quantiles, eps)
                      : conditions_sample<cplx>(spec, cfg, stream, quantiles,
                                                eps);
      } catch (const std::exception&) {
        outs[i] = {};
      }
    });

    std::vector<long> r_hits(cfg.s_grid.size(), 0);
    std::vector<long> u_hits(cfg.p_grid.size(), 0),
        l_hits(cfg.p_grid.size(), 0);
    long scaling_hits = 0, included = 0, degenerate = 0;
    for (int i = 0; i < num; ++i) {
      const CondOut& o = outs[i];
      if (!o.valid) {
        ++degenerate;
        continue;
      }
      ++included;
      scaling_hits += o.scaling_ok;
      for (size_t si = 0; si < cfg.s_grid.size(); ++si)
        r_hits[si] += o.in_R[si];
      for (size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
        u_hits[pi] += o.in_U[pi];
        l_hits[pi] += o.in_L[pi];
      }
      for (size_t si = 0; si < cfg.s_grid.size(); ++si)
        for (size_t pi = 0; pi < cfg.p_grid.size(); ++pi)
          append_row(bundle.csv,
                     {fmt(i), spec.name(), fmt(spec.beta), fmt(spec.N),
                      fmt(spec.M()), fmt(spec.d_N()), fmt(cfg.s_grid[si]),
                      fmt(cfg.p_grid[pi]), fmt(bool(o.in_R[si])),
                      fmt(bool(o.in_U[pi])), fmt(bool(o.in_L[pi])),
                      fmt(o.scaling_ok)});
    }
    bundle.total_runs += cfg.num_samples;
    bundle.included += included;
    bundle.degenerate += degenerate;

    json r_json = json::array(), u_json = json::array(),
         l_json = json::array();
    for (size_t si = 0; si < cfg.s_grid.size(); ++si)
      r_json.push_back(json{
          {"s", cfg.s_grid[si]},
          {"p_hat", included ? double(r_hits[si]) / included : kNaN}});
    for (size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
      u_json.push_back(json{
          {"p", cfg.p_grid[pi]},
          {"p_hat", included ? double(u_hits[pi]) / included : kNaN}});
      l_json.push_back(json{
          {"p", cfg.p_grid[pi]},
          {"p_hat", included ? double(l_hits[pi]) / included : kNaN}});
    }

    json cell_json = cell_header_json(cell);
    cell_json["num_samples"] = cfg.num_samples;
    cell_json["included"] = included;
    cell_json["degenerate"] = degenerate;
    cell_json["in_R"] = r_json;
    cell_json["in_U"] = u_json;
    cell_json["in_L"] = l_json;
    cell_json["scaling_ok_freq"] =
        included ? double(scaling_hits) / included : kNaN;
    cells_json.push_back(cell_json);
  }

  bundle.summary["cells"] = cells_json;
  attach_common(bundle.summary, cfg, timer, bundle);
  return bundle;
}

// ---------------------------------------------------------------- validate

namespace {

struct ValOut {
  bool valid = false;
  // per algorithm slot: spectral and iterative halting data
  bool ok[3] = {false, false, false};
  long tau_spec[3] = {-1, -1, -1};
  long tau_iter[3] = {-1, -1, -1};
  double ratio1[3] = {kNaN, kNaN, kNaN};  // eps^-1 * true error at tau
  double ratio2[3] = {kNaN, kNaN, kNaN};  // eps^-2 * true error at tau
  double t_true[3] = {kNaN, kNaN, kNaN};
  double parseval_dev = 0;
  double trace_rel_dev = 0;  // closed-form E_QR vs iterative last-row error
  double gap_lo = 0, gap_hi = 0;
};

template <typename T>
ValOut validate_sample(const EnsembleSpec& spec, const ExperimentConfig& cfg,
                       std::uint64_t stream, double eps, long cap) {
  ValOut out;
  RngStream rng(cfg.master_seed, stream);
  Mat<T> v = sample_entry_matrix<T>(spec, rng);
  Mat<T> h = build_scm(v);
  std::vector<T> vec = sample_unit_vector<T>(spec.N, rng);
  SpectralProfile prof = spectral_profile(h, vec);
  const int n = spec.N;
  out.gap_lo = prof.eigenvalues[1] - prof.eigenvalues[0];
  out.gap_hi = prof.eigenvalues[n - 1] - prof.eigenvalues[n - 2];

  double sum_qr = 0, sum_proj = 0;
  for (int j = 0; j < n; ++j) {
    sum_qr += prof.beta_qr[j] * prof.beta_qr[j];
    sum_proj += prof.beta_proj[j] * prof.beta_proj[j];
  }
  out.parseval_dev =
      std::max(std::abs(sum_qr - 1.0), std::abs(sum_proj - 1.0));

  SpectralCoefficients c_qr, c_ip, c_p;
  try {
    c_qr = coefficients_for_qr(prof);
    c_ip = coefficients_for_projection(prof);
    c_p = inverted_reversed(c_ip);
  } catch (const std::invalid_argument&) {
    return out;
  }
  out.valid = true;

  std::vector<double> qr_trace;
  for (Algorithm a : cfg.algorithms) {
    const int slot = alg_slot(a);
    const SpectralCoefficients& c = a == Algorithm::QR ? c_qr
                                    : a == Algorithm::P ? c_p
                                                        : c_ip;
    if (c.degenerate) continue;
    const auto err = [&](double t) {
      return a == Algorithm::QR ? e_qr(c, t).total : e_ip(c, t).total;
    };
    ContinuousHalt ch = halting_time_continuous(err, eps, cap);
    HaltingRecord rec;
    switch (a) {
      case Algorithm::QR:
        rec = run_qr_halting(h, eps, cap, &qr_trace);
        break;
      case Algorithm::P: rec = run_power(h, vec, eps, cap); break;
      default: rec = run_inverse_power(h, vec, eps, cap);
    }
    if (ch.capped || rec.capped) continue;
    out.ok[slot] = true;
    out.tau_spec[slot] = static_cast<long>(std::ceil(ch.T));
    out.tau_iter[slot] = rec.tau;

    const SpectralCoefficients& c_err = a == Algorithm::IP ? c_ip
                                        : a == Algorithm::P ? c_ip
                                                            : c_qr;
    const double te =
        true_error(a, c_err, static_cast<double>(out.tau_iter[slot]));
    out.ratio1[slot] = te / eps;
    out.ratio2[slot] = te / (eps * eps);

    const auto true_fn = [&](double t) { return true_error(a, c_err, t); };
    ContinuousHalt tt =
        halting_time_continuous(true_fn, std::sqrt(eps), 2 * cap);
    if (!tt.capped) out.t_true[slot] = tt.T;
  }

  // closed-form E_QR against the iterated last-row sums, early steps where
  // roundoff accumulation is far below the error level itself
  const int qslot = alg_slot(Algorithm::QR);
  if (out.ok[qslot] && !c_qr.degenerate) {
    const long upto =
        std::min<long>(static_cast<long>(qr_trace.size()) - 1, 10);
    for (long t = 0; t <= upto; ++t) {
      const double direct = qr_trace[static_cast<size_t>(t)];
      const double closed = e_qr(c_qr, static_cast<double>(t)).total;
      if (direct > 0)
        out.trace_rel_dev = std::max(
            out.trace_rel_dev, std::abs(direct - closed) / direct);
    }
  }
  return out;
}

}  // namespace

ResultBundle run_error_validation(const ExperimentConfig& cfg) {
  Timer timer;
  apply_workers(cfg);
  const int num = checked_sample_count(cfg);
  const auto cells = make_cells(cfg);

  ResultBundle bundle;
  bundle.csv =
      "sample_index,ensemble,beta,N,M,d_N,algorithm,tau_spectral,"
      "tau_iterative,ratio_eps1,ratio_eps2,t_true\n";
  json cells_json = json::array();

  long mismatches_total = 0;
  long max_tau_diff = 0;
  double parseval_max = 0, trace_max = 0;

  for (const auto& cell : cells) {
    const EnsembleSpec& spec = cell.spec;
    const double eps = epsilon_for(spec.N, cfg.alpha);
    const long cap =
        cfg.cap > 0 ? cfg.cap : default_iteration_cap(spec.N, cfg.alpha);
    const auto [lam_minus, lam_plus] = mp_edges(spec.d_N());

    std::vector<ValOut> outs(num);
    const std::uint64_t base =
        static_cast<std::uint64_t>(cell.index) * cfg.num_samples;
    kernels::parallel_for_samples(num, [&](int i) {
      const std::uint64_t stream = base + static_cast<std::uint64_t>(i);
      try {
        outs[i] = spec.beta == 1
                      ? validate_sample<double>(spec, cfg, stream, eps, cap)
                      : validate_sample<cplx>(spec, cfg, stream, eps, cap);
      } catch (const std::exception&) {
        outs[i] = {};
      }
    });

    std::vector<double> gap_lo, gap_hi;
    for (const auto& o : outs)
      if (o.valid && o.gap_lo > 0 && o.gap_hi > 0) {
        gap_lo.push_back(o.gap_lo);
        gap_hi.push_back(o.gap_hi);
      }
    ZetaEstimate zeta;
    const bool have_zeta = gap_lo.size() >= 2;
    if (have_zeta) zeta = estimate_zeta(gap_lo, gap_hi, spec.N, spec.d_N());

    json cell_json = cell_header_json(cell);
    cell_json["epsilon"] = eps;
    json algs_json;

    for (Algorithm a : cfg.algorithms) {
      const int slot = alg_slot(a);
      const double lam_edge = edge_for(a, lam_minus, lam_plus);
      std::vector<double> r1, r2, rescaled_tau, rescaled_ttrue;
      long mism = 0, alg_max_diff = 0, included = 0;
      for (int i = 0; i < num; ++i) {
        const ValOut& o = outs[i];
        if (!o.valid || !o.ok[slot]) continue;
        ++included;
        const long diff = std::labs(o.tau_iter[slot] - o.tau_spec[slot]);
        alg_max_diff = std::max(alg_max_diff, diff);
        if (diff > 1) ++mism;
        r1.push_back(o.ratio1[slot]);
        r2.push_back(o.ratio2[slot]);
        if (have_zeta) {
          rescaled_tau.push_back(rescale_halting(
              static_cast<double>(o.tau_iter[slot]), spec.N, eps, lam_edge,
              spec.d_N(), zeta_for(a, zeta), cfg.rescale));
          if (std::isfinite(o.t_true[slot]))
            rescaled_ttrue.push_back(rescale_halting(
                2.0 * o.t_true[slot], spec.N, eps, lam_edge, spec.d_N(),
                zeta_for(a, zeta), cfg.rescale));
        }
        append_row(bundle.csv,
                   {fmt(i), spec.name(), fmt(spec.beta), fmt(spec.N),
                    fmt(spec.M()), fmt(spec.d_N()), algorithm_name(a),
                    fmt(o.tau_spec[slot]), fmt(o.tau_iter[slot]),
                    fmt(o.ratio1[slot]), fmt(o.ratio2[slot]),
                    fmt(o.t_true[slot])});
      }
      mismatches_total += mism;
      max_tau_diff = std::max(max_tau_diff, alg_max_diff);
      bundle.total_runs += cfg.num_samples;
      bundle.included += included;
      bundle.degenerate += cfg.num_samples - included;

      json ks_tt = nullptr;
      if (!rescaled_tau.empty() && !rescaled_ttrue.empty())
        ks_tt = ks_distance(EmpiricalDistribution(rescaled_tau),
                            EmpiricalDistribution(rescaled_ttrue));
      algs_json[algorithm_name(a)] =
          json{{"included", included},
               {"cross_path_mismatches", mism},
               {"max_tau_diff", alg_max_diff},
               {"median_err_over_eps", median_of(r1)},
               {"median_err_over_eps2", median_of(r2)},
               {"ks_rescaled_ttrue_vs_tau", ks_tt}};
    }

    for (const auto& o : outs) {
      parseval_max = std::max(parseval_max, o.parseval_dev);
      trace_max = std::max(trace_max, o.trace_rel_dev);
    }
    cell_json["algorithms"] = algs_json;
    cells_json.push_back(cell_json);
  }

  const bool passed = mismatches_total == 0 && parseval_max <= 1e-12;
  bundle.passed = passed;
  bundle.summary["cells"] = cells_json;
  bundle.summary["cross_path"] =
      json{{"mismatches", mismatches_total}, {"max_tau_diff", max_tau_diff}};
  bundle.summary["parseval_max_dev"] = parseval_max;
  bundle.summary["qr_trace_max_rel_dev"] = trace_max;
  bundle.summary["passed"] = passed;
  attach_common(bundle.summary, cfg, timer, bundle);
  return bundle;
}

// ------------------------------------------------------------------ shared

ResultBundle run_study(const ExperimentConfig& cfg) {
  cfg.validate();
  switch (cfg.study) {
    case Study::halting: return run_halting_study(cfg);
    case Study::gap_law: return run_gap_law_study(cfg);
    case Study::zeta: return run_zeta_study(cfg);
    case Study::deflation: return run_deflation_study(cfg);
    case Study::projections: return run_projection_study(cfg);
    case Study::conditions: return run_conditions_study(cfg);
    case Study::validate: return run_error_validation(cfg);
  }
  throw std::logic_error("run_study: bad study");
}

Study study_from_name(const std::string& name) {
  if (name == "halting") return Study::halting;
  if (name == "gap-law") return Study::gap_law;
  if (name == "zeta") return Study::zeta;
  if (name == "deflation") return Study::deflation;
  if (name == "projections") return Study::projections;
  if (name == "conditions") return Study::conditions;
  if (name == "validate") return Study::validate;
  throw ConfigError("unknown study: " + name);
}

const char* study_name(Study s) {
  switch (s) {
    case Study::halting: return "halting";
    case Study::gap_law: return "gap-law";
    case Study::zeta: return "zeta";
    case Study::deflation: return "deflation";
    case Study::projections: return "projections";
    case Study::conditions: return "conditions";
    case Study::validate: return "validate";
  }
  return "?";
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

Algorithm algorithm_from_name(const std::string& s) {
  if (s == "QR") return Algorithm::QR;
  if (s == "P") return Algorithm::P;
  if (s == "IP") return Algorithm::IP;
  throw ConfigError("unknown algorithm: " + s);
}

std::string as_string(const json& v, const char* what) {
  if (!v.is_string())
    throw ConfigError(std::string(what) + " must be a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const char* what) {
  if (!v.is_boolean())
    throw ConfigError(std::string(what) + " must be a boolean");
  return v.get<bool>();
}

long as_integer(const json& v, const char* what) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ConfigError(std::string(what) + " must be an integer");
  return v.get<long>();
}

double as_number(const json& v, const char* what) {
  if (!v.is_number())
    throw ConfigError(std::string(what) + " must be a number");
  return v.get<double>();
}

const json& as_array(const json& v, const char* what) {
  if (!v.is_array())
    throw ConfigError(std::string(what) + " must be an array");
  return v;
}

const json& as_object(const json& v, const char* what) {
  if (!v.is_object())
    throw ConfigError(std::string(what) + " must be an object");
  return v;
}

std::uint64_t as_seed(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError("master_seed must be a nonnegative integer");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                             std::optional<Study> forced) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  static const std::set<std::string> allowed = {
      "study",       "ensembles", "algorithms", "N",
      "d",           "alpha",     "num_samples", "master_seed",
      "workers",     "out_dir",   "formats",    "rescale",
      "conditions",  "s_grid",    "p_grid",     "path",
      "edge",        "fast",      "cap",        "quick"};
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown config field: " + k);

  ExperimentConfig cfg;
  if (j.contains("study")) {
    Study s = study_from_name(as_string(j.at("study"), "study"));
    if (forced && *forced != s)
      throw ConfigError("config study disagrees with the CLI subcommand");
    cfg.study = s;
  } else if (forced) {
    cfg.study = *forced;
  } else {
    throw ConfigError("config must name a study");
  }

  if (j.contains("ensembles")) {
    cfg.ensembles.clear();
    for (const auto& e : as_array(j.at("ensembles"), "ensembles"))
      cfg.ensembles.push_back(as_string(e, "ensembles entries"));
  }
  if (j.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& e : as_array(j.at("algorithms"), "algorithms"))
      cfg.algorithms.push_back(
          algorithm_from_name(as_string(e, "algorithms entries")));
  }
  if (j.contains("N")) {
    cfg.sizes.clear();
    for (const auto& e : as_array(j.at("N"), "N"))
      cfg.sizes.push_back(static_cast<int>(as_integer(e, "N entries")));
  }
  if (j.contains("d")) {
    cfg.ds.clear();
    for (const auto& e : as_array(j.at("d"), "d"))
      cfg.ds.push_back(as_number(e, "d entries"));
  }
  if (j.contains("alpha")) cfg.alpha = as_number(j.at("alpha"), "alpha");
  if (j.contains("num_samples"))
    cfg.num_samples = as_integer(j.at("num_samples"), "num_samples");
  if (j.contains("master_seed")) cfg.master_seed = as_seed(j.at("master_seed"));
  if (j.contains("workers"))
    cfg.workers = static_cast<int>(as_integer(j.at("workers"), "workers"));
  if (j.contains("out_dir"))
    cfg.out_dir = as_string(j.at("out_dir"), "out_dir");
  if (j.contains("formats")) {
    cfg.formats.clear();
    for (const auto& e : as_array(j.at("formats"), "formats"))
      cfg.formats.push_back(as_string(e, "formats entries"));
  }
  if (j.contains("rescale")) {
    const auto& r = as_object(j.at("rescale"), "rescale");
    for (const auto& [k, _] : r.items())
      if (k != "include_2pow" && k != "d_exponent")
        throw ConfigError("unknown rescale field: " + k);
    if (r.contains("include_2pow"))
      cfg.rescale.include_2pow = as_bool(r.at("include_2pow"), "include_2pow");
    if (r.contains("d_exponent"))
      cfg.rescale.d_exponent = as_number(r.at("d_exponent"), "d_exponent");
  }
  if (j.contains("conditions")) {
    const auto& c = as_object(j.at("conditions"), "conditions");
    for (const auto& [k, _] : c.items())
      if (k != "s" && k != "p" && k != "sigma")
        throw ConfigError("unknown conditions field: " + k);
    if (c.contains("s")) cfg.cond.s = as_number(c.at("s"), "conditions.s");
    if (c.contains("p")) cfg.cond.p = as_number(c.at("p"), "conditions.p");
    if (c.contains("sigma"))
      cfg.cond.sigma = as_number(c.at("sigma"), "conditions.sigma");
  }
  if (j.contains("s_grid")) {
    cfg.s_grid.clear();
    for (const auto& e : as_array(j.at("s_grid"), "s_grid"))
      cfg.s_grid.push_back(as_number(e, "s_grid entries"));
  }
  if (j.contains("p_grid")) {
    cfg.p_grid.clear();
    for (const auto& e : as_array(j.at("p_grid"), "p_grid"))
      cfg.p_grid.push_back(as_number(e, "p_grid entries"));
  }
  if (j.contains("path")) {
    const std::string p = as_string(j.at("path"), "path");
    if (p == "spectral")
      cfg.spectral_path = true;
    else if (p == "iterative")
      cfg.spectral_path = false;
    else
      throw ConfigError("path must be 'spectral' or 'iterative'");
  }
  if (j.contains("edge")) cfg.edge = as_string(j.at("edge"), "edge");
  if (j.contains("fast")) cfg.fast = as_bool(j.at("fast"), "fast");
  if (j.contains("cap")) cfg.cap = as_integer(j.at("cap"), "cap");
  if (j.contains("quick")) cfg.quick = as_bool(j.at("quick"), "quick");

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path,
                                             std::optional<Study> forced) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return from_json(j, forced);
}

void ExperimentConfig::validate() const {
  if (ensembles.empty()) throw ConfigError("ensembles must be nonempty");
  if (algorithms.empty()) throw ConfigError("algorithms must be nonempty");
  {
    std::set<int> seen;
    for (Algorithm a : algorithms)
      if (!seen.insert(static_cast<int>(a)).second)
        throw ConfigError("duplicate algorithm in config");
  }
  if (sizes.empty()) throw ConfigError("N grid must be nonempty");
  for (int n : sizes)
    if (n < 4) throw ConfigError("N must be at least 4");
  if (ds.empty()) throw ConfigError("d grid must be nonempty");
  for (double d : ds)
    if (!(d > 0 && d < 1)) throw ConfigError("d must lie in (0, 1)");
  for (const auto& e : ensembles) {
    try {
      ensemble_from_name(e, sizes.front(), ds.front());  // name check
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
  }
  if (num_samples < 1) throw ConfigError("num_samples must be positive");
  if (workers < 0) throw ConfigError("workers must be nonnegative");
  if (cap < 0) throw ConfigError("cap must be nonnegative");
  if (alpha <= 0) throw ConfigError("alpha must be positive");
  // epsilon-scaling condition: log(1/eps)/log N = alpha/2 >= 5/3 + sigma/2
  if (0.5 * alpha + 1e-12 < 5.0 / 3.0 + 0.5 * cond.sigma)
    throw ConfigError(
        "alpha violates the epsilon-scaling condition: need alpha/2 >= 5/3 + "
        "sigma/2");
  if (edge != "lower" && edge != "upper" && edge != "both")
    throw ConfigError("edge must be lower, upper, or both");
  if (formats.empty()) throw ConfigError("formats must be nonempty");
  for (const auto& f : formats)
    if (f != "csv" && f != "json")
      throw ConfigError("unknown output format: " + f);
  if (s_grid.empty() || p_grid.empty())
    throw ConfigError("s_grid and p_grid must be nonempty");
  for (double s : s_grid)
    if (!(s > 0)) throw ConfigError("s values must be positive");
  for (double p : p_grid)
    if (!(p > 0)) throw ConfigError("p values must be positive");
}

nlohmann::json ExperimentConfig::echo() const {
  json algs = json::array();
  for (Algorithm a : algorithms) algs.push_back(algorithm_name(a));
  return json{{"study", study_name(study)},
              {"ensembles", ensembles},
              {"algorithms", algs},
              {"N", sizes},
              {"d", ds},
              {"alpha", alpha},
              {"num_samples", num_samples},
              {"master_seed", master_seed},
              {"out_dir", out_dir},
              {"formats", formats},
              {"rescale", convention_json(rescale)},
              {"conditions",
               json{{"s", cond.s}, {"p", cond.p}, {"sigma", cond.sigma}}},
              {"s_grid", s_grid},
              {"p_grid", p_grid},
              {"path", spectral_path ? "spectral" : "iterative"},
              {"edge", edge},
              {"fast", fast},
              {"cap", cap},
              {"quick", quick}};
}

void emit(const ResultBundle& bundle, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + cfg.out_dir +
                             ": " + ec.message());
  const std::string stem =
      (fs::path(cfg.out_dir) / study_name(cfg.study)).string();
  const bool want_csv =
      std::find(cfg.formats.begin(), cfg.formats.end(), "csv") !=
      cfg.formats.end();
  const bool want_json =
      std::find(cfg.formats.begin(), cfg.formats.end(), "json") !=
      cfg.formats.end();
  if (want_csv) {
    const std::string path = stem + "_samples.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << bundle.csv;
    if (!out) throw std::runtime_error("write failed: " + path);
  }
  if (want_json) {
    const std::string path = stem + "_summary.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << bundle.summary.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
  }
}

int exit_code_for(const ResultBundle& bundle) {
  if (!bundle.passed) return 1;
  if (bundle.total_runs > 0 &&
      static_cast<double>(bundle.capped) >
          0.05 * static_cast<double>(bundle.total_runs))
    return 3;
  return 0;
}

}  // namespace halting
