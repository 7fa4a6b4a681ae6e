#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bskpd/bskpd.hpp"
#include "bskpd/evaluate.hpp"
#include "bskpd/selftest.hpp"

namespace bskpd::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kThreadsEnv = "BSKPD_THREADS";

// Flag, then environment, then the config file's value.
unsigned resolve_threads(int flag, unsigned from_config) {
  if (flag >= 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const long v = std::stol(env);
      if (v >= 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ParameterError(std::string(kThreadsEnv) + " must be a non-negative integer, got '" + env +
                         "'");
  }
  return from_config;
}

Dims3 parse_dims_flag(const std::string& s) {
  Dims3 d{};
  std::stringstream ss(s);
  std::string part;
  std::size_t m = 0;
  while (std::getline(ss, part, ',')) {
    if (m >= 3) throw ParameterError("--dims takes exactly three values, got '" + s + "'");
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != part.size() || v <= 0)
      throw ParameterError("--dims entries must be positive integers, got '" + s + "'");
    d[m++] = static_cast<std::size_t>(v);
  }
  if (m != 3) throw ParameterError("--dims takes exactly three values, got '" + s + "'");
  return d;
}

void echo(std::ostream& out, const std::string& command, const Json& config) {
  out << "# " << command << " config: " << config.dump() << "\n";
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  std::size_t n = 400;
  std::string dims = "64,64,1";
  std::string signal = "blobs";
  double noise_sd = 0.2682;
  std::optional<double> pure_noise_sd;
  double signal_fraction = 0.5;
  double eps_var = 0.1;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimConfig cfg;
  cfg.n = a.n;
  cfg.dims = parse_dims_flag(a.dims);
  if (a.signal != "blobs") cfg.signal_image = a.signal;
  cfg.noise_sd = a.noise_sd;
  cfg.pure_noise_sd = a.pure_noise_sd;
  cfg.signal_fraction = a.signal_fraction;
  cfg.eps_var = a.eps_var;
  cfg.seed = a.seed;
  cfg.validate();
  echo(out, "simulate",
       {{"out", a.out}, {"n", cfg.n}, {"dims", dims_json(cfg.dims)}, {"signal", a.signal},
        {"noise_sd", cfg.noise_sd}, {"pure_noise_sd", cfg.pure_noise_sd.value_or(cfg.noise_sd)},
        {"signal_fraction", cfg.signal_fraction}, {"eps_var", cfg.eps_var}, {"seed", cfg.seed}});
  const SimulatedData sim = generate(cfg);
  const fs::path dir(a.out);
  const fs::path manifest = save_samples(sim.samples, dir);
  write_tensor(dir / "c_true.bten", sim.truth);
  Matrix flags(static_cast<Eigen::Index>(sim.carries_signal.size()), 1);
  for (std::size_t i = 0; i < sim.carries_signal.size(); ++i)
    flags(static_cast<Eigen::Index>(i), 0) = sim.carries_signal[i] ? 1.0 : 0.0;
  write_csv(dir / "carries_signal.csv", {"carries_signal"}, flags);
  Json m = parse_json_file(manifest);
  m["truth"] = "c_true.bten";
  std::ofstream(manifest) << m.dump(2) << "\n";
  out << "wrote " << manifest.string() << " (" << cfg.n << " samples of "
      << to_string(sim.samples.dims) << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string config;
  std::string out;
  int threads = -1;
  bool keep_draws = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  FitConfig cfg = load_fit_config(a.config);
  cfg.threads = resolve_threads(a.threads, cfg.threads);
  cfg.keep_draws = cfg.keep_draws || a.keep_draws;
  Json echoed = to_json(cfg);
  echoed["data"] = a.data;
  echoed["out"] = a.out;
  echo(out, "fit", echoed);
  out << "# seed " << cfg.hyper.seed << "\n";
  const UnfoldedDataset data = load_dataset(a.data, cfg);
  SamplerOptions opts;
  opts.threads = cfg.threads;
  opts.keep_draws = cfg.keep_draws;
  const auto start = std::chrono::steady_clock::now();
  opts.progress = [&](std::size_t t, double loglik) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << "iter " << t << "/" << cfg.hyper.iterations << "  loglik " << fmt(loglik, "%.3f")
        << "  elapsed " << fmt(secs, "%.1f") << "s\n"
        << std::flush;
  };
  const ChainOutput chain = run_chain(data, cfg.hyper, opts);
  save_chain(chain, a.out);
  out << "kept " << chain.kept << " draws, clamp events " << chain.clamp_events << "\n";
  out << "wrote " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_summarize(const std::string& chain_dir, std::ostream& out) {
  echo(out, "summarize", {{"chain", chain_dir}});
  const ChainOutput c = load_chain(chain_dir);
  out << "dims " << to_string(c.dims) << "  p " << to_string(c.shape.p) << "  d "
      << to_string(c.shape.d) << "  rank " << c.hyper.rank << "\n";
  out << "seed " << c.hyper.seed << "  n_train " << c.n_train << "  kept " << c.kept
      << "  clamp events " << c.clamp_events << "\n";
  for (std::size_t k = 0; k < c.responses.size(); ++k) {
    const auto& r = c.responses[k];
    const auto excl = ((r.c.lower.array() > 0.0) || (r.c.upper.array() < 0.0)).count();
    out << c.specs[k].name << " (" << to_string(c.specs[k].kind) << ")\n";
    out << "  max |median C| " << fmt(r.c.median.cwiseAbs().maxCoeff(), "%.6g")
        << "  elements with 95% interval excluding 0: " << excl << "/" << r.c.median.size()
        << "\n";
    for (Eigen::Index j = 0; j < r.gamma.median.rows(); ++j) {
      const std::string name = static_cast<std::size_t>(j) < c.covariate_names.size()
                                   ? c.covariate_names[static_cast<std::size_t>(j)]
                                   : "z" + std::to_string(j + 1);
      out << "  gamma[" << name << "] median " << fmt(r.gamma.median(j, 0), "%.6g") << "  95% ["
          << fmt(r.gamma.lower(j, 0), "%.6g") << ", " << fmt(r.gamma.upper(j, 0), "%.6g") << "]\n";
    }
  }
  out << "Sigma median\n";
  for (Eigen::Index r = 0; r < c.sigma.median.rows(); ++r) {
    out << " ";
    for (Eigen::Index col = 0; col < c.sigma.median.cols(); ++col)
      out << " " << fmt(c.sigma.median(r, col), "%.6g");
    out << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string chain;
  std::string data;
  std::string out;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  echo(out, "predict", {{"chain", a.chain}, {"data", a.data}, {"out", a.out}});
  const ChainOutput chain = load_chain(a.chain);
  const FitConfig cfg{chain.shape, chain.hyper, false, 0, false};
  const UnfoldedDataset data = load_dataset(a.data, cfg);
  if (data.specs().size() != chain.specs.size())
    throw DataError("dataset has " + std::to_string(data.specs().size()) +
                    " responses, chain has " + std::to_string(chain.specs.size()));
  const Predictions pr = predict(chain, data);
  std::vector<std::string> header;
  Matrix table(pr.linear.rows(), 2 * pr.linear.cols());
  for (Eigen::Index k = 0; k < pr.linear.cols(); ++k) {
    const std::string& name = chain.specs[static_cast<std::size_t>(k)].name;
    header.push_back(name + "_linear");
    header.push_back(name + (chain.specs[static_cast<std::size_t>(k)].kind == ResponseKind::binary
                                 ? "_prob"
                                 : "_pred"));
    table.col(2 * k) = pr.linear.col(k);
    table.col(2 * k + 1) = pr.response.col(k);
  }
  write_csv(a.out, header, table);
  for (std::size_t k = 0; k < chain.specs.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const Vector p = pr.response.col(col);
    const Vector y = data.y_raw().col(col);
    const std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
    const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
    if (chain.specs[k].kind == ResponseKind::continuous) {
      out << chain.specs[k].name << " RMSE " << fmt(rmse(ps, ys)) << "\n";
    } else {
      try {
        out << chain.specs[k].name << " AUC " << fmt(auc(ps, ys)) << "\n";
      } catch (const DataError&) {
        out << chain.specs[k].name << " AUC undefined (single class)\n";
      }
    }
  }
  out << "wrote " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct CrossvalArgs {
  std::string data;
  std::string config;
  std::size_t folds = 5;
  std::optional<std::uint64_t> seed;
  int threads = -1;
  std::string out;
};

int cmd_crossval(const CrossvalArgs& a, std::ostream& out) {
  FitConfig cfg = load_fit_config(a.config);
  cfg.threads = resolve_threads(a.threads, cfg.threads);
  const std::uint64_t fold_seed = a.seed.value_or(cfg.hyper.seed);
  Json echoed = to_json(cfg);
  echoed["data"] = a.data;
  echoed["folds"] = a.folds;
  echoed["fold_seed"] = fold_seed;
  echo(out, "crossval", echoed);
  out << "# seed " << cfg.hyper.seed << "\n";
  const SampleSet samples = load_samples(a.data);
  SamplerOptions opts;
  opts.threads = cfg.threads;
  const auto reports = crossvalidate(samples, cfg, a.folds, fold_seed, opts);

  std::vector<std::string> header{"fold"};
  for (const auto& m : reports.front().rmse) header.push_back(m.response + "_rmse");
  for (const auto& m : reports.front().auc) header.push_back(m.response + "_auc");
  Matrix table(static_cast<Eigen::Index>(reports.size()), static_cast<Eigen::Index>(header.size()));
  for (const auto& h : header) out << h << (&h == &header.back() ? "\n" : "\t");
  for (std::size_t f = 0; f < reports.size(); ++f) {
    const auto& r = reports[f];
    const auto row = static_cast<Eigen::Index>(f);
    table(row, 0) = static_cast<double>(f + 1);
    out << f + 1;
    Eigen::Index c = 1;
    for (const auto& m : r.rmse) {
      table(row, c++) = m.value;
      out << "\t" << fmt(m.value);
    }
    for (const auto& m : r.auc) {
      table(row, c++) = m.value;
      out << "\t" << fmt(m.value);
    }
    out << "\n";
  }
  for (Eigen::Index c = 1; c < table.cols(); ++c) {
    std::vector<double> v(table.col(c).data(), table.col(c).data() + table.rows());
    const std::string& h = header[static_cast<std::size_t>(c)];
    const auto cut = h.rfind('_');
    std::string metric = h.substr(cut + 1);
    for (auto& ch : metric) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    out << h.substr(0, cut) << " " << metric << ": " << format_mean_sd(v) << "\n";
  }
  if (!a.out.empty()) {
    write_csv(a.out, header, table);
    out << "wrote " << a.out << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string chain;
  std::string out;
  int axis = 3;
  std::size_t slice = 0;
  std::string stat = "median";
};

int cmd_export_maps(const ExportArgs& a, std::ostream& out) {
  echo(out, "export-maps", {{"chain", a.chain}, {"out", a.out}, {"axis", a.axis},
                            {"slice", a.slice}, {"stat", a.stat}});
  const ChainOutput chain = load_chain(a.chain);
  fs::create_directories(a.out);
  for (std::size_t k = 0; k < chain.responses.size(); ++k) {
    const Summary& s = chain.responses[k].c;
    const Matrix& m = a.stat == "lower" ? s.lower : a.stat == "upper" ? s.upper : s.median;
    const DenseTensor3 c = refold(m, chain.shape);
    const fs::path path = fs::path(a.out) / (chain.specs[k].name + "_" + a.stat + "_axis" +
                                             std::to_string(a.axis) + "_slice" +
                                             std::to_string(a.slice) + ".pgm");
    export_map(c, a.axis, a.slice, path);
    out << "wrote " << path.string() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SelftestArgs {
  bool quick = false;
  double corrupt = 0.0;
  std::uint64_t seed = 20240601;
};

int cmd_selftest(const SelftestArgs& a, std::ostream& out) {
  SelftestOptions opt;
  opt.seed = a.seed;
  opt.sigma_dof_offset = a.corrupt;
  if (a.quick) {
    opt.moment_draws = 20000;
    opt.geweke_samples = 2000;
  }
  echo(out, "selftest", {{"quick", a.quick}, {"corrupt_sigma_dof", a.corrupt},
                         {"seed", opt.seed}, {"moment_draws", opt.moment_draws},
                         {"geweke_samples", opt.geweke_samples}});
  bool ok = true;
  auto report = [&](const std::vector<CheckResult>& checks) {
    for (const auto& c : checks) {
      out << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n" << std::flush;
      ok = ok && c.passed;
    }
  };
  report(moment_checks(opt));
  report(geweke_checks(opt));
  out << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian tensor regression with block-structured Kronecker coefficients"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic mixed-response dataset");
  s->add_option("--out", sim.out, "Output dataset directory")->required();
  s->add_option("--n", sim.n, "Number of samples")->capture_default_str();
  s->add_option("--dims", sim.dims, "Tensor dims D1,D2,D3 (ignored for PGM signals)")
      ->capture_default_str();
  s->add_option("--signal", sim.signal, "'blobs' or a P5 PGM file")->capture_default_str();
  s->add_option("--noise-sd", sim.noise_sd, "Noise sd of signal samples")->capture_default_str();
  s->add_option("--pure-noise-sd", sim.pure_noise_sd, "Noise sd of signal-free samples");
  s->add_option("--signal-fraction", sim.signal_fraction, "Fraction of samples carrying signal")
      ->capture_default_str();
  s->add_option("--eps-var", sim.eps_var, "Error variance of the continuous response")
      ->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Run the Gibbs sampler and write a chain directory");
  f->add_option("--data", fit.data, "Dataset manifest")->required();
  f->add_option("--config", fit.config, "Fit configuration JSON")->required();
  f->add_option("--out", fit.out, "Output chain directory")->required();
  f->add_option("--threads", fit.threads,
                std::string("Worker threads (default: ") + kThreadsEnv + " or config)");
  f->add_flag("--keep-draws", fit.keep_draws, "Store kept draws of every C_k");

  std::string summarize_chain;
  auto* su = app.add_subcommand("summarize", "Print posterior summaries of a chain");
  su->add_option("--chain", summarize_chain, "Chain directory")->required();

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "Predict responses for a dataset");
  p->add_option("--chain", pred.chain, "Chain directory")->required();
  p->add_option("--data", pred.data, "Dataset manifest")->required();
  p->add_option("--out", pred.out, "Predictions CSV")->required();

  CrossvalArgs cv;
  auto* c = app.add_subcommand("crossval", "K-fold cross-validation report");
  c->add_option("--data", cv.data, "Dataset manifest")->required();
  c->add_option("--config", cv.config, "Fit configuration JSON")->required();
  c->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  c->add_option("--seed", cv.seed, "Fold assignment seed (default: config seed)");
  c->add_option("--threads", cv.threads,
                std::string("Worker threads (default: ") + kThreadsEnv + " or config)");
  c->add_option("--out", cv.out, "Optional per-fold CSV");

  ExportArgs ex;
  auto* e = app.add_subcommand("export-maps", "Write |C| slices as PGM images");
  e->add_option("--chain", ex.chain, "Chain directory")->required();
  e->add_option("--out", ex.out, "Output directory")->required();
  e->add_option("--axis", ex.axis, "Axis orthogonal to the slice (1-3)")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  e->add_option("--slice", ex.slice, "Slice index along the axis, 0-based")->capture_default_str();
  e->add_option("--stat", ex.stat, "median, lower or upper")
      ->check(CLI::IsMember({"median", "lower", "upper"}))
      ->capture_default_str();

  SelftestArgs st;
  auto* t = app.add_subcommand("selftest", "Sampler moment checks and Geweke test");
  t->add_flag("--quick", st.quick, "Fewer draws");
  t->add_option("--corrupt-sigma-dof", st.corrupt,
                "Add this to the Sigma update's dof (should make the test fail)");
  t->add_option("--seed", st.seed, "Random seed")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim, out);
    if (f->parsed()) return cmd_fit(fit, out);
    if (su->parsed()) return cmd_summarize(summarize_chain, out);
    if (p->parsed()) return cmd_predict(pred, out);
    if (c->parsed()) return cmd_crossval(cv, out);
    if (e->parsed()) return cmd_export_maps(ex, out);
    if (t->parsed()) return cmd_selftest(st, out);
  } catch (const NumericalError& ex_) {
    err << "numerical error: " << ex_.what() << "\n";
    return kNumericalError;
  } catch (const ParameterError& ex_) {
    err << "invalid parameter: " << ex_.what() << "\n";
    return kUsage;
  } catch (const IoError& ex_) {
    err << "I/O error [" << to_string(ex_.code()) << "]: " << ex_.what() << "\n";
    return kDataError;
  } catch (const std::exception& ex_) {
    err << "error: " << ex_.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace bskpd::cli
