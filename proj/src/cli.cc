#include "otter/cli.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "otter/adapter.h"
#include "otter/diagnostics.h"
#include "otter/error.h"
#include "otter/io.h"
#include "otter/reweight.h"
#include "otter/shift_est.h"
#include "otter/synthlab.h"

namespace otter {
namespace {

struct SolverFlags {
  std::string kind = "exact";
  double reg = 0.01;
  double clamp_eps = kDefaultClampEps;
  std::size_t max_iter = 100000;
  double tol = 1e-9;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--solver", kind, "exact or entropic")
        ->check(CLI::IsMember({"exact", "entropic"}))
        ->capture_default_str();
    cmd->add_option("--reg", reg, "entropic regularization")->capture_default_str();
    cmd->add_option("--clamp-eps", clamp_eps, "score floor before taking logs")
        ->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "entropic iteration cap")->capture_default_str();
    cmd->add_option("--tol", tol, "entropic marginal tolerance")->capture_default_str();
  }

  SolverConfig Config() const {
    SolverConfig c;
    c.kind = kind == "entropic" ? SolverKind::kEntropic : SolverKind::kExact;
    c.entropic.reg = reg;
    c.entropic.max_iter = max_iter;
    c.entropic.tol = tol;
    c.clamp_eps = clamp_eps;
    return c;
  }
};

// Writes through `emit` to `path`, or to `fallback` when no path was given.
template <typename Fn>
void Emit(const std::string& path, std::ostream& fallback, Fn emit) {
  if (path.empty()) {
    emit(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  emit(f);
  f.flush();
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

LabelDistribution Binary(double class2) {
  if (!(class2 >= 0.0 && class2 <= 1.0)) {
    throw Error(ErrorCode::kSimplexViolation, "class-2 mass must lie in [0, 1]");
  }
  return LabelDistribution::Create({1.0 - class2, class2});
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-distribution adaptation of classifier scores via optimal transport",
               "otter"};
  app.require_subcommand(1);

  std::string scores, dist, out_path, pseudo, weights, labels;
  std::uint64_t seed = 0;
  SolverFlags solver;

  auto* adapt = app.add_subcommand("adapt", "rebalance predictions to a label distribution");
  adapt->add_option("--scores", scores, "n x K score CSV")->required();
  adapt->add_option("--dist", dist, "label distribution (CSV row or JSON)")->required();
  adapt->add_option("--out", out_path, "predictions CSV (default stdout)");
  adapt->add_option("--seed", seed, "run seed")->capture_default_str();
  solver.Attach(adapt);

  auto* zeroshot = app.add_subcommand("zeroshot", "row-wise argmax predictions");
  zeroshot->add_option("--scores", scores, "n x K score CSV")->required();
  zeroshot->add_option("--out", out_path, "predictions CSV (default stdout)");

  RotterOptions rotter_opt;
  auto* rfit = app.add_subcommand("rotter-fit", "learn a reweighting vector from OT pseudo-labels");
  rfit->add_option("--scores", scores, "validation score CSV")->required();
  rfit->add_option("--dist", dist, "label distribution for the pseudo-labels");
  rfit->add_option("--pseudo", pseudo, "precomputed pseudo-labels instead of --dist");
  rfit->add_option("--lr", rotter_opt.adam.lr, "Adam step size")->capture_default_str();
  rfit->add_option("--steps", rotter_opt.adam.steps, "Adam steps")->capture_default_str();
  rfit->add_option("--seed", seed, "run seed")->capture_default_str();
  rfit->add_option("--out", out_path, "reweight JSON (default stdout)");
  solver.Attach(rfit);

  auto* rapply = app.add_subcommand("rotter-apply", "predict with a stored reweighting vector");
  rapply->add_option("--scores", scores, "score CSV")->required();
  rapply->add_option("--weights", weights, "reweight JSON")->required();
  rapply->add_option("--out", out_path, "predictions CSV (default stdout)");

  std::string val_scores, val_labels;
  PmGrid grid;
  PriorMatchingOptions pm_opt;
  auto* pmfit = app.add_subcommand("pm-fit", "prior-matching reweighting baseline");
  pmfit->add_option("--scores", scores, "unlabeled target score CSV")->required();
  pmfit->add_option("--dist", dist, "target label distribution")->required();
  pmfit->add_option("--val-scores", val_scores, "labeled validation scores for grid search");
  pmfit->add_option("--val-labels", val_labels, "validation labels for grid search");
  pmfit->add_option("--temperatures", grid.temperatures, "temperature grid")->delimiter(',');
  pmfit->add_option("--lrs", grid.lrs, "step size grid")->delimiter(',');
  pmfit->add_option("--steps", pm_opt.adam.steps, "AdamW steps")->capture_default_str();
  pmfit->add_option("--weight-decay", pm_opt.adam.weight_decay, "AdamW decay")
      ->capture_default_str();
  pmfit->add_option("--seed", seed, "run seed")->capture_default_str();
  pmfit->add_option("--out", out_path, "reweight JSON (default stdout)");

  std::string src_scores, src_labels, tgt_scores, src_dist, variant = "inverse";
  auto* bbse = app.add_subcommand("bbse", "estimate the target label distribution");
  bbse->add_option("--src-scores", src_scores, "labeled source scores")->required();
  bbse->add_option("--src-labels", src_labels, "source labels (1-based)")->required();
  bbse->add_option("--tgt-scores", tgt_scores, "unlabeled target scores")->required();
  bbse->add_option("--src-dist", src_dist, "source distribution (default: label frequencies)");
  bbse->add_option("--variant", variant, "inverse or multiply")
      ->check(CLI::IsMember({"inverse", "multiply"}))
      ->capture_default_str();
  bbse->add_option("--out", out_path, "distribution CSV (default stdout)");

  std::string hierarchy, super_scores;
  auto* hotter = app.add_subcommand("hotter", "two-level hierarchical adaptation");
  hotter->add_option("--scores", scores, "subclass score CSV")->required();
  hotter->add_option("--hierarchy", hierarchy, "JSON {\"groups\": [[...], ...]}")->required();
  hotter->add_option("--dist", dist, "subclass label distribution")->required();
  hotter->add_option("--super-scores", super_scores, "superclass scores (default: group sums)");
  hotter->add_option("--out", out_path, "predictions CSV (default stdout)");
  hotter->add_option("--seed", seed, "run seed")->capture_default_str();
  solver.Attach(hotter);

  auto* synth = app.add_subcommand("synth", "two-Gaussian label-shift experiments");
  synth->require_subcommand(1);

  SweepConfig sweep_cfg;
  double source_class2 = 0.9;
  std::string score_mode = "calibrated", bayes_form = "posterior";
  bool no_rotter = false;
  auto* sweep = synth->add_subcommand("sweep", "accuracy across target label distributions");
  sweep->add_option("--seeds", sweep_cfg.seeds, "number of seeds")->capture_default_str();
  sweep->add_option("--seed", sweep_cfg.base_seed, "first seed")->capture_default_str();
  sweep->add_option("--source", source_class2, "source class-2 mass")->capture_default_str();
  sweep->add_option("--targets", sweep_cfg.target_class2, "target class-2 masses")
      ->delimiter(',');
  sweep->add_option("--n-train", sweep_cfg.n_train, "training size")->capture_default_str();
  sweep->add_option("--n-test", sweep_cfg.n_test, "test size")->capture_default_str();
  sweep->add_option("--n-val", sweep_cfg.n_val, "R-OTTER validation size")->capture_default_str();
  sweep->add_option("--noise-score", sweep_cfg.score_sigmas, "score noise levels")
      ->delimiter(',');
  sweep->add_option("--noise-dist", sweep_cfg.dist_epsilons, "distribution noise levels")
      ->delimiter(',');
  sweep->add_option("--adversarial-alpha", sweep_cfg.adversarial_alphas,
                    "adversarial TV budgets")
      ->delimiter(',');
  sweep->add_option("--score-mode", score_mode, "calibrated, fitted or both")
      ->check(CLI::IsMember({"calibrated", "fitted", "both"}))
      ->capture_default_str();
  sweep->add_option("--bayes-form", bayes_form, "posterior or literal")
      ->check(CLI::IsMember({"posterior", "literal"}))
      ->capture_default_str();
  sweep->add_flag("--no-rotter", no_rotter, "skip the R-OTTER fits");
  sweep->add_option("--out", out_path, "sweep CSV (default stdout)");
  solver.Attach(sweep);

  double target_class2 = 0.5;
  std::size_t n_sample = 1000;
  std::string scores_out, labels_out, bayes_out, dist_out;
  auto* sample = synth->add_subcommand("sample", "write a scored synthetic test set");
  sample->add_option("--target", target_class2, "target class-2 mass")->capture_default_str();
  sample->add_option("--source", source_class2, "source class-2 mass for the scores")
      ->capture_default_str();
  sample->add_option("--n", n_sample, "sample size")->capture_default_str();
  sample->add_option("--seed", seed, "run seed")->capture_default_str();
  sample->add_option("--scores-out", scores_out, "calibrated score CSV")->required();
  sample->add_option("--labels-out", labels_out, "true labels CSV");
  sample->add_option("--bayes-out", bayes_out, "Bayes predictions CSV");
  sample->add_option("--dist-out", dist_out, "target distribution CSV");

  std::string pred_path, truth_path, dist_true, dist_hat;
  std::size_t k_flag = 0;
  auto* report = app.add_subcommand("report", "accuracy, recall spread and TV error");
  report->add_option("--pred", pred_path, "predictions CSV")->required();
  report->add_option("--truth", truth_path, "truth labels CSV")->required();
  report->add_option("--k", k_flag, "class count (default: largest label)");
  report->add_option("--dist-true", dist_true, "true distribution for TV");
  report->add_option("--dist-hat", dist_hat, "estimated distribution for TV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (adapt->parsed()) {
      const Predictions p = otter(read_scores(scores), read_distribution(dist), solver.Config());
      Emit(out_path, out, [&](std::ostream& o) { write_predictions(p, o); });
    } else if (zeroshot->parsed()) {
      const Predictions p = zero_shot(read_scores(scores));
      Emit(out_path, out, [&](std::ostream& o) { write_predictions(p, o); });
    } else if (rfit->parsed()) {
      if (dist.empty() == pseudo.empty()) {
        err << "error: rotter-fit needs exactly one of --dist or --pseudo\n";
        return 2;
      }
      const ScoreMatrix s = read_scores(scores);
      const Predictions labels_in = pseudo.empty()
                                        ? otter(s, read_distribution(dist), solver.Config())
                                        : read_labels(pseudo, s.k());
      rotter_opt.seed = seed;
      rotter_opt.clamp_eps = solver.clamp_eps;
      const RotterFit fit = fit_rotter(s, labels_in, rotter_opt);
      if (fit.degenerate_labels) {
        err << "warning: " << fit.absent_classes.size()
            << " class(es) absent from the pseudo-labels; their weight was set to the smallest "
               "fitted value\n";
      }
      Emit(out_path, out, [&](std::ostream& o) { write_reweight(fit.r, 1.0, o); });
    } else if (rapply->parsed()) {
      const StoredReweight w = read_reweight(weights);
      const Predictions p = predict_reweighted(read_scores(scores), w.r, w.temperature);
      Emit(out_path, out, [&](std::ostream& o) { write_predictions(p, o); });
    } else if (pmfit->parsed()) {
      const ScoreMatrix s = read_scores(scores);
      const LabelDistribution nu = read_distribution(dist);
      pm_opt.seed = seed;
      PriorMatchingFit fit;
      if (!val_scores.empty() || !val_labels.empty()) {
        if (val_scores.empty() || val_labels.empty()) {
          err << "error: --val-scores and --val-labels go together\n";
          return 2;
        }
        const ScoreMatrix vs = read_scores(val_scores);
        fit = grid_search_pm(s, vs, read_labels(val_labels, vs.k()), nu, grid, pm_opt).best;
      } else {
        if (grid.temperatures.size() != 1 || grid.lrs.size() != 1) {
          err << "error: without a validation split pass one --temperatures and one --lrs value\n";
          return 2;
        }
        pm_opt.temperature = grid.temperatures.front();
        pm_opt.adam.lr = grid.lrs.front();
        fit = fit_prior_matching(s, nu, pm_opt);
      }
      Emit(out_path, out, [&](std::ostream& o) { write_reweight(fit.r, fit.temperature, o); });
    } else if (bbse->parsed()) {
      const ScoreMatrix ss = read_scores(src_scores);
      const Predictions y = read_labels(src_labels, ss.k());
      const LabelDistribution nu_src =
          src_dist.empty() ? empirical_distribution(y, ss.k()) : read_distribution(src_dist);
      const LabelDistribution est =
          bbse_estimate(soft_confusion(ss, y), read_scores(tgt_scores), nu_src,
                        variant == "multiply" ? BbseVariant::kMultiply : BbseVariant::kInverse);
      Emit(out_path, out, [&](std::ostream& o) { write_distribution(est, o); });
    } else if (hotter->parsed()) {
      const ScoreMatrix s = read_scores(scores);
      const Hierarchy h = read_hierarchy(hierarchy, s.k());
      const HierarchicalDistribution hd = split_distribution(read_distribution(dist), h);
      std::optional<ScoreMatrix> ss;
      if (!super_scores.empty()) ss = read_scores(super_scores);
      const Predictions p = h_otter(ss, s, h, hd.super, hd.conditionals, solver.Config());
      Emit(out_path, out, [&](std::ostream& o) { write_predictions(p, o); });
    } else if (sweep->parsed()) {
      sweep_cfg.nu_source = Binary(source_class2);
      sweep_cfg.include_rotter = !no_rotter;
      sweep_cfg.bayes_form = bayes_form == "literal" ? BayesForm::kLiteral : BayesForm::kPosterior;
      sweep_cfg.solver = solver.Config();
      if (score_mode == "fitted") sweep_cfg.score_modes = {ScoreMode::kFitted};
      if (score_mode == "both") sweep_cfg.score_modes = {ScoreMode::kCalibrated, ScoreMode::kFitted};
      const std::vector<SweepRow> rows = run_shift_sweep(sweep_cfg);
      Emit(out_path, out, [&](std::ostream& o) { write_sweep_csv(rows, o); });
    } else if (sample->parsed()) {
      GaussianMixtureSpec spec;
      spec.nu = Binary(target_class2);
      spec.seed = derive_seed(seed, "sample");
      const MixtureSample m = sample_mixture(spec, n_sample);
      write_scores(calibrated_scores(m.x, Binary(source_class2)), scores_out);
      if (!labels_out.empty()) write_predictions(m.y, labels_out);
      if (!bayes_out.empty()) write_predictions(bayes_predict(m.x, spec.nu), bayes_out);
      if (!dist_out.empty()) write_distribution(spec.nu, dist_out);
    } else if (report->parsed()) {
      const Predictions truth = read_labels(truth_path, k_flag);
      const Predictions pred = read_labels(pred_path, truth.k);
      std::ostringstream text;
      text << "accuracy," << format_double(accuracy(pred, truth)) << '\n';
      try {
        text << "recall_std," << format_double(recall_std(pred, truth, truth.k)) << '\n';
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMissingClass) throw;
        err << "warning: recall_std skipped (" << e.what() << ")\n";
      }
      if (!dist_true.empty() || !dist_hat.empty()) {
        if (dist_true.empty() || dist_hat.empty()) {
          err << "error: --dist-true and --dist-hat go together\n";
          return 2;
        }
        text << "tv," << format_double(estimation_error(read_distribution(dist_true),
                                                        read_distribution(dist_hat)))
             << '\n';
      }
      out << text.str();
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace otter
