#include "itosr/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

namespace itosr {

const char* to_string(UpdateSource s) {
  return s == UpdateSource::kPrevious ? "previous" : "initial";
}

const char* to_string(HeadInit h) { return h == HeadInit::kReinit ? "reinit" : "finetune"; }

void PipelineConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  need(iterations >= 1, "iterations must be >= 1");
  need(alpha > 0.0, "alpha must be > 0");
  need(k >= 1, "K must be >= 1");
  need(baseline.lr_embedder > 0.0 && baseline.lr_head > 0.0 && gan.lr > 0.0,
       "learning rates must be > 0");
  need(baseline.epochs >= 0 && gan.epochs >= 0, "epochs must be >= 0");
  need(baseline.batch >= 1, "baseline batch must be >= 1");
  need(gan.batch >= 2, "gan batch must be >= 2");
  need(gan.n_critic >= 1, "n_critic must be >= 1");
  need(gan.clip_bound > 0.0, "clip_bound must be > 0");
  need(gan.lambda >= 0.0, "lambda must be >= 0");
  need(baseline.hidden >= 1 && baseline.latent >= 1 && gan.hidden >= 1 && gan.noise_dim >= 1,
       "network widths must be >= 1");
}

std::vector<int> label_histogram(std::span<const int> labels, int num_labels) {
  std::vector<int> h(static_cast<std::size_t>(num_labels), 0);
  for (int l : labels) {
    if (l < 1 || l > num_labels) throw std::out_of_range("label outside histogram range");
    ++h[static_cast<std::size_t>(l - 1)];
  }
  return h;
}

std::vector<int> balance_counts(std::span<const int> train_histogram,
                                std::span<const int> selected_histogram) {
  if (train_histogram.size() != selected_histogram.size()) {
    throw std::invalid_argument("balance_counts: histogram lengths differ");
  }
  std::vector<int> totals(train_histogram.size());
  for (std::size_t j = 0; j < totals.size(); ++j) totals[j] = train_histogram[j] + selected_histogram[j];
  const int top = totals.empty() ? 0 : *std::max_element(totals.begin(), totals.end());
  std::vector<int> targets(totals.size());
  for (std::size_t j = 0; j < totals.size(); ++j) targets[j] = top - totals[j];
  return targets;
}

BaselineModel baseline_update(const BaselineModel& model, const FeatureDataset& ds,
                              const SelectedSubset& selected, const GeneratedSet& generated,
                              const BaselineHyper& hyper, HeadInit head_init) {
  model.validate();
  const int c = ds.num_classes;
  if (model.num_classes != c) throw std::invalid_argument("baseline_update: class count mismatch");
  if (selected.indices.size() != selected.labels.size() ||
      generated.features.rows() != static_cast<Eigen::Index>(generated.labels.size())) {
    throw std::invalid_argument("baseline_update: label count differs from row count");
  }
  const auto n_l = ds.train_size();
  const auto n_s = static_cast<Eigen::Index>(selected.size());
  if (n_l + n_s + generated.features.rows() == 0) {
    throw std::invalid_argument("baseline_update: empty training union");
  }
  Matrix inputs(n_l + n_s, ds.dim());
  inputs.topRows(n_l) = ds.train_features;
  std::vector<int> input_labels(ds.train_labels);
  for (Eigen::Index i = 0; i < n_s; ++i) {
    const std::size_t row = selected.indices[static_cast<std::size_t>(i)];
    if (row >= static_cast<std::size_t>(ds.test_size())) {
      throw std::out_of_range("baseline_update: selected index outside test set");
    }
    inputs.row(n_l + i) = ds.test_features.row(static_cast<Eigen::Index>(row));
    input_labels.push_back(selected.labels[static_cast<std::size_t>(i)]);
  }
  Matrix latents = generated.features;
  if (latents.rows() == 0) latents.resize(0, model.latent_dim());

  Rng rng(hyper.seed);
  BaselineModel updated = model;
  if (head_init == HeadInit::kReinit) {
    updated.head = init_head(model.latent_dim(), c + 1, hyper.hidden, rng);
  } else {
    grow_head(updated, c + 1, rng);
  }
  fit_baseline(updated, inputs, input_labels, latents, generated.labels, hyper, rng);
  return updated;
}

namespace {

std::optional<EvalResult> maybe_evaluate(const FeatureDataset& ds, const Predictions& p) {
  if (!ds.test_truth || ds.test_size() == 0) return std::nullopt;
  return evaluate(p.labels, p.confidence, *ds.test_truth, ds.num_classes);
}

}  // namespace

RunResult run_it_osr(const FeatureDataset& ds, const PipelineConfig& cfg) {
  ds.validate();
  cfg.validate();
  const int c = ds.num_classes;
  Rng master(cfg.seed);

  BaselineHyper hyper = cfg.baseline;
  hyper.seed = master.fork_seed();
  const BaselineModel initial = train_baseline(ds, hyper);

  RunResult result;
  result.initial = predict(initial, ds.test_features);
  result.initial_metrics = maybe_evaluate(ds, result.initial);

  BaselineModel current = initial;
  Predictions test_pred = result.initial;

  for (int t = 1; t <= cfg.iterations; ++t) {
    IterationReport rep;
    rep.t = t;
    const std::uint64_t gan_seed = master.fork_seed();
    const std::uint64_t gen_seed = master.fork_seed();
    const std::uint64_t update_seed = master.fork_seed();

    // Reliability sampling.
    const Predictions train_pred = predict(current, ds.train_features);
    rep.stats = compute_threshold_stats(train_pred.confidence, cfg.alpha);
    rep.grouping = threshold_grouping(test_pred, rep.stats, c);
    rep.groups = rep.grouping.counts();
    if (cfg.use_dual_space_sampling) {
      rep.sampling_mode = "dual-space";
      const Matrix& space = t == 1 ? ds.test_features : test_pred.latent;
      rep.selection = knn_consistency_filter(rep.grouping, space, cfg.k);
    } else {
      rep.sampling_mode = "score-only";
      rep.selection = score_only_selection(rep.grouping);
    }
    rep.selected = rep.selection.size();
    rep.selected_unknown = rep.selection.count_label(c + 1);

    // Feature generation in the latent space of the model being updated,
    // whose embedder stays frozen here.
    const BaselineModel& base = cfg.update_from == UpdateSource::kPrevious ? current : initial;
    GeneratedSet generated;
    generated.features = Matrix(0, base.latent_dim());
    const std::vector<int> train_hist = label_histogram(ds.train_labels, c + 1);
    const std::vector<int> sel_hist = label_histogram(rep.selection.labels, c + 1);
    rep.generation_targets = balance_counts(train_hist, sel_hist);
    if (rep.selected_unknown == 0) {
      rep.gan_skipped = true;
      std::fill(rep.generation_targets.begin(), rep.generation_targets.end(), 0);
    } else {
      Matrix real(ds.train_size() + static_cast<Eigen::Index>(rep.selected), ds.dim());
      real.topRows(ds.train_size()) = ds.train_features;
      std::vector<int> real_labels(ds.train_labels);
      for (std::size_t i = 0; i < rep.selected; ++i) {
        real.row(ds.train_size() + static_cast<Eigen::Index>(i)) =
            ds.test_features.row(static_cast<Eigen::Index>(rep.selection.indices[i]));
        real_labels.push_back(rep.selection.labels[i]);
      }
      const Matrix real_latents = base.embedder.forward(real);
      GanHyper gh = cfg.gan;
      gh.seed = gan_seed;
      GanParams params = init_gan(base.latent_dim(), c, gh);
      GanTrainResult trained = train_gan(real_latents, real_labels, std::move(params), gh);
      rep.gan_trace = std::move(trained.trace);
      generated = generate_features(trained.params, rep.generation_targets, gen_seed);
    }
    rep.generated = generated.size();

    // Baseline update and re-prediction.
    BaselineHyper uh = cfg.baseline;
    uh.seed = update_seed;
    current = baseline_update(base, ds, rep.selection, generated, uh, cfg.head_init);
    test_pred = predict(current, ds.test_features);
    rep.metrics = maybe_evaluate(ds, test_pred);
    result.iterations.push_back(std::move(rep));
  }

  result.final_predictions = std::move(test_pred);
  result.final_model = std::move(current);
  return result;
}

}  // namespace itosr
