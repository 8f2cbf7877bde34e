// Acceptance harness: one line of output per criterion, nonzero exit when any
// criterion fails. Long-running stages cache their artifacts under a
// hash-stamped run directory so a re-run only recomputes what changed.
// Usage: scrublab_acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "scrublab/experiment.hpp"

using namespace scrublab;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double secs_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

struct crit_result {
  bool pass = false;
  std::string detail;
};

fs::path accept_root() {
  if (const char* env = std::getenv("SCRUBLAB_ACCEPT_DIR")) return fs::path(env);
  return fs::path("acceptance_runs");
}

// ---------------------------------------------------------------------------
// Shared experiment definitions. Run directories embed the spec hash, so any
// change to a definition lands in a fresh directory automatically.

experiment_spec exp_memorize_mlm() {
  experiment_spec e;
  e.name = "memorize-mlm";
  e.corpus.n_docs = 170;  // partitions to 43 validation / 63 public / 64 private
  e.corpus.with_images = true;
  e.corpus.seed = 42;
  e.task = task_kind::mlm;
  e.modality = modality_kind::bimodal;
  e.encoder.embed_dim = 32;
  e.encoder.n_layers = 1;
  e.encoder.n_heads = 2;
  e.target_train.epochs = 200;
  e.pub_train.epochs = 120;
  e.ablations.epoch_sweep = epoch_sweep_cfg{10, 0.4};
  e.checkpoint_stride = 10;
  e.seed = 42;
  return e;
}

experiment_spec exp_memorize_mlm_flat() {
  experiment_spec e = exp_memorize_mlm();
  e.name = "memorize-mlm-flat";
  e.ablations.layout_off = true;
  e.ablations.epoch_sweep.reset();
  return e;
}

// Tighter value pools concentrate the public model's candidate mass, which the
// entity-extraction attack needs at desk scale.
corpus_pools narrow_pools() {
  corpus_pools p = corpus_pools::defaults();
  const auto take = [](std::vector<std::string>& v) {
    v.resize(std::max<std::size_t>(2, v.size() / 2));
  };
  take(p.first_names);
  take(p.last_names);
  take(p.company_words);
  take(p.street_words);
  take(p.cities);
  take(p.answer_words);
  return p;
}

experiment_spec exp_overfit_ee() {
  experiment_spec e;
  e.name = "overfit-ee";
  e.corpus.n_docs = 100;  // partitions to 25 validation / 37 public / 38 private
  e.corpus.duplication_rate = 0.35;
  e.corpus.with_images = false;
  e.corpus.seed = 7;
  e.corpus.pools = narrow_pools();
  e.task = task_kind::ee_bio;
  e.modality = modality_kind::unimodal;
  e.encoder.embed_dim = 64;
  e.encoder.n_layers = 2;
  e.encoder.n_heads = 4;
  e.target_train.epochs = 300;
  e.pub_train.epochs = 300;
  e.attack.n_candidates = 192;
  e.attack.mean_weight = 0.85;  // the memorized loss signal carries the ranking
  e.attack.target_temp = 0.05;
  e.attack.n_attempts = 8;
  e.checkpoint_stride = 100;
  e.seed = 11;
  return e;
}

// Splits every word pool in half so the auxiliary family shares layout
// conventions and numerals with nothing else.
corpus_pools half_pools(bool second) {
  corpus_pools p = corpus_pools::defaults();
  const auto take = [&](std::vector<std::string>& v) {
    const std::size_t mid = v.size() / 2;
    v = second ? std::vector<std::string>(v.begin() + static_cast<long>(mid), v.end())
               : std::vector<std::string>(v.begin(), v.begin() + static_cast<long>(mid));
  };
  take(p.first_names);
  take(p.last_names);
  take(p.company_words);
  take(p.company_kinds);
  take(p.street_words);
  take(p.cities);
  take(p.answer_words);
  return p;
}

experiment_spec exp_aux_shift_ee() {
  experiment_spec e;
  e.name = "aux-shift-ee";
  e.corpus.n_docs = 64;
  e.corpus.form_fraction = 1.0;  // private side: forms only
  e.corpus.with_images = false;
  e.corpus.seed = 9;
  e.corpus.pools = half_pools(false);
  corpus_spec aux;
  aux.n_docs = 64;
  aux.form_fraction = 0.0;  // public side: receipts only, disjoint word pools
  aux.with_images = false;
  aux.seed = 10;
  aux.pools = half_pools(true);
  e.aux_corpus = aux;
  e.task = task_kind::ee_bio;
  e.modality = modality_kind::unimodal;
  e.encoder.embed_dim = 32;
  e.encoder.n_layers = 1;
  e.encoder.n_heads = 2;
  e.target_train.epochs = 300;
  e.pub_train.epochs = 120;
  e.attack.n_candidates = 48;
  e.ablations.aux_shift = true;
  e.checkpoint_stride = 100;
  e.seed = 13;
  return e;
}

struct staged_run {
  run_paths paths;
  std::uint64_t hash = 0;
  bool fresh = false;     // any stage actually computed in this invocation
  double spent_s = 0.0;   // wall time of the computed stages
};

staged_run ensure_run(const experiment_spec& exp, bool with_attack) {
  staged_run r;
  r.hash = experiment_hash(exp);
  r.paths.root = accept_root() / (exp.name + "-" + to_hex(r.hash));
  fs::create_directories(r.paths.root);
  const auto t0 = clock_type::now();
  if (!fs::exists(r.paths.corpus_file())) {
    cmd_generate(exp, r.paths, false);
    r.fresh = true;
  }
  const bool trained = fs::exists(r.paths.train_dir("target") / "latest.txt") &&
                       fs::exists(r.paths.train_dir("pub") / "latest.txt");
  cmd_train(exp, r.paths, false, /*resume=*/true);
  if (!trained) r.fresh = true;
  if (with_attack && !fs::exists(r.paths.attack_dir() / "manifest.txt")) {
    cmd_attack(exp, r.paths, false);
    r.fresh = true;
  }
  r.spent_s = secs_since(t0);
  return r;
}

std::vector<document> private_docs_of(const experiment_spec& exp, const run_paths& paths) {
  const bool visual = exp.modality == modality_kind::bimodal;
  std::uint64_t h = 0;
  const std::vector<document> docs = load_corpus_jsonl(paths.corpus_file(), visual, &h);
  return partition(docs, exp.corpus.ratios, exp.corpus.seed).train_pri;
}

checkpoint final_target(const experiment_spec& exp, const run_paths& paths) {
  return load_checkpoint(paths.ckpt_file("target", exp.target_train.epochs));
}

checkpoint best_pub(const run_paths& paths) {
  return load_checkpoint(paths.best_ckpt_file("pub", select_criterion::loss));
}

double game_ipf(const game_pair& pair) {
  return improvement_factor(score_one_shot(pair.attack), score_one_shot(pair.baseline));
}

// ---------------------------------------------------------------------------
// Criterion 1: edit-distance metrics equal their naive reference forms.

crit_result criterion_1() {
  const auto t0 = clock_type::now();
  rng r(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<token_id> a(r.next_int(0, 15)), b;
    for (auto& t : a) t = r.next_int(5, 40);
    if (r.next_double() < 0.3) {
      b = a;
      if (!b.empty() && r.next_double() < 0.7)
        b[r.next_int(0, static_cast<int>(b.size()) - 1)] = 41;
    } else {
      b.resize(r.next_int(0, 15));
      for (auto& t : b) t = r.next_int(5, 40);
    }
    worst = std::max(worst, std::abs(levenshtein_norm(a, b) - oracle::naive_levenshtein_norm(a, b)));
    worst = std::max(worst, std::abs(jaro_winkler_norm(a, b) - oracle::naive_jaro_winkler_norm(a, b)));
  }
  const double secs = secs_since(t0);
  return {worst <= 1e-12 && secs < 10.0,
          fmt("worst deviation %.2e over 1000 pairs, %.2fs", worst, secs)};
}

// ---------------------------------------------------------------------------
// Criterion 2: ranking by reconstruction quality maximizes the curve areas,
// and improving any single field never lowers them.

struct ranked_instance {
  std::vector<token_seq> gt, rec;
};

ranked_instance random_instance(rng& r) {
  ranked_instance in;
  const int nf = r.next_int(20, 100);
  for (int i = 0; i < nf; ++i) {
    token_seq g(r.next_int(3, 15));
    for (auto& t : g) t = r.next_int(5, 40);
    token_seq c = g;
    const double corrupt = r.next_double();
    for (auto& t : c)
      if (r.next_double() < corrupt) t = 41 + r.next_int(0, 9);
    in.gt.push_back(std::move(g));
    in.rec.push_back(std::move(c));
  }
  return in;
}

void apply_order(const ranked_instance& in, const std::vector<int>& order,
                 std::vector<token_seq>& gt, std::vector<token_seq>& rec) {
  gt.clear();
  rec.clear();
  for (const int i : order) {
    gt.push_back(in.gt[i]);
    rec.push_back(in.rec[i]);
  }
}

crit_result criterion_2() {
  const auto t0 = clock_type::now();
  rng r(202);
  int checked_perms = 0, improvements = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const ranked_instance in = random_instance(r);
    const int nf = static_cast<int>(in.gt.size());

    std::vector<int> order(nf);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return hamming(in.gt[a], in.rec[a]) < hamming(in.gt[b], in.rec[b]);
    });
    std::vector<token_seq> gt, rec;
    apply_order(in, order, gt, rec);
    const curve_report best = curves(gt, rec);

    std::vector<int> perm = order;
    for (int p = 0; p < 200; ++p) {
      r.shuffle(perm);
      apply_order(in, perm, gt, rec);
      const curve_report got = curves(gt, rec);
      if (got.acc_auc > best.acc_auc + 1e-12 || got.ham_aac > best.ham_aac + 1e-12)
        return {false, fmt("instance %d: a random permutation beat the quality sort", inst)};
      ++checked_perms;
    }

    // single-field improvement monotonicity on the sorted order
    apply_order(in, order, gt, rec);
    const curve_report before = curves(gt, rec);
    for (int tries = 0; tries < 8; ++tries) {
      const int f = r.next_int(0, nf - 1);
      std::size_t wrong = gt[f].size();
      for (std::size_t j = 0; j < gt[f].size(); ++j)
        if (rec[f][j] != gt[f][j]) {
          wrong = j;
          break;
        }
      if (wrong == gt[f].size()) continue;  // already perfect
      std::vector<token_seq> rec2 = rec;
      rec2[f][wrong] = gt[f][wrong];
      const curve_report after = curves(gt, rec2);
      if (after.acc_auc < before.acc_auc - 1e-12 || after.ham_aac < before.ham_aac - 1e-12)
        return {false, fmt("instance %d: improving field %d lowered a curve area", inst, f)};
      ++improvements;
    }
  }
  const double secs = secs_since(t0);
  return {secs < 30.0, fmt("%d permutations and %d single-field improvements checked, %.2fs",
                           checked_perms, improvements, secs)};
}

// ---------------------------------------------------------------------------
// Criterion 3: loss normalization is invariant to loss rescaling.

crit_result criterion_3() {
  rng r(303);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> losses(r.next_int(4, 64));
    for (auto& v : losses) v = 0.05 + 8.0 * r.next_double();
    const auto base = loss_to_likelihood(losses, 0.3);
    for (const double c : {1e-3, 1.0, 1e3}) {
      std::vector<double> scaled = losses;
      for (auto& v : scaled) v *= c;
      const auto got = loss_to_likelihood(scaled, 0.3);
      for (std::size_t j = 0; j < base.size(); ++j)
        worst = std::max(worst, std::abs(got[j] - base[j]));
    }
  }
  return {worst <= 1e-9, fmt("worst deviation %.2e over 100 vectors x 3 scales", worst)};
}

// ---------------------------------------------------------------------------
// Criterion 4: the improvement factor of identical scores is exactly one.

crit_result criterion_4() {
  rng r(404);
  for (int i = 0; i < 100; ++i) {
    const one_shot_scores x{r.next_double(), r.next_double(), r.next_double(), r.next_double()};
    if (improvement_factor(x, x) != 1.0)
      return {false, fmt("tuple %d: identity returned %.17g", i, improvement_factor(x, x))};
  }
  return {true, "exactly 1.0 on 100 random tuples"};
}

// ---------------------------------------------------------------------------
// Criterion 5: argmax decoding equals an independent per-step recomputation.

crit_result criterion_5() {
  encoder_config enc;
  enc.embed_dim = 16;
  enc.n_layers = 1;
  enc.n_heads = 2;
  enc.vocab_size = vocabulary::default_vocab().size();
  enc.visual_enabled = false;

  checkpoint target;
  target.params = model_params::init(enc, task_kind::ee_bio, 505);
  checkpoint pub;
  pub.params = model_params::init(enc, task_kind::mlm, 506);

  corpus_spec cspec;
  cspec.n_docs = 18;
  cspec.with_images = false;
  cspec.seed = 55;
  const vocabulary vocab = vocabulary::default_vocab();
  const std::vector<document> docs = generate_corpus(cspec, vocab);

  attack_config cfg;
  cfg.n_candidates = 8;
  cfg.top_p = 1e-12;  // nucleus collapses to the argmax

  int fields = 0;
  for (const document& doc : docs) {
    for (const field& f : extract(doc)) {
      const scrubbed_field sf = scrub(doc, f);
      const scrubbed_doc& sd = sf.view;
      rng r(1);
      const auto got = reconstruct_field(model_handle(target), model_handle(pub), sd, cfg, r);

      std::vector<token_id> working = sd.doc.tokens;
      std::vector<token_id> want;
      for (int t = 1; t <= sd.k(); ++t) {
        const int pos = sd.span.start + t - 1;
        const doc_input pin{&working, &sd.doc.boxes, nullptr, false, 0};
        const matrix pl = head_logits(pub.params, forward_hidden(pub.params, pin), {pos});
        std::vector<std::pair<double, token_id>> ranked;
        for (int id = k_num_special; id < enc.vocab_size; ++id) ranked.emplace_back(-pl(0, id), id);
        std::sort(ranked.begin(), ranked.end());
        std::vector<token_id> ids;
        std::vector<double> logit_row;
        for (int i = 0; i < cfg.n_candidates; ++i) {
          ids.push_back(ranked[i].second);
          logit_row.push_back(-ranked[i].first);
        }
        const auto ghat = oracle::naive_softmax(logit_row, temp_at(cfg, t));

        std::vector<double> losses;
        for (const token_id id : ids) {
          std::vector<token_id> probe = working;
          probe[pos] = id;
          const doc_input tin{&probe, &sd.doc.boxes, nullptr, false, 0};
          const matrix tl = forward(target.params, tin);
          double loss = 0.0;
          for (int q = sd.span.start; q <= pos; ++q)
            loss += oracle::naive_ce(tl, q, bio_label_id(sd.label, q == sd.span.start));
          losses.push_back(loss);
        }
        std::vector<double> sorted = losses;
        std::sort(sorted.begin(), sorted.end());
        const double median = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
        std::vector<double> tilde;
        for (const double l : losses)
          tilde.push_back(median == 0.0 ? 0.0 : (2.0 - l / median) / cfg.target_temp);
        const auto lhat = oracle::naive_softmax(tilde);

        std::size_t best = 0;
        double best_p = -1.0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const double p = lhat[i] <= 0.0 || ghat[i] <= 0.0
                               ? 0.0
                               : std::exp(cfg.mean_weight * std::log(lhat[i]) +
                                          (1.0 - cfg.mean_weight) * std::log(ghat[i]));
          if (p > best_p) {
            best_p = p;
            best = i;
          }
        }
        want.push_back(ids[best]);
        working[pos] = ids[best];
      }
      if (got.tokens != want) return {false, fmt("field %s decoded differently", sd.field_id.c_str())};
      ++fields;
    }
  }
  return {fields >= 50, fmt("%d fields decoded identically (need >= 50)", fields)};
}

// ---------------------------------------------------------------------------
// Criterion 6: every analytic gradient matches central finite differences.

crit_result criterion_6() {
  const auto t0 = clock_type::now();
  encoder_config enc;
  enc.embed_dim = 8;
  enc.n_layers = 1;
  enc.n_heads = 2;
  enc.coord_buckets = 4;
  enc.vocab_size = 16;
  enc.visual_enabled = true;

  document doc;
  doc.tokens = {k_cls_id, 7, 8, 9, 10, k_sep_id};
  doc.boxes = {{0, 0, 40, 20},    {50, 10, 200, 40},  {210, 10, 400, 40},
               {50, 60, 300, 90}, {310, 60, 500, 90}, {900, 900, 990, 990}};
  image img;
  img.width = 16;
  img.height = 16;
  img.px.assign(16 * 16, 1.0f);
  for (int y = 1; y < 7; ++y)
    for (int x = 1; x < 7; ++x) img.px[static_cast<std::size_t>(y * 16 + x)] = 0.2f;
  doc.img = img;

  double worst = 0.0;
  std::string worst_at = "none";
  for (const task_kind task : {task_kind::mlm, task_kind::ee_bio, task_kind::ee_spade}) {
    model_params p = model_params::init(enc, task, 606);
    std::vector<int> positions;
    std::vector<int> labels;
    if (task == task_kind::mlm) {
      positions = {1, 3};
      labels = {11, 12};
    } else if (task == task_kind::ee_bio) {
      positions = {0, 1, 2, 3, 4, 5};
      labels = {0, bio_label_id(field_type::name, true), bio_label_id(field_type::name, false),
                bio_label_id(field_type::amount, true), 0, 0};
    } else {
      positions = {0, 1, 2, 3, 4, 5};
      labels = {6, 6, 1, 2, 6, 6};
    }
    const doc_input in{&doc.tokens, &doc.boxes, &*doc.img, false, 0};

    model_params grads = model_params::zeros_like(p);
    loss_and_backward(p, in, positions, labels, 1.0, grads);

    const auto loss_at = [&]() {
      const matrix logits = head_logits(p, forward_hidden(p, in), positions);
      double total = 0.0;
      for (std::size_t i = 0; i < positions.size(); ++i)
        total += oracle::naive_ce(logits, static_cast<int>(i), labels[i]);
      return total;
    };

    std::vector<std::pair<std::string, matrix*>> tensors;
    p.for_each_tensor([&](const std::string& name, matrix& m) { tensors.emplace_back(name, &m); });
    std::vector<std::pair<std::string, const matrix*>> grad_tensors;
    grads.for_each_tensor([&](const std::string& name, const matrix& m) {
      grad_tensors.emplace_back(name, &m);
    });

    const double h = 1e-5;
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
      matrix& m = *tensors[ti].second;
      const matrix& g = *grad_tensors[ti].second;
      for (int c = 0; c < m.cols(); ++c) {
        for (int rr = 0; rr < m.rows(); ++rr) {
          const double keep = m(rr, c);
          m(rr, c) = keep + h;
          const double up = loss_at();
          m(rr, c) = keep - h;
          const double dn = loss_at();
          m(rr, c) = keep;
          const double fd = (up - dn) / (2.0 * h);
          const double an = g(rr, c);
          const double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
          if (rel > worst) {
            worst = rel;
            worst_at = to_string(task) + "/" + tensors[ti].first;
          }
        }
      }
    }
  }
  const double secs = secs_since(t0);
  return {worst < 1e-3 && secs < 60.0,
          fmt("worst relative error %.2e at %s, %.1fs", worst, worst_at.c_str(), secs)};
}

// ---------------------------------------------------------------------------
// Criterion 7: a memorizing bimodal MLM target is attacked above baseline.

crit_result criterion_7() {
  const experiment_spec exp = exp_memorize_mlm();
  const staged_run run = ensure_run(exp, /*with_attack=*/true);
  const std::vector<document> pri = private_docs_of(exp, run.paths);
  if (pri.size() != 64) return {false, fmt("expected 64 private docs, got %zu", pri.size())};

  const checkpoint target = final_target(exp, run.paths);
  const checkpoint pub = best_pub(run.paths);
  attack_config acfg = exp.attack;
  acfg.seed = derive_seed(exp.seed, "crit7");
  const auto t0 = clock_type::now();
  const game_pair pair = run_one_shot(model_handle(target), model_handle(pub), pri, acfg,
                                      exp.mi_metric);
  const double game_secs = secs_since(t0);
  const one_shot_scores sa = score_one_shot(pair.attack);
  const one_shot_scores sb = score_one_shot(pair.baseline);
  const double ipf = improvement_factor(sa, sb);

  const bool in_budget = !run.fresh || (run.spent_s + game_secs) < 1200.0;
  return {ipf >= 1.10 && sa.pr > sb.pr && in_budget,
          fmt("ipf %.3f (need >= 1.10), pr %.3f vs %.3f, %.0fs%s", ipf, sa.pr, sb.pr,
              run.spent_s + game_secs, run.fresh ? "" : " (stages cached)")};
}

// ---------------------------------------------------------------------------
// Criterion 8: an untrained target carries no signal.

crit_result criterion_8() {
  const experiment_spec exp = exp_memorize_mlm();
  const staged_run run = ensure_run(exp, /*with_attack=*/true);
  const std::vector<document> pri = private_docs_of(exp, run.paths);
  const checkpoint pub = best_pub(run.paths);

  encoder_config enc = exp.encoder;
  enc.vocab_size = pub.params.config.vocab_size;
  enc.visual_enabled = true;
  checkpoint blank;
  blank.params = model_params::init(enc, task_kind::ee_bio, derive_seed(exp.seed, "crit8"));

  attack_config acfg = exp.attack;
  acfg.seed = derive_seed(exp.seed, "crit8-game");
  const game_pair pair = run_one_shot(model_handle(blank), model_handle(pub), pri, acfg,
                                      exp.mi_metric);
  const double ipf = game_ipf(pair);
  return {ipf >= 0.9 && ipf <= 1.1, fmt("ipf %.3f against random weights (need 0.9..1.1)", ipf)};
}

// ---------------------------------------------------------------------------
// Criterion 9: an overfit entity-extraction target leaks.

crit_result criterion_9() {
  const experiment_spec exp = exp_overfit_ee();
  const staged_run run = ensure_run(exp, /*with_attack=*/false);
  const std::vector<document> pri = private_docs_of(exp, run.paths);
  const checkpoint target = final_target(exp, run.paths);
  const checkpoint pub = best_pub(run.paths);

  attack_config acfg = exp.attack;
  acfg.seed = derive_seed(exp.seed, "crit9");
  const auto t0 = clock_type::now();
  const game_pair one = run_one_shot(model_handle(target), model_handle(pub), pri, acfg,
                                     exp.mi_metric);
  const one_shot_scores sa = score_one_shot(one.attack);
  const one_shot_scores sb = score_one_shot(one.baseline);
  const double ipf = improvement_factor(sa, sb);

  const game_pair multi = run_multi_shot(model_handle(target), model_handle(pub), pri, acfg,
                                         exp.mi_metric);
  const curve_report curve = curves(multi.attack);
  const double attack_secs = secs_since(t0);

  const bool in_budget = !run.fresh || (run.spent_s + attack_secs) < 1800.0;
  return {ipf >= 1.05 && curve.acc_at_5pct >= curve.acc_at_100 && in_budget,
          fmt("ipf %.3f (need >= 1.05), pr %.3f vs %.3f, AccAt(0.05) %.3f vs AccAt(1.0) %.3f, "
              "%.0fs%s",
              ipf, sa.pr, sb.pr, curve.acc_at_5pct, curve.acc_at_100, run.spent_s + attack_secs,
              run.fresh ? "" : " (stages cached)")};
}

// ---------------------------------------------------------------------------
// Criterion 10: ablation directions.

crit_result criterion_10a() {
  const experiment_spec exp = exp_memorize_mlm();
  const staged_run run = ensure_run(exp, /*with_attack=*/true);
  const std::vector<document> pri = private_docs_of(exp, run.paths);
  const checkpoint target = final_target(exp, run.paths);
  const checkpoint pub = best_pub(run.paths);

  attack_config acfg = exp.attack;
  acfg.seed = derive_seed(exp.seed, "crit10a");
  const game_pair intact = run_one_shot(model_handle(target), model_handle(pub), pri, acfg,
                                        exp.mi_metric);
  const model_handle noisy(target, true, derive_seed(exp.seed, "crit10a-noise"));
  const game_pair withnoise = run_one_shot(noisy, model_handle(pub), pri, acfg, exp.mi_metric);
  const double ipf_intact = game_ipf(intact);
  const double ipf_noise = game_ipf(withnoise);
  return {ipf_noise < ipf_intact,
          fmt("ipf %.3f intact vs %.3f under visual noise (need strict drop)", ipf_intact,
              ipf_noise)};
}

crit_result criterion_10b() {
  const experiment_spec on = exp_memorize_mlm();
  const staged_run run_on = ensure_run(on, /*with_attack=*/true);
  const experiment_spec off = exp_memorize_mlm_flat();
  const staged_run run_off = ensure_run(off, /*with_attack=*/false);

  attack_config acfg = on.attack;
  acfg.seed = derive_seed(on.seed, "crit10b");

  const std::vector<document> pri_on = private_docs_of(on, run_on.paths);
  const checkpoint t_on = final_target(on, run_on.paths);
  const game_pair g_on = run_one_shot(model_handle(t_on), model_handle(best_pub(run_on.paths)),
                                      pri_on, acfg, on.mi_metric);

  const std::vector<document> pri_off = private_docs_of(off, run_off.paths);
  // position-blind MLM accuracy plateaus far below the layout-aware model, so the closest
  // attainable accuracy match is the layout-off model at its own best-accuracy checkpoint
  const checkpoint t_off =
      load_checkpoint(run_off.paths.best_ckpt_file("target", select_criterion::precision));
  const game_pair g_off = run_one_shot(model_handle(t_off), model_handle(best_pub(run_off.paths)),
                                       pri_off, acfg, off.mi_metric);

  const double ipf_on = game_ipf(g_on);
  const double ipf_off = game_ipf(g_off);
  const bool in_budget = !run_off.fresh || run_off.spent_s < 1800.0;
  return {ipf_off < ipf_on && in_budget,
          fmt("ipf %.3f layout-aware (ep %d, val acc %.3f) vs %.3f layout-off (ep %d, val acc "
              "%.3f)",
              ipf_on, t_on.epoch, t_on.val_accuracy, ipf_off, t_off.epoch, t_off.val_accuracy)};
}

crit_result criterion_10c() {
  const experiment_spec exp = exp_aux_shift_ee();
  const staged_run run = ensure_run(exp, /*with_attack=*/false);
  const std::vector<document> pri = private_docs_of(exp, run.paths);
  const checkpoint target = final_target(exp, run.paths);
  const checkpoint pub = best_pub(run.paths);

  attack_config acfg = exp.attack;
  acfg.seed = derive_seed(exp.seed, "crit10c");
  const game_pair pair = run_one_shot(model_handle(target), model_handle(pub), pri, acfg,
                                      exp.mi_metric);
  const double ipf = game_ipf(pair);
  const bool in_budget = !run.fresh || run.spent_s < 1800.0;
  return {ipf >= 0.9 && ipf <= 1.1 && in_budget,
          fmt("ipf %.3f with a disjoint-family public model (need 0.9..1.1), %.0fs%s", ipf,
              run.spent_s, run.fresh ? "" : " (stages cached)")};
}

// ---------------------------------------------------------------------------
// Criterion 11: the epoch sweep shows the memorization onset.

std::vector<std::vector<double>> read_numeric_csv(const fs::path& file) {
  std::ifstream f(file);
  require_data(f.is_open(), "cannot open " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#' || (line[0] >= 'a' && line[0] <= 'z')) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

crit_result criterion_11() {
  const experiment_spec exp = exp_memorize_mlm();
  const staged_run run = ensure_run(exp, /*with_attack=*/true);

  // sweep.csv rows: epoch, val_loss, val_accuracy, ipf, pr_attack, pr_baseline
  const auto sweep = read_numeric_csv(run.paths.attack_dir() / "sweep.csv");
  if (sweep.size() < 3) return {false, fmt("sweep has only %zu rows", sweep.size())};

  // metrics.csv rows: epoch, train_loss, val_loss, val_accuracy
  const auto metrics = read_numeric_csv(run.paths.metrics_csv("target"));
  int best_epoch = 0;
  double best_loss = 1e300;
  for (const auto& m : metrics)
    if (m[2] < best_loss) {
      best_loss = m[2];
      best_epoch = static_cast<int>(m[0]);
    }

  double ipf_first = 0.0, ipf_last = 0.0;
  int first_epoch = 0, last_epoch = 0;
  bool wins_before_best = false;
  int win_epoch = 0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const int epoch = static_cast<int>(sweep[i][0]);
    const double ipf = sweep[i][3];
    if (i == 0) {
      first_epoch = epoch;
      ipf_first = ipf;
    }
    if (i + 1 == sweep.size()) {
      last_epoch = epoch;
      ipf_last = ipf;
    }
    if (!wins_before_best && epoch < best_epoch && ipf > 1.0) {
      wins_before_best = true;
      win_epoch = epoch;
    }
  }
  return {ipf_last > ipf_first && wins_before_best && first_epoch == 1,
          fmt("ipf %.3f @epoch %d -> %.3f @epoch %d; beats baseline at epoch %d, best val at %d",
              ipf_first, first_epoch, ipf_last, last_epoch, win_epoch, best_epoch)};
}

// ---------------------------------------------------------------------------
// Criterion 12: the empirical mask rate sits near its nominal value.

crit_result criterion_12() {
  corpus_spec cspec;
  cspec.n_docs = 100;
  cspec.with_images = false;
  cspec.seed = 1212;
  const vocabulary vocab = vocabulary::default_vocab();
  const std::vector<document> docs = generate_corpus(cspec, vocab);

  rng r(1212);
  long long total = 0, masked = 0;
  while (total < 100000) {
    for (const document& doc : docs) {
      const train_example ex = make_targets(doc, task_kind::mlm, 0.15, r);
      total += static_cast<long long>(doc.tokens.size());
      masked += static_cast<long long>(ex.positions.size());
      if (total >= 100000) break;
    }
  }
  const double frac = static_cast<double>(masked) / static_cast<double>(total);
  return {frac >= 0.13 && frac <= 0.17,
          fmt("mask fraction %.4f over %lld tokens (need 0.13..0.17)", frac, total)};
}

struct criterion {
  const char* id;
  const char* what;
  crit_result (*fn)();
};

const criterion k_criteria[] = {
    {"1", "edit-distance metrics match naive oracles", criterion_1},
    {"2", "quality-sorted curves dominate permutations; improvements are monotone", criterion_2},
    {"3", "loss normalization is scale invariant", criterion_3},
    {"4", "improvement factor identity is exact", criterion_4},
    {"5", "argmax decoding matches the per-step oracle", criterion_5},
    {"6", "analytic gradients match finite differences", criterion_6},
    {"7", "memorizing bimodal mlm target is attacked above baseline", criterion_7},
    {"8", "untrained target yields no signal", criterion_8},
    {"9", "overfit entity-extraction target leaks", criterion_9},
    {"10a", "visual-noise ablation lowers the attack", criterion_10a},
    {"10b", "layout-blind target lowers the attack", criterion_10b},
    {"10c", "disjoint-family public model disarms the attack", criterion_10c},
    {"11", "epoch sweep shows memorization onset", criterion_11},
    {"12", "empirical mask rate is nominal", criterion_12},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) only.emplace_back(argv[i]);

  int failures = 0;
  for (const criterion& c : k_criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    crit_result res;
    try {
      res = c.fn();
    } catch (const std::exception& e) {
      res = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %-3s %-4s %s (%s)\n", c.id, res.pass ? "PASS" : "FAIL", c.what,
                res.detail.c_str());
    std::fflush(stdout);
    failures += res.pass ? 0 : 1;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
