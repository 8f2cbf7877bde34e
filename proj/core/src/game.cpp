#include "scrublab/game.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <thread>

#include "json.hpp"

namespace scrublab {

namespace {

using nlohmann::json;

const std::vector<double>& channel(const reconstruction_attempt& a, likelihood_source s) {
  return s == likelihood_source::target ? a.p : a.g;
}

using reconstruct_fn =
    std::function<reconstruction_attempt(const scrubbed_doc&, rng&)>;

// Shared attack/baseline loop: n attempts per field, filter, optional sort.
// Per-attempt seeds depend only on (seed, role, field_id, attempt), so the
// result is identical for any worker count.
game_result play(const std::vector<document>& docs, const reconstruct_fn& reconstruct,
                 const char* role, const attack_config& cfg, mi_metric_kind metric, int n_attempts,
                 bool sort_result, const field_filter& filter,
                 std::vector<reconstruction_attempt>* log, int workers) {
  std::vector<scrubbed_field> jobs;
  for (const auto& doc : docs) {
    for (const auto& fld : extract(doc)) {
      scrubbed_field sf = scrub(doc, fld);
      if (filter && !filter(sf.view.field_id)) continue;
      jobs.push_back(std::move(sf));
    }
  }

  std::vector<std::vector<reconstruction_attempt>> per_field(jobs.size());
  const auto run_job = [&](std::size_t i) {
    const scrubbed_field& sf = jobs[i];
    auto& attempts = per_field[i];
    attempts.reserve(n_attempts);
    for (int a = 0; a < n_attempts; ++a) {
      rng r(derive_seed(cfg.seed, role, fnv1a64(sf.view.field_id), static_cast<std::uint64_t>(a)));
      reconstruction_attempt at = reconstruct(sf.view, r);
      at.attempt = a;
      attempts.push_back(std::move(at));
    }
  };

  if (workers <= 1 || jobs.size() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    const int n_threads = std::min<int>(workers, static_cast<int>(jobs.size()));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) run_job(i);
      });
    for (auto& th : pool) th.join();
  }

  game_result res;
  res.metric = metric;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    field_record rec;
    rec.field_id = jobs[i].view.field_id;
    rec.ground_truth = jobs[i].ground_truth;
    rec.attempt = mi_filter(per_field[i], metric);
    rec.mi = mi_score(rec.attempt, metric);
    rec.rank = static_cast<int>(res.fields.size()) + 1;
    res.fields.push_back(std::move(rec));
    if (log) log->insert(log->end(), per_field[i].begin(), per_field[i].end());
  }
  if (sort_result) {
    mi_sort(res.fields, metric);
    res.sorted = true;
  }
  return res;
}

game_pair play_pair(const model_handle& target, const model_handle& pub_mlm,
                    const std::vector<document>& private_docs, const attack_config& cfg,
                    mi_metric_kind metric, int n_attempts, bool sort_result,
                    const field_filter& filter, attempt_log* log, int workers) {
  cfg.validate();
  require(workers >= 1, "workers must be positive");
  const bool mlm_target = target.params().task == task_kind::mlm;
  const reconstruct_fn attack_fn = [&](const scrubbed_doc& sd, rng& r) {
    return mlm_target ? reconstruct_field_private_mlm(target, pub_mlm, sd, cfg, r)
                      : reconstruct_field(target, pub_mlm, sd, cfg, r);
  };
  const reconstruct_fn baseline_fn = [&](const scrubbed_doc& sd, rng& r) {
    return baseline_reconstruct(pub_mlm, sd, cfg, r);
  };
  game_pair out;
  out.attack = play(private_docs, attack_fn, "attempt", cfg, metric, n_attempts, sort_result,
                    filter, log ? &log->attack : nullptr, workers);
  out.baseline = play(private_docs, baseline_fn, "baseline", cfg, metric, n_attempts, sort_result,
                      filter, log ? &log->baseline : nullptr, workers);
  return out;
}

}  // namespace

std::string to_string(mi_metric_kind k) {
  switch (k) {
    case mi_metric_kind::raw_perplexity: return "raw_perplexity";
    case mi_metric_kind::perplexity_ratio: return "perplexity_ratio";
    case mi_metric_kind::raw_and_ratio: return "raw_and_ratio";
    case mi_metric_kind::max_token_gap: return "max_token_gap";
    case mi_metric_kind::max_token_ratio: return "max_token_ratio";
  }
  throw usage_error("bad mi_metric_kind");
}

mi_metric_kind mi_metric_kind_from_string(std::string_view s) {
  if (s == "raw_perplexity") return mi_metric_kind::raw_perplexity;
  if (s == "perplexity_ratio") return mi_metric_kind::perplexity_ratio;
  if (s == "raw_and_ratio") return mi_metric_kind::raw_and_ratio;
  if (s == "max_token_gap") return mi_metric_kind::max_token_gap;
  if (s == "max_token_ratio") return mi_metric_kind::max_token_ratio;
  throw usage_error("unknown mi metric: " + std::string(s));
}

std::pair<double, double> field_likelihood_and_perplexity(const reconstruction_attempt& attempt,
                                                          likelihood_source source) {
  const auto& q = channel(attempt, source);
  require(!q.empty(), "attempt has no tokens");
  double log_lik = 0.0;
  for (const double v : q) {
    if (v <= 0.0) throw numerical_error("non-positive token likelihood");
    log_lik += std::log(v);
  }
  const double k = static_cast<double>(q.size());
  return {std::exp(log_lik), std::exp(-log_lik / k)};
}

double mi_score(const reconstruction_attempt& attempt, mi_metric_kind kind) {
  switch (kind) {
    case mi_metric_kind::raw_perplexity:
      return field_likelihood_and_perplexity(attempt, likelihood_source::public_side).second;
    case mi_metric_kind::perplexity_ratio:
      return field_likelihood_and_perplexity(attempt, likelihood_source::public_side).second /
             field_likelihood_and_perplexity(attempt, likelihood_source::target).second;
    case mi_metric_kind::raw_and_ratio: {
      const double raw =
          field_likelihood_and_perplexity(attempt, likelihood_source::public_side).second;
      const double tgt =
          field_likelihood_and_perplexity(attempt, likelihood_source::target).second;
      return raw * (raw / tgt);
    }
    case mi_metric_kind::max_token_gap: {
      require(attempt.p.size() == attempt.g.size() && !attempt.p.empty(), "mismatched channels");
      double best = attempt.p[0] - attempt.g[0];
      for (std::size_t i = 1; i < attempt.p.size(); ++i)
        best = std::max(best, attempt.p[i] - attempt.g[i]);
      return best;
    }
    case mi_metric_kind::max_token_ratio: {
      require(attempt.p.size() == attempt.g.size() && !attempt.p.empty(), "mismatched channels");
      double best = -1.0;
      for (std::size_t i = 0; i < attempt.p.size(); ++i) {
        if (attempt.g[i] == 0.0) throw numerical_error("zero public likelihood in ratio");
        best = std::max(best, attempt.p[i] / attempt.g[i]);
      }
      return best;
    }
  }
  throw usage_error("bad mi_metric_kind");
}

const reconstruction_attempt& mi_filter(const std::vector<reconstruction_attempt>& attempts,
                                        mi_metric_kind kind) {
  require(!attempts.empty(), "no attempts to filter");
  std::size_t best = 0;
  double best_score = mi_score(attempts[0], kind);
  for (std::size_t i = 1; i < attempts.size(); ++i) {
    const double s = mi_score(attempts[i], kind);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return attempts[best];
}

void mi_sort(std::vector<field_record>& records, mi_metric_kind kind) {
  for (auto& r : records) r.mi = mi_score(r.attempt, kind);
  std::stable_sort(records.begin(), records.end(),
                   [](const field_record& a, const field_record& b) { return a.mi > b.mi; });
  for (std::size_t i = 0; i < records.size(); ++i) records[i].rank = static_cast<int>(i) + 1;
}

game_pair run_one_shot(const model_handle& target, const model_handle& pub_mlm,
                       const std::vector<document>& private_docs, const attack_config& cfg,
                       mi_metric_kind metric, const field_filter& filter, attempt_log* log,
                       int workers) {
  return play_pair(target, pub_mlm, private_docs, cfg, metric, 1, false, filter, log, workers);
}

game_pair run_multi_shot(const model_handle& target, const model_handle& pub_mlm,
                         const std::vector<document>& private_docs, const attack_config& cfg,
                         mi_metric_kind metric, const field_filter& filter, attempt_log* log,
                         int workers) {
  return play_pair(target, pub_mlm, private_docs, cfg, metric, cfg.n_attempts, true, filter, log,
                   workers);
}

void save_game_result(const game_result& result, const std::filesystem::path& file,
                      std::uint64_t spec_hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write results: " + file.string());
  for (const auto& r : result.fields) {
    json j;
    j["field_id"] = r.field_id;
    j["ground_truth"] = r.ground_truth;
    j["reconstruction"] = r.attempt.tokens;
    j["mi_score"] = r.mi;
    j["rank"] = r.rank;
    j["spec_hash"] = to_hex(spec_hash);
    f << j.dump() << "\n";
  }
  require_data(static_cast<bool>(f), "results write failed: " + file.string());
}

game_result load_game_result(const std::filesystem::path& file, std::uint64_t* spec_hash_out) {
  std::ifstream f(file);
  require_data(f.is_open(), "cannot open results: " + file.string());
  game_result res;
  std::string line;
  bool have_hash = false;
  std::uint64_t hash = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw data_error("bad results line: " + std::string(e.what()));
    }
    field_record r;
    r.field_id = j.at("field_id").get<std::string>();
    r.ground_truth = j.at("ground_truth").get<std::vector<token_id>>();
    r.attempt.field_id = r.field_id;
    r.attempt.tokens = j.at("reconstruction").get<std::vector<token_id>>();
    r.mi = j.at("mi_score").get<double>();
    r.rank = j.at("rank").get<int>();
    const std::uint64_t h = from_hex(j.at("spec_hash").get<std::string>());
    if (have_hash) {
      require_data(h == hash, "mixed spec hashes inside " + file.string());
    } else {
      hash = h;
      have_hash = true;
    }
    res.fields.push_back(std::move(r));
  }
  std::stable_sort(res.fields.begin(), res.fields.end(),
                   [](const field_record& a, const field_record& b) { return a.rank < b.rank; });
  res.sorted = true;
  if (spec_hash_out) *spec_hash_out = hash;
  return res;
}

}  // namespace scrublab
