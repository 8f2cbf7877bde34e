#include "scrublab/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace scrublab {

namespace {

using nlohmann::json;

std::vector<double> softmax(const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    z += out[i];
  }
  for (auto& v : out) v /= z;
  return out;
}

doc_input scrubbed_input(const model_handle& h, const scrubbed_doc& sd,
                         const std::vector<token_id>& working) {
  doc_input in;
  in.tokens = &working;
  in.boxes = &sd.doc.boxes;
  in.img = sd.doc.img ? &*sd.doc.img : nullptr;
  in.visual_noise = h.visual_noise;
  in.visual_noise_seed = h.noise_seed;
  return in;
}

// Labels over the field prefix, derivable from public annotations alone.
std::vector<int> scope_labels(task_kind task, const scrubbed_doc& sd, int t, loss_scope scope,
                              int seq_len, std::vector<int>& positions) {
  const int start = sd.span.start;
  const int pos = start + t - 1;
  positions.clear();
  if (scope == loss_scope::current_token) {
    positions.push_back(pos);
  } else {
    for (int q = start; q <= pos; ++q) positions.push_back(q);
  }
  std::vector<int> labels;
  labels.reserve(positions.size());
  for (const int q : positions) {
    const int off = q - start;
    if (task == task_kind::ee_bio) {
      labels.push_back(bio_label_id(sd.label, off == 0));
    } else {
      labels.push_back(off == 0 ? seq_len : q - 1);
    }
  }
  return labels;
}

double formatted_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  require_data(used == s.size(), "bad numeric value in manifest: " + s);
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(mean_kind k) {
  return k == mean_kind::arithmetic ? "arithmetic" : "geometric";
}

mean_kind mean_kind_from_string(std::string_view s) {
  if (s == "arithmetic") return mean_kind::arithmetic;
  if (s == "geometric") return mean_kind::geometric;
  throw usage_error("unknown mean_kind: " + std::string(s));
}

std::string to_string(loss_scope s) {
  return s == loss_scope::current_token ? "current_token" : "field_so_far";
}

loss_scope loss_scope_from_string(std::string_view s) {
  if (s == "current_token") return loss_scope::current_token;
  if (s == "field_so_far") return loss_scope::field_so_far;
  throw usage_error("unknown loss_scope: " + std::string(s));
}

void attack_config::validate() const {
  require(n_candidates >= 2, "n_candidates must be at least 2");
  require(pub_temp_start > 0.0 && pub_temp_end > 0.0 && target_temp > 0.0,
          "temperatures must be positive");
  require(pub_decay_steps >= 0, "pub_decay_steps must be non-negative");
  require(mean_weight >= 0.0 && mean_weight <= 1.0, "mean_weight must be in [0,1]");
  require(top_p > 0.0 && top_p <= 1.0, "top_p must be in (0,1]");
  require(n_attempts >= 1, "n_attempts must be at least 1");
}

double temp_at(const attack_config& cfg, int t) {
  require(t >= 1, "token step is 1-based");
  const int d = cfg.pub_decay_steps;
  if (d <= 0 || t - 1 >= d) return cfg.pub_temp_end;
  const double frac = static_cast<double>(d - (t - 1)) / static_cast<double>(d);
  return cfg.pub_temp_end + (cfg.pub_temp_start - cfg.pub_temp_end) * frac;
}

std::pair<std::vector<token_id>, std::vector<double>> select_candidates(
    const model_handle& pub_mlm, const scrubbed_doc& scrubbed,
    const std::vector<token_id>& working_tokens, int t, int n_candidates) {
  const model_params& p = pub_mlm.params();
  require(p.task == task_kind::mlm, "candidate selection needs an mlm head");
  require(t >= 1 && t <= scrubbed.k(), "token step outside the field");
  const int non_special = p.config.vocab_size - k_num_special;
  require(n_candidates <= non_special, "n_candidates exceeds the non-special vocabulary");

  const doc_input in = scrubbed_input(pub_mlm, scrubbed, working_tokens);
  const matrix hidden = forward_hidden(p, in);
  const int pos = scrubbed.span.start + t - 1;
  const matrix logits = head_logits(p, hidden, {pos});

  std::vector<int> order;
  order.reserve(p.config.vocab_size);
  for (int id = k_num_special; id < p.config.vocab_size; ++id) order.push_back(id);
  std::partial_sort(order.begin(), order.begin() + n_candidates, order.end(),
                    [&](int a, int b) {
                      if (logits(0, a) != logits(0, b)) return logits(0, a) > logits(0, b);
                      return a < b;
                    });
  order.resize(n_candidates);

  std::vector<double> out_logits(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out_logits[i] = logits(0, order[i]);
  return {std::move(order), std::move(out_logits)};
}

std::vector<double> score_candidates_loss(const model_handle& target, const scrubbed_doc& scrubbed,
                                          const std::vector<token_id>& working_tokens, int t,
                                          const std::vector<token_id>& ids, field_type y,
                                          loss_scope scope) {
  const model_params& p = target.params();
  require(p.task == task_kind::ee_bio || p.task == task_kind::ee_spade,
          "loss scoring targets an entity-extraction head; use the private-mlm variant for mlm");
  require(t >= 1 && t <= scrubbed.k(), "token step outside the field");
  (void)y;

  const int n = static_cast<int>(working_tokens.size());
  std::vector<int> positions;
  const std::vector<int> labels = scope_labels(p.task, scrubbed, t, scope, n, positions);
  std::vector<int> rows(positions.size());
  std::iota(rows.begin(), rows.end(), 0);

  const int pos = scrubbed.span.start + t - 1;
  std::vector<token_id> tokens = working_tokens;
  std::vector<double> losses(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    tokens[pos] = ids[i];
    const doc_input in = scrubbed_input(target, scrubbed, tokens);
    const matrix hidden = forward_hidden(p, in);
    const matrix logits = head_logits(p, hidden, positions);
    const std::vector<double> ce = token_loss(logits, labels, rows);
    losses[i] = std::accumulate(ce.begin(), ce.end(), 0.0);
  }
  return losses;
}

std::vector<double> logits_to_likelihood(const std::vector<double>& logits, int t,
                                         const attack_config& cfg) {
  require(!logits.empty(), "empty logit set");
  const double temp = temp_at(cfg, t);
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temp;
  return softmax(scaled);
}

std::vector<double> loss_to_likelihood(const std::vector<double>& losses, double target_temp) {
  require(!losses.empty(), "empty loss set");
  require(target_temp > 0.0, "target_temp must be positive");
  std::vector<double> sorted = losses;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median =
      (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  if (median == 0.0)
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
  std::vector<double> tilde(n);
  for (std::size_t i = 0; i < n; ++i) tilde[i] = (2.0 - losses[i] / median) / target_temp;
  return softmax(tilde);
}

std::vector<double> aggregate(const std::vector<double>& pub_probs,
                              const std::vector<double>& target_probs, mean_kind kind, double w) {
  require(pub_probs.size() == target_probs.size(), "aggregate over mismatched sets");
  require(w >= 0.0 && w <= 1.0, "mean_weight must be in [0,1]");
  if (w == 0.0) return pub_probs;
  if (w == 1.0) return target_probs;

  std::vector<double> p(pub_probs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (kind == mean_kind::arithmetic) {
      p[i] = w * target_probs[i] + (1.0 - w) * pub_probs[i];
    } else if (target_probs[i] <= 0.0 || pub_probs[i] <= 0.0) {
      p[i] = 0.0;
    } else {
      p[i] = std::exp(w * std::log(target_probs[i]) + (1.0 - w) * std::log(pub_probs[i]));
    }
    z += p[i];
  }
  if (z <= 0.0) throw numerical_error("aggregated distribution vanished");
  for (auto& v : p) v /= z;
  return p;
}

std::pair<token_id, double> sample_top_p(const std::vector<token_id>& ids,
                                         const std::vector<double>& probs, double top_p, rng& r) {
  require(ids.size() == probs.size() && !ids.empty(), "ids/probs size mismatch");
  require(top_p > 0.0 && top_p <= 1.0, "top_p must be in (0,1]");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  std::size_t nucleus = 0;
  double mass = 0.0;
  for (; nucleus < order.size(); ++nucleus) {
    mass += probs[order[nucleus]];
    if (mass >= top_p) {
      ++nucleus;
      break;
    }
  }
  if (nucleus == 0 || nucleus > order.size()) nucleus = order.size();

  const double u = r.next_double() * mass;
  double acc = 0.0;
  std::size_t pick = order[nucleus - 1];
  for (std::size_t i = 0; i < nucleus; ++i) {
    acc += probs[order[i]];
    if (u < acc) {
      pick = order[i];
      break;
    }
  }
  return {ids[pick], probs[pick]};
}

namespace {

std::size_t index_of(const std::vector<token_id>& ids, token_id id) {
  const auto it = std::find(ids.begin(), ids.end(), id);
  require(it != ids.end(), "sampled id missing from candidate set");
  return static_cast<std::size_t>(it - ids.begin());
}

}  // namespace

reconstruction_attempt reconstruct_field(const model_handle& target, const model_handle& pub_mlm,
                                         const scrubbed_doc& scrubbed, const attack_config& cfg,
                                         rng& r) {
  cfg.validate();
  const task_kind task = target.params().task;
  require(task == task_kind::ee_bio || task == task_kind::ee_spade,
          "entity-extraction attack needs an ee target");

  reconstruction_attempt out;
  out.field_id = scrubbed.field_id;
  std::vector<token_id> working = scrubbed.doc.tokens;
  const int k = scrubbed.k();
  for (int t = 1; t <= k; ++t) {
    auto [ids, pub_logits] = select_candidates(pub_mlm, scrubbed, working, t, cfg.n_candidates);
    const std::vector<double> losses =
        score_candidates_loss(target, scrubbed, working, t, ids, scrubbed.label, cfg.scope);
    const std::vector<double> ghat = logits_to_likelihood(pub_logits, t, cfg);
    const std::vector<double> lhat = loss_to_likelihood(losses, cfg.target_temp);
    const std::vector<double> p = aggregate(ghat, lhat, cfg.mean, cfg.mean_weight);
    const auto [tok, sampled_p] = sample_top_p(ids, p, cfg.top_p, r);
    const std::size_t idx = index_of(ids, tok);
    working[scrubbed.span.start + t - 1] = tok;
    out.tokens.push_back(tok);
    out.p.push_back(sampled_p);
    out.g.push_back(ghat[idx]);
  }
  return out;
}

reconstruction_attempt reconstruct_field_private_mlm(const model_handle& target_mlm,
                                                     const model_handle& pub_mlm,
                                                     const scrubbed_doc& scrubbed,
                                                     const attack_config& cfg, rng& r) {
  cfg.validate();
  require(target_mlm.params().task == task_kind::mlm, "private-mlm variant needs an mlm target");

  reconstruction_attempt out;
  out.field_id = scrubbed.field_id;
  std::vector<token_id> working = scrubbed.doc.tokens;
  const int k = scrubbed.k();
  for (int t = 1; t <= k; ++t) {
    auto [ids, tgt_logits] = select_candidates(target_mlm, scrubbed, working, t, cfg.n_candidates);
    const std::vector<double> p = logits_to_likelihood(tgt_logits, t, cfg);

    // One public forward to price the same candidates for membership scoring.
    const model_params& pp = pub_mlm.params();
    require(pp.task == task_kind::mlm, "public reference must be an mlm");
    const doc_input in = scrubbed_input(pub_mlm, scrubbed, working);
    const matrix hidden = forward_hidden(pp, in);
    const int pos = scrubbed.span.start + t - 1;
    const matrix logits = head_logits(pp, hidden, {pos});
    std::vector<double> pub_logits(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) pub_logits[i] = logits(0, ids[i]);
    const std::vector<double> ghat = logits_to_likelihood(pub_logits, t, cfg);

    const auto [tok, sampled_p] = sample_top_p(ids, p, cfg.top_p, r);
    const std::size_t idx = index_of(ids, tok);
    working[pos] = tok;
    out.tokens.push_back(tok);
    out.p.push_back(sampled_p);
    out.g.push_back(ghat[idx]);
  }
  return out;
}

reconstruction_attempt baseline_reconstruct(const model_handle& pub_mlm,
                                            const scrubbed_doc& scrubbed, const attack_config& cfg,
                                            rng& r) {
  cfg.validate();
  reconstruction_attempt out;
  out.field_id = scrubbed.field_id;
  std::vector<token_id> working = scrubbed.doc.tokens;
  const int k = scrubbed.k();
  for (int t = 1; t <= k; ++t) {
    auto [ids, pub_logits] = select_candidates(pub_mlm, scrubbed, working, t, cfg.n_candidates);
    const std::vector<double> ghat = logits_to_likelihood(pub_logits, t, cfg);
    const auto [tok, sampled_p] = sample_top_p(ids, ghat, cfg.top_p, r);
    working[scrubbed.span.start + t - 1] = tok;
    out.tokens.push_back(tok);
    out.p.push_back(sampled_p);
    out.g.push_back(sampled_p);
  }
  return out;
}

void save_attack_manifest(const attack_config& cfg, const std::filesystem::path& file,
                          std::uint64_t spec_hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write manifest: " + file.string());
  f << "n_candidates=" << cfg.n_candidates << "\n";
  f << "pub_temp_start=" << format_double(cfg.pub_temp_start) << "\n";
  f << "pub_temp_end=" << format_double(cfg.pub_temp_end) << "\n";
  f << "pub_decay_steps=" << cfg.pub_decay_steps << "\n";
  f << "target_temp=" << format_double(cfg.target_temp) << "\n";
  f << "mean_kind=" << to_string(cfg.mean) << "\n";
  f << "mean_weight=" << format_double(cfg.mean_weight) << "\n";
  f << "top_p=" << format_double(cfg.top_p) << "\n";
  f << "n_attempts=" << cfg.n_attempts << "\n";
  f << "loss_scope=" << to_string(cfg.scope) << "\n";
  f << "seed=" << cfg.seed << "\n";
  f << "spec_hash=" << to_hex(spec_hash) << "\n";
  require_data(static_cast<bool>(f), "manifest write failed: " + file.string());
}

attack_config load_attack_manifest(const std::filesystem::path& file,
                                   std::uint64_t* spec_hash_out) {
  std::ifstream f(file);
  require_data(f.is_open(), "cannot open manifest: " + file.string());
  attack_config cfg;
  std::string line;
  int seen = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require_data(eq != std::string::npos, "bad manifest line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    ++seen;
    if (key == "n_candidates") cfg.n_candidates = std::stoi(val);
    else if (key == "pub_temp_start") cfg.pub_temp_start = formatted_double(val);
    else if (key == "pub_temp_end") cfg.pub_temp_end = formatted_double(val);
    else if (key == "pub_decay_steps") cfg.pub_decay_steps = std::stoi(val);
    else if (key == "target_temp") cfg.target_temp = formatted_double(val);
    else if (key == "mean_kind") cfg.mean = mean_kind_from_string(val);
    else if (key == "mean_weight") cfg.mean_weight = formatted_double(val);
    else if (key == "top_p") cfg.top_p = formatted_double(val);
    else if (key == "n_attempts") cfg.n_attempts = std::stoi(val);
    else if (key == "loss_scope") cfg.scope = loss_scope_from_string(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "spec_hash") {
      if (spec_hash_out) *spec_hash_out = from_hex(val);
      --seen;
    } else {
      throw data_error("unknown manifest key: " + key);
    }
  }
  require_data(seen == 11, "manifest missing fields: " + file.string());
  cfg.validate();
  return cfg;
}

void save_attempts_jsonl(const std::vector<reconstruction_attempt>& attempts,
                         const std::filesystem::path& file, std::uint64_t spec_hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write attempts: " + file.string());
  for (const auto& a : attempts) {
    json j;
    j["field_id"] = a.field_id;
    j["attempt"] = a.attempt;
    j["tokens"] = a.tokens;
    j["p"] = a.p;
    j["g"] = a.g;
    j["spec_hash"] = to_hex(spec_hash);
    f << j.dump() << "\n";
  }
  require_data(static_cast<bool>(f), "attempts write failed: " + file.string());
}

std::vector<reconstruction_attempt> load_attempts_jsonl(const std::filesystem::path& file,
                                                        std::uint64_t* spec_hash_out) {
  std::ifstream f(file);
  require_data(f.is_open(), "cannot open attempts: " + file.string());
  std::vector<reconstruction_attempt> out;
  std::string line;
  bool have_hash = false;
  std::uint64_t hash = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw data_error("bad attempts line: " + std::string(e.what()));
    }
    reconstruction_attempt a;
    a.field_id = j.at("field_id").get<std::string>();
    a.attempt = j.at("attempt").get<int>();
    a.tokens = j.at("tokens").get<std::vector<token_id>>();
    a.p = j.at("p").get<std::vector<double>>();
    a.g = j.at("g").get<std::vector<double>>();
    const std::uint64_t h = from_hex(j.at("spec_hash").get<std::string>());
    if (have_hash) {
      require_data(h == hash, "mixed spec hashes inside " + file.string());
    } else {
      hash = h;
      have_hash = true;
    }
    out.push_back(std::move(a));
  }
  if (spec_hash_out) *spec_hash_out = hash;
  return out;
}

}  // namespace scrublab
