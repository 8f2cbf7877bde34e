#include "scrublab/experiment.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

namespace scrublab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  require_data(j.is_object(), what + " must be a json object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    require_data(allowed.count(key) != 0, "unknown key in " + what + ": " + key);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

json pools_to_json(const corpus_pools& p) {
  json j;
  j["first_names"] = p.first_names;
  j["last_names"] = p.last_names;
  j["company_words"] = p.company_words;
  j["company_kinds"] = p.company_kinds;
  j["company_suffixes"] = p.company_suffixes;
  j["street_prefixes"] = p.street_prefixes;
  j["street_words"] = p.street_words;
  j["cities"] = p.cities;
  j["form_titles"] = p.form_titles;
  j["answer_words"] = p.answer_words;
  return j;
}

corpus_pools pools_from_json(const json& j) {
  check_keys(j,
             {"first_names", "last_names", "company_words", "company_kinds", "company_suffixes",
              "street_prefixes", "street_words", "cities", "form_titles", "answer_words"},
             "pools");
  corpus_pools p = corpus_pools::defaults();
  if (j.contains("first_names")) p.first_names = j.at("first_names").get<std::vector<std::string>>();
  if (j.contains("last_names")) p.last_names = j.at("last_names").get<std::vector<std::string>>();
  if (j.contains("company_words"))
    p.company_words = j.at("company_words").get<std::vector<std::string>>();
  if (j.contains("company_kinds"))
    p.company_kinds = j.at("company_kinds").get<std::vector<std::string>>();
  if (j.contains("company_suffixes"))
    p.company_suffixes = j.at("company_suffixes").get<std::vector<std::string>>();
  if (j.contains("street_prefixes"))
    p.street_prefixes = j.at("street_prefixes").get<std::vector<std::string>>();
  if (j.contains("street_words"))
    p.street_words = j.at("street_words").get<std::vector<std::string>>();
  if (j.contains("cities")) p.cities = j.at("cities").get<std::vector<std::string>>();
  if (j.contains("form_titles")) p.form_titles = j.at("form_titles").get<std::vector<std::string>>();
  if (j.contains("answer_words"))
    p.answer_words = j.at("answer_words").get<std::vector<std::string>>();
  return p;
}

json corpus_to_json(const corpus_spec& s) {
  json j;
  j["n_docs"] = s.n_docs;
  j["form_fraction"] = s.form_fraction;
  j["duplication_rate"] = s.duplication_rate;
  j["ratios"] = {s.ratios.valid, s.ratios.train_pub, s.ratios.train_pri};
  j["seed"] = s.seed;
  j["max_doc_tokens"] = s.max_doc_tokens;
  j["with_images"] = s.with_images;
  j["exclude_company_kind"] = s.exclude_company_kind;
  j["exclude_date_year"] = s.exclude_date_year;
  j["pools"] = pools_to_json(s.pools);
  return j;
}

corpus_spec corpus_from_json(const json& j) {
  check_keys(j,
             {"n_docs", "form_fraction", "duplication_rate", "ratios", "seed", "max_doc_tokens",
              "with_images", "exclude_company_kind", "exclude_date_year", "pools"},
             "corpus spec");
  corpus_spec s;
  s.n_docs = get_or(j, "n_docs", s.n_docs);
  s.form_fraction = get_or(j, "form_fraction", s.form_fraction);
  s.duplication_rate = get_or(j, "duplication_rate", s.duplication_rate);
  if (j.contains("ratios")) {
    const auto r = j.at("ratios").get<std::vector<double>>();
    require_data(r.size() == 3, "ratios must hold three entries");
    s.ratios = {r[0], r[1], r[2]};
  }
  s.seed = get_or(j, "seed", s.seed);
  s.max_doc_tokens = get_or(j, "max_doc_tokens", s.max_doc_tokens);
  s.with_images = get_or(j, "with_images", s.with_images);
  s.exclude_company_kind = get_or(j, "exclude_company_kind", s.exclude_company_kind);
  s.exclude_date_year = get_or(j, "exclude_date_year", s.exclude_date_year);
  if (j.contains("pools")) s.pools = pools_from_json(j.at("pools"));
  s.validate();
  return s;
}

json encoder_to_json(const encoder_config& c) {
  json j;
  j["embed_dim"] = c.embed_dim;
  j["n_layers"] = c.n_layers;
  j["n_heads"] = c.n_heads;
  j["max_seq_len"] = c.max_seq_len;
  j["coord_buckets"] = c.coord_buckets;
  return j;
}

encoder_config encoder_from_json(const json& j) {
  check_keys(j, {"embed_dim", "n_layers", "n_heads", "max_seq_len", "coord_buckets"}, "encoder");
  encoder_config c;
  c.embed_dim = get_or(j, "embed_dim", c.embed_dim);
  c.n_layers = get_or(j, "n_layers", c.n_layers);
  c.n_heads = get_or(j, "n_heads", c.n_heads);
  c.max_seq_len = get_or(j, "max_seq_len", c.max_seq_len);
  c.coord_buckets = get_or(j, "coord_buckets", c.coord_buckets);
  return c;
}

json stage_to_json(const stage_train_cfg& s) {
  json j;
  j["epochs"] = s.epochs;
  j["batch_size"] = s.batch_size;
  j["learning_rate"] = s.learning_rate;
  j["mask_rate"] = s.mask_rate;
  return j;
}

stage_train_cfg stage_from_json(const json& j, const char* what) {
  check_keys(j, {"epochs", "batch_size", "learning_rate", "mask_rate"}, what);
  stage_train_cfg s;
  s.epochs = get_or(j, "epochs", s.epochs);
  s.batch_size = get_or(j, "batch_size", s.batch_size);
  s.learning_rate = get_or(j, "learning_rate", s.learning_rate);
  s.mask_rate = get_or(j, "mask_rate", s.mask_rate);
  return s;
}

json attack_to_json(const attack_config& a) {
  json j;
  j["n_candidates"] = a.n_candidates;
  j["pub_temp_start"] = a.pub_temp_start;
  j["pub_temp_end"] = a.pub_temp_end;
  j["pub_decay_steps"] = a.pub_decay_steps;
  j["target_temp"] = a.target_temp;
  j["mean_kind"] = to_string(a.mean);
  j["mean_weight"] = a.mean_weight;
  j["top_p"] = a.top_p;
  j["n_attempts"] = a.n_attempts;
  j["loss_scope"] = to_string(a.scope);
  return j;
}

attack_config attack_from_json(const json& j) {
  check_keys(j,
             {"n_candidates", "pub_temp_start", "pub_temp_end", "pub_decay_steps", "target_temp",
              "mean_kind", "mean_weight", "top_p", "n_attempts", "loss_scope"},
             "attack");
  attack_config a;
  a.n_candidates = get_or(j, "n_candidates", a.n_candidates);
  a.pub_temp_start = get_or(j, "pub_temp_start", a.pub_temp_start);
  a.pub_temp_end = get_or(j, "pub_temp_end", a.pub_temp_end);
  a.pub_decay_steps = get_or(j, "pub_decay_steps", a.pub_decay_steps);
  a.target_temp = get_or(j, "target_temp", a.target_temp);
  if (j.contains("mean_kind")) a.mean = mean_kind_from_string(j.at("mean_kind").get<std::string>());
  a.mean_weight = get_or(j, "mean_weight", a.mean_weight);
  a.top_p = get_or(j, "top_p", a.top_p);
  a.n_attempts = get_or(j, "n_attempts", a.n_attempts);
  if (j.contains("loss_scope"))
    a.scope = loss_scope_from_string(j.at("loss_scope").get<std::string>());
  a.validate();
  return a;
}

json ablations_to_json(const ablation_cfg& a) {
  json j;
  j["layout_off"] = a.layout_off;
  j["visual_noise"] = a.visual_noise;
  if (a.epoch_sweep) {
    j["epoch_sweep"] = {{"stride", a.epoch_sweep->stride},
                        {"field_fraction", a.epoch_sweep->field_fraction}};
  } else {
    j["epoch_sweep"] = nullptr;
  }
  j["aux_shift"] = a.aux_shift;
  return j;
}

ablation_cfg ablations_from_json(const json& j) {
  check_keys(j, {"layout_off", "visual_noise", "epoch_sweep", "aux_shift"}, "ablations");
  ablation_cfg a;
  a.layout_off = get_or(j, "layout_off", false);
  a.visual_noise = get_or(j, "visual_noise", false);
  a.aux_shift = get_or(j, "aux_shift", false);
  if (j.contains("epoch_sweep") && !j.at("epoch_sweep").is_null()) {
    const json& e = j.at("epoch_sweep");
    check_keys(e, {"stride", "field_fraction"}, "epoch_sweep");
    epoch_sweep_cfg cfg;
    cfg.stride = get_or(e, "stride", cfg.stride);
    cfg.field_fraction = get_or(e, "field_fraction", cfg.field_fraction);
    require_data(cfg.stride >= 1, "epoch_sweep stride must be positive");
    require_data(cfg.field_fraction > 0.0 && cfg.field_fraction <= 1.0,
                 "epoch_sweep field_fraction must be in (0,1]");
    a.epoch_sweep = cfg;
  }
  return a;
}

json experiment_to_json(const experiment_spec& e) {
  json j;
  j["name"] = e.name;
  j["corpus"] = corpus_to_json(e.corpus);
  j["aux_corpus"] = e.aux_corpus ? corpus_to_json(*e.aux_corpus) : json(nullptr);
  j["task"] = to_string(e.task);
  j["criterion"] = to_string(e.criterion);
  j["modality"] = to_string(e.modality);
  j["variant"] = to_string(e.variant);
  j["mi_metric"] = to_string(e.mi_metric);
  j["encoder"] = encoder_to_json(e.encoder);
  j["target_train"] = stage_to_json(e.target_train);
  j["pub_train"] = stage_to_json(e.pub_train);
  j["attack"] = attack_to_json(e.attack);
  j["ablations"] = ablations_to_json(e.ablations);
  j["checkpoint_stride"] = e.checkpoint_stride;
  j["seed"] = e.seed;
  return j;
}

corpus_spec corpus_from_ref(const json& v, const fs::path& base_dir) {
  if (v.is_string()) {
    fs::path p = v.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return load_corpus_spec(p);
  }
  return corpus_from_json(v);
}

std::string backbone_label(const encoder_config& c) {
  return "enc-d" + std::to_string(c.embed_dim) + "-l" + std::to_string(c.n_layers) + "-h" +
         std::to_string(c.n_heads);
}

std::string data_label(const corpus_spec& s) {
  std::string kind = "mixed";
  if (s.form_fraction >= 1.0) kind = "forms";
  else if (s.form_fraction <= 0.0) kind = "receipts";
  return kind + "-n" + std::to_string(s.n_docs);
}

void refuse_overwrite(const fs::path& marker, bool force, const char* stage) {
  if (force || !fs::exists(marker)) return;
  throw data_error(std::string(stage) + " output already exists (" + marker.string() +
                   "); pass --force to overwrite");
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct epoch_metrics_row {
  int epoch;
  double train_loss, val_loss, val_accuracy;
};

void write_metrics_csv(const fs::path& file, const std::vector<epoch_metrics_row>& rows,
                       std::uint64_t spec_hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write metrics: " + file.string());
  f << "# spec_hash=" << to_hex(spec_hash) << "\n";
  f << "epoch,train_loss,val_loss,val_accuracy\n";
  for (const auto& r : rows)
    f << r.epoch << "," << num(r.train_loss) << "," << num(r.val_loss) << ","
      << num(r.val_accuracy) << "\n";
  require_data(static_cast<bool>(f), "metrics write failed: " + file.string());
}

std::vector<epoch_metrics_row> read_metrics_csv(const fs::path& file) {
  std::ifstream f(file);
  require_data(f.is_open(), "cannot open metrics: " + file.string());
  std::vector<epoch_metrics_row> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("epoch,", 0) == 0) continue;
    epoch_metrics_row r{};
    require_data(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &r.epoch, &r.train_loss, &r.val_loss,
                             &r.val_accuracy) == 4,
                 "bad metrics row: " + line);
    rows.push_back(r);
  }
  return rows;
}

// Per-role training with epoch-file emission, best tracking, and resume.
void train_role(const experiment_spec& exp, const run_paths& paths, const std::string& role,
                task_kind task, const stage_train_cfg& stage, const encoder_config& enc,
                const std::vector<document>& train_docs, const std::vector<document>& val_docs,
                std::uint64_t seed, bool noise, std::uint64_t spec_hash, bool force, bool resume) {
  const fs::path dir = paths.train_dir(role);
  fs::create_directories(dir);

  train_config cfg;
  cfg.task = task;
  cfg.epochs = stage.epochs;
  cfg.batch_size = stage.batch_size;
  cfg.learning_rate = stage.learning_rate;
  cfg.mask_rate = stage.mask_rate;
  cfg.seed = seed;
  cfg.visual_noise_ablation = noise;
  cfg.validate();
  const int total = cfg.effective_epochs();

  checkpoint resume_ck;
  adam_state resume_opt;
  bool resuming = false;
  std::vector<epoch_metrics_row> rows;
  if (resume && fs::exists(dir / "latest.txt")) {
    std::ifstream lf(dir / "latest.txt");
    int last = 0;
    lf >> last;
    require_data(last >= 1, "bad latest.txt in " + dir.string());
    if (last >= total) return;
    resume_ck = load_checkpoint(paths.ckpt_file(role, last));
    require_data(resume_ck.spec_hash == spec_hash, "resume checkpoint from a different spec");
    resume_opt = load_adam_state(paths.opt_file(role), resume_ck.params);
    resuming = true;
    for (const auto& r : read_metrics_csv(paths.metrics_csv(role)))
      if (r.epoch <= last) rows.push_back(r);
  } else if (!resume) {
    // under --resume a role without a completion marker is crash debris and
    // is restarted from scratch
    refuse_overwrite(paths.metrics_csv(role), force, "train");
  }

  // Best checkpoints are rewritten whenever they improve so an interrupted
  // run resumes with its best-so-far intact.
  const fs::path best_loss_file = paths.best_ckpt_file(role, select_criterion::loss);
  const fs::path best_prec_file = paths.best_ckpt_file(role, select_criterion::precision);
  checkpoint best_loss, best_prec;
  bool have_best = false;
  if (resuming && fs::exists(best_loss_file) && fs::exists(best_prec_file)) {
    best_loss = load_checkpoint(best_loss_file);
    best_prec = load_checkpoint(best_prec_file);
    have_best = true;
  }

  adam_state opt_final;
  const auto sink = [&](const checkpoint& raw) {
    checkpoint ck = raw;
    ck.spec_hash = spec_hash;
    rows.push_back({ck.epoch, ck.train_loss, ck.val_loss, ck.val_accuracy});
    const bool keep = ck.epoch == 1 || ck.epoch == total || ck.epoch % exp.checkpoint_stride == 0;
    if (keep) save_checkpoint(ck, paths.ckpt_file(role, ck.epoch));
    if (!have_best || ck.val_loss < best_loss.val_loss) {
      best_loss = ck;
      save_checkpoint(best_loss, best_loss_file);
    }
    if (!have_best || ck.val_accuracy > best_prec.val_accuracy) {
      best_prec = ck;
      save_checkpoint(best_prec, best_prec_file);
    }
    have_best = true;
    write_metrics_csv(paths.metrics_csv(role), rows, spec_hash);
  };

  train(cfg, enc, train_docs, val_docs, sink, resuming ? &resume_ck : nullptr,
        resuming ? &resume_opt : nullptr, &opt_final);

  // latest.txt is written only after the optimizer state lands so the
  // (checkpoint, adam) pair it names is always consistent.
  save_adam_state(opt_final, paths.opt_file(role));
  std::ofstream lf(dir / "latest.txt");
  lf << total << "\n";
}

}  // namespace

std::string to_string(variant_kind v) {
  return v == variant_kind::one_shot ? "one_shot" : "multi_shot";
}

variant_kind variant_kind_from_string(std::string_view s) {
  if (s == "one_shot") return variant_kind::one_shot;
  if (s == "multi_shot") return variant_kind::multi_shot;
  throw usage_error("unknown variant: " + std::string(s));
}

std::string to_string(modality_kind m) {
  return m == modality_kind::unimodal ? "unimodal" : "bimodal";
}

modality_kind modality_kind_from_string(std::string_view s) {
  if (s == "unimodal") return modality_kind::unimodal;
  if (s == "bimodal") return modality_kind::bimodal;
  throw usage_error("unknown modality: " + std::string(s));
}

corpus_spec corpus_spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw data_error("bad corpus spec json: " + std::string(e.what()));
  }
  return corpus_from_json(j);
}

corpus_spec load_corpus_spec(const std::filesystem::path& file) {
  std::ifstream f(file);
  require_data(f.is_open(), "cannot open corpus spec: " + file.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return corpus_spec_from_json_text(text);
}

std::uint64_t experiment_hash(const experiment_spec& exp) {
  return fnv1a64(experiment_to_json(exp).dump());
}

experiment_spec load_experiment(const std::filesystem::path& file, std::uint64_t* spec_hash_out) {
  std::ifstream f(file);
  require_data(f.is_open(), "cannot open experiment spec: " + file.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw data_error("bad experiment json: " + std::string(e.what()));
  }
  check_keys(j,
             {"name", "corpus_spec", "aux_corpus_spec", "task", "criterion", "modality", "variant",
              "mi_metric", "encoder", "target_train", "pub_train", "attack", "ablations",
              "checkpoint_stride", "seed"},
             "experiment");
  experiment_spec e;
  require_data(j.contains("name"), "experiment needs a name");
  e.name = j.at("name").get<std::string>();
  require_data(!e.name.empty(), "experiment name must be non-empty");
  require_data(j.contains("corpus_spec"), "experiment needs a corpus_spec");
  const fs::path base = file.has_parent_path() ? file.parent_path() : fs::path(".");
  e.corpus = corpus_from_ref(j.at("corpus_spec"), base);
  if (j.contains("aux_corpus_spec") && !j.at("aux_corpus_spec").is_null())
    e.aux_corpus = corpus_from_ref(j.at("aux_corpus_spec"), base);
  if (j.contains("task")) e.task = task_kind_from_string(j.at("task").get<std::string>());
  if (j.contains("criterion"))
    e.criterion = select_criterion_from_string(j.at("criterion").get<std::string>());
  if (j.contains("modality"))
    e.modality = modality_kind_from_string(j.at("modality").get<std::string>());
  if (j.contains("variant")) e.variant = variant_kind_from_string(j.at("variant").get<std::string>());
  if (j.contains("mi_metric"))
    e.mi_metric = mi_metric_kind_from_string(j.at("mi_metric").get<std::string>());
  if (j.contains("encoder")) e.encoder = encoder_from_json(j.at("encoder"));
  if (j.contains("target_train")) e.target_train = stage_from_json(j.at("target_train"), "target_train");
  if (j.contains("pub_train")) e.pub_train = stage_from_json(j.at("pub_train"), "pub_train");
  if (j.contains("attack")) e.attack = attack_from_json(j.at("attack"));
  if (j.contains("ablations")) e.ablations = ablations_from_json(j.at("ablations"));
  e.checkpoint_stride = get_or(j, "checkpoint_stride", e.checkpoint_stride);
  require_data(e.checkpoint_stride >= 1, "checkpoint_stride must be positive");
  e.seed = get_or(j, "seed", e.seed);
  require_data(!e.ablations.aux_shift || e.aux_corpus.has_value(),
               "aux_shift needs an aux_corpus_spec");
  if (spec_hash_out) *spec_hash_out = experiment_hash(e);
  return e;
}

std::filesystem::path run_paths::ckpt_file(const std::string& role, int epoch) const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%04d.ckpt", epoch);
  return train_dir(role) / buf;
}

std::filesystem::path run_paths::best_ckpt_file(const std::string& role,
                                                select_criterion c) const {
  return train_dir(role) / ("best_" + to_string(c) + ".ckpt");
}

std::filesystem::path run_paths::metrics_csv(const std::string& role) const {
  return train_dir(role) / "metrics.csv";
}

std::filesystem::path run_paths::opt_file(const std::string& role) const {
  return train_dir(role) / "adam_latest.opt";
}

void cmd_generate(const experiment_spec& exp, const run_paths& paths, bool force) {
  const std::uint64_t hash = experiment_hash(exp);
  refuse_overwrite(paths.corpus_file(), force, "generate");
  fs::create_directories(paths.corpus_dir());

  const vocabulary vocab = vocabulary::default_vocab();
  vocab.save(paths.vocab_file());
  const std::vector<document> docs = generate_corpus(exp.corpus, vocab);
  save_corpus_jsonl(docs, paths.corpus_file(), hash,
                    exp.corpus.with_images ? paths.corpus_dir() / "images" : fs::path());

  if (exp.aux_corpus) {
    fs::create_directories(paths.aux_corpus_dir());
    const std::vector<document> aux = generate_corpus(*exp.aux_corpus, vocab);
    save_corpus_jsonl(aux, paths.aux_corpus_file(), hash,
                      exp.aux_corpus->with_images ? paths.aux_corpus_dir() / "images" : fs::path());
  }
}

void cmd_train(const experiment_spec& exp, const run_paths& paths, bool force, bool resume) {
  const std::uint64_t hash = experiment_hash(exp);
  const vocabulary vocab = vocabulary::load(paths.vocab_file());
  const bool visual = exp.modality == modality_kind::bimodal;

  std::uint64_t corpus_hash = 0;
  const std::vector<document> docs = load_corpus_jsonl(paths.corpus_file(), visual, &corpus_hash);
  require_data(corpus_hash == hash, "corpus was generated from a different spec");
  const corpus_partition parts = partition(docs, exp.corpus.ratios, exp.corpus.seed);

  encoder_config enc = exp.encoder;
  enc.vocab_size = vocab.size();
  enc.layout_enabled = !exp.ablations.layout_off;
  enc.visual_enabled = visual;

  train_role(exp, paths, "target", exp.task, exp.target_train, enc, parts.train_pri, parts.valid,
             derive_seed(exp.seed, "train_target"), exp.ablations.visual_noise, hash, force,
             resume);

  const std::vector<document>* pub_train = &parts.train_pub;
  const std::vector<document>* pub_valid = &parts.valid;
  corpus_partition aux_parts;
  std::vector<document> aux_docs;
  if (exp.ablations.aux_shift) {
    std::uint64_t aux_hash = 0;
    aux_docs = load_corpus_jsonl(paths.aux_corpus_file(), visual, &aux_hash);
    require_data(aux_hash == hash, "aux corpus was generated from a different spec");
    aux_parts = partition(aux_docs, exp.aux_corpus->ratios, exp.aux_corpus->seed);
    pub_train = &aux_parts.train_pub;
    pub_valid = &aux_parts.valid;
  }
  train_role(exp, paths, "pub", task_kind::mlm, exp.pub_train, enc, *pub_train, *pub_valid,
             derive_seed(exp.seed, "train_pub"), false, hash, force, resume);
}

namespace {

game_pair run_variant(const experiment_spec& exp, const model_handle& target,
                      const model_handle& pub, const std::vector<document>& private_docs,
                      const attack_config& acfg, const field_filter& filter, attempt_log* log,
                      int workers) {
  if (exp.variant == variant_kind::one_shot)
    return run_one_shot(target, pub, private_docs, acfg, exp.mi_metric, filter, log, workers);
  return run_multi_shot(target, pub, private_docs, acfg, exp.mi_metric, filter, log, workers);
}

void write_sweep_csv(const fs::path& file, const std::vector<std::array<double, 6>>& rows,
                     std::uint64_t hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write sweep: " + file.string());
  f << "# spec_hash=" << to_hex(hash) << "\n";
  f << "epoch,val_loss,val_accuracy,ipf,pr_attack,pr_baseline\n";
  for (const auto& r : rows)
    f << static_cast<int>(r[0]) << "," << num(r[1]) << "," << num(r[2]) << "," << num(r[3]) << ","
      << num(r[4]) << "," << num(r[5]) << "\n";
  require_data(static_cast<bool>(f), "sweep write failed: " + file.string());
}

}  // namespace

void cmd_attack(const experiment_spec& exp, const run_paths& paths, bool force, int workers) {
  const std::uint64_t hash = experiment_hash(exp);
  const fs::path dir = paths.attack_dir();
  refuse_overwrite(dir / "manifest.txt", force, "attack");
  fs::create_directories(dir);

  const bool visual = exp.modality == modality_kind::bimodal;
  std::uint64_t corpus_hash = 0;
  const std::vector<document> docs = load_corpus_jsonl(paths.corpus_file(), visual, &corpus_hash);
  require_data(corpus_hash == hash, "corpus was generated from a different spec");
  const corpus_partition parts = partition(docs, exp.corpus.ratios, exp.corpus.seed);

  const checkpoint target_ck = load_checkpoint(paths.best_ckpt_file("target", exp.criterion));
  const checkpoint pub_ck = load_checkpoint(paths.best_ckpt_file("pub", select_criterion::loss));
  require_data(target_ck.spec_hash == hash && pub_ck.spec_hash == hash,
               "checkpoints were trained from a different spec");
  require(target_ck.params.task == exp.task, "target checkpoint task mismatch");

  const model_handle target(target_ck, exp.ablations.visual_noise,
                            derive_seed(exp.seed, "attack-noise"));
  const model_handle pub(pub_ck);

  attack_config acfg = exp.attack;
  acfg.seed = derive_seed(exp.seed, "attack");

  attempt_log log;
  const game_pair pair = run_variant(exp, target, pub, parts.train_pri, acfg, {}, &log, workers);

  save_attack_manifest(acfg, dir / "manifest.txt", hash);
  save_attempts_jsonl(log.attack, dir / "attempts_attack.jsonl", hash);
  save_attempts_jsonl(log.baseline, dir / "attempts_baseline.jsonl", hash);
  save_game_result(pair.attack, dir / "results_attack.jsonl", hash);
  save_game_result(pair.baseline, dir / "results_baseline.jsonl", hash);

  json info;
  info["name"] = exp.name;
  info["backbone"] = backbone_label(exp.encoder);
  info["task"] = to_string(exp.task);
  info["data"] = data_label(exp.corpus);
  info["criterion"] = to_string(exp.criterion);
  info["modality"] = to_string(exp.modality);
  info["variant"] = to_string(exp.variant);
  info["mi_metric"] = to_string(exp.mi_metric);
  info["val_accuracy"] = target_ck.val_accuracy;
  info["target_epoch"] = target_ck.epoch;
  info["spec_hash"] = to_hex(hash);
  std::ofstream inf(paths.run_info_file());
  require_data(inf.is_open(), "cannot write run info");
  inf << info.dump(2) << "\n";

  if (exp.ablations.epoch_sweep) {
    const epoch_sweep_cfg& sw = *exp.ablations.epoch_sweep;
    const field_filter filter = [&](const std::string& field_id) {
      rng r(derive_seed(exp.seed, "sweepfields", fnv1a64(field_id)));
      return r.next_double() < sw.field_fraction;
    };
    const auto metric_rows = read_metrics_csv(paths.metrics_csv("target"));
    std::vector<std::array<double, 6>> sweep_rows;
    for (const auto& mr : metric_rows) {
      const bool sampled =
          mr.epoch == 1 || mr.epoch == metric_rows.back().epoch || mr.epoch % sw.stride == 0;
      if (!sampled) continue;
      const fs::path ck_file = paths.ckpt_file("target", mr.epoch);
      require_data(fs::exists(ck_file), "epoch sweep needs checkpoint " + ck_file.string() +
                                            "; retrain with a compatible checkpoint_stride");
      const checkpoint ck = load_checkpoint(ck_file);
      const model_handle swept(ck, exp.ablations.visual_noise,
                               derive_seed(exp.seed, "attack-noise"));
      const game_pair sp =
          run_variant(exp, swept, pub, parts.train_pri, acfg, filter, nullptr, workers);
      char sub[32];
      std::snprintf(sub, sizeof(sub), "epoch_%04d", mr.epoch);
      fs::create_directories(dir / sub);
      save_game_result(sp.attack, dir / sub / "results_attack.jsonl", hash);
      save_game_result(sp.baseline, dir / sub / "results_baseline.jsonl", hash);
      const double ipf =
          improvement_factor(score_one_shot(sp.attack), score_one_shot(sp.baseline));
      sweep_rows.push_back({static_cast<double>(mr.epoch), mr.val_loss, mr.val_accuracy, ipf,
                            score_one_shot(sp.attack).pr, score_one_shot(sp.baseline).pr});
    }
    write_sweep_csv(dir / "sweep.csv", sweep_rows, hash);
  }
}

void cmd_report(const std::vector<std::filesystem::path>& run_roots,
                const std::filesystem::path& out_dir, bool force) {
  require_data(!run_roots.empty(), "report needs at least one run");
  refuse_overwrite(out_dir / "report.csv", force, "report");
  fs::create_directories(out_dir);

  std::vector<report_row> rows;
  std::string hash_chain;
  std::uint64_t single_hash = 0;
  for (const auto& root : run_roots) {
    const run_paths paths{root};
    std::ifstream inf(paths.run_info_file());
    require_data(inf.is_open(), "missing run info: " + paths.run_info_file().string());
    json info;
    try {
      info = json::parse(inf);
    } catch (const json::exception& e) {
      throw data_error("bad run info: " + std::string(e.what()));
    }
    const std::uint64_t hash = from_hex(info.at("spec_hash").get<std::string>());

    std::uint64_t ha = 0, hb = 0;
    const game_result attack = load_game_result(paths.attack_dir() / "results_attack.jsonl", &ha);
    const game_result baseline =
        load_game_result(paths.attack_dir() / "results_baseline.jsonl", &hb);
    require_data(ha == hash && hb == hash,
                 "mixed spec hashes across artifacts of " + root.string());

    const one_shot_scores sa = score_one_shot(attack);
    const one_shot_scores sb = score_one_shot(baseline);
    const curve_report ca = curves(attack);
    const curve_report cb = curves(baseline);

    report_row row;
    row.backbone = info.at("backbone").get<std::string>();
    row.task = info.at("task").get<std::string>();
    row.data = info.at("data").get<std::string>();
    row.criterion = info.at("criterion").get<std::string>();
    row.modality = info.at("modality").get<std::string>();
    row.variant = info.at("variant").get<std::string>();
    row.val_accuracy = info.at("val_accuracy").get<double>();
    row.ipf = improvement_factor(sa, sb);
    row.ham_aac = ca.ham_aac;
    row.acc_auc = ca.acc_auc;
    row.acc_at_1pct = ca.acc_at_1pct;
    row.acc_at_5pct = ca.acc_at_5pct;
    row.acc_at_100 = ca.acc_at_100;
    rows.push_back(row);

    const std::string name = info.at("name").get<std::string>();
    write_curves_csv(ca, cb, out_dir / ("curves_" + name + ".csv"), hash);
    write_curves_svg(ca, cb, out_dir / ("curves_" + name + ".svg"), hash);
    hash_chain += to_hex(hash);
    single_hash = hash;
  }
  const std::uint64_t report_hash = run_roots.size() == 1 ? single_hash : fnv1a64(hash_chain);
  write_report_csv(rows, out_dir / "report.csv", report_hash);
}

void cmd_sweep(const std::vector<std::filesystem::path>& experiment_files,
               const std::filesystem::path& out_root, bool force) {
  require_data(!experiment_files.empty(), "sweep needs at least one experiment file");
  std::vector<fs::path> roots;
  for (const auto& file : experiment_files) {
    std::uint64_t hash = 0;
    const experiment_spec exp = load_experiment(file, &hash);
    const run_paths paths{out_root / exp.name};
    fs::create_directories(paths.root);
    cmd_generate(exp, paths, force);
    cmd_train(exp, paths, force);
    cmd_attack(exp, paths, force);
    roots.push_back(paths.root);
  }
  cmd_report(roots, out_root / "report", force);
}

}  // namespace scrublab
