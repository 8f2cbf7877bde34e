#include "scrublab/train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace scrublab {

namespace {

constexpr double k_adam_b1 = 0.9;
constexpr double k_adam_b2 = 0.999;
constexpr double k_adam_eps = 1e-8;

constexpr char k_ckpt_magic[8] = {'S', 'C', 'R', 'B', 'C', 'K', 'P', '1'};
constexpr char k_opt_magic[8] = {'S', 'C', 'R', 'B', 'O', 'P', 'T', '1'};
constexpr std::uint32_t k_ckpt_version = 1;

std::vector<matrix*> tensor_list(model_params& p) {
  std::vector<matrix*> out;
  p.for_each_tensor([&](const std::string&, matrix& m) { out.push_back(&m); });
  return out;
}

struct val_set {
  std::vector<train_example> examples;
};

val_set build_val_set(const train_config& cfg, const std::vector<document>& docs) {
  val_set vs;
  vs.examples.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    rng r(derive_seed(cfg.seed, "valmask", i));
    vs.examples.push_back(make_targets(docs[i], cfg.task, cfg.mask_rate, r));
  }
  return vs;
}

// Mean loss and argmax accuracy over all validation target positions.
void evaluate(const model_params& p, const train_config& cfg, const val_set& vs, double& loss_out,
              double& acc_out) {
  double loss_sum = 0.0;
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < vs.examples.size(); ++i) {
    const auto& ex = vs.examples[i];
    if (ex.positions.empty()) continue;
    doc_input in = ex.input();
    if (cfg.visual_noise_ablation) {
      in.visual_noise = true;
      in.visual_noise_seed = derive_seed(cfg.seed, "valnoise", i);
    }
    const matrix hidden = forward_hidden(p, in);
    const matrix logits = head_logits(p, hidden, ex.positions);
    for (std::size_t j = 0; j < ex.positions.size(); ++j) {
      const int y = ex.labels[j];
      const double m = logits.row(j).maxCoeff();
      const double lse = m + std::log((logits.row(j).array() - m).exp().sum());
      loss_sum += lse - logits(j, y);
      Eigen::Index argmax;
      logits.row(j).maxCoeff(&argmax);
      correct += (static_cast<int>(argmax) == y) ? 1u : 0u;
      ++total;
    }
  }
  loss_out = total ? loss_sum / static_cast<double>(total) : 0.0;
  acc_out = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

void write_bytes(std::ofstream& f, const void* p, std::size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& f, void* p, std::size_t n) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  require_data(static_cast<bool>(f), "truncated checkpoint file");
}

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  write_bytes(f, &v, sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  read_bytes(f, &v, sizeof(T));
  return v;
}

void write_tensors(std::ofstream& f, const model_params& p) {
  std::uint32_t count = 0;
  p.for_each_tensor([&](const std::string&, const matrix&) { ++count; });
  write_pod(f, count);
  p.for_each_tensor([&](const std::string& name, const matrix& m) {
    const auto len = static_cast<std::uint16_t>(name.size());
    write_pod(f, len);
    write_bytes(f, name.data(), name.size());
    write_pod(f, static_cast<std::uint32_t>(m.rows()));
    write_pod(f, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) write_pod(f, static_cast<float>(m(i, j)));
  });
}

void read_tensors(std::ifstream& f, model_params& p) {
  const auto count = read_pod<std::uint32_t>(f);
  std::uint32_t seen = 0;
  p.for_each_tensor([&](const std::string& name, matrix& m) {
    require_data(seen < count, "checkpoint tensor count mismatch");
    ++seen;
    const auto len = read_pod<std::uint16_t>(f);
    std::string got(len, '\0');
    read_bytes(f, got.data(), len);
    require_data(got == name, "checkpoint tensor order mismatch: " + got + " vs " + name);
    const auto rows = read_pod<std::uint32_t>(f);
    const auto cols = read_pod<std::uint32_t>(f);
    require_data(rows == static_cast<std::uint32_t>(m.rows()) &&
                     cols == static_cast<std::uint32_t>(m.cols()),
                 "checkpoint tensor shape mismatch: " + name);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = static_cast<double>(read_pod<float>(f));
  });
  require_data(seen == count, "checkpoint tensor count mismatch");
}

void write_config(std::ofstream& f, const encoder_config& c, task_kind task) {
  write_pod(f, static_cast<std::int32_t>(c.embed_dim));
  write_pod(f, static_cast<std::int32_t>(c.n_layers));
  write_pod(f, static_cast<std::int32_t>(c.n_heads));
  write_pod(f, static_cast<std::int32_t>(c.max_seq_len));
  write_pod(f, static_cast<std::int32_t>(c.coord_buckets));
  write_pod(f, static_cast<std::uint8_t>(c.layout_enabled ? 1 : 0));
  write_pod(f, static_cast<std::uint8_t>(c.visual_enabled ? 1 : 0));
  write_pod(f, static_cast<std::int32_t>(c.vocab_size));
  write_pod(f, static_cast<std::uint8_t>(task));
}

void read_config(std::ifstream& f, encoder_config& c, task_kind& task) {
  c.embed_dim = read_pod<std::int32_t>(f);
  c.n_layers = read_pod<std::int32_t>(f);
  c.n_heads = read_pod<std::int32_t>(f);
  c.max_seq_len = read_pod<std::int32_t>(f);
  c.coord_buckets = read_pod<std::int32_t>(f);
  c.layout_enabled = read_pod<std::uint8_t>(f) != 0;
  c.visual_enabled = read_pod<std::uint8_t>(f) != 0;
  c.vocab_size = read_pod<std::int32_t>(f);
  const auto t = read_pod<std::uint8_t>(f);
  require_data(t <= 2, "bad task kind in checkpoint");
  task = static_cast<task_kind>(t);
}

}  // namespace

std::string to_string(select_criterion c) {
  return c == select_criterion::precision ? "precision" : "loss";
}

select_criterion select_criterion_from_string(std::string_view s) {
  if (s == "precision") return select_criterion::precision;
  if (s == "loss") return select_criterion::loss;
  throw usage_error("unknown checkpoint criterion: " + std::string(s));
}

void train_config::validate() const {
  require(epochs >= 0, "epochs must be non-negative");
  require(batch_size > 0, "batch_size must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(mask_rate > 0.0 && mask_rate < 1.0, "mask_rate must be in (0,1)");
}

int train_config::effective_epochs() const {
  if (epochs > 0) return epochs;
  return task == task_kind::mlm ? 300 : 150;
}

adam_state adam_state::zeros_like(const model_params& p) {
  adam_state st;
  st.m = model_params::zeros_like(p);
  st.v = model_params::zeros_like(p);
  st.step = 0;
  return st;
}

void round_to_f32(model_params& p) {
  p.for_each_tensor([](const std::string&, matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = static_cast<double>(static_cast<float>(m(i, j)));
  });
}

void train(const train_config& cfg, const encoder_config& enc,
           const std::vector<document>& train_docs, const std::vector<document>& valid_docs,
           const epoch_sink& sink, const checkpoint* resume_from, const adam_state* resume_opt,
           adam_state* opt_out) {
  cfg.validate();
  enc.validate();
  require_data(!train_docs.empty(), "empty training set");
  require_data(!valid_docs.empty(), "empty validation set");

  model_params params;
  adam_state opt;
  int start_epoch = 1;
  if (resume_from) {
    require(resume_from->params.task == cfg.task, "resume checkpoint task mismatch");
    require(resume_from->params.config == enc, "resume checkpoint config mismatch");
    params = resume_from->params;
    start_epoch = resume_from->epoch + 1;
    opt = resume_opt ? *resume_opt : adam_state::zeros_like(params);
  } else {
    params = model_params::init(enc, cfg.task, cfg.seed);
    round_to_f32(params);
    opt = adam_state::zeros_like(params);
  }

  model_params grads = model_params::zeros_like(params);
  const auto tp = tensor_list(params);
  const auto gp = tensor_list(grads);
  const auto mp = tensor_list(opt.m);
  const auto vp = tensor_list(opt.v);

  const val_set vs = build_val_set(cfg, valid_docs);
  const int n_epochs = cfg.effective_epochs();

  for (int epoch = start_epoch; epoch <= n_epochs; ++epoch) {
    rng er(derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train_docs.size());
    std::iota(order.begin(), order.end(), 0);
    er.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t epoch_positions = 0;

    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t bend = std::min(order.size(), b + cfg.batch_size);
      for (auto* g : gp) g->setZero();
      double batch_loss = 0.0;
      std::size_t batch_positions = 0;

      for (std::size_t bi = b; bi < bend; ++bi) {
        const std::size_t di = order[bi];
        train_example ex = make_targets(train_docs[di], cfg.task, cfg.mask_rate, er);
        if (ex.positions.empty()) continue;
        doc_input in = ex.input();
        if (cfg.visual_noise_ablation) {
          in.visual_noise = true;
          in.visual_noise_seed =
              derive_seed(cfg.seed, "trainnoise", static_cast<std::uint64_t>(epoch), di);
        }
        batch_loss += loss_and_backward(params, in, ex.positions, ex.labels, 1.0, grads);
        batch_positions += ex.positions.size();
      }
      if (batch_positions == 0) continue;
      if (!std::isfinite(batch_loss))
        throw numerical_error("training diverged at epoch " + std::to_string(epoch) +
                              ": non-finite loss");

      const double inv = 1.0 / static_cast<double>(batch_positions);
      ++opt.step;
      const double bc1 = 1.0 - std::pow(k_adam_b1, static_cast<double>(opt.step));
      const double bc2 = 1.0 - std::pow(k_adam_b2, static_cast<double>(opt.step));
      for (std::size_t ti = 0; ti < tp.size(); ++ti) {
        matrix& g = *gp[ti];
        if (g.size() == 0) continue;
        g *= inv;
        matrix& m = *mp[ti];
        matrix& v = *vp[ti];
        m = k_adam_b1 * m + (1.0 - k_adam_b1) * g;
        v = k_adam_b2 * v + (1.0 - k_adam_b2) * g.cwiseProduct(g);
        tp[ti]->array() -=
            cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + k_adam_eps);
      }
      epoch_loss += batch_loss;
      epoch_positions += batch_positions;
    }

    round_to_f32(params);
    round_to_f32(opt.m);
    round_to_f32(opt.v);

    checkpoint ck;
    ck.epoch = epoch;
    ck.params = params;
    ck.train_loss = epoch_positions ? epoch_loss / static_cast<double>(epoch_positions) : 0.0;
    evaluate(params, cfg, vs, ck.val_loss, ck.val_accuracy);
    if (!std::isfinite(ck.val_loss))
      throw numerical_error("training diverged at epoch " + std::to_string(epoch) +
                            ": non-finite validation loss");
    sink(ck);
  }
  if (opt_out) *opt_out = std::move(opt);
}

std::vector<checkpoint> train(const train_config& cfg, const encoder_config& enc,
                              const std::vector<document>& train_docs,
                              const std::vector<document>& valid_docs) {
  std::vector<checkpoint> out;
  train(cfg, enc, train_docs, valid_docs, [&](const checkpoint& ck) { out.push_back(ck); });
  return out;
}

const checkpoint& select_checkpoint(const std::vector<checkpoint>& checkpoints,
                                    select_criterion criterion) {
  require_data(!checkpoints.empty(), "no checkpoints to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (criterion == select_criterion::precision) {
      if (checkpoints[i].val_accuracy > checkpoints[best].val_accuracy) best = i;
    } else {
      if (checkpoints[i].val_loss < checkpoints[best].val_loss) best = i;
    }
  }
  return checkpoints[best];
}

void save_checkpoint(const checkpoint& ck, const std::filesystem::path& file) {
  std::ofstream f(file, std::ios::binary);
  require_data(f.is_open(), "cannot write checkpoint: " + file.string());
  write_bytes(f, k_ckpt_magic, sizeof(k_ckpt_magic));
  write_pod(f, k_ckpt_version);
  write_config(f, ck.params.config, ck.params.task);
  write_pod(f, static_cast<std::int32_t>(ck.epoch));
  write_pod(f, ck.train_loss);
  write_pod(f, ck.val_loss);
  write_pod(f, ck.val_accuracy);
  write_pod(f, ck.spec_hash);
  write_tensors(f, ck.params);
  require_data(static_cast<bool>(f), "checkpoint write failed: " + file.string());
}

checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  require_data(f.is_open(), "cannot open checkpoint: " + file.string());
  char magic[8];
  read_bytes(f, magic, sizeof(magic));
  require_data(std::memcmp(magic, k_ckpt_magic, sizeof(magic)) == 0,
               "not a checkpoint file: " + file.string());
  require_data(read_pod<std::uint32_t>(f) == k_ckpt_version, "unsupported checkpoint version");
  encoder_config cfg;
  task_kind task;
  read_config(f, cfg, task);
  checkpoint ck;
  ck.epoch = read_pod<std::int32_t>(f);
  ck.train_loss = read_pod<double>(f);
  ck.val_loss = read_pod<double>(f);
  ck.val_accuracy = read_pod<double>(f);
  ck.spec_hash = read_pod<std::uint64_t>(f);
  ck.params = model_params::init(cfg, task, 0);
  read_tensors(f, ck.params);
  return ck;
}

void save_adam_state(const adam_state& st, const std::filesystem::path& file) {
  std::ofstream f(file, std::ios::binary);
  require_data(f.is_open(), "cannot write optimizer state: " + file.string());
  write_bytes(f, k_opt_magic, sizeof(k_opt_magic));
  write_pod(f, k_ckpt_version);
  write_pod(f, st.step);
  write_tensors(f, st.m);
  write_tensors(f, st.v);
  require_data(static_cast<bool>(f), "optimizer state write failed: " + file.string());
}

adam_state load_adam_state(const std::filesystem::path& file, const model_params& shape) {
  std::ifstream f(file, std::ios::binary);
  require_data(f.is_open(), "cannot open optimizer state: " + file.string());
  char magic[8];
  read_bytes(f, magic, sizeof(magic));
  require_data(std::memcmp(magic, k_opt_magic, sizeof(magic)) == 0,
               "not an optimizer state file: " + file.string());
  require_data(read_pod<std::uint32_t>(f) == k_ckpt_version, "unsupported optimizer state version");
  adam_state st = adam_state::zeros_like(shape);
  st.step = read_pod<std::int64_t>(f);
  read_tensors(f, st.m);
  read_tensors(f, st.v);
  return st;
}

}  // namespace scrublab
