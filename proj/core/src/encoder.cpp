#include "scrublab/encoder.hpp"

#include <atomic>
#include <cmath>

namespace scrublab {

namespace {

std::atomic<std::uint64_t> g_forward_passes{0};

constexpr double k_ln_eps = 1e-5;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * phi;
}

int coord_bucket(int c, int buckets) {
  int b = static_cast<int>(static_cast<long long>(c) * buckets / 1000);
  if (b < 0) b = 0;
  if (b >= buckets) b = buckets - 1;
  return b;
}

// y = g ⊙ xhat + b per row; saves xhat and 1/std for backward.
matrix layer_norm(const matrix& x, const matrix& g, const matrix& b, matrix& xhat, vec& istd) {
  const auto n = x.rows();
  const auto d = x.cols();
  xhat.resize(n, d);
  istd.resize(n);
  matrix y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).mean();
    const auto xc = (x.row(i).array() - mu).eval();
    const double var = xc.square().mean();
    const double is = 1.0 / std::sqrt(var + k_ln_eps);
    istd(i) = is;
    xhat.row(i) = xc * is;
    y.row(i) = xhat.row(i).cwiseProduct(g.row(0)) + b.row(0);
  }
  return y;
}

matrix layer_norm_backward(const matrix& dy, const matrix& g, const matrix& xhat, const vec& istd,
                           matrix& dg, matrix& db) {
  const auto n = dy.rows();
  const auto d = dy.cols();
  matrix dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto dxhat = dy.row(i).cwiseProduct(g.row(0)).eval();
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
    dx.row(i) = istd(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2).matrix();
    dg.row(0) += dy.row(i).cwiseProduct(xhat.row(i));
    db.row(0) += dy.row(i);
  }
  return dx;
}

void softmax_rows_inplace(matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

matrix gaussian(Eigen::Index rows, Eigen::Index cols, double scale, rng& r) {
  matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * r.next_gauss();
  return m;
}

}  // namespace

std::string to_string(task_kind t) {
  switch (t) {
    case task_kind::mlm: return "mlm";
    case task_kind::ee_bio: return "ee_bio";
    case task_kind::ee_spade: return "ee_spade";
  }
  throw usage_error("bad task_kind");
}

task_kind task_kind_from_string(std::string_view s) {
  if (s == "mlm") return task_kind::mlm;
  if (s == "ee_bio") return task_kind::ee_bio;
  if (s == "ee_spade") return task_kind::ee_spade;
  throw usage_error("unknown task: " + std::string(s));
}

int bio_label_id(field_type t, bool begin) {
  return 1 + 2 * static_cast<int>(t) + (begin ? 0 : 1);
}

void encoder_config::validate() const {
  require(embed_dim > 0, "embed_dim must be positive");
  require(n_layers > 0, "n_layers must be positive");
  require(n_heads > 0 && embed_dim % n_heads == 0, "embed_dim must be divisible by n_heads");
  require(max_seq_len > 0, "max_seq_len must be positive");
  require(coord_buckets > 0, "coord_buckets must be positive");
  require(vocab_size > k_num_special, "vocab_size must exceed the special tokens");
}

model_params model_params::init(const encoder_config& cfg, task_kind task, std::uint64_t seed) {
  cfg.validate();
  model_params p;
  p.config = cfg;
  p.task = task;
  rng r(derive_seed(seed, "model-init"));
  const int d = cfg.embed_dim;
  const double s = 0.02;

  p.tok_emb = gaussian(cfg.vocab_size, d, s, r);
  for (auto& t : p.coord_emb) t = gaussian(cfg.coord_buckets, d, s, r);
  p.vis_proj = gaussian(1, d, s, r);
  p.layers.resize(cfg.n_layers);
  for (auto& l : p.layers) {
    l.ln1_g = matrix::Ones(1, d);
    l.ln1_b = matrix::Zero(1, d);
    l.wq = gaussian(d, d, s, r);
    l.bq = matrix::Zero(1, d);
    l.wk = gaussian(d, d, s, r);
    l.bk = matrix::Zero(1, d);
    l.wv = gaussian(d, d, s, r);
    l.bv = matrix::Zero(1, d);
    l.wo = gaussian(d, d, s, r);
    l.bo = matrix::Zero(1, d);
    l.ln2_g = matrix::Ones(1, d);
    l.ln2_b = matrix::Zero(1, d);
    l.w1 = gaussian(4 * d, d, s, r);
    l.b1 = matrix::Zero(1, 4 * d);
    l.w2 = gaussian(d, 4 * d, s, r);
    l.b2 = matrix::Zero(1, d);
  }
  p.lnf_g = matrix::Ones(1, d);
  p.lnf_b = matrix::Zero(1, d);
  switch (task) {
    case task_kind::mlm:
      p.head_w = gaussian(cfg.vocab_size, d, s, r);
      p.head_b = matrix::Zero(1, cfg.vocab_size);
      break;
    case task_kind::ee_bio:
      p.head_w = gaussian(k_bio_labels, d, s, r);
      p.head_b = matrix::Zero(1, k_bio_labels);
      break;
    case task_kind::ee_spade:
      p.head_w = gaussian(d, d, s, r);
      p.head_b = matrix(0, 0);
      p.spade_none = gaussian(1, d, s, r);
      break;
  }
  return p;
}

model_params model_params::zeros_like(const model_params& other) {
  model_params p = other;
  p.for_each_tensor([](const std::string&, matrix& m) { m.setZero(); });
  return p;
}

void model_params::for_each_tensor(const std::function<void(const std::string&, matrix&)>& fn) {
  fn("tok_emb", tok_emb);
  for (int c = 0; c < 4; ++c) fn("coord_emb" + std::to_string(c), coord_emb[c]);
  fn("vis_proj", vis_proj);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string pre = "layer" + std::to_string(i) + ".";
    auto& l = layers[i];
    fn(pre + "ln1_g", l.ln1_g);
    fn(pre + "ln1_b", l.ln1_b);
    fn(pre + "wq", l.wq);
    fn(pre + "bq", l.bq);
    fn(pre + "wk", l.wk);
    fn(pre + "bk", l.bk);
    fn(pre + "wv", l.wv);
    fn(pre + "bv", l.bv);
    fn(pre + "wo", l.wo);
    fn(pre + "bo", l.bo);
    fn(pre + "ln2_g", l.ln2_g);
    fn(pre + "ln2_b", l.ln2_b);
    fn(pre + "w1", l.w1);
    fn(pre + "b1", l.b1);
    fn(pre + "w2", l.w2);
    fn(pre + "b2", l.b2);
  }
  fn("lnf_g", lnf_g);
  fn("lnf_b", lnf_b);
  fn("head_w", head_w);
  fn("head_b", head_b);
  fn("spade_none", spade_none);
}

void model_params::for_each_tensor(
    const std::function<void(const std::string&, const matrix&)>& fn) const {
  const_cast<model_params*>(this)->for_each_tensor(
      [&](const std::string& name, matrix& m) { fn(name, m); });
}

std::size_t model_params::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, const matrix& m) { n += m.size(); });
  return n;
}

std::vector<double> visual_features(const doc_input& in, int n) {
  std::vector<double> vis(n, 1.0);
  if (in.visual_noise) {
    for (int i = 0; i < n; ++i) {
      rng r(derive_seed(in.visual_noise_seed, "visnoise", static_cast<std::uint64_t>(i)));
      vis[i] = r.next_gauss();
    }
    return vis;
  }
  if (in.img) {
    for (int i = 0; i < n; ++i) vis[i] = box_mean(*in.img, (*in.boxes)[i]);
  }
  return vis;
}

std::uint64_t forward_pass_count() { return g_forward_passes.load(); }

void reset_forward_pass_count() { g_forward_passes.store(0); }

matrix forward_hidden(const model_params& p, const doc_input& in, forward_trace* trace) {
  g_forward_passes.fetch_add(1, std::memory_order_relaxed);
  require(in.tokens && in.boxes, "doc_input needs tokens and boxes");
  const int n = static_cast<int>(in.tokens->size());
  require_data(n >= 1, "empty token sequence");
  require_data(n <= p.config.max_seq_len, "sequence longer than max_seq_len");
  require_data(in.boxes->size() == in.tokens->size(), "token/box count mismatch");
  const int d = p.config.embed_dim;
  const int nh = p.config.n_heads;
  const int dh = d / nh;

  std::vector<double> vis;
  if (p.config.visual_enabled) vis = visual_features(in, n);

  matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    const token_id id = (*in.tokens)[i];
    require_data(id >= 0 && id < p.config.vocab_size, "token id outside vocabulary");
    x.row(i) = p.tok_emb.row(id);
    if (p.config.layout_enabled) {
      const bbox& b = (*in.boxes)[i];
      require_data(b.valid(), "invalid bbox");
      const int coords[4] = {b.x0, b.y0, b.x1, b.y1};
      for (int c = 0; c < 4; ++c)
        x.row(i) += p.coord_emb[c].row(coord_bucket(coords[c], p.config.coord_buckets));
    }
    if (p.config.visual_enabled) x.row(i) += vis[i] * p.vis_proj.row(0);
  }

  forward_trace local;
  forward_trace& t = trace ? *trace : local;
  t.x0 = x;
  t.vis = std::move(vis);
  t.layers.assign(p.layers.size(), {});

  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const auto& l = p.layers[li];
    auto& lt = t.layers[li];

    lt.a = layer_norm(x, l.ln1_g, l.ln1_b, lt.ln1_xhat, lt.ln1_istd);
    lt.q = lt.a * l.wq.transpose();
    lt.q.rowwise() += l.bq.row(0);
    lt.k = lt.a * l.wk.transpose();
    lt.k.rowwise() += l.bk.row(0);
    lt.v = lt.a * l.wv.transpose();
    lt.v.rowwise() += l.bv.row(0);

    lt.attn.resize(nh);
    lt.attn_concat.resize(n, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < nh; ++h) {
      const auto qh = lt.q.middleCols(h * dh, dh);
      const auto kh = lt.k.middleCols(h * dh, dh);
      const auto vh = lt.v.middleCols(h * dh, dh);
      matrix s = qh * kh.transpose() * scale;
      softmax_rows_inplace(s);
      lt.attn_concat.middleCols(h * dh, dh) = s * vh;
      lt.attn[h] = std::move(s);
    }
    matrix proj = lt.attn_concat * l.wo.transpose();
    proj.rowwise() += l.bo.row(0);
    lt.x_attn = x + proj;

    lt.b = layer_norm(lt.x_attn, l.ln2_g, l.ln2_b, lt.ln2_xhat, lt.ln2_istd);
    lt.f_pre = lt.b * l.w1.transpose();
    lt.f_pre.rowwise() += l.b1.row(0);
    lt.f_act = lt.f_pre.unaryExpr([](double v) { return gelu(v); });
    matrix f2 = lt.f_act * l.w2.transpose();
    f2.rowwise() += l.b2.row(0);
    lt.x_out = lt.x_attn + f2;
    x = lt.x_out;
  }

  t.hidden = layer_norm(x, p.lnf_g, p.lnf_b, t.lnf_xhat, t.lnf_istd);
  return t.hidden;
}

matrix head_logits(const model_params& p, const matrix& hidden, const std::vector<int>& positions) {
  const int n = static_cast<int>(hidden.rows());
  const int np = static_cast<int>(positions.size());
  matrix hp(np, hidden.cols());
  for (int i = 0; i < np; ++i) {
    require(positions[i] >= 0 && positions[i] < n, "head position out of range");
    hp.row(i) = hidden.row(positions[i]);
  }
  if (p.task == task_kind::ee_spade) {
    matrix keys(n + 1, hidden.cols());
    keys.topRows(n) = hidden;
    keys.row(n) = p.spade_none.row(0);
    return (hp * p.head_w) * keys.transpose();
  }
  matrix logits = hp * p.head_w.transpose();
  logits.rowwise() += p.head_b.row(0);
  return logits;
}

matrix forward(const model_params& p, const doc_input& in) {
  const matrix hidden = forward_hidden(p, in);
  std::vector<int> all(hidden.rows());
  for (int i = 0; i < static_cast<int>(all.size()); ++i) all[i] = i;
  return head_logits(p, hidden, all);
}

std::vector<double> token_loss(const matrix& logits, const std::vector<int>& targets,
                               const std::vector<int>& positions) {
  require(targets.size() == positions.size(), "targets/positions size mismatch");
  std::vector<double> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const int row = positions[i];
    require(row >= 0 && row < logits.rows(), "loss position out of range");
    const int y = targets[i];
    require(y >= 0 && y < logits.cols(), "loss target out of range");
    const double m = logits.row(row).maxCoeff();
    const double lse = m + std::log((logits.row(row).array() - m).exp().sum());
    out[i] = lse - logits(row, y);
  }
  return out;
}

doc_input train_example::input() const {
  doc_input in;
  in.tokens = &input_tokens;
  in.boxes = &boxes;
  in.img = img ? &*img : nullptr;
  return in;
}

train_example make_targets(const document& doc, task_kind task, double mask_rate, rng& r) {
  train_example ex;
  ex.input_tokens = doc.tokens;
  ex.boxes = doc.boxes;
  ex.img = doc.img;
  const int n = static_cast<int>(doc.tokens.size());

  switch (task) {
    case task_kind::mlm: {
      for (int i = 0; i < n; ++i) {
        if (r.next_double() < mask_rate) {
          ex.positions.push_back(i);
          ex.labels.push_back(doc.tokens[i]);
          ex.input_tokens[i] = k_mask_id;
          if (ex.img) fill_rect(*ex.img, to_pixels(doc.boxes[i], ex.img->width, ex.img->height), 1.0f);
        }
      }
      break;
    }
    case task_kind::ee_bio: {
      std::vector<int> labels(n, k_bio_outside);
      for (const auto& f : doc.fields) {
        for (int j = 0; j < f.span.len; ++j)
          labels[f.span.start + j] = bio_label_id(f.type, j == 0);
      }
      for (int i = 0; i < n; ++i) {
        ex.positions.push_back(i);
        ex.labels.push_back(labels[i]);
      }
      break;
    }
    case task_kind::ee_spade: {
      std::vector<int> labels(n, n);  // n encodes the none link
      for (const auto& f : doc.fields) {
        for (int j = 1; j < f.span.len; ++j) labels[f.span.start + j] = f.span.start + j - 1;
      }
      for (int i = 0; i < n; ++i) {
        ex.positions.push_back(i);
        ex.labels.push_back(labels[i]);
      }
      break;
    }
  }
  return ex;
}

double loss_and_backward(const model_params& p, const doc_input& in,
                         const std::vector<int>& positions, const std::vector<int>& labels,
                         double grad_scale, model_params& grads) {
  require(positions.size() == labels.size(), "positions/labels size mismatch");
  if (positions.empty()) return 0.0;

  forward_trace t;
  forward_hidden(p, in, &t);
  const int n = static_cast<int>(t.hidden.rows());
  const int d = p.config.embed_dim;
  const int nh = p.config.n_heads;
  const int dh = d / nh;
  const int np = static_cast<int>(positions.size());

  matrix logits = head_logits(p, t.hidden, positions);
  double loss = 0.0;
  matrix dlogits(np, logits.cols());
  for (int i = 0; i < np; ++i) {
    const int y = labels[i];
    require(y >= 0 && y < logits.cols(), "label out of range");
    const double m = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
    const double z = e.sum();
    loss += m + std::log(z) - logits(i, y);
    dlogits.row(i) = e / z;
    dlogits(i, y) -= 1.0;
  }
  dlogits *= grad_scale;

  matrix dh_full = matrix::Zero(n, d);
  matrix hp(np, d);
  for (int i = 0; i < np; ++i) hp.row(i) = t.hidden.row(positions[i]);

  if (p.task == task_kind::ee_spade) {
    matrix keys(n + 1, d);
    keys.topRows(n) = t.hidden;
    keys.row(n) = p.spade_none.row(0);
    const matrix g = hp * p.head_w;
    const matrix dg = dlogits * keys;
    const matrix dkeys = dlogits.transpose() * g;
    grads.head_w += hp.transpose() * dg;
    const matrix dhp = dg * p.head_w.transpose();
    for (int i = 0; i < np; ++i) dh_full.row(positions[i]) += dhp.row(i);
    dh_full += dkeys.topRows(n);
    grads.spade_none.row(0) += dkeys.row(n);
  } else {
    grads.head_w += dlogits.transpose() * hp;
    grads.head_b.row(0) += dlogits.colwise().sum();
    const matrix dhp = dlogits * p.head_w;
    for (int i = 0; i < np; ++i) dh_full.row(positions[i]) += dhp.row(i);
  }

  matrix dx = layer_norm_backward(dh_full, p.lnf_g, t.lnf_xhat, t.lnf_istd, grads.lnf_g,
                                  grads.lnf_b);

  for (int li = static_cast<int>(p.layers.size()) - 1; li >= 0; --li) {
    const auto& l = p.layers[li];
    const auto& lt = t.layers[li];
    auto& gl = grads.layers[li];

    // FFN block: x_out = x_attn + gelu(LN2(x_attn) W1ᵀ + b1) W2ᵀ + b2.
    const matrix& df2 = dx;
    gl.w2 += df2.transpose() * lt.f_act;
    gl.b2.row(0) += df2.colwise().sum();
    matrix df_act = df2 * l.w2;
    matrix df_pre = df_act.cwiseProduct(lt.f_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    gl.w1 += df_pre.transpose() * lt.b;
    gl.b1.row(0) += df_pre.colwise().sum();
    matrix db = df_pre * l.w1;
    matrix dx_attn = dx + layer_norm_backward(db, l.ln2_g, lt.ln2_xhat, lt.ln2_istd, gl.ln2_g,
                                              gl.ln2_b);

    // Attention block: x_attn = x + (concat_h softmax(QₕKₕᵀ/√dₕ)Vₕ) Woᵀ + bo.
    const matrix& dproj = dx_attn;
    gl.wo += dproj.transpose() * lt.attn_concat;
    gl.bo.row(0) += dproj.colwise().sum();
    matrix dconcat = dproj * l.wo;

    matrix dq(n, d), dk(n, d), dv(n, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < nh; ++h) {
      const auto doh = dconcat.middleCols(h * dh, dh);
      const auto vh = lt.v.middleCols(h * dh, dh);
      const auto qh = lt.q.middleCols(h * dh, dh);
      const auto kh = lt.k.middleCols(h * dh, dh);
      const matrix& pm = lt.attn[h];
      matrix dp = doh * vh.transpose();
      dv.middleCols(h * dh, dh) = pm.transpose() * doh;
      const vec rowdot = (dp.cwiseProduct(pm)).rowwise().sum();
      matrix ds = pm.cwiseProduct(dp.colwise() - rowdot);
      dq.middleCols(h * dh, dh) = ds * kh * scale;
      dk.middleCols(h * dh, dh) = ds.transpose() * qh * scale;
    }

    gl.wq += dq.transpose() * lt.a;
    gl.bq.row(0) += dq.colwise().sum();
    gl.wk += dk.transpose() * lt.a;
    gl.bk.row(0) += dk.colwise().sum();
    gl.wv += dv.transpose() * lt.a;
    gl.bv.row(0) += dv.colwise().sum();
    matrix da = dq * l.wq + dk * l.wk + dv * l.wv;
    dx = dx_attn + layer_norm_backward(da, l.ln1_g, lt.ln1_xhat, lt.ln1_istd, gl.ln1_g, gl.ln1_b);
  }

  for (int i = 0; i < n; ++i) {
    const token_id id = (*in.tokens)[i];
    grads.tok_emb.row(id) += dx.row(i);
    if (p.config.layout_enabled) {
      const bbox& b = (*in.boxes)[i];
      const int coords[4] = {b.x0, b.y0, b.x1, b.y1};
      for (int c = 0; c < 4; ++c)
        grads.coord_emb[c].row(coord_bucket(coords[c], p.config.coord_buckets)) += dx.row(i);
    }
    if (p.config.visual_enabled) grads.vis_proj.row(0) += t.vis[i] * dx.row(i);
  }
  return loss;
}

}  // namespace scrublab
