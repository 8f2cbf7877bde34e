#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "scrublab/corpus.hpp"
#include "scrublab/encoder.hpp"

using namespace scrublab;

namespace {

encoder_config small_config() {
  encoder_config cfg;
  cfg.embed_dim = 16;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.vocab_size = 64;
  return cfg;
}

document tiny_doc(int n_tokens, uint64_t seed) {
  document doc;
  doc.id = "tiny";
  rng r(seed);
  doc.tokens.push_back(k_cls_id);
  for (int i = 1; i < n_tokens - 1; ++i)
    doc.tokens.push_back(static_cast<token_id>(r.next_int(k_num_special, 63)));
  doc.tokens.push_back(k_sep_id);
  for (int i = 0; i < n_tokens; ++i) {
    const int x = r.next_int(0, 900);
    const int y = r.next_int(0, 900);
    doc.boxes.push_back(bbox{x, y, x + 60, y + 40});
  }
  return doc;
}

doc_input input_of(const document& doc) {
  doc_input in;
  in.tokens = &doc.tokens;
  in.boxes = &doc.boxes;
  in.img = doc.img ? &*doc.img : nullptr;
  return in;
}

}  // namespace

TEST_CASE("bio label ids follow the odd-B even-I layout") {
  CHECK(k_bio_labels == 13);
  CHECK(bio_label_id(field_type::name, true) == 1);
  CHECK(bio_label_id(field_type::name, false) == 2);
  CHECK(bio_label_id(field_type::answer, true) == 11);
  CHECK(bio_label_id(field_type::answer, false) == 12);
  std::set<int> seen{k_bio_outside};
  for (const field_type t : {field_type::name, field_type::date, field_type::amount,
                             field_type::company, field_type::address, field_type::answer}) {
    CHECK(seen.insert(bio_label_id(t, true)).second);
    CHECK(seen.insert(bio_label_id(t, false)).second);
  }
  CHECK(static_cast<int>(seen.size()) == k_bio_labels);
}

TEST_CASE("init is deterministic per seed and shapes match the config") {
  const encoder_config cfg = small_config();
  const auto a = model_params::init(cfg, task_kind::ee_bio, 5);
  const auto b = model_params::init(cfg, task_kind::ee_bio, 5);
  const auto c = model_params::init(cfg, task_kind::ee_bio, 6);

  CHECK(a.tok_emb.rows() == 64);
  CHECK(a.tok_emb.cols() == 16);
  CHECK(a.coord_emb[0].rows() == cfg.coord_buckets);
  CHECK(a.head_w.rows() == k_bio_labels);
  REQUIRE(a.layers.size() == 1);
  CHECK(a.layers[0].w1.rows() == 64);  // 4d x d, row-major weight convention
  CHECK(a.layers[0].w1.cols() == 16);
  CHECK(a.layers[0].ln1_g.cols() == 16);

  const auto flat = [](const model_params& p) {
    std::vector<std::pair<std::string, matrix>> out;
    p.for_each_tensor([&](const std::string& name, const matrix& m) { out.emplace_back(name, m); });
    return out;
  };
  const auto fa = flat(a), fb = flat(b), fc = flat(c);
  REQUIRE(fa.size() == fb.size());
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].first == fb[i].first);
    identical = identical && fa[i].second == fb[i].second;
    if (fa[i].second.size() > 0 && fa[i].second.cwiseAbs().sum() > 0)
      differs = differs || fa[i].second != fc[i].second;
  }
  CHECK(identical);
  CHECK(differs);

  const auto mlm = model_params::init(cfg, task_kind::mlm, 5);
  CHECK(mlm.head_w.rows() == 64);
  const auto spade = model_params::init(cfg, task_kind::ee_spade, 5);
  CHECK(spade.head_w.rows() == 16);
  CHECK(spade.spade_none.cols() == 16);
}

TEST_CASE("layer norm parameters start at identity and biases at zero") {
  const auto p = model_params::init(small_config(), task_kind::mlm, 1);
  CHECK(p.lnf_g.minCoeff() == 1.0);
  CHECK(p.lnf_g.maxCoeff() == 1.0);
  CHECK(p.lnf_b.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.layers[0].bq.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.layers[0].b2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.head_b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward output shapes track the task head") {
  const encoder_config cfg = small_config();
  const document doc = tiny_doc(9, 3);
  const doc_input in = input_of(doc);

  const auto mlm = model_params::init(cfg, task_kind::mlm, 2);
  CHECK(forward(mlm, in).rows() == 9);
  CHECK(forward(mlm, in).cols() == 64);

  const auto bio = model_params::init(cfg, task_kind::ee_bio, 2);
  CHECK(forward(bio, in).cols() == k_bio_labels);

  const auto spade = model_params::init(cfg, task_kind::ee_spade, 2);
  const matrix s = forward(spade, in);
  CHECK(s.rows() == 9);
  CHECK(s.cols() == 10);  // n + the none column
}

TEST_CASE("forward is deterministic") {
  const encoder_config cfg = small_config();
  const auto p = model_params::init(cfg, task_kind::mlm, 7);
  const document doc = tiny_doc(11, 4);
  const matrix h1 = forward_hidden(p, input_of(doc));
  const matrix h2 = forward_hidden(p, input_of(doc));
  CHECK((h1 - h2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("without 1-d positions the encoder is permutation-equivariant") {
  const encoder_config cfg = small_config();
  const auto p = model_params::init(cfg, task_kind::mlm, 7);
  const document doc = tiny_doc(10, 5);
  const matrix h = forward_hidden(p, input_of(doc));

  document shuffled = doc;
  std::vector<int> perm{3, 0, 7, 1, 9, 4, 2, 8, 5, 6};
  for (int i = 0; i < 10; ++i) {
    shuffled.tokens[i] = doc.tokens[perm[i]];
    shuffled.boxes[i] = doc.boxes[perm[i]];
  }
  const matrix hs = forward_hidden(p, input_of(shuffled));
  for (int i = 0; i < 10; ++i)
    CHECK((hs.row(i) - h.row(perm[i])).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("layout channel reacts to coordinate buckets exactly") {
  encoder_config cfg = small_config();
  const auto p = model_params::init(cfg, task_kind::mlm, 9);
  document doc = tiny_doc(6, 6);
  const matrix h = forward_hidden(p, input_of(doc));

  // same buckets -> identical embedding input (bucket width is 1000/32)
  document nudged = doc;
  nudged.boxes[2].x0 += 5;
  REQUIRE(nudged.boxes[2].x0 / (1000 / cfg.coord_buckets) ==
          doc.boxes[2].x0 / (1000 / cfg.coord_buckets));
  CHECK((forward_hidden(p, input_of(nudged)) - h).cwiseAbs().maxCoeff() == 0.0);

  // crossing a bucket boundary changes the output
  document moved = doc;
  moved.boxes[2].x0 = doc.boxes[2].x0 + 1000 / cfg.coord_buckets;
  CHECK((forward_hidden(p, input_of(moved)) - h).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("layout_off makes the encoder box-blind") {
  encoder_config cfg = small_config();
  cfg.layout_enabled = false;
  const auto p = model_params::init(cfg, task_kind::mlm, 9);
  document doc = tiny_doc(6, 6);
  const matrix h = forward_hidden(p, input_of(doc));
  document moved = doc;
  for (auto& b : moved.boxes) b = bbox{0, 0, 1000, 1000};
  CHECK((forward_hidden(p, input_of(moved)) - h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("visual features pool the image and fall back to white") {
  document doc = tiny_doc(5, 8);
  doc_input in = input_of(doc);
  auto vis = visual_features(in, 5);
  for (const double v : vis) CHECK(v == 1.0);  // no image

  doc.img = image::white(k_image_size, k_image_size);
  fill_rect(*doc.img, to_pixels(doc.boxes[2], k_image_size, k_image_size), 0.0f);
  in = input_of(doc);
  vis = visual_features(in, 5);
  CHECK(vis[2] < 0.5);
  CHECK(vis[0] == doctest::Approx(1.0));
}

TEST_CASE("visual noise substitutes a frozen per-position stream") {
  document doc = tiny_doc(5, 8);
  doc.img = image::white(k_image_size, k_image_size);
  doc_input in = input_of(doc);
  in.visual_noise = true;
  in.visual_noise_seed = 99;
  const auto a = visual_features(in, 5);
  const auto b = visual_features(in, 5);
  CHECK(a == b);
  in.visual_noise_seed = 100;
  const auto c = visual_features(in, 5);
  CHECK(a != c);
  bool varies = false;
  for (std::size_t i = 1; i < a.size(); ++i) varies = varies || a[i] != a[0];
  CHECK(varies);
}

TEST_CASE("visual_enabled changes the forward result only when on") {
  encoder_config cfg = small_config();
  document doc = tiny_doc(6, 2);
  doc.img = image::white(k_image_size, k_image_size);
  document marked = doc;
  fill_rect(*marked.img, to_pixels(doc.boxes[3], k_image_size, k_image_size), 0.0f);

  cfg.visual_enabled = false;
  const auto blind = model_params::init(cfg, task_kind::mlm, 4);
  CHECK((forward_hidden(blind, input_of(doc)) - forward_hidden(blind, input_of(marked)))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  cfg.visual_enabled = true;
  const auto sighted = model_params::init(cfg, task_kind::mlm, 4);
  CHECK((forward_hidden(sighted, input_of(doc)) - forward_hidden(sighted, input_of(marked)))
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("token_loss equals the naive cross entropy") {
  const encoder_config cfg = small_config();
  const auto p = model_params::init(cfg, task_kind::mlm, 12);
  const document doc = tiny_doc(8, 9);
  const matrix logits = forward(p, input_of(doc));
  const std::vector<int> positions{1, 3, 6};
  const std::vector<int> targets{10, 20, 30};
  const auto losses = token_loss(logits, targets, positions);
  REQUIRE(losses.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(losses[i] == doctest::Approx(oracle::naive_ce(logits, positions[i], targets[i]))
                           .epsilon(1e-12));
}

TEST_CASE("forward pass counter audits model access") {
  const encoder_config cfg = small_config();
  const auto p = model_params::init(cfg, task_kind::mlm, 1);
  const document doc = tiny_doc(7, 1);
  reset_forward_pass_count();
  forward_hidden(p, input_of(doc));
  forward(p, input_of(doc));
  CHECK(forward_pass_count() == 2);
}

TEST_CASE("mlm targets mask, relabel and whiten; ee targets label every token") {
  const vocabulary v = vocabulary::default_vocab();
  corpus_spec spec;
  spec.n_docs = 4;
  spec.seed = 44;
  const auto docs = generate_corpus(spec, v);
  const document& doc = docs[0];

  rng r(5);
  const train_example mlm = make_targets(doc, task_kind::mlm, 0.15, r);
  REQUIRE(!mlm.positions.empty());
  for (std::size_t i = 0; i < mlm.positions.size(); ++i) {
    const int pos = mlm.positions[i];
    CHECK(mlm.input_tokens[pos] == k_mask_id);
    CHECK(mlm.labels[i] == doc.tokens[pos]);
    CHECK(box_mean(*mlm.img, doc.boxes[pos]) == doctest::Approx(1.0));
  }

  rng r2(5);
  const train_example bio = make_targets(doc, task_kind::ee_bio, 0.15, r2);
  CHECK(bio.positions.size() == doc.tokens.size());
  CHECK(bio.input_tokens == doc.tokens);
  for (const auto& f : doc.fields) {
    CHECK(bio.labels[f.span.start] == bio_label_id(f.type, true));
    for (int j = 1; j < f.span.len; ++j)
      CHECK(bio.labels[f.span.start + j] == bio_label_id(f.type, false));
  }

  rng r3(5);
  const train_example spade = make_targets(doc, task_kind::ee_spade, 0.15, r3);
  const int n = static_cast<int>(doc.tokens.size());
  CHECK(spade.labels[0] == n);
  for (const auto& f : doc.fields) {
    CHECK(spade.labels[f.span.start] == n);
    for (int j = 1; j < f.span.len; ++j)
      CHECK(spade.labels[f.span.start + j] == f.span.start + j - 1);
  }
}

TEST_CASE("observed mlm mask rate sits near the configured rate") {
  const vocabulary v = vocabulary::default_vocab();
  corpus_spec spec;
  spec.n_docs = 30;
  spec.seed = 77;
  spec.with_images = false;
  const auto docs = generate_corpus(spec, v);
  rng r(123);
  std::size_t total = 0, masked = 0;
  for (const auto& doc : docs) {
    const auto ex = make_targets(doc, task_kind::mlm, 0.15, r);
    total += doc.tokens.size();
    masked += ex.positions.size();
  }
  const double rate = static_cast<double>(masked) / static_cast<double>(total);
  CHECK(rate > 0.10);
  CHECK(rate < 0.20);
}
