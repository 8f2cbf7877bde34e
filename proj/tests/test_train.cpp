#include <filesystem>

#include "doctest.h"
#include "scrublab/corpus.hpp"
#include "scrublab/train.hpp"

using namespace scrublab;
namespace fs = std::filesystem;

namespace {

bool params_equal(const model_params& a, const model_params& b) {
  std::vector<const matrix*> ta, tb;
  a.for_each_tensor([&](const std::string&, const matrix& m) { ta.push_back(&m); });
  b.for_each_tensor([&](const std::string&, const matrix& m) { tb.push_back(&m); });
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols()) return false;
    if (*ta[i] != *tb[i]) return false;
  }
  return true;
}

struct tiny_setup {
  std::vector<document> train_docs;
  std::vector<document> valid_docs;
  encoder_config enc;
  train_config cfg;
};

tiny_setup make_setup(task_kind task, int epochs) {
  const vocabulary v = vocabulary::default_vocab();
  corpus_spec spec;
  spec.n_docs = 8;
  spec.seed = 50;
  spec.max_doc_tokens = 40;
  const auto docs = generate_corpus(spec, v);

  tiny_setup s;
  s.train_docs.assign(docs.begin(), docs.begin() + 6);
  s.valid_docs.assign(docs.begin() + 6, docs.end());
  s.enc.embed_dim = 16;
  s.enc.n_layers = 1;
  s.enc.n_heads = 2;
  s.enc.vocab_size = v.size();
  s.enc.visual_enabled = true;
  s.cfg.task = task;
  s.cfg.epochs = epochs;
  s.cfg.seed = 33;
  return s;
}

fs::path tmp_dir() {
  const fs::path d = fs::temp_directory_path() / "scrublab_test_train";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("task defaults resolve to 300 mlm epochs and 150 otherwise") {
  train_config cfg;
  cfg.task = task_kind::mlm;
  CHECK(cfg.effective_epochs() == 300);
  cfg.task = task_kind::ee_bio;
  CHECK(cfg.effective_epochs() == 150);
  cfg.epochs = 7;
  CHECK(cfg.effective_epochs() == 7);
}

TEST_CASE("training is deterministic and emits one checkpoint per epoch") {
  const tiny_setup s = make_setup(task_kind::mlm, 3);
  const auto a = train(s.cfg, s.enc, s.train_docs, s.valid_docs);
  const auto b = train(s.cfg, s.enc, s.train_docs, s.valid_docs);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (int e = 0; e < 3; ++e) {
    CHECK(a[e].epoch == e + 1);
    CHECK(a[e].train_loss == b[e].train_loss);
    CHECK(a[e].val_loss == b[e].val_loss);
    CHECK(params_equal(a[e].params, b[e].params));
  }
  CHECK_FALSE(params_equal(a[0].params, a[2].params));
}

TEST_CASE("loss falls when overfitting a tiny corpus") {
  tiny_setup s = make_setup(task_kind::ee_bio, 12);
  s.train_docs.resize(2);
  const auto cks = train(s.cfg, s.enc, s.train_docs, s.valid_docs);
  CHECK(cks.back().train_loss < cks.front().train_loss);
  CHECK(cks.back().val_accuracy >= 0.0);
  CHECK(cks.back().val_accuracy <= 1.0);
}

TEST_CASE("resume reproduces an uninterrupted run bit for bit") {
  tiny_setup s = make_setup(task_kind::ee_bio, 4);
  const auto full = train(s.cfg, s.enc, s.train_docs, s.valid_docs);

  train_config half = s.cfg;
  half.epochs = 2;
  std::vector<checkpoint> first;
  adam_state opt;
  train(half, s.enc, s.train_docs, s.valid_docs,
        [&](const checkpoint& ck) { first.push_back(ck); }, nullptr, nullptr, &opt);
  REQUIRE(first.size() == 2);
  CHECK(params_equal(first[1].params, full[1].params));

  std::vector<checkpoint> second;
  train(s.cfg, s.enc, s.train_docs, s.valid_docs,
        [&](const checkpoint& ck) { second.push_back(ck); }, &first[1], &opt, nullptr);
  REQUIRE(second.size() == 2);
  CHECK(second[0].epoch == 3);
  CHECK(second[1].epoch == 4);
  CHECK(second[0].train_loss == full[2].train_loss);
  CHECK(params_equal(second[0].params, full[2].params));
  CHECK(params_equal(second[1].params, full[3].params));
}

TEST_CASE("checkpoints and optimizer state round-trip bit-exactly") {
  tiny_setup s = make_setup(task_kind::ee_spade, 2);
  std::vector<checkpoint> cks;
  adam_state opt;
  train(s.cfg, s.enc, s.train_docs, s.valid_docs,
        [&](const checkpoint& ck) { cks.push_back(ck); }, nullptr, nullptr, &opt);

  const fs::path f = tmp_dir() / "ck.bin";
  checkpoint saved = cks.back();
  saved.spec_hash = 0x1234abcd;
  save_checkpoint(saved, f);
  const checkpoint back = load_checkpoint(f);
  CHECK(back.epoch == saved.epoch);
  CHECK(back.train_loss == saved.train_loss);
  CHECK(back.val_loss == saved.val_loss);
  CHECK(back.val_accuracy == saved.val_accuracy);
  CHECK(back.spec_hash == saved.spec_hash);
  CHECK(back.params.task == saved.params.task);
  CHECK(back.params.config == saved.params.config);
  CHECK(params_equal(back.params, saved.params));

  const fs::path of = tmp_dir() / "opt.bin";
  save_adam_state(opt, of);
  const adam_state opt_back = load_adam_state(of, saved.params);
  CHECK(opt_back.step == opt.step);
  CHECK(params_equal(opt_back.m, opt.m));
  CHECK(params_equal(opt_back.v, opt.v));
}

TEST_CASE("select_checkpoint follows the criterion with earliest-epoch ties") {
  std::vector<checkpoint> cks(4);
  for (int i = 0; i < 4; ++i) cks[i].epoch = i + 1;
  cks[0].val_loss = 3.0;
  cks[1].val_loss = 1.5;
  cks[2].val_loss = 1.5;
  cks[3].val_loss = 2.0;
  cks[0].val_accuracy = 0.2;
  cks[1].val_accuracy = 0.9;
  cks[2].val_accuracy = 0.9;
  cks[3].val_accuracy = 0.4;
  CHECK(select_checkpoint(cks, select_criterion::loss).epoch == 2);
  CHECK(select_checkpoint(cks, select_criterion::precision).epoch == 2);
  CHECK_THROWS_AS(select_checkpoint({}, select_criterion::loss), data_error);
}

TEST_CASE("parameters are float32 grained at every epoch boundary") {
  const tiny_setup s = make_setup(task_kind::mlm, 1);
  const auto cks = train(s.cfg, s.enc, s.train_docs, s.valid_docs);
  model_params rounded = cks[0].params;
  round_to_f32(rounded);
  CHECK(params_equal(rounded, cks[0].params));
}

TEST_CASE("visual noise ablation changes the training trajectory") {
  tiny_setup a = make_setup(task_kind::mlm, 2);
  tiny_setup b = make_setup(task_kind::mlm, 2);
  b.cfg.visual_noise_ablation = true;
  const auto ca = train(a.cfg, a.enc, a.train_docs, a.valid_docs);
  const auto cb = train(b.cfg, b.enc, b.train_docs, b.valid_docs);
  CHECK_FALSE(params_equal(ca.back().params, cb.back().params));
}

TEST_CASE("select strings round trip") {
  CHECK(select_criterion_from_string("loss") == select_criterion::loss);
  CHECK(select_criterion_from_string("precision") == select_criterion::precision);
  CHECK(to_string(select_criterion::loss) == "loss");
  CHECK_THROWS_AS(select_criterion_from_string("bogus"), usage_error);
}
