#pragma once

#include <filesystem>

#include "scrublab/document.hpp"
#include "scrublab/image.hpp"

namespace scrublab {

struct partition_ratios {
  double valid = 0.25, train_pub = 0.375, train_pri = 0.375;
};

struct corpus_pools {
  std::vector<std::string> first_names, last_names;
  std::vector<std::string> company_words, company_kinds, company_suffixes;
  std::vector<std::string> street_prefixes, street_words, cities;
  std::vector<std::string> form_titles, answer_words;
  static corpus_pools defaults();
  void validate() const;
};

struct corpus_spec {
  int n_docs = 160;
  double form_fraction = 0.5;  // template mix: fraction of FORM docs
  double duplication_rate = 0.0;
  partition_ratios ratios;
  uint64_t seed = 1;
  int max_doc_tokens = 100;
  bool with_images = true;
  // Distribution-shift filters: drop a company kind / a date year from the pools.
  std::string exclude_company_kind;
  int exclude_date_year = 0;
  corpus_pools pools = corpus_pools::defaults();
  void validate() const;
};

std::vector<document> generate_corpus(const corpus_spec& spec, const vocabulary& vocab);

struct corpus_partition {
  std::vector<document> valid, train_pub, train_pri;
};
corpus_partition partition(const std::vector<document>& corpus, const partition_ratios& ratios,
                           uint64_t seed);

// Fields eligible for attack (3..15 tokens), in span order.
std::vector<field> extract(const document& doc);

scrubbed_field scrub(const document& doc, const field& f);

void save_corpus_jsonl(const std::vector<document>& docs, const std::filesystem::path& file,
                       uint64_t spec_hash, const std::filesystem::path& image_dir = {});
std::vector<document> load_corpus_jsonl(const std::filesystem::path& file, bool load_images,
                                        uint64_t* spec_hash_out = nullptr);

}  // namespace scrublab
