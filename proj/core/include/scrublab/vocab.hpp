#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scrublab/common.hpp"

namespace scrublab {

using token_id = int;

inline constexpr token_id k_pad_id = 0;
inline constexpr token_id k_mask_id = 1;
inline constexpr token_id k_cls_id = 2;
inline constexpr token_id k_sep_id = 3;
inline constexpr token_id k_unk_id = 4;
inline constexpr int k_num_special = 5;

class vocabulary {
 public:
  // tokens must start with the five special strings and contain no duplicates.
  static vocabulary from_tokens(std::vector<std::string> tokens);
  static vocabulary default_vocab();  // 512 entries
  static vocabulary load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(token_id id) const;
  std::optional<token_id> id_of(std::string_view piece) const;
  static bool is_special(token_id id) { return id >= 0 && id < k_num_special; }

  // Greedy longest-match segmentation; characters with no matching piece
  // fall back to one UNK each. Special tokens are never matched.
  std::vector<token_id> tokenize(std::string_view word) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, token_id> index_;  // excludes specials
  size_t max_piece_len_ = 0;
};

}  // namespace scrublab
