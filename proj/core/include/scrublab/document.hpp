#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scrublab/common.hpp"
#include "scrublab/vocab.hpp"

namespace scrublab {

enum class field_type { name, date, amount, company, address, answer };
enum class template_kind { form, receipt };

const char* to_string(field_type t);
const char* to_string(template_kind t);
field_type field_type_from_string(std::string_view s);
template_kind template_kind_from_string(std::string_view s);

// Coordinates live on a normalized 0..1000 grid.
struct bbox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool valid() const { return 0 <= x0 && x0 <= x1 && x1 <= 1000 && 0 <= y0 && y0 <= y1 && y1 <= 1000; }
  bool operator==(const bbox&) const = default;
};

struct field_span {
  int start = 0;
  int len = 0;
  bool operator==(const field_span&) const = default;
};

inline constexpr int k_min_field_tokens = 3;
inline constexpr int k_max_field_tokens = 15;

struct field {
  field_span span;
  field_type type = field_type::answer;
  std::string label;  // public task label y (entity-type name)
  bool selected = false;
};

struct image {
  int width = 0, height = 0;
  std::vector<float> px;  // row-major, values in [0,1], 1 = white

  static image white(int w, int h) { return image{w, h, std::vector<float>(static_cast<size_t>(w) * h, 1.0f)}; }
  float at(int x, int y) const { return px[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return px[static_cast<size_t>(y) * width + x]; }
  bool operator==(const image&) const = default;
};

struct document {
  std::string id;
  template_kind kind = template_kind::form;
  std::vector<token_id> tokens;
  std::vector<bbox> boxes;  // one per token
  std::optional<image> img;
  std::vector<field> fields;
  std::string image_path;    // relative path when persisted, else empty
  std::string duplicate_of;  // id of the source doc when a near-duplicate
};

// The adversary's view: span tokens masked, image patch whitened, label public.
struct scrubbed_doc {
  document doc;
  field_span span;
  field_type label = field_type::answer;
  std::string field_id;
  int k() const { return span.len; }
};

// Evaluator-side record; the attack engine never receives ground_truth.
struct scrubbed_field {
  scrubbed_doc view;
  std::vector<token_id> ground_truth;
};

}  // namespace scrublab
