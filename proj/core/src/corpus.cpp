#include "scrublab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace scrublab {

using nlohmann::json;

const char* to_string(field_type t) {
  switch (t) {
    case field_type::name: return "NAME";
    case field_type::date: return "DATE";
    case field_type::amount: return "AMOUNT";
    case field_type::company: return "COMPANY";
    case field_type::address: return "ADDRESS";
    case field_type::answer: return "ANSWER";
  }
  return "ANSWER";
}

const char* to_string(template_kind t) { return t == template_kind::form ? "FORM" : "RECEIPT"; }

field_type field_type_from_string(std::string_view s) {
  if (s == "NAME") return field_type::name;
  if (s == "DATE") return field_type::date;
  if (s == "AMOUNT") return field_type::amount;
  if (s == "COMPANY") return field_type::company;
  if (s == "ADDRESS") return field_type::address;
  if (s == "ANSWER") return field_type::answer;
  throw data_error("unknown field type: " + std::string(s));
}

template_kind template_kind_from_string(std::string_view s) {
  if (s == "FORM") return template_kind::form;
  if (s == "RECEIPT") return template_kind::receipt;
  throw data_error("unknown template kind: " + std::string(s));
}

corpus_pools corpus_pools::defaults() {
  corpus_pools p;
  p.first_names = {"james",   "mary",     "john",    "patricia", "robert",   "jennifer",
                   "michael", "linda",    "william", "elizabeth", "david",   "barbara",
                   "richard", "susan",    "joseph",  "jessica",  "thomas",   "sarah",
                   "charles", "karen",    "daniel",  "lisa",     "matthew",  "betty",
                   "anthony", "margaret", "mark",    "sandra",   "donald",   "ashley",
                   "steven",  "kimberly", "paul",    "emily",    "andrew",   "donna",
                   "joshua",  "michelle", "kenneth", "carol",    "kevin",    "amanda",
                   "brian",   "melissa",  "george",  "deborah",  "edward",   "stephanie"};
  p.last_names = {"smith",    "johnson", "williams", "brown",    "jones",    "garcia",
                  "miller",   "davis",   "rodriguez", "martinez", "hernandez", "lopez",
                  "gonzalez", "wilson",  "anderson", "taylor",   "moore",    "jackson",
                  "martin",   "lee",     "perez",    "white",    "harris",   "clark",
                  "lewis",    "walker",  "young",    "allen",    "king",     "wright",
                  "scott",    "torres",  "nguyen",   "flores",   "rivera",   "green",
                  "adams",    "nelson",  "baker",    "hall",     "campbell", "mitchell",
                  "roberts",  "carter",  "phillips", "evans",    "turner",   "parker"};
  p.company_words = {"guardian", "health",  "beauty",  "hardware", "electronics", "supplies",
                     "solutions", "systems", "foods",  "textiles", "motors",     "logistics",
                     "optics",   "books",   "toys",    "sports",   "music",      "media",
                     "digital",  "global",  "national", "united",  "premier",    "prime",
                     "royal",    "golden",  "silver",  "diamond",  "star",       "sun",
                     "moon",     "ocean",   "river",   "mountain", "valley",     "forest",
                     "bridge",   "garden",  "house"};
  p.company_kinds = {"restaurant", "cafe",    "bakery",  "grill",   "kitchen", "pharmacy",
                     "trading",    "services", "market", "store",   "shop",    "mart",
                     "enterprise", "holdings"};
  p.company_suffixes = {"sdn bhd", "ltd", "inc", "corp", "llc", "group", ""};
  p.street_prefixes = {"jalan", "lorong", "taman", "bandar"};
  p.street_words = {"main", "oak",    "pine",  "maple", "cedar",  "elm",   "park",
                    "lake", "hill",   "spring", "north", "south", "east",  "west",
                    "seri", "kota",   "sentral", "bay",  "port",  "island", "heights"};
  p.cities = {"kuala lumpur", "penang",   "ipoh",     "johor",    "klang",   "shah alam",
              "petaling jaya", "melaka",  "seremban", "kuantan",  "georgetown"};
  p.form_titles = {"registration", "application", "survey", "request", "order", "contact"};
  p.answer_words = {"service",  "account", "office",  "branch",  "division", "district",
                    "region",   "zone",    "area",    "customer", "vendor",  "supplier",
                    "student",  "employee", "manager", "officer", "client",  "department",
                    "reference", "details", "section", "value",   "entry",   "status",
                    "purpose",  "subject",  "report",  "copy",    "balance", "check"};
  return p;
}

void corpus_pools::validate() const {
  auto nonempty = [](const std::vector<std::string>& v, const char* what) {
    require(!v.empty(), std::string("corpus pool empty: ") + what);
  };
  nonempty(first_names, "first_names");
  nonempty(last_names, "last_names");
  nonempty(company_words, "company_words");
  nonempty(company_kinds, "company_kinds");
  nonempty(company_suffixes, "company_suffixes");
  nonempty(street_prefixes, "street_prefixes");
  nonempty(street_words, "street_words");
  nonempty(cities, "cities");
  nonempty(form_titles, "form_titles");
  nonempty(answer_words, "answer_words");
}

void corpus_spec::validate() const {
  require(n_docs >= 0, "corpus_spec: n_docs must be non-negative");
  require(form_fraction >= 0.0 && form_fraction <= 1.0, "corpus_spec: form_fraction in [0,1]");
  require(duplication_rate >= 0.0 && duplication_rate <= 1.0,
          "corpus_spec: duplication_rate in [0,1]");
  require(max_doc_tokens >= 16, "corpus_spec: max_doc_tokens too small");
  double rs = ratios.valid + ratios.train_pub + ratios.train_pri;
  require(std::abs(rs - 1.0) < 1e-9, "corpus_spec: partition ratios must sum to 1");
  pools.validate();
}

namespace {

// A document under construction: lines of words, some of which belong to fields.
struct word_entry {
  std::string text;
  int field_idx = -1;
};

struct doc_draft {
  std::vector<std::vector<word_entry>> lines;
  std::vector<field_type> field_types;

  void add_line(std::initializer_list<const char*> words) {
    std::vector<word_entry> line;
    for (const char* w : words) line.push_back({w, -1});
    lines.push_back(std::move(line));
  }

  int begin_field(field_type t) {
    field_types.push_back(t);
    return static_cast<int>(field_types.size()) - 1;
  }
};

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t sp = s.find(' ', pos);
    if (sp == std::string::npos) sp = s.size();
    if (sp > pos) out.push_back(s.substr(pos, sp - pos));
    pos = sp + 1;
  }
  return out;
}

class generator {
 public:
  generator(const corpus_spec& spec, const vocabulary& vocab)
      : spec_(spec), vocab_(vocab), company_kinds_(spec.pools.company_kinds) {
    if (!spec_.exclude_company_kind.empty()) {
      std::erase(company_kinds_, spec_.exclude_company_kind);
      require(!company_kinds_.empty(), "exclusion filter emptied the company kind pool");
    }
  }

  std::vector<document> run() {
    std::vector<document> docs;
    if (spec_.n_docs == 0) return docs;
    docs.reserve(static_cast<size_t>(spec_.n_docs));

    rng dup_rng(derive_seed(spec_.seed, "dup-slots"));
    std::vector<int> slots(static_cast<size_t>(std::max(0, spec_.n_docs - 1)));
    for (size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i) + 1;
    dup_rng.shuffle(slots);
    auto n_dups = static_cast<size_t>(std::llround(spec_.duplication_rate * spec_.n_docs));
    n_dups = std::min(n_dups, slots.size());
    std::unordered_set<int> dup_slots(slots.begin(), slots.begin() + static_cast<long>(n_dups));

    for (int i = 0; i < spec_.n_docs; ++i) {
      rng doc_rng(derive_seed(spec_.seed, "doc", static_cast<uint64_t>(i)));
      document doc = dup_slots.contains(i) ? make_duplicate(docs, doc_rng)
                                           : make_original(doc_rng);
      doc.id = doc_id(i);
      if (spec_.with_images) doc.img = render(doc);
      docs.push_back(std::move(doc));
    }
    return docs;
  }

 private:
  static std::string doc_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "d%05d", i);
    return buf;
  }

  document make_original(rng& r) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      bool form = r.next_double() < spec_.form_fraction;
      doc_draft draft = form ? form_draft(r) : receipt_draft(r);
      document doc = realize(draft, form ? template_kind::form : template_kind::receipt);
      if (static_cast<int>(doc.tokens.size()) <= spec_.max_doc_tokens && has_selected(doc)) {
        return doc;
      }
    }
    throw data_error("could not generate a document within max_doc_tokens");
  }

  static bool has_selected(const document& doc) {
    return std::any_of(doc.fields.begin(), doc.fields.end(),
                       [](const field& f) { return f.selected; });
  }

  document make_duplicate(const std::vector<document>& docs, rng& r) {
    const document& src = docs[r.next_below(docs.size())];
    document doc = src;
    doc.img.reset();
    doc.duplicate_of = src.id;
    if (r.next_double() < 0.25) {
      for (bbox& b : doc.boxes) b = bbox{1000 - b.x1, 1000 - b.y1, 1000 - b.x0, 1000 - b.y0};
    }
    int min_x = 1000, max_x = 0, min_y = 1000, max_y = 0;
    for (const bbox& b : doc.boxes) {
      min_x = std::min(min_x, b.x0);
      max_x = std::max(max_x, b.x1);
      min_y = std::min(min_y, b.y0);
      max_y = std::max(max_y, b.y1);
    }
    int dx = std::clamp(r.next_int(-60, 60), -min_x, 1000 - max_x);
    int dy = std::clamp(r.next_int(-60, 60), -min_y, 1000 - max_y);
    for (bbox& b : doc.boxes) b = bbox{b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy};
    return doc;
  }

  // --- value builders -------------------------------------------------------

  std::vector<std::string> name_value(rng& r) {
    for (int tries = 0; tries < 64; ++tries) {
      std::string first = r.pick(spec_.pools.first_names);
      std::string last = r.pick(spec_.pools.last_names);
      std::string initial(1, static_cast<char>('a' + r.next_below(26)));
      std::string key = first + " " + last;
      if (used_names_.insert(key).second) return {first, initial + ".", last};
    }
    throw data_error("value pool exhausted: unique person names");
  }

  std::vector<std::string> date_value(rng& r) {
    int year = 0;
    do {
      year = r.next_int(1990, 2023);
    } while (year == spec_.exclude_date_year);
    int month = r.next_int(1, 12);
    int day = r.next_int(1, 28);
    if (r.next_double() < 0.5) {
      static const char* months[] = {"january", "february", "march",     "april",   "may",
                                     "june",    "july",     "august",    "september", "october",
                                     "november", "december"};
      return {months[month - 1], std::to_string(day), ",", std::to_string(year)};
    }
    char dd[8], mm[8];
    std::snprintf(dd, sizeof(dd), "%02d", day);
    std::snprintf(mm, sizeof(mm), "%02d", month);
    return {dd, "/", mm, "/", std::to_string(year)};
  }

  std::vector<std::string> amount_value(rng& r) {
    std::string currency = r.next_double() < 0.5 ? "rm" : "$";
    std::string whole = std::to_string(r.next_int(1, 9999));
    char cents[4];
    std::snprintf(cents, sizeof(cents), "%02d", r.next_int(0, 99));
    return {currency, whole, ".", cents};
  }

  std::vector<std::string> company_value(rng& r) {
    for (int tries = 0; tries < 64; ++tries) {
      std::vector<std::string> words;
      words.push_back(r.pick(spec_.pools.company_words));
      if (r.next_double() < 0.7) words.push_back(r.pick(spec_.pools.company_words));
      words.push_back(r.pick(company_kinds_));
      const std::string& suffix = r.pick(spec_.pools.company_suffixes);
      for (const std::string& w : split_words(suffix)) words.push_back(w);
      std::string key;
      for (const std::string& w : words) key += w + " ";
      if (used_companies_.insert(key).second) return words;
    }
    throw data_error("value pool exhausted: unique company names");
  }

  std::vector<std::string> address_value(rng& r) {
    std::vector<std::string> words{std::to_string(r.next_int(1, 99))};
    if (r.next_double() < 0.6) words.push_back(r.pick(spec_.pools.street_prefixes));
    words.push_back(r.pick(spec_.pools.street_words));
    if (words.size() == 2) words.push_back(r.next_double() < 0.5 ? "street" : "road");
    words.push_back(",");
    for (const std::string& w : split_words(r.pick(spec_.pools.cities))) words.push_back(w);
    return words;
  }

  std::vector<std::string> answer_value(rng& r) {
    int n = r.next_int(3, 6);
    std::vector<std::string> words;
    for (int i = 0; i < n; ++i) words.push_back(r.pick(spec_.pools.answer_words));
    return words;
  }

  std::vector<std::string> value_for(field_type t, rng& r) {
    switch (t) {
      case field_type::name: return name_value(r);
      case field_type::date: return date_value(r);
      case field_type::amount: return amount_value(r);
      case field_type::company: return company_value(r);
      case field_type::address: return address_value(r);
      case field_type::answer: return answer_value(r);
    }
    return {};
  }

  // --- templates ------------------------------------------------------------

  void add_kv_row(doc_draft& draft, std::vector<std::string> key_words, field_type t, rng& r) {
    std::vector<word_entry> line;
    for (std::string& w : key_words) line.push_back({std::move(w), -1});
    line.push_back({":", -1});
    int idx = draft.begin_field(t);
    for (std::string& w : value_for(t, r)) line.push_back({std::move(w), idx});
    draft.lines.push_back(std::move(line));
  }

  doc_draft form_draft(rng& r) {
    doc_draft draft;
    draft.add_line({r.pick(spec_.pools.form_titles).c_str(), "form"});
    std::vector<field_type> rows{field_type::name,    field_type::date,
                                 field_type::amount,  field_type::company,
                                 field_type::address, field_type::answer};
    r.shuffle(rows);
    int n_rows = r.next_int(3, 5);
    rows.resize(static_cast<size_t>(n_rows));
    for (field_type t : rows) {
      switch (t) {
        case field_type::name: add_kv_row(draft, {"name"}, t, r); break;
        case field_type::date: add_kv_row(draft, {"date"}, t, r); break;
        case field_type::amount: add_kv_row(draft, {"total", "amount"}, t, r); break;
        case field_type::company: add_kv_row(draft, {"company"}, t, r); break;
        case field_type::address: add_kv_row(draft, {"address"}, t, r); break;
        case field_type::answer: {
          static const char* keys[] = {"answer", "comments", "remarks", "purpose", "subject"};
          add_kv_row(draft, {keys[r.next_below(5)]}, t, r);
          break;
        }
      }
    }
    return draft;
  }

  doc_draft receipt_draft(rng& r) {
    doc_draft draft;
    {
      std::vector<word_entry> line;
      int idx = draft.begin_field(field_type::company);
      for (std::string& w : company_value(r)) line.push_back({std::move(w), idx});
      draft.lines.push_back(std::move(line));
    }
    {
      std::vector<word_entry> line;
      int idx = draft.begin_field(field_type::address);
      for (std::string& w : address_value(r)) line.push_back({std::move(w), idx});
      draft.lines.push_back(std::move(line));
    }
    add_kv_row(draft, {"date"}, field_type::date, r);
    int n_items = r.next_int(0, 2);
    for (int i = 0; i < n_items; ++i) {
      std::vector<word_entry> line;
      line.push_back({r.pick(spec_.pools.answer_words), -1});
      line.push_back({"qty", -1});
      line.push_back({std::to_string(r.next_int(1, 9)), -1});
      draft.lines.push_back(std::move(line));
    }
    add_kv_row(draft, {"total"}, field_type::amount, r);
    draft.add_line({"thank", "you"});
    return draft;
  }

  // --- layout + tokenization ------------------------------------------------

  document realize(const doc_draft& draft, template_kind kind) {
    document doc;
    doc.kind = kind;
    std::vector<std::pair<int, int>> field_ranges(draft.field_types.size(), {-1, -1});

    int y = 30;
    const int line_h = 60, char_w = 12, gap = 14, box_h = 44;
    for (const auto& line : draft.lines) {
      int x = kind == template_kind::receipt ? 160 : 40;
      for (const word_entry& w : line) {
        int width = char_w * static_cast<int>(w.text.size());
        if (x + width > 980) {  // wrap long lines
          x = 60;
          y += line_h;
        }
        std::vector<token_id> pieces = vocab_.tokenize(w.text);
        // Per-piece boxes: split the word box proportionally by piece length.
        int total_chars = 0;
        for (token_id p : pieces) {
          total_chars += p == k_unk_id ? 1 : static_cast<int>(vocab_.token(p).size());
        }
        total_chars = std::max(total_chars, 1);
        int cursor = 0;
        for (token_id p : pieces) {
          int chars = p == k_unk_id ? 1 : static_cast<int>(vocab_.token(p).size());
          int px0 = x + width * cursor / total_chars;
          int px1 = x + width * (cursor + chars) / total_chars;
          cursor += chars;
          if (w.field_idx >= 0) {
            auto& range = field_ranges[static_cast<size_t>(w.field_idx)];
            if (range.first < 0) range.first = static_cast<int>(doc.tokens.size());
            range.second = static_cast<int>(doc.tokens.size()) + 1;
          }
          doc.tokens.push_back(p);
          doc.boxes.push_back(bbox{px0, std::min(y, 1000 - box_h), px1, std::min(y + box_h, 1000)});
        }
        x += width + gap;
      }
      y += line_h;
      if (y > 1000 - box_h) y = 1000 - box_h;
    }

    for (size_t i = 0; i < draft.field_types.size(); ++i) {
      auto [start, end] = field_ranges[i];
      require_data(start >= 0 && end > start, "field with no tokens");
      field f;
      f.span = field_span{start, end - start};
      f.type = draft.field_types[i];
      f.label = to_string(f.type);
      f.selected = f.span.len >= k_min_field_tokens && f.span.len <= k_max_field_tokens;
      doc.fields.push_back(f);
    }
    return doc;
  }

  const corpus_spec& spec_;
  const vocabulary& vocab_;
  std::vector<std::string> company_kinds_;
  std::unordered_set<std::string> used_names_, used_companies_;
};

}  // namespace

std::vector<document> generate_corpus(const corpus_spec& spec, const vocabulary& vocab) {
  spec.validate();
  return generator(spec, vocab).run();
}

corpus_partition partition(const std::vector<document>& corpus, const partition_ratios& ratios,
                           uint64_t seed) {
  double rs = ratios.valid + ratios.train_pub + ratios.train_pri;
  require(std::abs(rs - 1.0) < 1e-9, "partition ratios must sum to 1");
  size_t n = corpus.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  rng r(derive_seed(seed, "partition"));
  r.shuffle(order);

  auto n_valid = static_cast<size_t>(std::llround(ratios.valid * static_cast<double>(n)));
  n_valid = std::min(n_valid, n);
  size_t rem = n - n_valid;
  double pub_share = ratios.train_pub + ratios.train_pri > 0
                         ? ratios.train_pub / (ratios.train_pub + ratios.train_pri)
                         : 0.5;
  auto n_pub = static_cast<size_t>(std::floor(static_cast<double>(rem) * pub_share));

  corpus_partition parts;
  for (size_t i = 0; i < n; ++i) {
    const document& d = corpus[order[i]];
    if (i < n_valid) {
      parts.valid.push_back(d);
    } else if (i < n_valid + n_pub) {
      parts.train_pub.push_back(d);
    } else {
      parts.train_pri.push_back(d);
    }
  }
  auto by_id = [](const document& a, const document& b) { return a.id < b.id; };
  std::sort(parts.valid.begin(), parts.valid.end(), by_id);
  std::sort(parts.train_pub.begin(), parts.train_pub.end(), by_id);
  std::sort(parts.train_pri.begin(), parts.train_pri.end(), by_id);
  return parts;
}

std::vector<field> extract(const document& doc) {
  std::vector<field> out;
  for (const field& f : doc.fields) {
    if (f.selected) out.push_back(f);
  }
  std::sort(out.begin(), out.end(),
            [](const field& a, const field& b) { return a.span.start < b.span.start; });
  return out;
}

scrubbed_field scrub(const document& doc, const field& f) {
  require(f.span.start >= 0 && f.span.len >= 1 &&
              f.span.start + f.span.len <= static_cast<int>(doc.tokens.size()),
          "scrub: field span out of range");
  scrubbed_field sf;
  sf.view.doc = doc;
  sf.view.span = f.span;
  sf.view.label = f.type;
  sf.view.field_id = doc.id + "#" + std::to_string(f.span.start);
  sf.ground_truth.assign(doc.tokens.begin() + f.span.start,
                         doc.tokens.begin() + f.span.start + f.span.len);
  for (int i = 0; i < f.span.len; ++i) {
    sf.view.doc.tokens[static_cast<size_t>(f.span.start + i)] = k_mask_id;
  }
  if (sf.view.doc.img) {
    for (int i = 0; i < f.span.len; ++i) {
      pixel_rect r = to_pixels(doc.boxes[static_cast<size_t>(f.span.start + i)],
                               sf.view.doc.img->width, sf.view.doc.img->height);
      fill_rect(*sf.view.doc.img, r, 1.0f);
    }
  }
  return sf;
}

void save_corpus_jsonl(const std::vector<document>& docs, const std::filesystem::path& file,
                       uint64_t spec_hash, const std::filesystem::path& image_dir) {
  std::ofstream out(file);
  require_data(out.good(), "cannot write corpus file: " + file.string());
  if (!image_dir.empty()) std::filesystem::create_directories(image_dir);
  for (const document& d : docs) {
    json j;
    j["id"] = d.id;
    j["template_kind"] = to_string(d.kind);
    j["tokens"] = d.tokens;
    json boxes = json::array();
    for (const bbox& b : d.boxes) boxes.push_back({b.x0, b.y0, b.x1, b.y1});
    j["boxes"] = std::move(boxes);
    json fields = json::array();
    for (const field& f : d.fields) {
      fields.push_back({{"span", {f.span.start, f.span.len}},
                        {"field_type", to_string(f.type)},
                        {"label", f.label},
                        {"selected", f.selected}});
    }
    j["fields"] = std::move(fields);
    if (!d.duplicate_of.empty()) j["duplicate_of"] = d.duplicate_of;
    if (d.img && !image_dir.empty()) {
      std::string rel = (image_dir.filename() / (d.id + ".pgm")).string();
      write_pgm(*d.img, image_dir / (d.id + ".pgm"));
      j["image_path"] = rel;
    } else if (!d.image_path.empty()) {
      j["image_path"] = d.image_path;
    }
    j["spec_hash"] = to_hex(spec_hash);
    out << j.dump() << "\n";
  }
}

std::vector<document> load_corpus_jsonl(const std::filesystem::path& file, bool load_images,
                                        uint64_t* spec_hash_out) {
  std::ifstream in(file);
  require_data(in.good(), "cannot read corpus file: " + file.string());
  std::vector<document> docs;
  std::string line;
  bool have_hash = false;
  uint64_t hash = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    require_data(!j.is_discarded(), "malformed corpus line in " + file.string());
    document d;
    d.id = j.at("id").get<std::string>();
    d.kind = template_kind_from_string(j.at("template_kind").get<std::string>());
    d.tokens = j.at("tokens").get<std::vector<token_id>>();
    for (const auto& b : j.at("boxes")) {
      bbox bb{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
      require_data(bb.valid(), "invalid bbox in " + file.string());
      d.boxes.push_back(bb);
    }
    require_data(d.tokens.size() == d.boxes.size(), "token/box count mismatch in " + file.string());
    for (const auto& fj : j.at("fields")) {
      field f;
      f.span = field_span{fj.at("span").at(0).get<int>(), fj.at("span").at(1).get<int>()};
      f.type = field_type_from_string(fj.at("field_type").get<std::string>());
      f.label = fj.at("label").get<std::string>();
      f.selected = fj.at("selected").get<bool>();
      require_data(f.span.start >= 0 && f.span.len >= 1 &&
                       f.span.start + f.span.len <= static_cast<int>(d.tokens.size()),
                   "field span out of range in " + file.string());
      d.fields.push_back(f);
    }
    if (j.contains("duplicate_of")) d.duplicate_of = j["duplicate_of"].get<std::string>();
    if (j.contains("image_path")) {
      d.image_path = j["image_path"].get<std::string>();
      if (load_images) d.img = read_pgm(file.parent_path() / d.image_path);
    }
    uint64_t h = from_hex(j.at("spec_hash").get<std::string>());
    require_data(!have_hash || h == hash, "mixed spec hashes inside " + file.string());
    hash = h;
    have_hash = true;
    docs.push_back(std::move(d));
  }
  if (spec_hash_out) *spec_hash_out = hash;
  return docs;
}

}  // namespace scrublab
