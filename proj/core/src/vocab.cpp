#include "scrublab/vocab.hpp"

#include <fstream>
#include <unordered_set>

namespace scrublab {

namespace {

const char* k_special_strings[k_num_special] = {"[PAD]", "[MASK]", "[CLS]", "[SEP]", "[UNK]"};

void append_chars(std::vector<std::string>& v, const char* s) {
  for (const char* p = s; *p; ++p) v.emplace_back(1, *p);
}

void append_words(std::vector<std::string>& v, std::initializer_list<const char*> words) {
  for (const char* w : words) v.emplace_back(w);
}

}  // namespace

vocabulary vocabulary::from_tokens(std::vector<std::string> tokens) {
  require_data(tokens.size() >= 16, "vocabulary must have at least 16 tokens");
  for (int i = 0; i < k_num_special; ++i) {
    require_data(tokens[static_cast<size_t>(i)] == k_special_strings[i],
                 "vocabulary must start with the five special tokens");
  }
  vocabulary v;
  v.tokens_ = std::move(tokens);
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    const std::string& t = v.tokens_[i];
    require_data(!t.empty(), "empty vocabulary token");
    if (i >= k_num_special) {
      bool inserted = v.index_.emplace(t, static_cast<token_id>(i)).second;
      require_data(inserted, "duplicate vocabulary token: " + t);
      v.max_piece_len_ = std::max(v.max_piece_len_, t.size());
    }
  }
  return v;
}

const std::string& vocabulary::token(token_id id) const {
  require_data(id >= 0 && id < size(), "token id out of range");
  return tokens_[static_cast<size_t>(id)];
}

std::optional<token_id> vocabulary::id_of(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<token_id> vocabulary::tokenize(std::string_view word) const {
  require(!word.empty(), "tokenize: empty word");
  std::vector<token_id> out;
  size_t pos = 0;
  while (pos < word.size()) {
    size_t len = std::min(max_piece_len_, word.size() - pos);
    bool matched = false;
    for (; len >= 1; --len) {
      auto it = index_.find(std::string(word.substr(pos, len)));
      if (it != index_.end()) {
        out.push_back(it->second);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.push_back(k_unk_id);
      ++pos;
    }
  }
  return out;
}

void vocabulary::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  require_data(out.good(), "cannot write vocabulary file: " + file.string());
  for (const std::string& t : tokens_) out << t << "\n";
}

vocabulary vocabulary::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  require_data(in.good(), "cannot read vocabulary file: " + file.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

vocabulary vocabulary::default_vocab() {
  std::vector<std::string> t;
  t.reserve(512);
  for (int i = 0; i < k_num_special; ++i) t.emplace_back(k_special_strings[i]);
  append_chars(t, "0123456789");
  append_chars(t, "abcdefghijklmnopqrstuvwxyz");
  append_chars(t, ".,:/-#$%()'&");
  for (int i = 0; i < 100; ++i) {
    t.push_back(std::string(1, static_cast<char>('0' + i / 10)) +
                std::string(1, static_cast<char>('0' + i % 10)));
  }
  append_words(t, {"january", "february", "march", "april", "may", "june", "july", "august",
                   "september", "october", "november", "december"});
  append_words(t, {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"});
  append_words(
      t, {"name",        "date",       "total",     "amount",   "company",      "address",
          "invoice",     "receipt",    "tax",       "cash",     "change",       "subtotal",
          "qty",         "item",       "no",        "phone",    "fax",          "email",
          "to",          "from",       "of",        "the",      "and",          "for",
          "with",        "order",      "number",    "due",      "paid",         "balance",
          "account",     "id",         "ref",       "page",     "form",         "question",
          "answer",      "comments",   "signature", "title",    "dept",         "office",
          "tel",         "attn",       "per",       "by",       "at",           "on",
          "time",        "type",       "code",      "unit",     "price",        "description",
          "quantity",    "discount",   "service",   "charge",   "card",         "visa",
          "approved",    "thank",      "you",       "please",   "come",         "again",
          "welcome",     "customer",   "copy",      "bill",     "note",         "memo",
          "subject",     "purpose",    "remarks",   "status",   "report",       "application",
          "registration", "survey",    "request",   "contact",  "position",     "department",
          "manager",     "officer",    "student",   "employee", "client",       "vendor",
          "supplier",    "reference",  "details",   "section",  "field",        "value",
          "entry",       "line",       "row",       "label",    "check",        "mail",
          "web",         "site",       "zone",      "area",     "region",       "branch",
          "division",    "district"});
  append_words(t, {"james",   "mary",      "john",     "patricia", "robert",  "jennifer",
                   "michael", "linda",     "william",  "elizabeth", "david",  "barbara",
                   "richard", "susan",     "joseph",   "jessica",  "thomas",  "sarah",
                   "charles", "karen",     "christopher", "nancy", "daniel",  "lisa",
                   "matthew", "betty",     "anthony",  "margaret", "mark",    "sandra",
                   "donald",  "ashley",    "steven",   "kimberly", "paul",    "emily",
                   "andrew",  "donna",     "joshua",   "michelle", "kenneth", "carol",
                   "kevin",   "amanda",    "brian",    "melissa",  "george",  "deborah",
                   "edward",  "stephanie"});
  append_words(t, {"smith",    "johnson",  "williams", "brown",   "jones",    "garcia",
                   "miller",   "davis",    "rodriguez", "martinez", "hernandez", "lopez",
                   "gonzalez", "wilson",   "anderson", "taylor",  "moore",    "jackson",
                   "martin",   "lee",      "perez",    "white",   "harris",   "clark",
                   "lewis",    "walker",   "young",    "allen",   "king",     "wright",
                   "scott",    "torres",   "nguyen",   "flores",  "rivera",   "green",
                   "adams",    "nelson",   "baker",    "hall",    "campbell", "mitchell",
                   "roberts",  "carter",   "phillips", "evans",   "turner",   "parker",
                   "collins",  "stewart"});
  append_words(t, {"guardian",  "health",   "beauty",   "hardware", "trading",  "electronics",
                   "supplies",  "services", "solutions", "systems", "foods",    "textiles",
                   "motors",    "logistics", "pharmacy", "optics",  "books",    "toys",
                   "sports",    "music",    "media",    "digital",  "global",   "national",
                   "united",    "premier",  "prime",    "royal",    "golden",   "silver",
                   "diamond",   "star",     "sun",      "moon",     "ocean",    "river",
                   "mountain",  "valley",   "forest",   "bridge",   "restaurant", "cafe",
                   "bakery",    "grill",    "kitchen",  "house",    "garden",   "market",
                   "store",     "shop",     "mart",     "enterprise", "holdings", "sdn",
                   "bhd",       "ltd",      "inc",      "corp",     "llc",      "group"});
  append_words(t, {"main",     "oak",      "pine",     "maple",    "cedar",    "elm",
                   "park",     "lake",     "hill",     "spring",   "north",    "south",
                   "east",     "west",     "first",    "second",   "third",    "fourth",
                   "fifth",    "jalan",    "lorong",   "taman",    "bandar",   "kuala",
                   "lumpur",   "penang",   "ipoh",     "johor",    "klang",    "shah",
                   "alam",     "petaling", "jaya",     "seri",     "kota",     "melaka",
                   "seremban", "kuantan",  "sentral",  "georgetown", "street", "road",
                   "avenue",   "lane",     "drive",    "court",    "plaza",    "tower",
                   "block",    "floor",    "suite",    "city",     "town",     "village",
                   "centre",   "point",    "bay",      "port",     "island",   "heights"});
  append_words(t, {"rm", "usd", "myr", "gst", "sst", "kg", "pcs", "ml", "pkg", "amt"});

  require_data(t.size() == 512, "default vocabulary must have 512 entries, got " +
                                    std::to_string(t.size()));
  return from_tokens(std::move(t));
}

}  // namespace scrublab
