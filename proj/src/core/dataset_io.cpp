#include "prefrank/core/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "prefrank/core/hash.hpp"
#include "prefrank/error.hpp"

namespace prefrank {
namespace fs = std::filesystem;

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<Line> read_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Line> out;
  std::string raw;
  std::size_t no = 0;
  const std::string name = path.filename().string();
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (blank(raw) || raw.front() == '#') continue;
    out.push_back({no, split_csv_line(raw, no, name)});
  }
  return out;
}

[[noreturn]] void parse_fail(std::string_view file, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, std::string(file) + ":" + std::to_string(line) + ": " + what);
}

std::int64_t parse_int(const std::string& s, std::string_view file, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    parse_fail(file, line, "expected integer, got '" + s + "'");
  return v;
}

double parse_double(const std::string& s, std::string_view file, std::size_t line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    parse_fail(file, line, "expected number, got '" + s + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  for (char c : s) {
    if (c == ';') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ';';
    out += items[i];
  }
  return out;
}

template <typename Fn>
auto parse_token(Fn fn, const std::string& s, std::string_view file, std::size_t line) {
  try {
    return fn(s);
  } catch (const Error& e) {
    parse_fail(file, line, e.what());
  }
}

void require_fields(const Line& l, std::size_t lo, std::size_t hi, std::string_view file) {
  if (l.fields.size() < lo || l.fields.size() > hi) {
    parse_fail(file, l.number,
               "expected " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                   " fields, got " + std::to_string(l.fields.size()));
  }
}

[[noreturn]] void dangling(const std::string& id) {
  throw Error(ErrorCode::kDanglingReference, id);
}

}  // namespace

DatasetPaths DatasetPaths::in_directory(const fs::path& dir) {
  DatasetPaths p;
  p.venues = dir / "venues.csv";
  p.comparisons = dir / "comparisons.csv";
  p.respondents = dir / "respondents.csv";
  if (fs::exists(dir / "publications.csv")) p.publications = dir / "publications.csv";
  if (fs::exists(dir / "citations.csv")) p.citations = dir / "citations.csv";
  return p;
}

std::string to_string(const Violation& v) {
  return v.entity + " [" + v.field + "]: " + v.rule;
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no,
                                        std::string_view file) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool field_was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!cur.empty() || field_was_quoted) parse_fail(file, line_no, "stray quote");
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
      field_was_quoted = false;
    } else {
      if (field_was_quoted) parse_fail(file, line_no, "text after closing quote");
      cur += c;
    }
  }
  if (quoted) parse_fail(file, line_no, "unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_real(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, p);
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset d;

  const std::string vfile = paths.venues.filename().string();
  for (const auto& l : read_records(paths.venues)) {
    require_fields(l, 3, 5, vfile);
    Venue v;
    v.id = l.fields[0];
    v.name = l.fields[1];
    v.works_count = parse_int(l.fields[2], vfile, l.number);
    if (l.fields.size() >= 4 && !l.fields[3].empty())
      v.external_score = parse_double(l.fields[3], vfile, l.number);
    if (l.fields.size() == 5) v.field_tags = split_list(l.fields[4]);
    if (d.venues.count(v.id)) throw Error(ErrorCode::kDuplicateKey, "venue " + v.id);
    d.venues.emplace(v.id, std::move(v));
  }

  const std::string rfile = paths.respondents.filename().string();
  for (const auto& l : read_records(paths.respondents)) {
    require_fields(l, 7, 7, rfile);
    RespondentRecord r;
    r.id = l.fields[0];
    r.field = l.fields[1];
    r.career_stage = parse_token(parse_career_stage, l.fields[2], rfile, l.number);
    if (l.fields[3] != "NA") r.prestige_decile = static_cast<int>(parse_int(l.fields[3], rfile, l.number));
    if (l.fields[4] != "NA") r.gender = parse_token(parse_gender, l.fields[4], rfile, l.number);
    if (l.fields[5] != "NA") {
      auto parts = split_list(l.fields[5]);
      if (parts.size() != 3) parse_fail(rfile, l.number, "aspirations need top;mid;low");
      r.aspirations = Aspirations{parts[0], parts[1], parts[2]};
    }
    r.consideration_set = split_list(l.fields[6]);
    if (d.respondents.count(r.id)) throw Error(ErrorCode::kDuplicateKey, "respondent " + r.id);
    d.respondents.emplace(r.id, std::move(r));
  }

  const std::string cfile = paths.comparisons.filename().string();
  std::set<std::pair<std::string, std::int64_t>> order_keys;
  for (const auto& l : read_records(paths.comparisons)) {
    require_fields(l, 5, 5, cfile);
    Comparison c;
    c.respondent_id = l.fields[0];
    c.first = l.fields[1];
    c.second = l.fields[2];
    c.outcome = parse_token(parse_outcome, l.fields[3], cfile, l.number);
    c.order_index = parse_int(l.fields[4], cfile, l.number);
    if (!order_keys.emplace(c.respondent_id, c.order_index).second) {
      throw Error(ErrorCode::kDuplicateKey,
                  "comparison " + c.respondent_id + "#" + std::to_string(c.order_index));
    }
    d.comparisons.push_back(std::move(c));
  }

  if (paths.publications) {
    const std::string pfile = paths.publications->filename().string();
    for (const auto& l : read_records(*paths.publications)) {
      require_fields(l, 2, 2, pfile);
      auto it = d.respondents.find(l.fields[0]);
      if (it == d.respondents.end()) dangling(l.fields[0]);
      if (!it->second.publications.insert(l.fields[1]).second)
        throw Error(ErrorCode::kDuplicateKey, "publication " + l.fields[0] + "/" + l.fields[1]);
    }
  }

  if (paths.citations) {
    const std::string file = paths.citations->filename().string();
    for (const auto& l : read_records(*paths.citations)) {
      require_fields(l, 3, 3, file);
      CitationKey key{l.fields[0], l.fields[1]};
      double count = parse_double(l.fields[2], file, l.number);
      if (!d.citations.emplace(key, count).second)
        throw Error(ErrorCode::kDuplicateKey, "citation " + key.first + "->" + key.second);
    }
  }

  // Cross references, reported by the first unresolved id.
  auto need_venue = [&](const std::string& id) {
    if (!d.venues.count(id)) dangling(id);
  };
  for (const auto& [id, r] : d.respondents) {
    for (const auto& v : r.consideration_set) need_venue(v);
    if (r.aspirations) {
      need_venue(r.aspirations->top);
      need_venue(r.aspirations->mid);
      need_venue(r.aspirations->low);
    }
    for (const auto& v : r.publications) need_venue(v);
  }
  for (const auto& c : d.comparisons) {
    if (!d.respondents.count(c.respondent_id)) dangling(c.respondent_id);
    need_venue(c.first);
    need_venue(c.second);
  }
  for (const auto& [key, count] : d.citations) {
    need_venue(key.first);
    need_venue(key.second);
  }

  std::stable_sort(d.comparisons.begin(), d.comparisons.end(),
                   [](const Comparison& a, const Comparison& b) {
                     return std::tie(a.respondent_id, a.order_index) <
                            std::tie(b.respondent_id, b.order_index);
                   });

  auto violations = validate(d);
  if (!violations.empty()) {
    std::string msg = std::to_string(violations.size()) + " violation(s)";
    for (const auto& v : violations) msg += "\n  " + to_string(v);
    throw Error(ErrorCode::kInvalidDataset, msg);
  }
  return d;
}

std::vector<Violation> validate(const Dataset& d) {
  std::vector<Violation> out;
  auto add = [&](std::string entity, std::string field, std::string rule) {
    out.push_back({std::move(entity), std::move(field), std::move(rule)});
  };

  for (const auto& [key, v] : d.venues) {
    const std::string e = "venue " + key;
    if (blank(v.id)) add(e, "id", "id must be non-empty and not whitespace-only");
    if (v.id != key) add(e, "id", "map key equals venue id");
    if (v.works_count < 0) add(e, "works_count", "works_count ≥ 0");
    if (v.external_score && !(*v.external_score >= 0))
      add(e, "external_score", "external_score absent or ≥ 0");
  }

  for (const auto& [key, r] : d.respondents) {
    const std::string e = "respondent " + key;
    if (blank(r.id)) add(e, "id", "id must be non-empty and not whitespace-only");
    if (r.id != key) add(e, "id", "map key equals respondent id");
    if (r.field.empty()) add(e, "field", "field must be non-empty");
    if (r.prestige_decile && (*r.prestige_decile < 1 || *r.prestige_decile > 10))
      add(e, "prestige_decile", "prestige_decile ∈ [1,10]");
    if (r.aspirations) {
      for (const auto* v : {&r.aspirations->top, &r.aspirations->mid, &r.aspirations->low}) {
        if (!d.venues.count(*v)) add(e, "aspirations", "aspirations reference known venues (" + *v + ")");
      }
    }
    std::set<VenueId> seen;
    for (const auto& v : r.consideration_set) {
      if (!d.venues.count(v)) add(e, "consideration_set", "venue resolves (" + v + ")");
      if (!seen.insert(v).second) add(e, "consideration_set", "entries unique (" + v + ")");
    }
    for (const auto& v : r.publications) {
      if (!d.venues.count(v)) add(e, "publications", "venue resolves (" + v + ")");
    }
  }

  std::set<std::pair<std::string, std::int64_t>> order_keys;
  for (const auto& c : d.comparisons) {
    const std::string e = "comparison " + c.respondent_id + "#" + std::to_string(c.order_index);
    if (c.first == c.second) add(e, "first", "first ≠ second");
    if (c.order_index < 0) add(e, "order_index", "order_index ≥ 0");
    if (!order_keys.emplace(c.respondent_id, c.order_index).second)
      add(e, "order_index", "order_index unique per respondent");
    const auto* r = d.find_respondent(c.respondent_id);
    if (!r) {
      add(e, "respondent_id", "respondent resolves");
      continue;
    }
    for (const auto* v : {&c.first, &c.second}) {
      if (!d.venues.count(*v)) add(e, "venue", "venue resolves (" + *v + ")");
      else if (!r->selected(*v))
        add(e, "venue", "compared venue in respondent's consideration_set (" + *v + ")");
    }
  }

  for (const auto& [key, count] : d.citations) {
    const std::string e = "citation " + key.first + "->" + key.second;
    if (!(count >= 0)) add(e, "count", "count ≥ 0");
    if (!d.venues.count(key.first)) add(e, "citing_id", "venue resolves");
    if (!d.venues.count(key.second)) add(e, "cited_id", "venue resolves");
  }
  return out;
}

std::string serialize_venues(const Dataset& d) {
  std::string out;
  for (const auto& [id, v] : d.venues) {
    out += csv_escape(v.id) + "," + csv_escape(v.name) + "," + std::to_string(v.works_count);
    if (v.external_score || !v.field_tags.empty())
      out += "," + (v.external_score ? format_real(*v.external_score) : std::string());
    if (!v.field_tags.empty()) out += "," + csv_escape(join_list(v.field_tags));
    out += '\n';
  }
  return out;
}

std::string serialize_comparisons(const Dataset& d) {
  std::vector<const Comparison*> rows;
  for (const auto& c : d.comparisons) rows.push_back(&c);
  std::stable_sort(rows.begin(), rows.end(), [](const Comparison* a, const Comparison* b) {
    return std::tie(a->respondent_id, a->order_index) < std::tie(b->respondent_id, b->order_index);
  });
  std::string out;
  for (const auto* c : rows) {
    out += csv_escape(c->respondent_id) + "," + csv_escape(c->first) + "," + csv_escape(c->second) +
           "," + std::string(outcome_token(c->outcome)) + "," + std::to_string(c->order_index) + "\n";
  }
  return out;
}

std::string serialize_respondents(const Dataset& d) {
  std::string out;
  for (const auto& [id, r] : d.respondents) {
    out += csv_escape(r.id) + "," + csv_escape(r.field) + "," +
           std::string(career_stage_token(r.career_stage)) + "," +
           (r.prestige_decile ? std::to_string(*r.prestige_decile) : "NA") + "," +
           (r.gender ? std::string(gender_token(*r.gender)) : "NA") + "," +
           (r.aspirations ? csv_escape(r.aspirations->top + ";" + r.aspirations->mid + ";" +
                                       r.aspirations->low)
                          : "NA") +
           "," + csv_escape(join_list(r.consideration_set)) + "\n";
  }
  return out;
}

std::string serialize_publications(const Dataset& d) {
  std::string out;
  for (const auto& [id, r] : d.respondents) {
    for (const auto& v : r.publications) out += csv_escape(id) + "," + csv_escape(v) + "\n";
  }
  return out;
}

std::string serialize_citations(const Dataset& d) {
  std::string out;
  for (const auto& [key, count] : d.citations) {
    out += csv_escape(key.first) + "," + csv_escape(key.second) + "," + format_real(count) + "\n";
  }
  return out;
}

void write_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    out << body;
  };
  put("venues.csv", serialize_venues(d));
  put("comparisons.csv", serialize_comparisons(d));
  put("respondents.csv", serialize_respondents(d));
  put("publications.csv", serialize_publications(d));
  put("citations.csv", serialize_citations(d));
}

std::string dataset_hash(const Dataset& d) {
  std::string all;
  for (const auto& part : {serialize_venues(d), serialize_comparisons(d), serialize_respondents(d),
                           serialize_publications(d), serialize_citations(d)}) {
    all += part;
    all += '\x1e';
  }
  return sha256_hex(all);
}

}  // namespace prefrank
