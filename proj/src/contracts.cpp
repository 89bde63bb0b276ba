#include "pluvial/contracts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pluvial/errors.hpp"

namespace pluvial {

using namespace std::chrono;

std::pair<Date, Date> quarter_bounds(Date d) {
  const year_month_day ymd{d};
  const unsigned q0 = (static_cast<unsigned>(ymd.month()) - 1) / 3;
  const year_month_day first{ymd.year(), month{q0 * 3 + 1}, day{1}};
  const year_month_day next = q0 == 3 ? year_month_day{ymd.year() + years{1}, January, day{1}}
                                      : year_month_day{ymd.year(), month{q0 * 3 + 4}, day{1}};
  return {sys_days{first}, sys_days{next}};
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const char* what) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    throw ValidationError(std::string("column '") + what + "' is not a finite number: '" + s + "'");
  return v;
}

int to_int(const std::string& s, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ValidationError(std::string("column '") + what + "' is not an integer: '" + s + "'");
  return v;
}

}  // namespace

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw ValidationError("invalid ISO date '" + std::string(text) + "'");
  auto num = [&](std::size_t off, std::size_t len, auto& out) {
    auto [ptr, ec] = std::from_chars(text.data() + off, text.data() + off + len, out);
    if (ec != std::errc() || ptr != text.data() + off + len)
      throw ValidationError("invalid ISO date '" + std::string(text) + "'");
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw ValidationError("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

std::string format_date(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int quarter_of(Date d) {
  const year_month_day ymd{d};
  return static_cast<int>((static_cast<unsigned>(ymd.month()) - 1) / 3) + 1;
}

std::array<std::int64_t, 4> quarter_ticks(Date start, Date end) {
  std::array<std::int64_t, 4> ticks{0, 0, 0, 0};
  Date cur = start;
  while (cur < end) {
    const auto [q_begin, q_end] = quarter_bounds(cur);
    const Date piece_end = std::min(q_end, end);
    const auto quarter_days = (q_end - q_begin).count();
    const auto days = (piece_end - cur).count();
    ticks[static_cast<std::size_t>(quarter_of(cur) - 1)] += days * (kTicksPerQuarter / quarter_days);
    cur = piece_end;
  }
  return ticks;
}

std::int64_t exposure_ticks(Date start, Date end) {
  const auto q = quarter_ticks(start, end);
  return q[0] + q[1] + q[2] + q[3];
}

void ContractRecord::validate() const {
  if (id.empty()) throw ValidationError("contract id is empty");
  if (!std::isfinite(x) || !std::isfinite(y))
    throw ValidationError("contract " + id + ": non-finite coordinates");
  if (!(end > start)) throw ValidationError("contract " + id + ": end_date must be after start_date");
  if (!(value > 0.0) || !std::isfinite(value))
    throw ValidationError("contract " + id + ": value must be positive");
  if (n_claims < 0) throw ValidationError("contract " + id + ": negative claim count");
  if (has_claim_dates && static_cast<int>(claim_dates.size()) != n_claims)
    throw ValidationError("contract " + id + ": n_claims does not match the number of claim dates");
  for (const auto& [name, v] : numeric)
    if (!std::isfinite(v)) throw ValidationError("contract " + id + ": non-finite " + name);
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

ContractTable read_contracts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open contracts file: " + path.string());
  const std::string file = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(file, 1, "missing header");
  auto header = split(line, ',');
  for (auto& h : header) h = trim(h);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].empty()) throw ParseError(file, 1, "empty column name");
    if (!col.emplace(header[i], i).second) throw ParseError(file, 1, "duplicate column '" + header[i] + "'");
  }
  for (auto name : kContractColumns)
    if (!col.count(std::string(name)))
      throw ParseError(file, 1, "missing required column '" + std::string(name) + "'");

  ContractTable table;
  const std::set<std::string_view> required(kContractColumns.begin(), kContractColumns.end());
  for (const auto& h : header)
    if (!required.count(h)) table.extra_columns.push_back(h);

  std::size_t lineno = 1;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto f = split(line, ',');
      if (f.size() != header.size())
        throw ValidationError("expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(f.size()));
      for (auto& v : f) v = trim(v);
      auto get = [&](std::string_view name) -> const std::string& { return f[col.at(std::string(name))]; };
      ContractRecord r;
      r.id = get("id");
      r.x = to_double(get("x"), "x");
      r.y = to_double(get("y"), "y");
      r.region_id = get("region_id");
      r.superregion_id = get("superregion_id");
      if (r.region_id.empty() || r.superregion_id.empty())
        throw ValidationError("empty region or superregion id");
      r.start = parse_date(get("start_date"));
      r.end = parse_date(get("end_date"));
      r.value = to_double(get("value"), "value");
      for (auto name : kContractCategoricals) {
        const auto& v = get(name);
        if (v.empty()) throw ValidationError("empty categorical '" + std::string(name) + "'");
        r.categorical.emplace(std::string(name), v);
      }
      r.numeric["size_m2"] = to_double(get("size_m2"), "size_m2");
      r.numeric["build_year"] = to_double(get("build_year"), "build_year");
      r.n_claims = to_int(get("n_claims"), "n_claims");
      const auto& dates = get("claim_dates");
      if (!dates.empty()) {
        for (const auto& d : split(dates, ';')) r.claim_dates.push_back(parse_date(trim(d)));
        std::sort(r.claim_dates.begin(), r.claim_dates.end());
        r.has_claim_dates = true;
      } else {
        r.has_claim_dates = (r.n_claims == 0);
      }
      for (const auto& extra : table.extra_columns)
        r.numeric[extra] = to_double(f[col.at(extra)], extra.c_str());
      r.validate();
      if (!seen.insert(r.id).second) throw ValidationError("duplicate contract id '" + r.id + "'");
      table.records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      table.issues.push_back({lineno, e.what()});
    }
  }
  return table;
}

void write_contracts(const std::vector<ContractRecord>& records,
                     const std::vector<std::string>& extra_columns,
                     const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kContractColumns.size(); ++i) out << (i ? "," : "") << kContractColumns[i];
  for (const auto& e : extra_columns) out << ',' << e;
  out << '\n';
  for (const auto& r : records) {
    out << r.id << ',' << format_number(r.x) << ',' << format_number(r.y) << ',' << r.region_id << ','
        << r.superregion_id << ',' << format_date(r.start) << ',' << format_date(r.end) << ','
        << format_number(r.value);
    for (auto name : kContractCategoricals) out << ',' << r.categorical.at(std::string(name));
    out << ',' << format_number(r.numeric.at("size_m2")) << ','
        << format_number(r.numeric.at("build_year")) << ',' << r.n_claims << ',';
    for (std::size_t i = 0; i < r.claim_dates.size(); ++i)
      out << (i ? ";" : "") << format_date(r.claim_dates[i]);
    for (const auto& e : extra_columns) {
      auto it = r.numeric.find(e);
      if (it == r.numeric.end()) throw ValidationError("contract " + r.id + " lacks column '" + e + "'");
      out << ',' << format_number(it->second);
    }
    out << '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  const std::string s = out.str();
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace pluvial
