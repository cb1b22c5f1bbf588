#pragma once

// Loading, validating and aligning raw price/index series.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mfxdma/error.hpp"
#include "mfxdma/format.hpp"

namespace mfxdma::io {

using Date = std::chrono::year_month_day;

struct Observation {
  Date date;
  double value;
};

/// Raw level series. Dates strictly increasing, values finite and positive.
struct RawSeries {
  std::string label;
  std::vector<Observation> observations;

  std::size_t size() const noexcept { return observations.size(); }
};

/// Log returns; `dates[i]` is the later date of the pair that produced `values[i]`.
struct ReturnSeries {
  std::string label;
  std::vector<double> values;
  std::vector<Date> dates;

  std::size_t size() const noexcept { return values.size(); }
};

/// Two return series over the identical date index.
struct AlignedPair {
  ReturnSeries x;
  ReturnSeries y;

  std::size_t size() const noexcept { return x.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace detail

/// Parses `YYYY-MM-DD`. Throws ValidationError on anything else.
inline Date parse_iso_date(std::string_view text) {
  text = detail::trim(text);
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !detail::parse_number(text.substr(0, 4), y) ||
      !detail::parse_number(text.substr(5, 2), m) ||
      !detail::parse_number(text.substr(8, 2), d)) {
    throw ValidationError("unparseable ISO-8601 date '" + std::string(text) + "'");
  }
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw ValidationError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

/// Reads a level series from CSV text. `source` names the input in error messages.
inline RawSeries read_csv(std::istream& in, std::string label, std::string_view date_column = "date",
                          std::string_view value_column = "value",
                          std::string_view source = "<stream>") {
  const std::string where(source);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(where + ": empty file");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);

  const auto header = detail::split_fields(line);
  const auto find_col = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ValidationError(where + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_idx = find_col(date_column);
  const std::size_t value_idx = find_col(value_column);

  RawSeries series{std::move(label), {}};
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    const auto fail = [&](const std::string& why) {
      return ValidationError(where + ": malformed row " + std::to_string(row) + ": " + why);
    };
    if (fields.size() != header.size())
      throw fail("expected " + std::to_string(header.size()) + " fields, got " +
                 std::to_string(fields.size()));
    Date date;
    try {
      date = parse_iso_date(fields[date_idx]);
    } catch (const ValidationError& e) {
      throw fail(e.what());
    }
    double value = 0.0;
    if (!detail::parse_number(fields[value_idx], value) || !std::isfinite(value))
      throw fail("value '" + std::string(fields[value_idx]) + "' is not a finite number");
    if (value <= 0.0)
      throw ValidationError(where + ": non-positive value " + std::string(fields[value_idx]) +
                            " at row " + std::to_string(row));
    series.observations.push_back({date, value});
  }

  std::stable_sort(series.observations.begin(), series.observations.end(),
                   [](const Observation& a, const Observation& b) { return a.date < b.date; });
  const auto dup = std::adjacent_find(
      series.observations.begin(), series.observations.end(),
      [](const Observation& a, const Observation& b) { return a.date == b.date; });
  if (dup != series.observations.end())
    throw ValidationError(where + ": duplicate date " + format_date(dup->date));
  return series;
}

/// Loads a level series from a CSV file; the label is the file stem.
inline RawSeries load_csv(const std::filesystem::path& path, std::string_view date_column = "date",
                          std::string_view value_column = "value") {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file '" + path.string() + "'");
  return read_csv(in, path.stem().string(), date_column, value_column, path.string());
}

/// Writes `date,value` rows with round-trip precision.
inline void write_csv(std::ostream& out, const RawSeries& s) {
  out << "date,value\n";
  for (const auto& o : s.observations) out << format_date(o.date) << ',' << fmt_double(o.value) << '\n';
}

inline ReturnSeries log_returns(const RawSeries& s) {
  if (s.size() < 2)
    throw ValidationError("series '" + s.label + "' too short for returns (need >= 2 points)");
  ReturnSeries r{s.label, {}, {}};
  r.values.reserve(s.size() - 1);
  r.dates.reserve(s.size() - 1);
  for (std::size_t t = 1; t < s.size(); ++t) {
    r.values.push_back(std::log(s.observations[t].value) - std::log(s.observations[t - 1].value));
    r.dates.push_back(s.observations[t].date);
  }
  return r;
}

/// Intersects the two date sets, then takes log returns of each side.
inline AlignedPair align(const RawSeries& a, const RawSeries& b) {
  if (a.size() == 0 || b.size() == 0) throw ValidationError("cannot align an empty series");
  RawSeries ca{a.label, {}}, cb{b.label, {}};
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const auto& oa = a.observations[i];
    const auto& ob = b.observations[j];
    if (oa.date < ob.date) {
      ++i;
    } else if (ob.date < oa.date) {
      ++j;
    } else {
      ca.observations.push_back(oa);
      cb.observations.push_back(ob);
      ++i;
      ++j;
    }
  }
  if (ca.size() < 3)
    throw ValidationError("insufficient overlap between '" + a.label + "' and '" + b.label +
                          "': " + std::to_string(ca.size()) + " common dates (need >= 3)");
  return {log_returns(ca), log_returns(cb)};
}

/// Rescales to zero mean and unit sample variance.
inline ReturnSeries standardize(ReturnSeries s) {
  const auto n = static_cast<double>(s.size());
  if (s.size() < 2) throw ValidationError("cannot standardize fewer than 2 values");
  double mean = 0.0;
  for (double v : s.values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : s.values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw ValidationError("cannot standardize zero-variance series '" + s.label + "'");
  for (double& v : s.values) v = (v - mean) / sd;
  return s;
}

}  // namespace mfxdma::io
