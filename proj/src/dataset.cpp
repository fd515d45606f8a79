#include "sparsemeta/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sparsemeta/errors.hpp"

namespace sparsemeta {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string line_prefix(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

int parse_count(std::string_view field, std::string_view column, std::size_t line_no) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw InputError(line_prefix(line_no) + "column '" + std::string(column) +
                     "' is not an integer: '" + std::string(field) + "'");
  if (value < 0)
    throw InputError(line_prefix(line_no) + "negative value in column '" + std::string(column) + "'");
  if (value > 1'000'000'000)
    throw InputError(line_prefix(line_no) + "value out of range in column '" + std::string(column) + "'");
  return static_cast<int>(value);
}

double parse_real(std::string_view field, std::string_view column, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value))
    throw InputError(line_prefix(line_no) + "column '" + std::string(column) +
                     "' is not a number: '" + std::string(field) + "'");
  return value;
}

std::vector<std::string_view> header_for(Design d) {
  switch (d) {
    case Design::TwoGroupBinary: return {"study", "y0", "n0", "y1", "n1"};
    case Design::OneGroupBinary: return {"study", "y", "n"};
    case Design::TwoGroupCount: return {"study", "y0", "t0", "y1", "t1"};
    case Design::OneGroupCount: return {"study", "y", "t"};
    case Design::EffectSE: return {"study", "theta", "se"};
  }
  return {};
}

std::string joined(const std::vector<std::string_view>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) s += ',';
    s += cols[i];
  }
  return s;
}

// log-odds with the zero-cell rule already applied by the caller
double logit_ratio(double events, double non_events) { return std::log(events / non_events); }

}  // namespace

std::string_view to_string(Design d) {
  switch (d) {
    case Design::OneGroupBinary: return "one-group-binary";
    case Design::TwoGroupBinary: return "two-group-binary";
    case Design::OneGroupCount: return "one-group-count";
    case Design::TwoGroupCount: return "two-group-count";
    case Design::EffectSE: return "effect-se";
  }
  return "?";
}

Design parse_design(std::string_view name) {
  for (Design d : {Design::OneGroupBinary, Design::TwoGroupBinary, Design::OneGroupCount,
                   Design::TwoGroupCount, Design::EffectSE})
    if (to_string(d) == name) return d;
  throw InputError("unknown design '" + std::string(name) +
                   "' (expected one-group-binary, two-group-binary, one-group-count, "
                   "two-group-count or effect-se)");
}

StudyRecord StudyRecord::one_group_binary(std::string id, int y, int n) {
  StudyRecord r;
  r.study_id = std::move(id);
  r.design = Design::OneGroupBinary;
  r.y1 = y;
  r.n1 = n;
  return r;
}

StudyRecord StudyRecord::two_group_binary(std::string id, int y0, int n0, int y1, int n1) {
  StudyRecord r;
  r.study_id = std::move(id);
  r.design = Design::TwoGroupBinary;
  r.y0 = y0;
  r.n0 = n0;
  r.y1 = y1;
  r.n1 = n1;
  return r;
}

StudyRecord StudyRecord::one_group_count(std::string id, int y, double exposure) {
  StudyRecord r;
  r.study_id = std::move(id);
  r.design = Design::OneGroupCount;
  r.y1 = y;
  r.n1 = exposure;
  return r;
}

StudyRecord StudyRecord::two_group_count(std::string id, int y0, double t0, int y1, double t1) {
  StudyRecord r;
  r.study_id = std::move(id);
  r.design = Design::TwoGroupCount;
  r.y0 = y0;
  r.n0 = t0;
  r.y1 = y1;
  r.n1 = t1;
  return r;
}

StudyRecord StudyRecord::effect_se(std::string id, double theta_hat, double se) {
  StudyRecord r;
  r.study_id = std::move(id);
  r.design = Design::EffectSE;
  r.theta_hat = theta_hat;
  r.se = se;
  return r;
}

void StudyRecord::validate() const {
  const std::string who = "study '" + study_id + "': ";
  switch (design) {
    case Design::EffectSE:
      if (!std::isfinite(theta_hat)) throw InputError(who + "effect is not finite");
      if (!(se > 0.0) || !std::isfinite(se)) throw InputError(who + "standard error must be positive");
      return;
    case Design::TwoGroupBinary:
      if (n0 < 1 || std::floor(n0) != n0) throw InputError(who + "group size n0 must be a positive integer");
      if (y0 < 0) throw InputError(who + "negative value");
      if (y0 > n0) throw InputError(who + "events exceed group size");
      [[fallthrough]];
    case Design::OneGroupBinary:
      if (n1 < 1 || std::floor(n1) != n1) throw InputError(who + "group size must be a positive integer");
      if (y1 < 0) throw InputError(who + "negative value");
      if (y1 > n1) throw InputError(who + "events exceed group size");
      return;
    case Design::TwoGroupCount:
      if (!(n0 > 0.0) || !std::isfinite(n0)) throw InputError(who + "exposure must be positive");
      if (y0 < 0) throw InputError(who + "negative value");
      [[fallthrough]];
    case Design::OneGroupCount:
      if (!(n1 > 0.0) || !std::isfinite(n1)) throw InputError(who + "exposure must be positive");
      if (y1 < 0) throw InputError(who + "negative value");
      return;
  }
}

Dataset parse_dataset(std::string_view text, Design design, std::string source) {
  Dataset ds;
  ds.design = design;
  ds.source = std::move(source);
  const auto expected = header_for(design);

  std::size_t line_no = 0;
  bool seen_header = false;
  std::size_t pos = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;  // UTF-8 BOM
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    auto fields = split_commas(line);
    if (!seen_header) {
      if (fields != expected)
        throw InputError(line_prefix(line_no) + "header must be '" + joined(expected) + "' for design " +
                         std::string(to_string(design)));
      seen_header = true;
      continue;
    }
    if (fields.size() != expected.size())
      throw InputError(line_prefix(line_no) + "expected " + std::to_string(expected.size()) +
                       " fields, found " + std::to_string(fields.size()));

    std::string id(fields[0]);
    if (id.empty()) throw InputError(line_prefix(line_no) + "empty study label");
    StudyRecord r;
    switch (design) {
      case Design::TwoGroupBinary:
        r = StudyRecord::two_group_binary(id, parse_count(fields[1], "y0", line_no),
                                          parse_count(fields[2], "n0", line_no),
                                          parse_count(fields[3], "y1", line_no),
                                          parse_count(fields[4], "n1", line_no));
        break;
      case Design::OneGroupBinary:
        r = StudyRecord::one_group_binary(id, parse_count(fields[1], "y", line_no),
                                          parse_count(fields[2], "n", line_no));
        break;
      case Design::TwoGroupCount:
        r = StudyRecord::two_group_count(id, parse_count(fields[1], "y0", line_no),
                                         parse_real(fields[2], "t0", line_no),
                                         parse_count(fields[3], "y1", line_no),
                                         parse_real(fields[4], "t1", line_no));
        break;
      case Design::OneGroupCount:
        r = StudyRecord::one_group_count(id, parse_count(fields[1], "y", line_no),
                                         parse_real(fields[2], "t", line_no));
        break;
      case Design::EffectSE:
        r = StudyRecord::effect_se(id, parse_real(fields[1], "theta", line_no),
                                   parse_real(fields[2], "se", line_no));
        break;
    }
    try {
      r.validate();
    } catch (const InputError& e) {
      throw InputError(line_prefix(line_no) + e.what());
    }
    ds.studies.push_back(std::move(r));
  }
  if (!seen_header) throw InputError("missing header row");
  if (ds.studies.empty()) throw InputError("no studies");
  return ds;
}

Dataset read_dataset_file(const std::string& path, Design design) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), design, path);
}

double t_one_group_binary(int y, double n) {
  double events = y, rest = n - y;
  if (events == 0.0 || rest == 0.0) {
    events += 0.5;
    rest += 0.5;
  }
  return logit_ratio(events, rest) / std::sqrt(1.0 / events + 1.0 / rest);
}

double t_two_group_binary(int y0, double n0, int y1, double n1) {
  double a = y1, b = n1 - y1, c = y0, d = n0 - y0;
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
  }
  return (std::log(a / b) - std::log(c / d)) / std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
}

double t_one_group_count(int y, double exposure) {
  const double events = y == 0 ? 0.5 : y;
  return std::log(events / exposure) * std::sqrt(events);
}

double t_two_group_count(int y0, double t0, int y1, double t1) {
  double a = y1, c = y0;
  if (a == 0.0 || c == 0.0) {
    a += 0.5;
    c += 0.5;
  }
  return (std::log(a / t1) - std::log(c / t0)) / std::sqrt(1.0 / a + 1.0 / c);
}

EffectSummary empirical_effect(const StudyRecord& s, ZeroCellPolicy policy) {
  EffectSummary out;
  auto reject = [&] {
    throw InputError("study '" + s.study_id + "': zero cell and continuity correction disabled");
  };
  switch (s.design) {
    case Design::EffectSE:
      out.theta_hat = s.theta_hat;
      out.se = s.se;
      break;
    case Design::OneGroupBinary: {
      double events = s.y1, rest = s.n1 - s.y1;
      if (events == 0.0 || rest == 0.0) {
        if (policy == ZeroCellPolicy::Reject) reject();
        events += 0.5;
        rest += 0.5;
        out.corrected = true;
      }
      out.theta_hat = logit_ratio(events, rest);
      out.se = std::sqrt(1.0 / events + 1.0 / rest);
      break;
    }
    case Design::TwoGroupBinary: {
      double a = s.y1, b = s.n1 - s.y1, c = s.y0, d = s.n0 - s.y0;
      if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) {
        if (policy == ZeroCellPolicy::Reject) reject();
        a += 0.5;
        b += 0.5;
        c += 0.5;
        d += 0.5;
        out.corrected = true;
      }
      out.theta_hat = std::log(a / b) - std::log(c / d);
      out.se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
      break;
    }
    case Design::OneGroupCount: {
      double events = s.y1;
      if (events == 0.0) {
        if (policy == ZeroCellPolicy::Reject) reject();
        events = 0.5;
        out.corrected = true;
      }
      out.theta_hat = std::log(events / s.n1);
      out.se = std::sqrt(1.0 / events);
      break;
    }
    case Design::TwoGroupCount: {
      double a = s.y1, c = s.y0;
      if (a == 0.0 || c == 0.0) {
        if (policy == ZeroCellPolicy::Reject) reject();
        a += 0.5;
        c += 0.5;
        out.corrected = true;
      }
      out.theta_hat = std::log(a / s.n1) - std::log(c / s.n0);
      out.se = std::sqrt(1.0 / a + 1.0 / c);
      break;
    }
  }
  out.t = out.theta_hat / out.se;
  return out;
}

std::vector<FunnelPoint> funnel_points(const Dataset& ds, ZeroCellPolicy policy) {
  std::vector<FunnelPoint> pts;
  pts.reserve(ds.size());
  for (const auto& s : ds.studies) {
    auto e = empirical_effect(s, policy);
    pts.push_back({s.study_id, e.theta_hat, e.se});
  }
  return pts;
}

StudyRecord swap_groups(const StudyRecord& study) {
  if (!study.two_group()) throw InputError("swap_groups needs a two-group study");
  StudyRecord r = study;
  std::swap(r.y0, r.y1);
  std::swap(r.n0, r.n1);
  return r;
}

Dataset swap_groups(const Dataset& ds) {
  Dataset out = ds;
  for (auto& s : out.studies) s = swap_groups(s);
  return out;
}

}  // namespace sparsemeta
