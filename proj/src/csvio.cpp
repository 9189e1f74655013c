#include "conscale/csvio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "conscale/errors.hpp"

namespace conscale {

std::string fmt_double(double v) {
  if (v == 0.0) v = 0.0 * std::fabs(v);  // canonical +0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, const std::string& path,
                    std::size_t line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw InvalidInputError(path + ":" + std::to_string(line_no) +
                            ": not a number: '" + field + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

}  // namespace

std::vector<ProxySeries> read_input_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    throw InvalidInputError(path + ": empty file");
  ++line_no;
  {
    const auto header = split_fields(line);
    if (header != std::vector<std::string>{"record_id", "age_bp", "age_sd",
                                           "value"})
      throw InvalidInputError(path +
                              ":1: expected header record_id,age_bp,age_sd,value");
  }

  struct Raw {
    Vec ages, values, sds;
    std::size_t with_sd = 0, rows = 0;
    std::size_t first_line = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Raw> records;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4)
      throw InvalidInputError(path + ":" + std::to_string(line_no) +
                              ": expected 4 fields, got " +
                              std::to_string(fields.size()));
    const std::string& id = fields[0];
    if (id.empty())
      throw InvalidInputError(path + ":" + std::to_string(line_no) +
                              ": empty record_id");
    auto [it, inserted] = records.try_emplace(id);
    if (inserted) {
      order.push_back(id);
      it->second.first_line = line_no;
    }
    Raw& r = it->second;
    r.ages.push_back(parse_number(fields[1], path, line_no));
    r.values.push_back(parse_number(fields[3], path, line_no));
    ++r.rows;
    if (!fields[2].empty()) {
      const double sd = parse_number(fields[2], path, line_no);
      if (sd < 0.0)
        throw InvalidInputError(path + ":" + std::to_string(line_no) +
                                ": negative age_sd");
      r.sds.push_back(sd);
      ++r.with_sd;
    }
  }

  std::vector<ProxySeries> out;
  for (const auto& id : order) {
    Raw& r = records[id];
    if (r.with_sd != 0 && r.with_sd != r.rows)
      throw InvalidInputError(path + ": record '" + id +
                              "' mixes filled and empty age_sd");
    std::optional<Vec> sd;
    if (r.with_sd == r.rows) sd = std::move(r.sds);
    out.push_back(make_proxy_series(id, std::move(r.ages), std::move(r.values),
                                    std::move(sd)));
  }
  if (out.empty()) throw InvalidInputError(path + ": no data rows");
  return out;
}

void write_consensus_csv(const std::string& path, const JointChronology& joint,
                         const Chain& chain) {
  if (chain.size() == 0) throw InvalidInputError("write_consensus_csv: empty chain");
  auto out = open_out(path);
  out << "age_bp,mean,q05,q95\n";
  const std::size_t ns = chain.size();
  Vec column(ns);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    for (std::size_t s = 0; s < ns; ++s) column[s] = chain.samples[s].mu[i];
    std::sort(column.begin(), column.end());
    const auto quantile = [&](double p) {
      const double pos = p * (double)(ns - 1);
      const std::size_t lo = (std::size_t)pos;
      const std::size_t hi = std::min(lo + 1, ns - 1);
      const double w = pos - (double)lo;
      return column[lo] * (1.0 - w) + column[hi] * w;
    };
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= (double)ns;
    out << fmt_double(age_bp_from_internal(joint.t[i])) << ','
        << fmt_double(mean) << ',' << fmt_double(quantile(0.05)) << ','
        << fmt_double(quantile(0.95)) << '\n';
  }
}

void write_map_csv(const std::string& path, const CredibilityMap& map) {
  auto out = open_out(path);
  out << "age_bp,lambda,flag\n";
  for (std::size_t level = 0; level < map.levels(); ++level)
    for (std::size_t j = 0; j < map.points(); ++j)
      out << fmt_double(age_bp_from_internal(map.s[j])) << ','
          << fmt_double(map.lambdas[level]) << ','
          << (int)map.flag(level, j) << '\n';
}

void write_contributions_csv(
    const std::string& path, const TimeGrid& grid,
    const std::vector<std::pair<std::string, ContributionCurve>>& curves) {
  auto out = open_out(path);
  out << "record_id,age_bp,lambda,contribution\n";
  for (const auto& [id, curve] : curves) {
    if (curve.values.size() != grid.size())
      throw InvalidInputError("write_contributions_csv: grid length mismatch");
    for (std::size_t j = 0; j < grid.size(); ++j)
      out << id << ',' << fmt_double(age_bp_from_internal(grid.s[j])) << ','
          << fmt_double(curve.lambda) << ',' << fmt_double(curve.values[j])
          << '\n';
  }
}

void write_chain_csv(const std::string& path, const Chain& chain) {
  auto out = open_out(path);
  if (chain.size() == 0) throw InvalidInputError("write_chain_csv: empty chain");
  const std::size_t n = chain.samples[0].mu.size();
  out << "iteration,lambda0";
  for (std::size_t i = 0; i < n; ++i) out << ",mu_" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",tau_" << i;
  std::size_t diag_total = 0;
  for (const auto& sigma : chain.samples[0].sigmas) diag_total += sigma.rows();
  for (std::size_t i = 0; i < diag_total; ++i) out << ",sigma_diag_" << i;
  out << '\n';
  for (std::size_t s = 0; s < chain.size(); ++s) {
    const auto& st = chain.samples[s];
    out << (chain.burn_in + (s + 1) * chain.thinning) << ','
        << fmt_double(st.lambda0);
    for (double v : st.mu) out << ',' << fmt_double(v);
    for (double v : st.tau) out << ',' << fmt_double(v);
    for (const auto& sigma : st.sigmas)
      for (std::size_t i = 0; i < sigma.rows(); ++i)
        out << ',' << fmt_double(sigma(i, i));
    out << '\n';
  }
}

}  // namespace conscale
