#include "subchain/fmdata.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace subchain {

void SparseSample::validate(std::size_t d0) const {
  if (indices.size() != values.size())
    throw SchemaError("sparse sample: index/value length mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= d0)
      throw SchemaError("sparse sample: index " +
                        std::to_string(indices[k] + 1) + " exceeds d0 = " +
                        std::to_string(d0));
    if (k > 0 && indices[k] <= indices[k - 1])
      throw SchemaError("sparse sample: indices not strictly increasing");
    if (values[k] == 0.0 || !std::isfinite(values[k]))
      throw SchemaError("sparse sample: zero or non-finite value stored");
  }
  if (!std::isfinite(y)) throw SchemaError("sparse sample: non-finite label");
}

double SparseSample::value_at(std::size_t index) const {
  const auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

QualificationReport check_qualification(
    const std::vector<SparseSample>& samples, std::size_t d0) {
  for (const auto& s : samples) s.validate(d0);
  QualificationReport rep;
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      std::vector<std::size_t> shared;
      std::set_intersection(samples[a].indices.begin(),
                            samples[a].indices.end(),
                            samples[b].indices.begin(),
                            samples[b].indices.end(),
                            std::back_inserter(shared));
      if (shared.size() > 1)
        rep.violations.push_back({a, b, std::move(shared)});
    }
  rep.ok = rep.violations.empty();
  return rep;
}

QualifiedDataset build_qualified(std::vector<SparseSample> samples,
                                 std::size_t d0) {
  const QualificationReport rep = check_qualification(samples, d0);
  if (!rep.ok) {
    std::ostringstream msg;
    msg << "dataset fails qualification: " << rep.violations.size()
        << " sample pair(s) share two or more indices (first: samples "
        << rep.violations[0].sample_a + 1 << " and "
        << rep.violations[0].sample_b + 1 << ")";
    throw QualificationError(msg.str());
  }

  QualifiedDataset ds;
  ds.d0 = d0;

  std::vector<PairIndexer::Pair> union_pairs;
  std::vector<std::pair<PairIndexer::Pair, std::pair<std::size_t, double>>>
      origin;  // pair -> (owner sample, coefficient)
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    for (std::size_t u = 0; u < s.indices.size(); ++u)
      for (std::size_t v = u + 1; v < s.indices.size(); ++v) {
        const PairIndexer::Pair pr{s.indices[u], s.indices[v]};
        union_pairs.push_back(pr);
        origin.push_back({pr, {k, s.values[u] * s.values[v]}});
      }
  }
  std::sort(union_pairs.begin(), union_pairs.end());
  // qualification makes distinct samples' pair sets disjoint; double-check
  for (std::size_t f = 1; f < union_pairs.size(); ++f)
    if (union_pairs[f] == union_pairs[f - 1])
      throw QualificationError(
          "pair appears in two samples despite qualification check");

  ds.indexer = PairIndexer(d0, union_pairs);
  ds.coeffs.assign(ds.indexer.size(), 0.0);
  ds.pair_owner.assign(ds.indexer.size(), 0);
  ds.sample_pairs.assign(samples.size(), {});
  for (const auto& [pr, who] : origin) {
    const std::size_t f = ds.indexer.flat(pr.first, pr.second);
    ds.coeffs[f] = who.second;
    ds.pair_owner[f] = who.first;
    ds.sample_pairs[who.first].push_back(f);
  }
  ds.samples = std::move(samples);
  return ds;
}

double fm_predict(const SparseSample& x, const DenseMatrix& p) {
  p.validate("fm_predict factors");
  double out = 0.0;
  for (std::size_t u = 0; u < x.indices.size(); ++u)
    for (std::size_t v = u + 1; v < x.indices.size(); ++v) {
      const std::size_t i = x.indices[u], j = x.indices[v];
      if (i >= p.cols || j >= p.cols)
        throw ShapeError("fm_predict: sample index exceeds factor columns");
      double dot = 0.0;
      for (std::size_t r = 0; r < p.rows; ++r) dot += p.at(r, i) * p.at(r, j);
      out += dot * x.values[u] * x.values[v];
    }
  return out;
}

namespace {

using nlohmann::json;

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError("dataset line " + std::to_string(line_no) +
                      ": invalid JSON (" + std::string(e.what()) + ")");
  }
}

}  // namespace

std::vector<SparseSample> parse_jsonl_dataset(const std::string& text,
                                              std::size_t& d0_out) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<SparseSample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = parse_line(line, line_no);
    if (!have_header) {
      if (!j.is_object() || !j.contains("d0") ||
          !j["d0"].is_number_unsigned() || j["d0"].get<std::size_t>() == 0)
        throw SchemaError("dataset line " + std::to_string(line_no) +
                          ": expected header {\"d0\": n} with n >= 1");
      d0_out = j["d0"].get<std::size_t>();
      have_header = true;
      continue;
    }
    if (!j.is_object() || !j.contains("y") || !j.contains("x") ||
        !j["y"].is_number() || !j["x"].is_object())
      throw SchemaError("dataset line " + std::to_string(line_no) +
                        ": expected {\"y\": label, \"x\": {...}}");
    SparseSample s;
    s.y = j["y"].get<double>();
    std::vector<std::pair<std::size_t, double>> entries;
    for (const auto& [key, val] : j["x"].items()) {
      std::size_t idx = 0;
      try {
        std::size_t pos = 0;
        idx = std::stoull(key, &pos);
        if (pos != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw SchemaError("dataset line " + std::to_string(line_no) +
                          ": index key '" + key + "' is not a number");
      }
      if (idx == 0 || idx > d0_out)
        throw SchemaError("dataset line " + std::to_string(line_no) +
                          ": index " + key + " outside 1.." +
                          std::to_string(d0_out));
      if (!val.is_number())
        throw SchemaError("dataset line " + std::to_string(line_no) +
                          ": value for index " + key + " is not a number");
      const double v = val.get<double>();
      if (v == 0.0)
        throw SchemaError("dataset line " + std::to_string(line_no) +
                          ": explicit zero stored at index " + key);
      entries.push_back({idx - 1, v});
    }
    std::sort(entries.begin(), entries.end());
    for (std::size_t k = 1; k < entries.size(); ++k)
      if (entries[k].first == entries[k - 1].first)
        throw SchemaError("dataset line " + std::to_string(line_no) +
                          ": duplicate index " +
                          std::to_string(entries[k].first + 1));
    for (const auto& [idx, v] : entries) {
      s.indices.push_back(idx);
      s.values.push_back(v);
    }
    s.validate(d0_out);
    samples.push_back(std::move(s));
  }
  if (!have_header)
    throw SchemaError("dataset: missing header line {\"d0\": n}");
  return samples;
}

std::string serialize_jsonl_dataset(const std::vector<SparseSample>& samples,
                                    std::size_t d0) {
  std::ostringstream out;
  out << json{{"d0", d0}}.dump() << "\n";
  for (const auto& s : samples) {
    s.validate(d0);
    json x = json::object();
    for (std::size_t k = 0; k < s.indices.size(); ++k)
      x[std::to_string(s.indices[k] + 1)] = s.values[k];
    out << json{{"y", s.y}, {"x", x}}.dump() << "\n";
  }
  return out.str();
}

}  // namespace subchain
