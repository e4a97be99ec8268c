#include "subchain/io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <utility>
#include <variant>

#include "subchain/version.hpp"

namespace subchain {

namespace {

const Json& require_field(const Json& j, const char* key,
                          const std::string& what) {
  if (!j.is_object())
    throw SchemaError(what + ": expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(what + ": missing field '" + key + "'");
  return *it;
}

double require_number(const Json& j, const char* key, const std::string& what) {
  const Json& f = require_field(j, key, what);
  if (!f.is_number())
    throw SchemaError(what + ": field '" + key + "' must be a number");
  return f.get<double>();
}

std::size_t require_count(const Json& j, const char* key,
                          const std::string& what) {
  const Json& f = require_field(j, key, what);
  if (!f.is_number_unsigned())
    throw SchemaError(what + ": field '" + key +
                      "' must be a non-negative integer");
  return f.get<std::size_t>();
}

std::vector<double> require_numbers(const Json& f, const std::string& what,
                                    const char* key) {
  if (!f.is_array())
    throw SchemaError(what + ": field '" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(f.size());
  for (const Json& v : f) {
    if (!v.is_number())
      throw SchemaError(what + ": field '" + key +
                        "' must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> require_vector(const Json& j, const char* key,
                                   const std::string& what) {
  return require_numbers(require_field(j, key, what), what, key);
}

// 1-based index from JSON, converted to 0-based with a range check
std::size_t index_from_json(const Json& j, const char* key, std::size_t limit,
                            const std::string& what) {
  const std::size_t v = require_count(j, key, what);
  if (v == 0 || v > limit)
    throw SchemaError(what + ": index '" + key + "' out of range [1, " +
                      std::to_string(limit) + "]");
  return v - 1;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw SchemaError("cannot read file: " + path);
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SchemaError("cannot open file for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw SchemaError("cannot write file: " + path);
}

Json parse_json(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError(what + ": malformed JSON");
  return j;
}

Json matrix_to_json(const DenseMatrix& m) {
  return Json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

DenseMatrix matrix_from_json(const Json& j, const std::string& what) {
  DenseMatrix m(require_count(j, "rows", what), require_count(j, "cols", what));
  m.data = require_vector(j, "data", what);
  if (m.data.size() != m.rows * m.cols)
    throw SchemaError(what + ": data length " + std::to_string(m.data.size()) +
                      " does not match rows*cols = " +
                      std::to_string(m.rows * m.cols));
  m.validate(what);
  return m;
}

Json tensor_to_json(const DenseTensor3& t) {
  return Json{{"shape", Json::array({t.n1, t.n2, t.n3})}, {"data", t.data}};
}

DenseTensor3 tensor_from_json(const Json& j, const std::string& what) {
  const Json& shape = require_field(j, "shape", what);
  if (!shape.is_array() || shape.size() != 3)
    throw SchemaError(what + ": 'shape' must be an array of three counts");
  for (const Json& s : shape)
    if (!s.is_number_unsigned())
      throw SchemaError(what + ": 'shape' entries must be counts");
  DenseTensor3 t(shape[0].get<std::size_t>(), shape[1].get<std::size_t>(),
                 shape[2].get<std::size_t>());
  t.data = require_vector(j, "data", what);
  if (t.data.size() != t.size())
    throw SchemaError(what + ": data length does not match shape");
  t.validate(what);
  return t;
}

Json pair_coeffs_to_json(const PairCoeffs& a) {
  return pair_values_to_json(a.d0, a.values);
}

std::pair<std::size_t, std::vector<double>> pair_values_from_json(
    const Json& j, const std::string& what) {
  const std::size_t d0 = require_count(j, "d0", what);
  if (d0 < 2) throw SchemaError(what + ": d0 must be at least 2");
  const Json& pairs = require_field(j, "pairs", what);
  if (!pairs.is_array())
    throw SchemaError(what + ": 'pairs' must be an array");
  const PairIndexer pix(d0);
  std::vector<double> values(pix.size(), 0.0);
  std::vector<bool> seen(pix.size(), false);
  for (const Json& e : pairs) {
    const std::size_t i = index_from_json(e, "i", d0, what);
    const std::size_t jj = index_from_json(e, "j", d0, what);
    if (i >= jj) throw SchemaError(what + ": pair must have i < j");
    const std::size_t f = pix.flat(i, jj);
    if (seen[f])
      throw SchemaError(what + ": duplicate pair (" + std::to_string(i + 1) +
                        ", " + std::to_string(jj + 1) + ")");
    seen[f] = true;
    values[f] = require_number(e, "value", what);
  }
  for (std::size_t f = 0; f < pix.size(); ++f)
    if (!seen[f]) {
      const auto [i, jj] = pix.pair(f);
      throw SchemaError(what + ": missing pair (" + std::to_string(i + 1) +
                        ", " + std::to_string(jj + 1) + ")");
    }
  return {d0, std::move(values)};
}

Json pair_values_to_json(std::size_t d0, const std::vector<double>& values) {
  const PairIndexer pix(d0);
  if (values.size() != pix.size())
    throw ShapeError("pair_values_to_json: length mismatch");
  Json pairs = Json::array();
  for (std::size_t f = 0; f < pix.size(); ++f) {
    const auto [i, j] = pix.pair(f);
    pairs.push_back(Json{{"i", i + 1}, {"j", j + 1}, {"value", values[f]}});
  }
  return Json{{"d0", d0}, {"pairs", std::move(pairs)}};
}

PairCoeffs pair_coeffs_from_json(const Json& j, const std::string& what) {
  auto [d0, values] = pair_values_from_json(j, what);
  PairCoeffs a;
  a.d0 = d0;
  a.values = std::move(values);
  a.validate();
  return a;
}

Json triple_coeffs_to_json(const TripleCoeffs& a) {
  const TripleIndexer tix(a.d0);
  Json triples = Json::array();
  for (std::size_t f = 0; f < tix.size(); ++f) {
    const auto t = tix.triple(f);
    triples.push_back(Json{{"i", t.i + 1},
                           {"j", t.j + 1},
                           {"k", t.k + 1},
                           {"value", a.values[f]}});
  }
  return Json{{"d0", a.d0}, {"triples", std::move(triples)}};
}

TripleCoeffs triple_coeffs_from_json(const Json& j, const std::string& what) {
  TripleCoeffs a;
  a.d0 = require_count(j, "d0", what);
  if (a.d0 < 3) throw SchemaError(what + ": d0 must be at least 3");
  const Json& triples = require_field(j, "triples", what);
  if (!triples.is_array())
    throw SchemaError(what + ": 'triples' must be an array");
  const TripleIndexer tix(a.d0);
  a.values.assign(tix.size(), 0.0);
  std::vector<bool> seen(tix.size(), false);
  for (const Json& e : triples) {
    const std::size_t i = index_from_json(e, "i", a.d0, what);
    const std::size_t jj = index_from_json(e, "j", a.d0, what);
    const std::size_t k = index_from_json(e, "k", a.d0, what);
    if (!(i < jj && jj < k))
      throw SchemaError(what + ": triple must have i < j < k");
    const std::size_t f = tix.flat(i, jj, k);
    if (seen[f]) throw SchemaError(what + ": duplicate triple");
    seen[f] = true;
    a.values[f] = require_number(e, "value", what);
  }
  for (std::size_t f = 0; f < tix.size(); ++f)
    if (!seen[f]) throw SchemaError(what + ": incomplete triple table");
  a.validate();
  return a;
}

Json map_point_to_json(const MapPoint& p) {
  Json j;
  j["map"] = map_name(map_id_of(p));
  std::visit(
      [&](const auto& pt) {
        using T = std::decay_t<decltype(pt)>;
        if constexpr (std::is_same_v<T, FactorPoint>) {
          j["X"] = matrix_to_json(pt.X);
          j["Y"] = matrix_to_json(pt.Y);
        } else if constexpr (std::is_same_v<T, FMPoint>) {
          j["P"] = matrix_to_json(pt.P);
          j["a"] = pair_coeffs_to_json(pt.a);
        } else if constexpr (std::is_same_v<T, CPPoint>) {
          j["X"] = matrix_to_json(pt.X);
          j["Y"] = matrix_to_json(pt.Y);
          j["Z"] = matrix_to_json(pt.Z);
        } else if constexpr (std::is_same_v<T, CPDaggerPoint>) {
          j["x"] = pt.x;
          j["Y"] = matrix_to_json(pt.Y);
          j["Z"] = matrix_to_json(pt.Z);
        } else if constexpr (std::is_same_v<T, HOFMPoint>) {
          j["P"] = matrix_to_json(pt.P);
          j["a"] = triple_coeffs_to_json(pt.a);
        } else if constexpr (std::is_same_v<T, NeuFMPoint>) {
          j["P"] = matrix_to_json(pt.P);
          j["H"] = matrix_to_json(pt.H);
          j["a"] = pair_coeffs_to_json(pt.a);
        } else if constexpr (std::is_same_v<T, NeuMFPoint>) {
          j["W"] = matrix_to_json(pt.W);
          j["X"] = matrix_to_json(pt.X);
          j["S"] = matrix_to_json(pt.S);
          j["Y"] = matrix_to_json(pt.Y);
          j["b"] = pt.b;
        } else {
          static_assert(std::is_same_v<T, GMFPoint>);
          j["v"] = pt.v;
          j["h"] = pt.h;
          j["P"] = matrix_to_json(pt.P);
          j["Q"] = matrix_to_json(pt.Q);
          Json obs = Json::array();
          for (const auto& [i, jj] : pt.observed)
            obs.push_back(Json{{"i", i + 1}, {"j", jj + 1}});
          j["observed"] = std::move(obs);
        }
      },
      p);
  return j;
}

MapPoint map_point_from_json(MapId id, const Json& j, const std::string& what) {
  MapPoint out;
  switch (id) {
    case MapId::mf: {
      FactorPoint p;
      p.X = matrix_from_json(require_field(j, "X", what), what + ".X");
      p.Y = matrix_from_json(require_field(j, "Y", what), what + ".Y");
      p.validate();
      out = std::move(p);
      break;
    }
    case MapId::fm: {
      FMPoint p;
      p.P = matrix_from_json(require_field(j, "P", what), what + ".P");
      p.a = pair_coeffs_from_json(require_field(j, "a", what), what + ".a");
      p.validate();
      out = std::move(p);
      break;
    }
    case MapId::cp: {
      CPPoint p;
      p.X = matrix_from_json(require_field(j, "X", what), what + ".X");
      p.Y = matrix_from_json(require_field(j, "Y", what), what + ".Y");
      p.Z = matrix_from_json(require_field(j, "Z", what), what + ".Z");
      p.validate();
      out = std::move(p);
      break;
    }
    case MapId::cpdagger: {
      CPDaggerPoint p;
      p.x = require_vector(j, "x", what);
      p.Y = matrix_from_json(require_field(j, "Y", what), what + ".Y");
      p.Z = matrix_from_json(require_field(j, "Z", what), what + ".Z");
      p.validate();
      out = std::move(p);
      break;
    }
    case MapId::hofm: {
      HOFMPoint p;
      p.P = matrix_from_json(require_field(j, "P", what), what + ".P");
      p.a = triple_coeffs_from_json(require_field(j, "a", what), what + ".a");
      p.validate();
      out = std::move(p);
      break;
    }
    case MapId::neufm: {
      NeuFMPoint p;
      p.P = matrix_from_json(require_field(j, "P", what), what + ".P");
      p.H = matrix_from_json(require_field(j, "H", what), what + ".H");
      p.a = pair_coeffs_from_json(require_field(j, "a", what), what + ".a");
      p.validate();
      out = std::move(p);
      break;
    }
    case MapId::neumf: {
      NeuMFPoint p;
      p.W = matrix_from_json(require_field(j, "W", what), what + ".W");
      p.X = matrix_from_json(require_field(j, "X", what), what + ".X");
      p.S = matrix_from_json(require_field(j, "S", what), what + ".S");
      p.Y = matrix_from_json(require_field(j, "Y", what), what + ".Y");
      p.b = require_vector(j, "b", what);
      p.validate();
      out = std::move(p);
      break;
    }
    case MapId::gmf: {
      GMFPoint p;
      p.v = require_number(j, "v", what);
      p.h = require_vector(j, "h", what);
      p.P = matrix_from_json(require_field(j, "P", what), what + ".P");
      p.Q = matrix_from_json(require_field(j, "Q", what), what + ".Q");
      const Json& obs = require_field(j, "observed", what);
      if (!obs.is_array())
        throw SchemaError(what + ": 'observed' must be an array");
      for (const Json& e : obs)
        p.observed.emplace_back(index_from_json(e, "i", p.P.cols, what),
                                index_from_json(e, "j", p.Q.cols, what));
      p.validate();
      out = std::move(p);
      break;
    }
  }
  return out;
}

Json zonotope_to_json(const SubgradientZonotope& z) {
  Json gens = Json::array();
  for (const Generator& g : z.generators)
    gens.push_back(Json{{"vector", g.vector},
                        {"lo", g.range.lo},
                        {"hi", g.range.hi}});
  return Json{{"center", z.center}, {"generators", std::move(gens)}};
}

SubgradientZonotope zonotope_from_json(const Json& j, const std::string& what) {
  SubgradientZonotope z;
  z.center = require_vector(j, "center", what);
  const Json& gens = require_field(j, "generators", what);
  if (!gens.is_array())
    throw SchemaError(what + ": 'generators' must be an array");
  for (const Json& e : gens) {
    Generator g;
    g.vector = require_vector(e, "vector", what);
    g.range.lo = require_number(e, "lo", what);
    g.range.hi = require_number(e, "hi", what);
    z.generators.push_back(std::move(g));
  }
  z.validate();
  return z;
}

Json preimage_solution_to_json(const PreimageSolution& s) {
  Json j;
  std::visit(
      [&](const auto& pt) { j["point"] = map_point_to_json(MapPoint(pt)); },
      s.point);
  j["residual"] = s.residual;
  j["perturbation_norm"] = s.perturbation_norm;
  j["t"] = s.t;
  j["certified_radius"] = s.certified_radius;
  j["guaranteed"] = s.guaranteed;
  return j;
}

Json certificate_to_json(const CertificateReport& r) {
  Json j;
  j["case"] = r.case_id;
  j["verdict"] = std::string(verdict_name(r.verdict));
  j["seed"] = r.seed;
  j["trials"] = r.trials;
  j["violations"] = r.violations;
  Json stats = Json::object();
  for (const auto& [k, v] : r.stats) stats[k] = v;
  j["statistics"] = std::move(stats);
  if (!r.target.empty()) j["target"] = r.target;
  if (!r.annihilators.empty()) {
    Json fns = Json::array();
    for (const auto& [i, jj, k] : r.annihilators)
      fns.push_back(Json{{"i", i + 1}, {"j", jj + 1}, {"k", k + 1}});
    j["annihilators"] = std::move(fns);
  }
  j["note"] = r.note;
  return j;
}

Json sweep_to_json(const PhaseSweepTable& t) {
  Json rows = Json::array();
  for (const PhaseSweepRow& r : t.rows)
    rows.push_back(Json{{"d", r.d},
                        {"trials", r.trials},
                        {"successes", r.successes},
                        {"rate", r.rate},
                        {"at_or_above_threshold", r.at_or_above_threshold}});
  return Json{{"map", map_name(t.map)},
              {"threshold", t.threshold},
              {"seed", t.seed},
              {"rows", std::move(rows)}};
}

Json qualification_to_json(const QualificationReport& r) {
  Json viols = Json::array();
  for (const QualificationViolation& v : r.violations) {
    Json shared = Json::array();
    for (std::size_t idx : v.shared_indices) shared.push_back(idx + 1);
    viols.push_back(Json{{"sample_a", v.sample_a + 1},
                         {"sample_b", v.sample_b + 1},
                         {"shared_indices", std::move(shared)}});
  }
  return Json{{"ok", r.ok}, {"violations", std::move(viols)}};
}

Json report_envelope(const std::string& command, std::uint64_t seed,
                     Json tolerances, Json result) {
  Json j;
  j["version"] = SUBCHAIN_VERSION;
  j["command"] = command;
  j["seed"] = seed;
  j["tolerances"] = std::move(tolerances);
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  j["generated_at"] = buf;
  j["result"] = std::move(result);
  return j;
}

std::string dump_report(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace subchain
