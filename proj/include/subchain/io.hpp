#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "subchain/certify.hpp"
#include "subchain/fmdata.hpp"
#include "subchain/maps.hpp"
#include "subchain/preimage.hpp"
#include "subchain/types.hpp"
#include "subchain/zonotope.hpp"

namespace subchain {

// Insertion-ordered JSON so a report serializes the same way every run;
// reproducibility of emitted bytes is part of the format contract.
using Json = nlohmann::ordered_json;

// All user-facing indices (pairs, triples, observed cells, sample numbers)
// are 1-based in JSON; internal storage is 0-based.

std::string read_text_file(const std::string& path);   // SchemaError on failure
void write_text_file(const std::string& path, const std::string& text);

// Parse with context: malformed input raises SchemaError naming `what`.
Json parse_json(const std::string& text, const std::string& what);

Json matrix_to_json(const DenseMatrix& m);
DenseMatrix matrix_from_json(const Json& j, const std::string& what);

Json tensor_to_json(const DenseTensor3& t);
DenseTensor3 tensor_from_json(const Json& j, const std::string& what);

Json pair_coeffs_to_json(const PairCoeffs& a);
PairCoeffs pair_coeffs_from_json(const Json& j, const std::string& what);

// Pairwise target vectors ({"d0", "pairs": [{"i","j","value"}]}) share the
// coefficient-table shape but allow zero values. Returns (d0, flat values).
std::pair<std::size_t, std::vector<double>> pair_values_from_json(
    const Json& j, const std::string& what);
Json pair_values_to_json(std::size_t d0, const std::vector<double>& values);

Json triple_coeffs_to_json(const TripleCoeffs& a);
TripleCoeffs triple_coeffs_from_json(const Json& j, const std::string& what);

// Tagged by map id: {"map": "mf", ...fields...}. from_json validates the
// assembled point and throws SchemaError/ShapeError on malformed input.
Json map_point_to_json(const MapPoint& p);
MapPoint map_point_from_json(MapId id, const Json& j, const std::string& what);

Json zonotope_to_json(const SubgradientZonotope& z);
SubgradientZonotope zonotope_from_json(const Json& j, const std::string& what);

Json preimage_solution_to_json(const PreimageSolution& s);
Json certificate_to_json(const CertificateReport& r);
Json sweep_to_json(const PhaseSweepTable& t);
Json qualification_to_json(const QualificationReport& r);

// Report envelope. Fields in order: version, command, seed, tolerances,
// generated_at, result. The timestamp is confined to generated_at; the rest
// reproduces byte-for-byte for a fixed seed and command.
Json report_envelope(const std::string& command, std::uint64_t seed,
                     Json tolerances, Json result);

std::string dump_report(const Json& j);  // 2-space indent, trailing newline

}  // namespace subchain
