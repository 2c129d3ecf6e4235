#pragma once

#include <json.hpp>

#include "freespec/dilation.hpp"
#include "freespec/experiments.hpp"
#include "freespec/extremality.hpp"
#include "freespec/fits.hpp"
#include "freespec/matcore.hpp"
#include "freespec/pencil.hpp"
#include "freespec/solver.hpp"

namespace freespec {

using Json = nlohmann::json;

// Readers throw ArgumentError on malformed input. Matrices are row-major
// nested arrays; doubles are written in shortest round-trip form, so every
// writer/reader pair round-trips exactly.

Json json_of(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// {g, n, items}
Json json_of(const MatrixTuple& t);
MatrixTuple tuple_from_json(const Json& j);

/// {g, d, items, irreducible?, bounded?}
Json json_of(const LinearPencil& p);
LinearPencil pencil_from_json(const Json& j);

/// {kind, level, coeffs} for RC; {kind, level, weight, pencil} for RPT.
Json json_of(const LinearFunctional& l);
LinearFunctional functional_from_json(const Json& j);

/// {m, N, c, G0, G}
Json json_of(const LmiProgram& prog);
LmiProgram program_from_json(const Json& j);

Json json_of(const SolveResult& r);

/// {verdict, k, commutant_dim, arv_nullity, euc_nullity, condition_flags}
Json json_of(const ExtremeClassification& c);

Json json_of(const DilationCertificate& cert);
DilationCertificate certificate_from_json(const Json& j);

Json json_of(const CampaignRecord& r);
Json json_of(const CellStats& s);
Json json_of(const CampaignStats& s);
Json json_of(const FitResult& f);

/// Tolerance overrides use the keys kernel_e1, kernel_e2, free_e1, free_e2,
/// euclidean_e1, euclidean_e2, irreducibility_e1, irreducibility_e2.
void apply_tolerance_overrides(ClassifyPolicies& policies, const Json& j);

/// Unknown keys are rejected. "pencil" may be an inline pencil object or one
/// of the names "disc" and "simplex".
CampaignConfig config_from_json(const Json& j);
Json json_of(const CampaignConfig& cfg);

}  // namespace freespec
