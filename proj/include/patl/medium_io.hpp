#pragma once

// File formats: medium definition JSON (profiles as nodal arrays or small
// analytic specs evaluated on load) and two-column CSV profiles / three-column
// CSV traces.  All CSV output uses %.17g so that a write/read round trip is
// bit-exact and composed pipelines reproduce in-process results.

#include <string>
#include <vector>

#include "patl/medium.hpp"

namespace patl {

struct BoundaryTrace;  // acoustic.hpp

// Loads a medium definition.  Schema:
//   { "L": num, "H": num, "n_points": int,
//     "D": [..] | {"type": "constant"|"linear"|"sine", ...},
//     "mu_a": ..., "c": ...,
//     "bounds": {"d0": num, "mu0": num, "M": num, "c_m": num} }
// Analytic specs: constant {value}; linear {intercept, slope} -> a + b*y;
// sine {offset, amplitude, omega, phase} -> offset + amplitude*sin(omega*y + phase).
// n_points_override > 0 re-evaluates analytic profiles at that resolution and
// linearly resamples array profiles.
LayeredMedium load_medium(const std::string& path, std::size_t n_points_override = 0);
LayeredMedium medium_from_json_text(const std::string& text, std::size_t n_points_override = 0);

// Two-column CSV "y,value" with a header line.
void write_profile_csv(const std::string& path, const CoefficientProfile& f,
                       const std::string& value_name = "value");
CoefficientProfile read_profile_csv(const std::string& path);

// Trace CSV "t,p_H,pt_H" with a header line.
void write_trace_csv(const std::string& path, const BoundaryTrace& trace);
BoundaryTrace read_trace_csv(const std::string& path, long k);

// %.17g formatting shared by every CSV/JSON writer (round-trip exact).
std::string format_double(double v);

}  // namespace patl
