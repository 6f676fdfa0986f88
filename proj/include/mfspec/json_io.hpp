#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mfspec/potential.hpp"
#include "mfspec/sft.hpp"
#include "mfspec/spectrum.hpp"
#include "mfspec/temperature.hpp"
#include "mfspec/transfer.hpp"

namespace mfspec {

using Json = nlohmann::json;

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

Json sft_to_json(const Sft& sft);
/// {"alphabet_size": p, "transitions": [[...], ...]}; validated on load.
Sft sft_from_json(const Json& j);

Json potential_to_json(const Potential& potential);
/// {"depth": m, "values": {"<word>": v, ...}}; entries for inadmissible words are rejected.
Potential potential_from_json(const Sft& sft, const Json& j);

Json perron_to_json(const PerronData& pd);
Json markov_to_json(const MarkovMeasure& measure);
Json gibbs_to_json(const GibbsCertificate& cert);

inline constexpr const char* kCurveCsvHeader = "q,T,alpha,T_prime_fd,T_second_fd,T_second_var,vd_nu_q";
std::string curve_to_csv(const TemperatureCurve& curve);
Json curve_to_json(const TemperatureCurve& curve);

/// "alpha,S" rows sorted by alpha.
std::string spectrum_csv(const std::vector<SpectrumPoint>& points);
Json endpoints_to_json(const Endpoints& e);
Json legendre_to_json(const LegendreResiduals& r);

}  // namespace mfspec
