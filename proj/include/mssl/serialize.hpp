#pragma once

#include <string>

#include <json.hpp>

#include "mssl/askkm.hpp"
#include "mssl/datagen.hpp"
#include "mssl/evalx.hpp"
#include "mssl/kernels.hpp"
#include "mssl/misspec.hpp"
#include "mssl/semgmm.hpp"
#include "mssl/sskkm.hpp"

namespace mssl {

using json = nlohmann::json;

void to_json(json& j, const KernelSpec& s);
void from_json(const json& j, KernelSpec& s);

void to_json(json& j, const LabelMap& m);
void from_json(const json& j, LabelMap& m);

void to_json(json& j, const KlEstimate& e);
void from_json(const json& j, KlEstimate& e);

void to_json(json& j, const CriterionReport& r);
void from_json(const json& j, CriterionReport& r);

void to_json(json& j, const ClusterModel& m);
void from_json(const json& j, ClusterModel& m);

void to_json(json& j, const GmmModel& m);
void from_json(const json& j, GmmModel& m);

void to_json(json& j, const AskkmModel& m);
void from_json(const json& j, AskkmModel& m);

void to_json(json& j, const GenSpec& s);
void to_json(json& j, const GroundTruth& t);
void to_json(json& j, const LearningCurve& c);

/// Long format: method,n_unlabeled,seed,metric with %.17g metrics.
std::string curve_to_csv(const LearningCurve& c);

json matrix_to_json(const FeatureMatrix& m);
FeatureMatrix matrix_from_json(const json& j);

}  // namespace mssl
