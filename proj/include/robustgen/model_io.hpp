#pragma once

#include <string>

#include "robustgen/bounds.hpp"
#include "robustgen/linear.hpp"
#include "robustgen/mlp.hpp"
#include "robustgen/rademacher.hpp"

namespace robustgen {

// Versioned JSON documents for models; unknown formats or versions raise
// ParseError naming the file.

std::string linear_model_to_json(const LinearModel& model);
LinearModel linear_model_from_json(const std::string& text, const std::string& origin = "<json>");
void save_linear_model(const LinearModel& model, const std::string& path);
LinearModel load_linear_model(const std::string& path);

std::string mlp_model_to_json(const MlpModel& model);
MlpModel mlp_model_from_json(const std::string& text, const std::string& origin = "<json>");
void save_mlp_model(const MlpModel& model, const std::string& path);
MlpModel load_mlp_model(const std::string& path);

std::string rademacher_to_json(const RademacherEstimate& est);
std::string certificate_to_json(const BoundCertificate& cert);

}  // namespace robustgen
