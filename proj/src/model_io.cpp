#include "robustgen/model_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "robustgen/errors.hpp"

namespace robustgen {

namespace {

using nlohmann::json;

json norm_exponent_to_json(const NormExponent& p) {
    if (p.is_infinite()) return json("inf");
    return json(p.value());
}

NormExponent norm_exponent_from_json(const json& j, const std::string& origin) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return NormExponent::infinity();
        throw ParseError(origin, 0, "unknown norm exponent '" + j.get<std::string>() + "'");
    }
    return NormExponent::finite(j.get<double>());
}

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"weights", m.data()}};
}

Matrix matrix_from_json(const json& j, const std::string& origin) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto weights = j.at("weights").get<std::vector<double>>();
    if (weights.size() != rows * cols)
        throw ParseError(origin, 0, "weight count does not match matrix dimensions");
    return Matrix(rows, cols, std::move(weights));
}

json parse(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ParseError(origin, 0, "invalid JSON");
    return j;
}

void check_format(const json& j, const std::string& expected, const std::string& origin) {
    if (j.value("format", "") != expected)
        throw ParseError(origin, 0, "expected format '" + expected + "'");
    if (j.value("version", 0) != 1) throw ParseError(origin, 0, "unsupported version");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path, 0, "cannot open file for writing");
    out << text << '\n';
}

}  // namespace

std::string linear_model_to_json(const LinearModel& model) {
    json j;
    j["format"] = "robustgen-linear";
    j["version"] = 1;
    j["rows"] = model.weights.rows();
    j["cols"] = model.weights.cols();
    j["weights"] = model.weights.data();
    j["constraint"] = json{{"p", norm_exponent_to_json(model.constraint.p)},
                           {"w_bound", model.constraint.bound},
                           {"enforced", model.constraint.enforced}};
    return j.dump(2);
}

LinearModel linear_model_from_json(const std::string& text, const std::string& origin) {
    const json j = parse(text, origin);
    check_format(j, "robustgen-linear", origin);
    LinearModel model;
    model.weights = matrix_from_json(j, origin);
    const auto& c = j.at("constraint");
    model.constraint.p = norm_exponent_from_json(c.at("p"), origin);
    model.constraint.bound = c.at("w_bound").get<double>();
    model.constraint.enforced = c.at("enforced").get<bool>();
    return model;
}

void save_linear_model(const LinearModel& model, const std::string& path) {
    write_file(path, linear_model_to_json(model));
}

LinearModel load_linear_model(const std::string& path) {
    return linear_model_from_json(read_file(path), path);
}

std::string mlp_model_to_json(const MlpModel& model) {
    json layers = json::array();
    for (const auto& w : model.layers) layers.push_back(matrix_to_json(w));
    json j;
    j["format"] = "robustgen-mlp";
    j["version"] = 1;
    j["layers"] = std::move(layers);
    return j.dump(2);
}

MlpModel mlp_model_from_json(const std::string& text, const std::string& origin) {
    const json j = parse(text, origin);
    check_format(j, "robustgen-mlp", origin);
    MlpModel model;
    for (const auto& layer : j.at("layers")) model.layers.push_back(matrix_from_json(layer, origin));
    model.validate();
    return model;
}

void save_mlp_model(const MlpModel& model, const std::string& path) {
    write_file(path, mlp_model_to_json(model));
}

MlpModel load_mlp_model(const std::string& path) {
    return mlp_model_from_json(read_file(path), path);
}

std::string rademacher_to_json(const RademacherEstimate& est) {
    return json{{"mean", est.mean},
                {"std_error", est.std_error},
                {"samples", est.samples},
                {"exact", est.exact}}
        .dump(2);
}

std::string certificate_to_json(const BoundCertificate& cert) {
    return json{{"empirical_term", cert.empirical_term},
                {"complexity_term", cert.complexity_term},
                {"confidence_term", cert.confidence_term},
                {"total", cert.total},
                {"context",
                 {{"gamma", cert.context.gamma},
                  {"epsilon", cert.context.epsilon},
                  {"delta", cert.context.delta},
                  {"B", cert.context.loss_bound},
                  {"n", cert.context.n},
                  {"d", cert.context.d},
                  {"K", cert.context.num_classes}}}}
        .dump(2);
}

}  // namespace robustgen
