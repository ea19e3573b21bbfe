#include "lad/service.hpp"

#include <cmath>

#include "httplib.h"

namespace lad {

namespace {

struct RequestError {
  int status;
  std::string field;
  std::string message;
};

ServiceResponse error_response(int status, const std::string& message, const std::string& field = {}) {
  Json body{{"error", message}};
  if (!field.empty()) body["field"] = field;
  return {status, std::move(body)};
}

const Json& require(const Json& request, const char* field) {
  if (!request.is_object()) throw RequestError{400, "", "request body must be a JSON object"};
  if (!request.contains(field)) throw RequestError{400, field, std::string("missing field '") + field + "'"};
  return request.at(field);
}

std::string label_name(const FeatureSchema& schema, Label label) {
  const auto& names = schema.class_names();
  return static_cast<std::size_t>(label) < names.size() ? names[static_cast<std::size_t>(label)]
                                                         : std::to_string(label);
}

Json openapi_document() {
  auto op = [](const char* summary, const char* request) {
    Json j{{"summary", summary}, {"responses", {{"200", {{"description", "JSON body"}}}}}};
    if (request[0] != '\0') {
      j["requestBody"] = {{"content", {{"application/json", {{"schema", {{"description", request}}}}}}}};
      j["responses"]["400"] = {{"description", "malformed body; {error, field}"}};
      j["responses"]["422"] = {{"description", "dimension mismatch or unexplainable instance"}};
    }
    return j;
  };
  return Json{
      {"openapi", "3.0.0"},
      {"info", {{"title", "LAD review service"}, {"version", kApiVersion}}},
      {"paths",
       {{"/schema", {{"get", op("Feature schema with levels and bounds", "")}}},
        {"/applications", {{"get", op("Test-set applications with raw values and predictions", "")}}},
        {"/predict", {{"post", op("Black-box decision", "{values: {feature: raw} | [encoded numbers]}")}}},
        {"/explain",
         {{"post", op("LAD explanation", "{values, config?: {seed, n_support, m_segment, p_sphere, sphere_radius, "
                                         "max_depth, top_k | threshold}}")}}},
        {"/whatif",
         {{"post", op("Decision before and after overriding feature values",
                      "{values, overrides: {feature: raw}, explain?: bool, config?}")}}},
        {"/spec", {{"get", op("This document", "")}}}}}};
}

}  // namespace

ReviewService::ReviewService(std::shared_ptr<const Workspace> workspace, LadConfig defaults)
    : workspace_(std::move(workspace)), defaults_(std::move(defaults)) {}

Vector ReviewService::encode_values(const Json& values) const {
  try {
    return encode_json_values(workspace_->schema, values);
  } catch (const FieldError& e) {
    throw RequestError{e.missing_dimension() ? 422 : 400, e.field(), e.what()};
  }
}

Json ReviewService::decode_values(const VectorRef& encoded) const {
  return decode_json_values(workspace_->schema, encoded);
}

ServiceResponse ReviewService::schema() const {
  Json body = to_json(workspace_->schema);
  body["schema_hash"] = hex64(workspace_->schema.hash());
  return {200, std::move(body)};
}

ServiceResponse ReviewService::applications() const {
  const Workspace& ws = *workspace_;
  Json apps = Json::array();
  for (Eigen::Index i = 0; i < ws.test.size(); ++i) {
    const Vector x = ws.test.instances.row(i).transpose();
    const Label label = ws.forest->predict(x);
    apps.push_back({{"instance_id", i},
                    {"row_id", ws.test.row_ids.empty() ? static_cast<std::size_t>(i) : ws.test.row_ids[static_cast<std::size_t>(i)]},
                    {"values", decode_values(x)},
                    {"encoded", std::vector<double>(x.data(), x.data() + x.size())},
                    {"label", label},
                    {"class", label_name(ws.schema, label)}});
  }
  return {200, Json{{"count", apps.size()}, {"applications", std::move(apps)}}};
}

ServiceResponse ReviewService::predict(const Json& request) const {
  const Vector x = encode_values(require(request, "values"));
  const Label label = workspace_->forest->predict(x);
  return {200, Json{{"label", label}, {"class", label_name(workspace_->schema, label)}}};
}

ServiceResponse ReviewService::explain(const Json& request) const {
  const Vector x = encode_values(require(request, "values"));
  LadConfig config = defaults_;
  if (request.contains("config")) {
    try {
      config = lad_config_from_json(request.at("config"), defaults_);
    } catch (const Json::exception& e) {
      throw RequestError{400, "config", e.what()};
    } catch (const Error& e) {
      throw RequestError{400, "config", e.what()};
    }
  }
  try {
    config.validate(x.size());
  } catch (const Error& e) {
    throw RequestError{400, "config", e.what()};
  }
  const std::string id = request.value("instance_id", std::string("request"));
  const Explanation ex = explain_encoded(*workspace_, x, config);
  return {200, explanation_report(*workspace_, ex, x, id)};
}

ServiceResponse ReviewService::whatif(const Json& request) const {
  const Json& values = require(request, "values");
  const Json& overrides = require(request, "overrides");
  if (!overrides.is_object()) throw RequestError{400, "overrides", "overrides must be an object keyed by feature"};
  const Vector before = encode_values(values);

  Json merged = values.is_object() ? values : decode_values(before);
  for (const auto& item : overrides.items()) {
    if (workspace_->schema.index_of(item.key()) < 0) {
      throw RequestError{400, item.key(), "unknown feature '" + item.key() + "'"};
    }
    merged[item.key()] = item.value();
  }
  // Encoded-array requests keep encoded values for untouched features.
  Vector after = encode_values(merged);
  if (values.is_array()) {
    for (Eigen::Index i = 0; i < after.size(); ++i) {
      if (!overrides.contains(workspace_->schema.feature(i).name)) after[i] = before[i];
    }
  }
  const Label label_before = workspace_->forest->predict(before);
  const Label label_after = workspace_->forest->predict(after);
  Json body{{"label_before", label_before},
            {"label_after", label_after},
            {"class_before", label_name(workspace_->schema, label_before)},
            {"class_after", label_name(workspace_->schema, label_after)},
            {"changed", label_before != label_after}};
  if (request.value("explain", false)) {
    Json sub{{"values", decode_values(after)}};
    if (request.contains("config")) sub["config"] = request.at("config");
    body["explanation"] = explain(sub).body;
  }
  return {200, std::move(body)};
}

ServiceResponse ReviewService::description() const { return {200, openapi_document()}; }

ServiceResponse ReviewService::handle(const std::string& method, const std::string& path,
                                      const std::string& body) const {
  try {
    if (method == "GET") {
      if (path == "/schema") return schema();
      if (path == "/applications") return applications();
      if (path == "/spec") return description();
      return error_response(404, "no route for GET " + path);
    }
    if (method != "POST") return error_response(405, "method not allowed");
    if (path != "/predict" && path != "/explain" && path != "/whatif") {
      return error_response(404, "no route for POST " + path);
    }
    Json request;
    try {
      request = Json::parse(body);
    } catch (const Json::exception& e) {
      return error_response(400, std::string("malformed JSON: ") + e.what());
    }
    if (path == "/predict") return predict(request);
    if (path == "/explain") return explain(request);
    return whatif(request);
  } catch (const RequestError& e) {
    return error_response(e.status, e.message, e.field);
  } catch (const DimensionError& e) {
    return error_response(422, e.what());
  } catch (const Error& e) {
    return error_response(422, e.what());
  } catch (const Json::exception& e) {
    return error_response(400, e.what());
  }
}

void ReviewService::mount(httplib::Server& server) const {
  auto respond = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_header(kApiVersionHeader, kApiVersion);
    res.set_content(r.body.dump(), "application/json; charset=utf-8");
  };
  for (const char* path : {"/schema", "/applications", "/spec"}) server.Get(path, respond);
  for (const char* path : {"/predict", "/explain", "/whatif"}) server.Post(path, respond);
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_header(kApiVersionHeader, kApiVersion);
    res.set_content(Json{{"error", "no route for " + req.method + " " + req.path}}.dump(),
                    "application/json; charset=utf-8");
  });
}

int serve(const ReviewService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) return 1;
  return 0;
}

}  // namespace lad
