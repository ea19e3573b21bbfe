#pragma once

#include <memory>
#include <string>

#include "lad/pipeline.hpp"

namespace httplib {
class Server;
}

namespace lad {

inline constexpr const char* kApiVersion = "1";
inline constexpr const char* kApiVersionHeader = "X-LAD-API-Version";

struct ServiceResponse {
  int status = 200;
  Json body;
};

// Request handling for the review-console API. Stateless apart from the
// immutable workspace, so handlers may run concurrently.
class ReviewService {
 public:
  ReviewService(std::shared_ptr<const Workspace> workspace, LadConfig defaults);

  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

  ServiceResponse schema() const;
  ServiceResponse applications() const;
  ServiceResponse predict(const Json& request) const;
  ServiceResponse explain(const Json& request) const;
  ServiceResponse whatif(const Json& request) const;
  ServiceResponse description() const;

  // Registers every route on `server`; responses carry the version header.
  void mount(httplib::Server& server) const;

  const Workspace& workspace() const { return *workspace_; }

 private:
  Vector encode_values(const Json& values) const;
  Json decode_values(const VectorRef& encoded) const;

  std::shared_ptr<const Workspace> workspace_;
  LadConfig defaults_;
};

// Blocks serving on host:port until the server stops.
int serve(const ReviewService& service, const std::string& host, int port);

}  // namespace lad
