#include <httplib.h>

#include <fmt/format.h>

#include "hscan/error.hpp"
#include "hscan/scan_service.hpp"

namespace hscan {

void serve_http(ScanService& service, const std::string& host, int port) {
  httplib::Server server;
  const auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [key, value] : req.params) request.query[key] = value;
    request.body = req.body;
    request.analyst = req.get_header_value("X-Analyst-Id");
    const auto response = service.handle(request);
    res.status = response.status;
    res.set_content(response.body, "application/json");
  };
  const char* any = R"(/.*)";
  server.Get(any, dispatch);
  server.Put(any, dispatch);
  server.Post(any, dispatch);
  server.Delete(any, dispatch);
  if (!server.listen(host, port)) throw Error(fmt::format("cannot listen on {}:{}", host, port));
}

}  // namespace hscan
