#pragma once

#include <httplib.h>

#include "effectsize/service_api.hpp"

namespace effectsize {

// Routes every request on `server` through `service`.
inline void mount(httplib::Server& server, Service& service) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json; charset=utf-8");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Put(".*", forward);
    server.Delete(".*", forward);
}

} // namespace effectsize
