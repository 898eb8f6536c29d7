#pragma once

// JSON-over-HTTP routes for PersonalizationService. Images travel as base64
// PNG strings; errors come back as {"code", "message"} with a 4xx status.

#include "msm/service/service.hpp"

namespace httplib {
class Server;
}

namespace msm {

struct HttpOptions {
  int max_image_side = 1024;
  bool allow_cors = true;
};

void register_routes(httplib::Server& server, PersonalizationService& service, const HttpOptions& options = {});

}  // namespace msm
