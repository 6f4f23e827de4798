#pragma once

#include <filesystem>
#include <optional>

#include "mgal/service.hpp"

namespace httplib {
class Server;
}

namespace mgal {

// JSON over HTTP:
//   POST   /sessions                {"target_id"?}          -> 201 {"session_id"}
//   POST   /sessions/{id}/strokes   {"points": [[x,y],...], "k"?}
//          -> {"step", "stage", "stroke_count", "topk": [{"photo_id","distance","rank"}], "true_rank"?}
//   DELETE /sessions/{id}                                   -> 204
//   GET    /gallery                                         -> [{"photo_id","thumbnail_ref"}]
//   GET    /gallery/{id}/image                              -> image bytes
//   GET    /health  -> {"status","model_fingerprint","n","k","T"}
// Errors are {"code", "message"} with 400/404/500.
void register_routes(httplib::Server& server, RetrievalService& service,
                     const std::optional<std::filesystem::path>& static_dir = std::nullopt);

inline constexpr std::size_t kDefaultTopK = 10;

}  // namespace mgal
