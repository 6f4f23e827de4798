#include "mgal/service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "mgal/errors.hpp"
#include "mgal/io.hpp"

namespace mgal {

RetrievalService::RetrievalService(StageEmbedder model, std::span<const FeatureVector> photos,
                                   std::string model_fingerprint, ServiceOptions options)
    : model_(std::move(model)),
      gallery_(build_gallery(photos, model_)),
      fingerprint_(std::move(model_fingerprint)),
      options_(std::move(options)),
      stroke_budget_(options_.stroke_budget.value_or(model_.stroke_budget > 0.0
                                                         ? model_.stroke_budget
                                                         : static_cast<double>(model_.total_steps))) {
  model_.validate();
  if (model_.extractor.dim() != model_.input_dim) {
    throw ValidationError("service: feature extractor width " +
                          std::to_string(model_.extractor.dim()) + " does not match model H=" +
                          std::to_string(model_.input_dim));
  }
  if (!(stroke_budget_ > 0.0) || !std::isfinite(stroke_budget_)) {
    throw ValidationError("service: stroke budget must be positive");
  }
  std::random_device rd;
  token_state_[0] = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  token_state_[1] = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^ 0x9E3779B97F4A7C15ULL;
}

std::string RetrievalService::new_token() {
  std::lock_guard lock(token_mu_);
  // splitmix64 over a random-seeded counter pair; 128 bits of token.
  auto mix = [](std::uint64_t& s) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx",
                static_cast<unsigned long long>(mix(token_state_[0])),
                static_cast<unsigned long long>(mix(token_state_[1])));
  return buf;
}

std::string RetrievalService::create_session(const std::optional<std::string>& target_id) {
  if (target_id && !gallery_.find(*target_id)) {
    throw NotFoundError("unknown target photo '" + *target_id + "'");
  }
  auto session = std::make_shared<Session>();
  session->target_id = target_id;
  session->created = std::chrono::system_clock::now();
  std::unique_lock lock(sessions_mu_);
  std::string id;
  do {
    id = new_token();
  } while (sessions_.contains(id));
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<RetrievalService::Session> RetrievalService::find_session(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

std::size_t RetrievalService::estimate_step(std::size_t stroke_count) const {
  const std::size_t T = model_.total_steps;
  if (stroke_count == 0) return 0;
  const double scaled = std::ceil(static_cast<double>(T) * static_cast<double>(stroke_count) /
                                  stroke_budget_);
  const double step = std::max(0.0, scaled - 1.0);
  return std::min<std::size_t>(T - 1, static_cast<std::size_t>(step));
}

StrokeResponse RetrievalService::submit_stroke(const std::string& session_id, const Stroke& stroke,
                                               std::size_t k_req) {
  auto session = find_session(session_id);
  if (k_req < 1) throw ValidationError("k must be >= 1");
  validate_stroke(stroke);

  std::unique_lock lock(session->mu);
  const std::uint64_t ticket = session->next_ticket++;
  session->turn.wait(lock, [&] { return session->serving == ticket; });
  struct Release {
    Session& s;
    ~Release() {
      ++s.serving;
      s.turn.notify_all();
    }
  } release{*session};

  session->strokes.push_back(stroke);
  StrokeResponse out;
  out.stroke_count = session->strokes.size();
  out.step = estimate_step(out.stroke_count);
  out.stage = assign_stage(out.step, model_.total_steps, model_.stages());
  const FeatureVector f = featurize(session->strokes, model_.extractor);
  const Vector query = embed_sketch(f.v, out.step, model_);
  const auto distances = gallery_distances(query, gallery_);
  out.top_k = top_hits(distances, gallery_, std::min(k_req, options_.max_top_k));
  if (session->target_id) {
    const std::size_t target = *gallery_.find(*session->target_id);
    std::size_t ahead = 0;
    for (std::size_t i = 0; i < distances.size(); ++i) {
      if (distances[i] < distances[target] || (distances[i] == distances[target] && i < target)) {
        ++ahead;
      }
    }
    out.true_rank = ahead + 1;
  }
  return out;
}

void RetrievalService::delete_session(const std::string& session_id) {
  std::unique_lock lock(sessions_mu_);
  if (sessions_.erase(session_id) == 0) {
    throw NotFoundError("unknown session '" + session_id + "'");
  }
}

std::size_t RetrievalService::session_count() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

std::vector<GalleryItem> RetrievalService::gallery() const {
  std::vector<GalleryItem> items;
  items.reserve(gallery_.size());
  for (const auto& e : gallery_.entries()) {
    items.push_back({e.photo_id, "/gallery/" + e.photo_id + "/image"});
  }
  return items;
}

Thumbnail RetrievalService::thumbnail(const std::string& photo_id) const {
  if (!gallery_.find(photo_id)) throw NotFoundError("unknown photo '" + photo_id + "'");
  if (options_.image_dir) {
    static const std::pair<const char*, const char*> kTypes[] = {
        {".png", "image/png"}, {".jpg", "image/jpeg"}, {".jpeg", "image/jpeg"}, {".bmp", "image/bmp"}};
    for (const auto& [ext, type] : kTypes) {
      const auto path = *options_.image_dir / (photo_id + ext);
      std::error_code ec;
      if (path.filename() == photo_id + ext && std::filesystem::is_regular_file(path, ec)) {
        return {type, io::read_file(path)};
      }
    }
  }
  return {"image/bmp", placeholder_glyph_bmp(photo_id)};
}

HealthInfo RetrievalService::health() const {
  return {"ok", fingerprint_, gallery_.size(), model_.stages(), model_.total_steps};
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

std::string placeholder_glyph_bmp(const std::string& photo_id) {
  constexpr std::uint32_t kSize = 64;
  constexpr std::uint32_t kRow = kSize * 3;  // already a multiple of 4
  const std::string h = io::fnv1a_hex(photo_id);
  const std::uint64_t bits = std::stoull(h, nullptr, 16);
  const unsigned char r = 64 + (bits & 0x7F), g = 64 + ((bits >> 8) & 0x7F), b = 64 + ((bits >> 16) & 0x7F);

  std::string out;
  out.reserve(54 + kRow * kSize);
  out += "BM";
  put_u32(out, 54 + kRow * kSize);
  put_u32(out, 0);
  put_u32(out, 54);
  put_u32(out, 40);
  put_u32(out, kSize);
  put_u32(out, kSize);
  put_u16(out, 1);
  put_u16(out, 24);
  put_u32(out, 0);
  put_u32(out, kRow * kSize);
  put_u32(out, 2835);
  put_u32(out, 2835);
  put_u32(out, 0);
  put_u32(out, 0);
  // 8x8 mirrored block pattern from the remaining hash bits.
  for (std::uint32_t y = 0; y < kSize; ++y) {
    for (std::uint32_t x = 0; x < kSize; ++x) {
      const std::uint32_t cx = std::min(x / 8, 7 - x / 8);
      const std::uint32_t bit = 24 + ((y / 8) * 4 + cx) % 40;
      const bool on = (bits >> bit) & 1U;
      out.push_back(static_cast<char>(on ? b : 240));
      out.push_back(static_cast<char>(on ? g : 240));
      out.push_back(static_cast<char>(on ? r : 240));
    }
  }
  return out;
}

}  // namespace mgal
