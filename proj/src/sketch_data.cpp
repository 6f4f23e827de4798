#include "mgal/sketch_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "mgal/errors.hpp"
#include "mgal/io.hpp"
#include "mgal/rng.hpp"

namespace mgal {

using nlohmann::json;

std::size_t StrokeEpisode::point_count() const {
  std::size_t n = 0;
  for (const auto& s : strokes) n += s.size();
  return n;
}

std::size_t PartialSketch::point_count() const {
  std::size_t n = 0;
  for (const auto& s : strokes) n += s.size();
  return n;
}

std::vector<Point> PartialSketch::points() const {
  std::vector<Point> out;
  out.reserve(point_count());
  for (const auto& s : strokes) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::size_t Raster::set_count() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

void validate_stroke(const Stroke& stroke, std::size_t stroke_index) {
  const std::string where = "stroke " + std::to_string(stroke_index);
  if (stroke.size() < 2) {
    throw ValidationError(where + " has " + std::to_string(stroke.size()) +
                          " point(s); at least 2 required");
  }
  for (std::size_t j = 0; j < stroke.size(); ++j) {
    const auto& p = stroke[j];
    const bool ok = std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.x <= 1.0 &&
                    p.y >= 0.0 && p.y <= 1.0;
    if (!ok) {
      throw ValidationError(where + " point " + std::to_string(j) +
                            ": coordinate out of [0,1]");
    }
  }
}

void validate_episode(const StrokeEpisode& episode) {
  if (episode.strokes.empty()) {
    throw ValidationError("episode '" + episode.photo_id + "' has no strokes");
  }
  for (std::size_t i = 0; i < episode.strokes.size(); ++i) {
    validate_stroke(episode.strokes[i], i);
  }
}

namespace {

Point point_from_json(const json& j, std::size_t si, std::size_t pj) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError("field 'strokes': stroke " + std::to_string(si) + " point " +
                     std::to_string(pj) + " is not an [x, y] number pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

StrokeEpisode episode_from_json(const json& record) {
  if (!record.is_object()) throw ParseError("episode record is not an object");
  StrokeEpisode ep;
  auto id = record.find("photo_id");
  if (id == record.end() || !id->is_string()) {
    throw ParseError("field 'photo_id': missing or not a string");
  }
  ep.photo_id = id->get<std::string>();
  if (auto tag = record.find("order_tag"); tag != record.end() && !tag->is_null()) {
    if (!tag->is_string()) throw ParseError("field 'order_tag': not a string");
    ep.order_tag = tag->get<std::string>();
  }
  auto strokes = record.find("strokes");
  if (strokes == record.end() || !strokes->is_array()) {
    throw ParseError("field 'strokes': missing or not an array");
  }
  for (std::size_t i = 0; i < strokes->size(); ++i) {
    const json& s = (*strokes)[i];
    if (!s.is_array()) {
      throw ParseError("field 'strokes': stroke " + std::to_string(i) + " is not an array");
    }
    Stroke stroke;
    stroke.reserve(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) stroke.push_back(point_from_json(s[j], i, j));
    ep.strokes.push_back(std::move(stroke));
  }
  validate_episode(ep);
  return ep;
}

json episode_to_json(const StrokeEpisode& episode) {
  json strokes = json::array();
  for (const auto& s : episode.strokes) {
    json pts = json::array();
    for (const auto& p : s) pts.push_back({p.x, p.y});
    strokes.push_back(std::move(pts));
  }
  json j = {{"photo_id", episode.photo_id}, {"strokes", std::move(strokes)}};
  if (episode.order_tag) j["order_tag"] = *episode.order_tag;
  return j;
}

StrokeEpisode parse_episode(std::string_view record) {
  json j;
  try {
    j = json::parse(record);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("episode record: ") + e.what());
  }
  return episode_from_json(j);
}

std::string serialize_episode(const StrokeEpisode& episode) {
  return episode_to_json(episode).dump();
}

std::vector<StrokeEpisode> load_episodes(const std::filesystem::path& path) {
  std::vector<StrokeEpisode> out;
  for (const auto& line : io::read_lines(path)) {
    try {
      out.push_back(parse_episode(line.text));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return out;
}

void save_episodes(std::span<const StrokeEpisode> episodes, const std::filesystem::path& path) {
  std::string text;
  for (const auto& ep : episodes) {
    text += serialize_episode(ep);
    text += '\n';
  }
  io::write_file_atomic(path, text);
}

std::size_t prefix_length(std::size_t step, std::size_t total_steps, std::size_t n_points) {
  return ((step + 1) * n_points + total_steps - 1) / total_steps;
}

std::vector<PartialSketch> render_partials(const StrokeEpisode& episode, std::size_t total_steps) {
  if (total_steps == 0) throw ValidationError("render_partials: T must be >= 1");
  const std::size_t n = episode.point_count();
  std::vector<PartialSketch> partials;
  partials.reserve(total_steps);
  for (std::size_t t = 0; t < total_steps; ++t) {
    PartialSketch ps{t, total_steps, {}};
    std::size_t remaining = prefix_length(t, total_steps, n);
    for (const auto& stroke : episode.strokes) {
      if (remaining == 0) break;
      const std::size_t take = std::min(remaining, stroke.size());
      ps.strokes.emplace_back(stroke.begin(), stroke.begin() + static_cast<std::ptrdiff_t>(take));
      remaining -= take;
    }
    partials.push_back(std::move(ps));
  }
  return partials;
}

std::vector<Segment> segments_of(std::span<const Stroke> strokes) {
  std::vector<Segment> segs;
  for (const auto& s : strokes) {
    for (std::size_t i = 1; i < s.size(); ++i) segs.push_back({s[i - 1], s[i]});
  }
  return segs;
}

namespace {

// Steps one pixel at a time along the major axis of the exact segment and
// rounds the minor coordinate of the exact line, so every set pixel lies
// within sqrt(0.5) px of the segment.
void draw_line(Raster& r, double x0, double y0, double x1, double y1) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  auto plot = [&](long x, long y) {
    x = std::clamp(x, 0L, static_cast<long>(r.width) - 1);
    y = std::clamp(y, 0L, static_cast<long>(r.height) - 1);
    r.pixels[static_cast<std::size_t>(y) * r.width + static_cast<std::size_t>(x)] = 1;
  };
  if (std::fabs(dx) >= std::fabs(dy)) {
    const long a = std::lround(x0);
    const long b = std::lround(x1);
    if (a == b) {
      plot(a, std::lround(dx == 0.0 ? y0 : y0 + (static_cast<double>(a) - x0) * dy / dx));
      return;
    }
    const long s = a < b ? 1 : -1;
    for (long x = a;; x += s) {
      plot(x, std::lround(y0 + (static_cast<double>(x) - x0) * dy / dx));
      if (x == b) break;
    }
  } else {
    const long a = std::lround(y0);
    const long b = std::lround(y1);
    const long s = a < b ? 1 : -1;
    for (long y = a;; y += s) {
      plot(std::lround(x0 + (static_cast<double>(y) - y0) * dx / dy), y);
      if (y == b) break;
    }
  }
}

double to_pixel(double v, std::size_t extent) {
  return std::clamp(v, 0.0, 1.0) * static_cast<double>(extent - 1);
}

}  // namespace

Raster rasterize(std::span<const Stroke> strokes, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ValidationError("rasterize: zero-area raster");
  Raster r{width, height, std::vector<std::uint8_t>(width * height, 0)};
  for (const auto& seg : segments_of(strokes)) {
    draw_line(r, to_pixel(seg.a.x, width), to_pixel(seg.a.y, height), to_pixel(seg.b.x, width),
              to_pixel(seg.b.y, height));
  }
  return r;
}

std::string encode_pgm(const Raster& raster) {
  std::string out = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) +
                    "\n255\n";
  out.reserve(out.size() + raster.pixels.size());
  for (auto p : raster.pixels) out.push_back(p ? static_cast<char>(255) : '\0');
  return out;
}

StrokeEpisode permute_strokes(const StrokeEpisode& episode, std::uint64_t seed) {
  std::vector<std::size_t> order(episode.strokes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  StrokeEpisode out{episode.photo_id, {}, "perm-" + std::to_string(seed)};
  out.strokes.reserve(order.size());
  for (auto i : order) out.strokes.push_back(episode.strokes[i]);
  return out;
}

}  // namespace mgal
