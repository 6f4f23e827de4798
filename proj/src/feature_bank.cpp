#include "mgal/feature_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>

#include "json.hpp"
#include "mgal/errors.hpp"
#include "mgal/io.hpp"
#include "mgal/rng.hpp"

namespace mgal {

using nlohmann::json;

FeatureVector extract_grid_features(const Raster& raster, std::span<const Segment> segments,
                                    const GridSpec& spec) {
  if (spec.grid == 0 || spec.bins == 0) throw ValidationError("grid and bins must be >= 1");
  if (raster.width == 0 || raster.height == 0) throw ValidationError("zero-area raster");
  FeatureVector f{{}, Vector(spec.dim(), 0.0)};
  const double sx = static_cast<double>(raster.width - 1);
  const double sy = static_cast<double>(raster.height - 1);
  const auto g = static_cast<double>(spec.grid);
  for (const auto& seg : segments) {
    const double dx = (seg.b.x - seg.a.x) * sx;
    const double dy = (seg.b.y - seg.a.y) * sy;
    const double length = std::hypot(dx, dy);
    if (length == 0.0) continue;
    const double mx = 0.5 * (seg.a.x + seg.b.x);
    const double my = 0.5 * (seg.a.y + seg.b.y);
    const auto col = std::min(spec.grid - 1, static_cast<std::size_t>(std::max(0.0, mx * g)));
    const auto row = std::min(spec.grid - 1, static_cast<std::size_t>(std::max(0.0, my * g)));
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += std::numbers::pi;
    if (theta >= std::numbers::pi) theta -= std::numbers::pi;
    const auto bin = std::min(
        spec.bins - 1,
        static_cast<std::size_t>(theta / std::numbers::pi * static_cast<double>(spec.bins)));
    f.v[(row * spec.grid + col) * spec.bins + bin] += length;
  }
  return f;
}

FeatureVector featurize(std::span<const Stroke> strokes, const FeaturizerConfig& config,
                        std::string id) {
  const Raster raster = rasterize(strokes, config.width, config.height);
  const auto segs = segments_of(strokes);
  FeatureVector f = extract_grid_features(raster, segs, config.spec);
  f.id = std::move(id);
  return f;
}

FeatureTrajectory featurize_episode(const StrokeEpisode& episode, std::size_t total_steps,
                                    const FeaturizerConfig& config, std::string episode_id) {
  FeatureTrajectory traj{episode_id.empty() ? episode.photo_id : std::move(episode_id),
                         episode.photo_id, {}};
  for (const auto& partial : render_partials(episode, total_steps)) {
    traj.steps.push_back(featurize(partial.strokes, config).v);
  }
  return traj;
}

namespace {

json parse_record(const std::string& text, std::size_t index) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ParseError("record " + std::to_string(index) + " is not an object");
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError("record " + std::to_string(index) + ": " + e.what());
  }
}

FeatureVector feature_from_json(const json& j, std::size_t index) {
  const std::string where = "record " + std::to_string(index);
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw ParseError(where + ": field 'id' missing");
  auto v = j.find("v");
  if (v == j.end() || !v->is_array()) throw ParseError(where + ": field 'v' missing");
  FeatureVector f{id->get<std::string>(), {}};
  f.v.reserve(v->size());
  for (std::size_t c = 0; c < v->size(); ++c) {
    const json& x = (*v)[c];
    double value;
    if (x.is_number()) {
      value = x.get<double>();
    } else if (x.is_string()) {
      // Some writers emit "NaN"/"Infinity" as strings; reject them as values.
      const std::string s = x.get<std::string>();
      char* end = nullptr;
      value = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0' || std::isfinite(value)) {
        throw ParseError(where + " ('" + f.id + "'): component " + std::to_string(c) +
                         " is not a number");
      }
    } else {
      throw ParseError(where + " ('" + f.id + "'): component " + std::to_string(c) +
                       " is not a number");
    }
    if (!std::isfinite(value)) {
      throw ValidationError(where + " ('" + f.id + "'): component " + std::to_string(c) +
                            " is not finite");
    }
    f.v.push_back(value);
  }
  return f;
}

void check_dims(const std::vector<FeatureVector>& fs) {
  for (const auto& f : fs) {
    if (f.v.size() != fs.front().v.size()) {
      throw ValidationError("dimension mismatch: '" + fs.front().id + "' has " +
                            std::to_string(fs.front().v.size()) + " components, '" + f.id +
                            "' has " + std::to_string(f.v.size()));
    }
  }
}

json feature_to_json(const FeatureVector& f) {
  if (!all_finite(f.v)) throw ValidationError("feature '" + f.id + "' has non-finite values");
  return {{"id", f.id}, {"v", f.v}};
}

}  // namespace

std::vector<FeatureVector> parse_features(const std::vector<std::string>& lines) {
  std::vector<FeatureVector> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back(feature_from_json(parse_record(lines[i], i), i));
  }
  check_dims(out);
  return out;
}

std::vector<FeatureVector> load_features(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (auto& l : io::read_lines(path)) lines.push_back(std::move(l.text));
  try {
    return parse_features(lines);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_features(std::span<const FeatureVector> features, const std::filesystem::path& path) {
  std::string text;
  for (const auto& f : features) {
    if (f.v.size() != features.front().v.size()) {
      throw ValidationError("dimension mismatch: '" + features.front().id + "' vs '" + f.id + "'");
    }
    text += feature_to_json(f).dump();
    text += '\n';
  }
  io::write_file_atomic(path, text);
}

std::vector<FeatureTrajectory> load_trajectories(const std::filesystem::path& path) {
  std::vector<FeatureTrajectory> out;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::map<std::size_t, Vector>> steps;
  std::size_t dim = 0;
  std::string first_id;
  std::size_t i = 0;
  for (const auto& line : io::read_lines(path)) {
    const json j = parse_record(line.text, i);
    FeatureVector f = feature_from_json(j, i);
    ++i;
    if (first_id.empty()) {
      first_id = f.id;
      dim = f.v.size();
    } else if (f.v.size() != dim) {
      throw ValidationError("dimension mismatch: '" + first_id + "' has " + std::to_string(dim) +
                            " components, '" + f.id + "' has " + std::to_string(f.v.size()));
    }
    auto ep = j.find("episode");
    auto photo = j.find("photo_id");
    auto step = j.find("step");
    if (ep == j.end() || !ep->is_string() || photo == j.end() || !photo->is_string() ||
        step == j.end() || !step->is_number_unsigned()) {
      throw ParseError(path.string() + ":" + std::to_string(line.number) +
                       ": trajectory record needs 'episode', 'photo_id' and 'step'");
    }
    const std::string name = ep->get<std::string>();
    auto [it, fresh] = index.emplace(name, out.size());
    if (fresh) out.push_back({name, photo->get<std::string>(), {}});
    if (out[it->second].photo_id != photo->get<std::string>()) {
      throw ValidationError("episode '" + name + "' names two photos");
    }
    if (!steps[name].emplace(step->get<std::size_t>(), std::move(f.v)).second) {
      throw ValidationError("episode '" + name + "' repeats step " +
                            std::to_string(step->get<std::size_t>()));
    }
  }
  std::size_t total = 0;
  for (auto& traj : out) {
    auto& s = steps[traj.episode_id];
    if (s.empty() || s.rbegin()->first + 1 != s.size()) {
      throw ValidationError("episode '" + traj.episode_id + "' steps are not contiguous from 0");
    }
    if (total == 0) total = s.size();
    if (s.size() != total) {
      throw ValidationError("episode '" + traj.episode_id + "' has " + std::to_string(s.size()) +
                            " steps, expected " + std::to_string(total));
    }
    for (auto& [t, v] : s) traj.steps.push_back(std::move(v));
  }
  return out;
}

void save_trajectories(std::span<const FeatureTrajectory> trajectories,
                       const std::filesystem::path& path) {
  std::string text;
  for (const auto& traj : trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      json j = feature_to_json({traj.episode_id + "/" + std::to_string(t), traj.steps[t]});
      j["episode"] = traj.episode_id;
      j["photo_id"] = traj.photo_id;
      j["step"] = t;
      text += j.dump();
      text += '\n';
    }
  }
  io::write_file_atomic(path, text);
}

namespace {

struct SignedPermutation {
  std::vector<std::size_t> target;
  std::vector<double> sign;

  Vector apply(std::span<const double> x) const {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[target[i]] = sign[i] * x[i];
    return y;
  }
};

SignedPermutation random_signed_permutation(std::size_t dim, Rng& rng) {
  SignedPermutation q;
  q.target.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) q.target[i] = i;
  rng.shuffle(q.target);
  q.sign.resize(dim);
  for (auto& s : q.sign) s = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return q;
}

constexpr double kStartScale = 0.5;
constexpr double kScrambleScale = 3.0;

}  // namespace

SyntheticDataset gen_synthetic(std::size_t n_photos, std::size_t dim, std::size_t total_steps,
                               std::size_t stage_profile, double noise, std::uint64_t seed) {
  if (n_photos < 2) throw ValidationError("gen_synthetic: need at least 2 photos");
  if (dim < 2) throw ValidationError("gen_synthetic: H must be >= 2");
  if (stage_profile < 1 || stage_profile > total_steps) {
    throw ValidationError("gen_synthetic: need 1 <= profile <= T");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw ValidationError("gen_synthetic: noise must be finite and >= 0");
  }
  Rng rng(seed);
  SyntheticDataset ds;
  ds.seed = seed;
  ds.dim = dim;
  ds.total_steps = total_steps;
  ds.stage_profile = stage_profile;
  ds.noise = noise;

  std::vector<SignedPermutation> scramble;
  for (std::size_t s = 0; s < stage_profile; ++s) {
    scramble.push_back(random_signed_permutation(dim, rng));
  }
  for (std::size_t i = 0; i < n_photos; ++i) {
    FeatureVector p{"p" + std::to_string(i), Vector(dim)};
    for (auto& x : p.v) x = rng.normal();
    ds.photos.push_back(std::move(p));
  }
  const auto T = static_cast<double>(total_steps);
  for (const auto& photo : ds.photos) {
    FeatureTrajectory traj{photo.id, photo.id, {}};
    Vector start(dim);
    for (auto& x : start) x = rng.normal();
    // Stage offsets share one length so the noiseless approach is monotone.
    std::vector<Vector> offsets;
    double mean_sq = 0.0;
    for (const auto& q : scramble) {
      Vector o = q.apply(photo.v);
      for (std::size_t c = 0; c < dim; ++c) {
        o[c] = kStartScale * start[c] + kScrambleScale * o[c] - photo.v[c];
      }
      mean_sq += squared_distance(o, Vector(dim, 0.0));
      offsets.push_back(std::move(o));
    }
    const double length = std::sqrt(mean_sq / static_cast<double>(stage_profile));
    for (auto& o : offsets) {
      const double norm = std::sqrt(squared_distance(o, Vector(dim, 0.0)));
      if (norm > 0.0) {
        for (auto& x : o) x *= length / norm;
      }
    }
    for (std::size_t t = 0; t < total_steps; ++t) {
      const std::size_t seg = std::min(stage_profile - 1, t * stage_profile / total_steps);
      const double remaining = 1.0 - static_cast<double>(t + 1) / T;
      Vector x(dim);
      for (std::size_t c = 0; c < dim; ++c) {
        x[c] = photo.v[c] + remaining * (offsets[seg][c] + noise * rng.normal());
      }
      traj.steps.push_back(std::move(x));
    }
    ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

}  // namespace mgal
