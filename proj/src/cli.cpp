#include "mgal/cli.hpp"

#include <httplib.h>
#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>
#include <variant>

#include "json.hpp"
#include "mgal/checkpoint.hpp"
#include "mgal/errors.hpp"
#include "mgal/feature_bank.hpp"
#include "mgal/http_server.hpp"
#include "mgal/io.hpp"
#include "mgal/retrieval.hpp"
#include "mgal/service.hpp"
#include "mgal/sketch_data.hpp"
#include "mgal/trainer.hpp"

namespace mgal::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Level { debug = 0, info, warn, error, off };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {
    const char* env = std::getenv("MGAL_LOG");
    const std::string v = env ? env : "info";
    if (v == "debug") level_ = Level::debug;
    else if (v == "info") level_ = Level::info;
    else if (v == "warn") level_ = Level::warn;
    else if (v == "error") level_ = Level::error;
    else if (v == "off") level_ = Level::off;
    else {
      level_ = Level::info;
      warn("unrecognized MGAL_LOG value '" + v + "', using info");
    }
  }
  void debug(const std::string& m) { emit(Level::debug, "debug", m); }
  void info(const std::string& m) { emit(Level::info, "info", m); }
  void warn(const std::string& m) { emit(Level::warn, "warn", m); }

 private:
  void emit(Level l, const char* tag, const std::string& m) {
    if (l >= level_ && level_ != Level::off) err_ << "[" << tag << "] " << m << "\n";
  }
  std::ostream& err_;
  Level level_ = Level::info;
};

// Training hyperparameters shared by train-base, train and eval --stages.
void add_train_options(CLI::App* app, TrainConfig& cfg) {
  app->add_option("--seed", cfg.seed, "RNG seed");
  app->add_option("--epochs", cfg.epochs, "training epochs");
  app->add_option("--margin", cfg.margin, "triplet margin");
  app->add_option("--assoc-weight", cfg.assoc_weight, "association loss weight");
  app->add_option("--batch-size", cfg.batch_size, "samples per batch");
  app->add_option("--lr", cfg.lr_initial, "initial learning rate");
  app->add_option("--lr-after", cfg.lr_after, "learning rate after the drop");
  app->add_option("--lr-drop-epoch", cfg.lr_drop_epoch, "epoch at which the rate drops");
  app->add_option("--weight-decay", cfg.weight_decay, "L2 weight decay");
}

void add_extractor_options(CLI::App* app, FeaturizerConfig& fx) {
  app->add_option("--grid", fx.spec.grid, "feature grid cells per side (stroke input)");
  app->add_option("--bins", fx.spec.bins, "orientation bins (stroke input)");
  app->add_option("--raster", fx.width, "raster side in pixels (stroke input)");
}

json train_config_json(const TrainConfig& c) {
  return {{"seed", c.seed},           {"epochs", c.epochs},
          {"margin", c.margin},       {"assoc_weight", c.assoc_weight},
          {"batch_size", c.batch_size}, {"lr", c.lr_initial},
          {"lr_after", c.lr_after},   {"lr_drop_epoch", c.lr_drop_epoch},
          {"weight_decay", c.weight_decay}};
}

// Values from a JSON config fill options the command line left unset.
void apply_config(CLI::App* app, const std::string& path) {
  json cfg;
  try {
    cfg = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw ValidationError("config " + path + ": expected a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (!opt || key == "config") {
      throw ValidationError("config " + path + ": unknown key '" + key + "' for " + app->get_name());
    }
    if (opt->count() > 0) continue;
    std::vector<json> items = value.is_array() ? value.get<std::vector<json>>() : std::vector<json>{value};
    for (const auto& v : items) {
      if (v.is_string()) opt->add_result(v.get<std::string>());
      else if (v.is_boolean() || v.is_number()) opt->add_result(v.dump());
      else throw ValidationError("config " + path + ": key '" + key + "' has an unsupported value");
    }
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ValidationError("config " + path + ": key '" + key + "': " + e.what());
    }
  }
}

using EpisodeInput = std::variant<std::vector<StrokeEpisode>, std::vector<FeatureTrajectory>>;

// Stroke episodes carry "strokes"; feature trajectories carry "v".
EpisodeInput load_episode_input(const fs::path& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": no episodes");
  json first;
  try {
    first = json::parse(lines.front().text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + " line " + std::to_string(lines.front().number) + ": " + e.what());
  }
  if (first.is_object() && first.contains("strokes")) return load_episodes(path);
  if (first.is_object() && first.contains("v")) return load_trajectories(path);
  throw ParseError(path.string() + ": records are neither stroke episodes nor feature trajectories");
}

double median_stroke_count(const std::vector<StrokeEpisode>& eps) {
  std::vector<std::size_t> c;
  for (const auto& e : eps) c.push_back(e.strokes.size());
  std::sort(c.begin(), c.end());
  const std::size_t m = c.size() / 2;
  return c.size() % 2 ? static_cast<double>(c[m]) : 0.5 * static_cast<double>(c[m - 1] + c[m]);
}

std::vector<FeatureTrajectory> trajectories_of(const EpisodeInput& in, std::size_t T,
                                               const FeaturizerConfig& fx) {
  if (const auto* t = std::get_if<std::vector<FeatureTrajectory>>(&in)) {
    if (!t->empty() && t->front().steps.size() != T) {
      throw ValidationError("episode file has T=" + std::to_string(t->front().steps.size()) +
                            " but the model expects T=" + std::to_string(T));
    }
    return *t;
  }
  const auto& eps = std::get<std::vector<StrokeEpisode>>(in);
  std::vector<FeatureTrajectory> out;
  out.reserve(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    out.push_back(featurize_episode(eps[i], T, fx, eps[i].photo_id + "#" + std::to_string(i)));
  }
  return out;
}

std::size_t input_dim(const EpisodeInput& in, const FeaturizerConfig& fx) {
  if (const auto* t = std::get_if<std::vector<FeatureTrajectory>>(&in)) {
    if (t->empty() || t->front().steps.empty()) throw ValidationError("empty trajectory file");
    return t->front().steps.front().size();
  }
  return fx.dim();
}

void check_photo_dim(const std::vector<FeatureVector>& photos, std::size_t H) {
  if (photos.empty()) throw ValidationError("photo file is empty");
  if (photos.front().v.size() != H) {
    throw ValidationError("photo features have dimension " + std::to_string(photos.front().v.size()) +
                          " but sketch features have " + std::to_string(H));
  }
}

struct BaseJob {
  std::string episodes, photos;
  std::size_t D = 64, T = 20;
  FeaturizerConfig fx;
  TrainConfig cfg;
};

StageEmbedder run_train_base(const BaseJob& job, const EpisodeInput& in,
                             const std::vector<FeatureVector>& photos, Log& log) {
  std::size_t T = job.T;
  FeaturizerConfig fx = job.fx;
  double budget = 0.0;
  std::vector<FeatureVector> sketches;
  std::vector<std::string> pairing;
  if (const auto* t = std::get_if<std::vector<FeatureTrajectory>>(&in)) {
    T = t->front().steps.size();
    for (const auto& tr : *t) {
      sketches.push_back({tr.episode_id, tr.steps.back()});
      pairing.push_back(tr.photo_id);
    }
    budget = static_cast<double>(T);
  } else {
    fx.height = fx.width;
    const auto& eps = std::get<std::vector<StrokeEpisode>>(in);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      sketches.push_back(featurize(eps[i].strokes, fx, eps[i].photo_id + "#" + std::to_string(i)));
      pairing.push_back(eps[i].photo_id);
    }
    budget = median_stroke_count(eps);
  }
  const std::size_t H = input_dim(in, fx);
  check_photo_dim(photos, H);
  if (std::holds_alternative<std::vector<FeatureTrajectory>>(in)) fx = FeaturizerConfig{};
  log.info("train-base: H=" + std::to_string(H) + " D=" + std::to_string(job.D) + " T=" +
           std::to_string(T) + " sketches=" + std::to_string(sketches.size()) +
           " photos=" + std::to_string(photos.size()));
  auto result = train_base(sketches, pairing, photos, job.D, T, job.cfg, fx);
  if (!result.epoch_losses.empty()) {
    log.info("train-base: final epoch loss " + json(result.epoch_losses.back()).dump());
  }
  result.model.stroke_budget = budget;
  return std::move(result.model);
}

void log_config(Log& log, const std::string& cmd, const json& cfg) {
  log.info(cmd + ": seed " + cfg.value("seed", json(0)).dump() + " config " + cfg.dump());
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (auto& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return out;
}

void serve_until_signal(httplib::Server& server, const std::string& host, int port, Log& log) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  if (!server.bind_to_port(host, port)) {
    pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
    throw ValidationError("cannot bind " + host + ":" + std::to_string(port));
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  log.info("serve: listening on http://" + host + ":" + std::to_string(port));
  server.listen_after_bind();
  // listen returned without a signal (socket error): wake the waiter.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
  log.info("serve: stopped");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto fail = [&err](const std::string& kind, const std::string& msg, int code) {
    err << json{{"error", kind}, {"message", msg}}.dump() << "\n";
    return code;
  };

  CLI::App app{"Stage-wise sketch-to-photo retrieval: training, evaluation and serving", "mgal"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand all help");
  Log log(err);

  std::string config_path;
  auto add_config = [&config_path](CLI::App* a) {
    a->add_option("--config", config_path, "JSON file of option values; flags take precedence");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic feature dataset");
  std::size_t s_photos = 200, s_H = 32, s_T = 20, s_profile = 4;
  double s_noise = 0.1;
  std::uint64_t s_seed = 0;
  std::string s_out;
  synth->add_option("--photos", s_photos, "number of photos");
  synth->add_option("--H", s_H, "feature dimension");
  synth->add_option("--T", s_T, "steps per episode");
  synth->add_option("--profile", s_profile, "number of heterogeneous stage segments");
  synth->add_option("--noise", s_noise, "per-step noise scale");
  synth->add_option("--seed", s_seed, "RNG seed");
  synth->add_option("--out", s_out, "output directory")->required();
  add_config(synth);

  // train-base
  auto* tb = app.add_subcommand("train-base", "train the shared base map on complete sketches");
  BaseJob base_job;
  base_job.cfg.epochs = 100;
  std::string tb_out;
  tb->add_option("--episodes", base_job.episodes, "stroke episodes or feature trajectories")->required();
  tb->add_option("--photos", base_job.photos, "photo feature file")->required();
  tb->add_option("--out", tb_out, "checkpoint to write")->required();
  tb->add_option("--D", base_job.D, "embedding dimension");
  tb->add_option("--T", base_job.T, "steps per episode (stroke input)");
  add_extractor_options(tb, base_job.fx);
  add_train_options(tb, base_job.cfg);
  add_config(tb);

  // train
  auto* tr = app.add_subcommand("train", "train k stage maps on top of a base map");
  BaseJob tr_base;
  tr_base.cfg.epochs = 100;
  TrainConfig tr_cfg;
  std::string tr_base_path, tr_out;
  std::size_t tr_k = 4;
  tr->add_option("--episodes", tr_base.episodes, "stroke episodes or feature trajectories")->required();
  tr->add_option("--photos", tr_base.photos, "photo feature file")->required();
  tr->add_option("--out", tr_out, "checkpoint to write")->required();
  tr->add_option("--base", tr_base_path, "base checkpoint (trained in-process when absent)");
  tr->add_option("--k", tr_k, "number of stages");
  tr->add_option("--D", tr_base.D, "embedding dimension (without --base)");
  tr->add_option("--T", tr_base.T, "steps per episode (stroke input without --base)");
  tr->add_option("--base-epochs", tr_base.cfg.epochs, "base epochs (without --base)");
  add_extractor_options(tr, tr_base.fx);
  add_train_options(tr, tr_cfg);
  add_config(tr);

  // eval
  auto* ev = app.add_subcommand("eval", "rank every step of every episode against the gallery");
  std::string ev_ckpt, ev_episodes, ev_photos, ev_report, ev_train_episodes;
  std::vector<std::size_t> ev_q{5, 10}, ev_stages;
  bool ev_no_ranks = false;
  TrainConfig ev_cfg;
  ev->add_option("--ckpt", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--episodes", ev_episodes, "stroke episodes or feature trajectories")->required();
  ev->add_option("--photos", ev_photos, "photo feature file")->required();
  ev->add_option("--report", ev_report, "report file to write")->required();
  ev->add_option("--q", ev_q, "A@q cutoffs")->delimiter(',');
  ev->add_flag("--no-ranks", ev_no_ranks, "omit the per-episode rank table");
  ev->add_option("--stages", ev_stages,
                 "retrain the stage maps for each k on top of the checkpoint's base and report each")
      ->delimiter(',');
  ev->add_option("--train-episodes", ev_train_episodes, "training episodes for --stages (default: --episodes)");
  add_train_options(ev, ev_cfg);
  add_config(ev);

  // render
  auto* rd = app.add_subcommand("render", "write the partial-sketch rasters of stroke episodes as PGM");
  std::string rd_episodes, rd_out;
  std::size_t rd_T = 20, rd_size = kDefaultRasterSize;
  std::optional<std::size_t> rd_index;
  rd->add_option("--episodes", rd_episodes, "stroke episode file")->required();
  rd->add_option("--out", rd_out, "output directory")->required();
  rd->add_option("--T", rd_T, "steps per episode");
  rd->add_option("--size", rd_size, "raster side in pixels");
  rd->add_option("--index", rd_index, "render only this episode (0-based)");
  add_config(rd);

  // serve
  auto* sv = app.add_subcommand("serve", "serve the retrieval API over HTTP");
  std::string sv_ckpt, sv_gallery, sv_host = "127.0.0.1", sv_static, sv_images;
  int sv_port = 8080;
  std::optional<double> sv_budget;
  sv->add_option("--ckpt", sv_ckpt, "model checkpoint")->required();
  sv->add_option("--gallery", sv_gallery, "photo feature file")->required();
  sv->add_option("--port", sv_port, "TCP port");
  sv->add_option("--host", sv_host, "bind address");
  sv->add_option("--static", sv_static, "directory served under /");
  sv->add_option("--images", sv_images, "directory of <photo_id>.png|jpg|bmp thumbnails");
  sv->add_option("--stroke-budget", sv_budget, "reference stroke count (default: from checkpoint)");
  add_config(sv);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what(), kExitUsage);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(sub, config_path);

    if (sub == synth) {
      log_config(log, "synth", {{"seed", s_seed}, {"photos", s_photos}, {"H", s_H}, {"T", s_T},
                                {"profile", s_profile}, {"noise", s_noise}});
      const auto ds = gen_synthetic(s_photos, s_H, s_T, s_profile, s_noise, s_seed);
      fs::create_directories(s_out);
      save_features(ds.photos, fs::path(s_out) / "photos.ndjson");
      save_trajectories(ds.trajectories, fs::path(s_out) / "episodes.ndjson");
      log.info("synth: wrote " + std::to_string(ds.photos.size()) + " photos and trajectories to " + s_out);
      return kExitOk;
    }

    if (sub == tb) {
      base_job.cfg.validate();
      json c = train_config_json(base_job.cfg);
      c["D"] = base_job.D;
      log_config(log, "train-base", c);
      const auto in = load_episode_input(base_job.episodes);
      const auto photos = load_features(base_job.photos);
      const auto model = run_train_base(base_job, in, photos, log);
      save_checkpoint(model, tb_out);
      log.info("train-base: wrote " + tb_out);
      return kExitOk;
    }

    if (sub == tr) {
      tr_cfg.validate();
      tr_base.cfg.seed = tr_cfg.seed;
      json c = train_config_json(tr_cfg);
      c["k"] = tr_k;
      c["base"] = tr_base_path.empty() ? json(nullptr) : json(tr_base_path);
      if (tr_base_path.empty()) c["base_epochs"] = tr_base.cfg.epochs;
      log_config(log, "train", c);
      if (tr_k < 1) throw ValidationError("k must be >= 1");
      const auto in = load_episode_input(tr_base.episodes);
      const auto photos = load_features(tr_base.photos);
      const auto* in_traj = std::get_if<std::vector<FeatureTrajectory>>(&in);
      if (tr_base_path.empty()) {
        const std::size_t T = in_traj ? in_traj->front().steps.size() : tr_base.T;
        if (tr_k > T) {
          throw ValidationError("k=" + std::to_string(tr_k) + " must be in [1, T=" + std::to_string(T) + "]");
        }
      }
      StageEmbedder base;
      if (tr_base_path.empty()) {
        tr_base.cfg.margin = tr_cfg.margin;
        tr_base.cfg.batch_size = tr_cfg.batch_size;
        tr_base.cfg.weight_decay = tr_cfg.weight_decay;
        base = run_train_base(tr_base, in, photos, log);
      } else {
        base = load_checkpoint(tr_base_path);
      }
      if (tr_k < 1 || tr_k > base.total_steps) {
        throw ValidationError("k=" + std::to_string(tr_k) + " must be in [1, T=" +
                              std::to_string(base.total_steps) + "]");
      }
      const auto trajectories = trajectories_of(in, base.total_steps, base.extractor);
      if (input_dim(in, base.extractor) != base.input_dim) {
        throw ValidationError("episode features do not match the base map's H=" +
                              std::to_string(base.input_dim));
      }
      auto result = train_stages(trajectories, photos, base, tr_k, tr_cfg);
      if (!result.epoch_losses.empty()) {
        log.info("train: final epoch loss " + json(result.epoch_losses.back()).dump());
      }
      save_checkpoint(result.model, tr_out);
      log.info("train: wrote " + tr_out);
      return kExitOk;
    }

    if (sub == ev) {
      json c = {{"ckpt", ev_ckpt}, {"q", ev_q}, {"seed", ev_cfg.seed}};
      if (!ev_stages.empty()) {
        ev_cfg.validate();
        c = train_config_json(ev_cfg);
        c["stages"] = ev_stages;
      }
      log_config(log, "eval", c);
      const auto model = load_checkpoint(ev_ckpt);
      const auto photos = load_features(ev_photos);
      const auto in = load_episode_input(ev_episodes);
      const auto trajectories = trajectories_of(in, model.total_steps, model.extractor);
      if (ev_stages.empty()) {
        const Gallery gallery = build_gallery(photos, model);
        const auto report = evaluate(trajectories, model, gallery, ev_q);
        io::write_file_atomic(ev_report, report_to_string(report, !ev_no_ranks));
        json summary = {{"m@A", report.m_at_a}, {"m@B", report.m_at_b}};
        for (const auto& [q, a] : report.acc_at) summary["A@" + std::to_string(q)] = a;
        out << summary.dump() << "\n";
        return kExitOk;
      }
      const auto train_in = ev_train_episodes.empty() ? in : load_episode_input(ev_train_episodes);
      const auto train_traj = trajectories_of(train_in, model.total_steps, model.extractor);
      json sweep = json::array();
      for (const std::size_t k : ev_stages) {
        auto trained = train_stages(train_traj, photos, model, k, ev_cfg).model;
        const Gallery gallery = build_gallery(photos, trained);
        const auto report = evaluate(trajectories, trained, gallery, ev_q);
        json entry = json::parse(report_to_string(report, !ev_no_ranks));
        log.info("eval: k=" + std::to_string(k) + " m@A " + json(report.m_at_a).dump() + " m@B " +
                 json(report.m_at_b).dump());
        sweep.push_back({{"k", k}, {"report", std::move(entry)}});
        out << json{{"k", k}, {"m@A", report.m_at_a}, {"m@B", report.m_at_b}}.dump() << "\n";
      }
      io::write_file_atomic(ev_report, json{{"format", "mgal-sweep-1"}, {"sweep", sweep}}.dump(2) + "\n");
      return kExitOk;
    }

    if (sub == rd) {
      log_config(log, "render", {{"T", rd_T}, {"size", rd_size}});
      const auto eps = load_episodes(rd_episodes);
      if (rd_index && *rd_index >= eps.size()) {
        throw ValidationError("--index " + std::to_string(*rd_index) + " out of range (" +
                              std::to_string(eps.size()) + " episodes)");
      }
      fs::create_directories(rd_out);
      std::size_t written = 0;
      for (std::size_t i = 0; i < eps.size(); ++i) {
        if (rd_index && i != *rd_index) continue;
        for (const auto& p : render_partials(eps[i], rd_T)) {
          char name[64];
          std::snprintf(name, sizeof name, "_t%02zu.pgm", p.step);
          const auto path = fs::path(rd_out) / (std::to_string(i) + "_" + sanitize(eps[i].photo_id) + name);
          io::write_file_atomic(path, encode_pgm(rasterize(p.strokes, rd_size, rd_size)));
          ++written;
        }
      }
      log.info("render: wrote " + std::to_string(written) + " images to " + rd_out);
      return kExitOk;
    }

    if (sub == sv) {
      log_config(log, "serve", {{"ckpt", sv_ckpt}, {"gallery", sv_gallery}, {"port", sv_port}});
      const std::string ckpt_text = io::read_file(sv_ckpt);
      auto model = checkpoint_from_string(ckpt_text);
      const auto photos = load_features(sv_gallery);
      ServiceOptions opts;
      opts.stroke_budget = sv_budget;
      if (!sv_images.empty()) opts.image_dir = sv_images;
      RetrievalService service(std::move(model), photos, io::fnv1a_hex(ckpt_text), opts);
      httplib::Server server;
      register_routes(server, service, sv_static.empty() ? std::nullopt : std::optional<fs::path>(sv_static));
      serve_until_signal(server, sv_host, sv_port, log);
      return kExitOk;
    }
    return fail("usage_error", "no subcommand", kExitUsage);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), kExitFailure);
  } catch (const fs::filesystem_error& e) {
    return fail("io_error", e.what(), kExitFailure);
  } catch (const std::exception& e) {
    return fail("internal_error", e.what(), kExitFailure);
  }
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace mgal::cli
