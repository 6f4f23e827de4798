#include "mgal/checkpoint.hpp"

#include "json.hpp"
#include "mgal/errors.hpp"
#include "mgal/io.hpp"

namespace mgal {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  if (!j.is_array() || j.size() != rows) {
    throw FormatError("checkpoint: " + name + " must have " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw FormatError("checkpoint: " + name + " row " + std::to_string(r) + " must have " +
                        std::to_string(cols) + " columns");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw FormatError("checkpoint: " + name + " entry (" + std::to_string(r) + "," +
                          std::to_string(c) + ") is not a number");
      }
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("checkpoint: missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("checkpoint: field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string checkpoint_to_string(const StageEmbedder& model) {
  model.validate();
  json stages = json::array();
  for (const auto& m : model.stage_maps) stages.push_back(matrix_to_json(m));
  json j = {
      {"format", kCheckpointFormat},
      {"H", model.input_dim},
      {"D", model.embed_dim},
      {"k", model.stages()},
      {"T", model.total_steps},
      {"base_map", matrix_to_json(model.base_map)},
      {"stage_maps", std::move(stages)},
      {"feature_extractor",
       {{"kind", "grid-orientation"},
        {"grid", model.extractor.spec.grid},
        {"bins", model.extractor.spec.bins},
        {"width", model.extractor.width},
        {"height", model.extractor.height}}},
      {"seed", model.seed},
      {"stroke_budget", model.stroke_budget},
  };
  return j.dump() + "\n";
}

StageEmbedder checkpoint_from_string(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint: malformed or truncated document: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("checkpoint: top level is not an object");
  const auto format = required<std::string>(j, "format");
  if (format != kCheckpointFormat) {
    throw FormatError("checkpoint: unsupported format '" + format + "', expected '" +
                      std::string(kCheckpointFormat) + "'");
  }
  StageEmbedder m;
  m.input_dim = required<std::size_t>(j, "H");
  m.embed_dim = required<std::size_t>(j, "D");
  m.total_steps = required<std::size_t>(j, "T");
  const auto k = required<std::size_t>(j, "k");
  m.seed = required<std::uint64_t>(j, "seed");
  m.stroke_budget = j.value("stroke_budget", static_cast<double>(m.total_steps));

  const json fx = required<json>(j, "feature_extractor");
  m.extractor.spec.grid = fx.value("grid", std::size_t{16});
  m.extractor.spec.bins = fx.value("bins", std::size_t{8});
  m.extractor.width = fx.value("width", kDefaultRasterSize);
  m.extractor.height = fx.value("height", kDefaultRasterSize);

  m.base_map = matrix_from_json(required<json>(j, "base_map"), m.embed_dim, m.input_dim, "base_map");
  const json stages = required<json>(j, "stage_maps");
  if (!stages.is_array() || stages.size() != k) {
    throw FormatError("checkpoint: k=" + std::to_string(k) + " but stage_maps holds " +
                      std::to_string(stages.is_array() ? stages.size() : 0) + " matrices");
  }
  for (std::size_t i = 0; i < k; ++i) {
    m.stage_maps.push_back(
        matrix_from_json(stages[i], m.embed_dim, m.input_dim, "stage_maps[" + std::to_string(i) + "]"));
  }
  m.validate();
  return m;
}

void save_checkpoint(const StageEmbedder& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, checkpoint_to_string(model));
}

StageEmbedder load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_string(io::read_file(path));
}

}  // namespace mgal
