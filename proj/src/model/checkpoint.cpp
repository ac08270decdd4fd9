#include "hyres/model/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hyres {

using nlohmann::json;

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hexfloat(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("checkpoint: bad float '" + s + "'");
  return v;
}

void save_checkpoint(const Model& model, std::ostream& os) {
  json params = json::array();
  for (const auto& p : model.params().params()) {
    json values = json::array();
    for (double v : p.value.data()) values.push_back(hexfloat(v));
    params.push_back({{"name", p.name},
                      {"shape", {p.value.rows(), p.value.cols()}},
                      {"trainable", p.trainable},
                      {"init", p.init},
                      {"values", std::move(values)}});
  }
  json j = {{"format", "hyres-checkpoint"},
            {"version", kCheckpointVersion},
            {"seed", model.seed()},
            {"model", model.spec()},
            {"params", std::move(params)}};
  os << j.dump(1) << "\n";
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
  save_checkpoint(model, os);
}

Model load_checkpoint(std::istream& is) {
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "hyres-checkpoint") throw std::invalid_argument("checkpoint: not a hyres checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw std::invalid_argument("checkpoint: unsupported version " + j.value("version", json(0)).dump());
  ModelSpec spec;
  from_json(j.at("model"), spec);
  ParamStore store;
  for (const auto& p : j.at("params")) {
    const auto shape = p.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw std::invalid_argument("checkpoint: shape must have two extents");
    const auto& vals = p.at("values");
    if (vals.size() != shape[0] * shape[1])
      throw std::invalid_argument("checkpoint: value count does not match shape for " + p.at("name").get<std::string>());
    std::vector<double> data;
    data.reserve(vals.size());
    for (const auto& v : vals) data.push_back(parse_hexfloat(v.get<std::string>()));
    store.add(p.at("name").get<std::string>(), Array(shape[0], shape[1], std::move(data)),
              p.at("init").get<std::string>(), p.at("trainable").get<bool>());
  }
  const auto seed = j.at("seed").get<std::uint64_t>();
  const Model reference = Model::build(spec, seed);
  const auto& want = reference.params();
  if (want.size() != store.size()) throw std::invalid_argument("checkpoint: parameter set does not match the model");
  for (std::size_t i = 0; i < want.size(); ++i)
    if (want.at(i).name != store.at(i).name || want.at(i).value.shape() != store.at(i).value.shape())
      throw std::invalid_argument("checkpoint: parameter '" + store.at(i).name + "' does not match the model");
  return Model(std::move(spec), seed, std::move(store));
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("checkpoint: cannot open " + path.string());
  return load_checkpoint(is);
}

}  // namespace hyres
