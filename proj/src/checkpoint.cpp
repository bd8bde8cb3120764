#include "aoi/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "aoi/error.hpp"

namespace aoi {

namespace {

using nlohmann::json;

json matrix(std::span<const double> v, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int c = 0; c < cols; ++c) row.push_back(v[static_cast<std::size_t>(r) * cols + c]);
    out.push_back(std::move(row));
  }
  return out;
}

json vec(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

json network_json(const Network& net) {
  const NetShape& s = net.shape();
  json j = json::object();
  j["conv_w"] = matrix(net.conv_w(), s.filters, s.kernel);
  j["conv_b"] = vec(net.conv_b());
  j["dense_w"] = matrix(net.dense_w(), s.hidden, s.dense_inputs());
  j["dense_b"] = vec(net.dense_b());
  j["out_w"] = matrix(net.out_w(), s.outputs, s.hidden);
  j["out_b"] = vec(net.out_b());
  return j;
}

void read_into(const json& j, const char* key, std::span<double> dst, int rows, int cols) {
  if (!j.contains(key)) throw ParseError(std::string("checkpoint layer missing: ") + key);
  const json& v = j.at(key);
  std::size_t i = 0;
  auto take = [&](const json& x) {
    if (!x.is_number()) throw ParseError(std::string("non-numeric entry in ") + key);
    if (i >= dst.size()) throw ShapeError(std::string("too many values in ") + key);
    dst[i++] = x.get<double>();
  };
  if (rows < 0) {
    if (!v.is_array()) throw ParseError(std::string(key) + " must be an array");
    for (const auto& x : v) take(x);
  } else {
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
      throw ShapeError(std::string(key) + " has the wrong number of rows");
    for (const auto& row : v) {
      if (!row.is_array() || static_cast<int>(row.size()) != cols)
        throw ShapeError(std::string(key) + " has the wrong number of columns");
      for (const auto& x : row) take(x);
    }
  }
  if (i != dst.size()) throw ShapeError(std::string(key) + " has the wrong size");
}

Network network_from(const json& j, const NetShape& s) {
  Network net(s);
  read_into(j, "conv_w", net.conv_w(), s.filters, s.kernel);
  read_into(j, "conv_b", net.conv_b(), -1, 0);
  read_into(j, "dense_w", net.dense_w(), s.hidden, s.dense_inputs());
  read_into(j, "dense_b", net.dense_b(), -1, 0);
  read_into(j, "out_w", net.out_w(), s.outputs, s.hidden);
  read_into(j, "out_b", net.out_b(), -1, 0);
  if (!net.all_finite()) throw NumericError("checkpoint contains non-finite parameters");
  return net;
}

}  // namespace

std::string to_json(const Checkpoint& c) {
  const auto& m = c.meta;
  json meta = {{"N", m.num_sensors},
               {"j", m.history_len},
               {"filters", m.filters},
               {"kernel", m.kernel},
               {"hidden", m.hidden},
               {"seed", m.seed},
               {"entropy_stage", m.entropy_stage},
               {"entropy_weight", m.entropy_weight},
               {"config_hash", m.config_hash},
               {"age_scale_ms", m.scale.age_ms},
               {"throughput_scale", m.scale.throughput}};
  json doc = {{"meta", meta}, {"actor", network_json(c.actor)}, {"critic", network_json(c.critic)}};
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const json& m = doc.at("meta");
    Checkpoint c;
    c.meta.num_sensors = m.at("N").get<int>();
    c.meta.history_len = m.at("j").get<int>();
    c.meta.filters = m.at("filters").get<int>();
    c.meta.kernel = m.at("kernel").get<int>();
    c.meta.hidden = m.at("hidden").get<int>();
    c.meta.seed = m.at("seed").get<std::uint64_t>();
    c.meta.entropy_stage = m.at("entropy_stage").get<int>();
    c.meta.entropy_weight = m.value("entropy_weight", 0.0);
    c.meta.config_hash = m.at("config_hash").get<std::string>();
    c.meta.scale.age_ms = m.value("age_scale_ms", 100.0);
    c.meta.scale.throughput = m.value("throughput_scale", 1.0);

    NetShape s;
    s.window = c.meta.history_len;
    s.extra = c.meta.num_sensors + 1;
    s.filters = c.meta.filters;
    s.kernel = c.meta.kernel;
    s.hidden = c.meta.hidden;
    s.outputs = c.meta.num_sensors;
    s.validate();
    c.actor = network_from(doc.at("actor"), s);
    s.outputs = 1;
    c.critic = network_from(doc.at("critic"), s);
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint " + path.string());
  out << to_json(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace aoi
