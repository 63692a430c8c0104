#include "dppdcc/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dppdcc::config {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PathsConfig, corpus, network, embeddings, splits, output)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthConfig, papers, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EmbeddingConfig, provider, dim, artifact)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, hidden_dim, layers, lambda, xi, heads, temporal_layers,
                                                temporal_heads, share_snapshot_params, softmax_over_c, gate,
                                                snapshot_bins, bins, alpha, tau, single_head, orthogonal)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, epochs, patience, batch_size, learning_rate, weight_decay,
                                                clip_norm, drop_fraction, seed, track_train_metric)

namespace {

json sampling_json(const graph::SamplingOptions& s) {
  return {{"hops", s.hops},
          {"limits", s.limits},
          {"limit_per_direction", s.limit_per_direction},
          {"expand_both_directions", s.expand_both_directions}};
}

graph::SamplingOptions sampling_from(const json& j) {
  graph::SamplingOptions s;
  s.hops = j.value("hops", s.hops);
  s.limits = j.value("limits", s.limits);
  s.limit_per_direction = j.value("limit_per_direction", s.limit_per_direction);
  s.expand_both_directions = j.value("expand_both_directions", s.expand_both_directions);
  return s;
}

json optional_json(const std::optional<corpus::TimeStep>& v) { return v ? json(*v) : json(nullptr); }

std::optional<corpus::TimeStep> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<corpus::TimeStep>();
}

json split_json(const splits::SplitConfig& s) {
  return {{"test_point", s.test_point},
          {"train_point", optional_json(s.train_point)},
          {"val_point", optional_json(s.val_point)},
          {"delta", s.delta},
          {"n_test", s.n_test},
          {"seed", s.seed},
          {"max_train", s.max_train},
          {"max_val", s.max_val},
          {"log_base", s.label.log_base}};
}

splits::SplitConfig split_from(const json& j) {
  splits::SplitConfig s;
  s.test_point = j.value("test_point", s.test_point);
  s.train_point = optional_from(j, "train_point");
  s.val_point = optional_from(j, "val_point");
  s.delta = j.value("delta", s.delta);
  s.n_test = j.value("n_test", s.n_test);
  s.seed = j.value("seed", s.seed);
  s.max_train = j.value("max_train", s.max_train);
  s.max_val = j.value("max_val", s.max_val);
  s.label.log_base = j.value("log_base", s.label.log_base);
  return s;
}

json config_json(const RunConfig& c) {
  return {{"paths", c.paths},   {"synth", c.synth},
          {"embedding", c.embedding}, {"window", c.window},
          {"sampling", sampling_json(c.sampling)}, {"split", split_json(c.split)},
          {"model", c.model},   {"train", c.train}};
}

void reject_unknown(const json& given, const json& reference, const std::string& where) {
  if (!given.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!reference.contains(key)) throw ConfigError("config: unknown key '" + path + "'");
    if (reference.at(key).is_object()) reject_unknown(value, reference.at(key), path);
  }
}

RunConfig config_from(const json& j) {
  reject_unknown(j, config_json(RunConfig{}), "");
  RunConfig c;
  try {
    c.paths = j.value("paths", c.paths);
    c.synth = j.value("synth", c.synth);
    c.embedding = j.value("embedding", c.embedding);
    c.window = j.value("window", c.window);
    if (j.contains("sampling")) c.sampling = sampling_from(j.at("sampling"));
    if (j.contains("split")) c.split = split_from(j.at("split"));
    c.model = j.value("model", c.model);
    c.train = j.value("train", c.train);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (embedding.provider != "hashing" && embedding.provider != "external") {
    fail("embedding.provider must be hashing or external");
  }
  if (embedding.dim < 1) fail("embedding.dim must be >= 1");
  if (window < 1) fail("window must be >= 1");
  if (sampling.hops < 1) fail("sampling.hops must be >= 1");
  if (static_cast<int>(sampling.limits.size()) != sampling.hops) fail("sampling.limits needs one entry per hop");
  for (int k : sampling.limits) {
    if (k < 1) fail("sampling.limits entries must be >= 1");
  }
  if (split.delta < 1) fail("split.delta must be >= 1");
  if (!(split.train() < split.val() && split.val() < split.test_point)) {
    fail("split points must satisfy train < val < test");
  }
  if (model.gate != "vector" && model.gate != "scalar") fail("model.gate must be vector or scalar");
  if (model.orthogonal != "squared_cosine" && model.orthogonal != "elementwise") {
    fail("model.orthogonal must be squared_cosine or elementwise");
  }
  if (train.epochs < 1) fail("train.epochs must be >= 1");
  if (train.patience < 0) fail("train.patience must be >= 0");
  if (train.batch_size < 1) fail("train.batch_size must be >= 1");
  if (!(train.learning_rate > 0.0)) fail("train.learning_rate must be > 0");
  if (!(train.drop_fraction >= 0.0 && train.drop_fraction < 0.95)) fail("train.drop_fraction must lie in [0, 0.95)");
  try {
    encoder_config().validate();
    head_config().validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

encoder::EncoderConfig RunConfig::encoder_config() const {
  encoder::EncoderConfig e;
  e.input_dim = embedding.dim;
  e.hidden_dim = model.hidden_dim;
  e.layers = model.layers;
  e.lambda = model.lambda;
  e.xi = model.xi;
  e.heads = model.heads;
  e.temporal_layers = model.temporal_layers;
  e.temporal_heads = model.temporal_heads;
  e.window = window;
  e.share_snapshot_params = model.share_snapshot_params;
  e.softmax_over_c = model.softmax_over_c;
  e.gate = model.gate == "scalar" ? features::GateMode::kScalar : features::GateMode::kVector;
  e.snapshot_bins = model.snapshot_bins;
  return e;
}

disentangle::HeadConfig RunConfig::head_config() const {
  disentangle::HeadConfig h;
  h.hidden_dim = model.hidden_dim;
  h.bins = model.bins;
  h.alpha = model.alpha;
  h.tau = model.tau;
  h.single_head = model.single_head;
  h.orthogonal = model.orthogonal == "elementwise" ? disentangle::OrthogonalMode::kElementwise
                                                   : disentangle::OrthogonalMode::kSquaredCosine;
  return h;
}

std::string to_json_text(const RunConfig& c, int indent) { return config_json(c).dump(indent); }

RunConfig parse_config(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: not valid JSON");
  return config_from(j);
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const RunConfig& c, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write config " + file.string());
  out << to_json_text(c) << '\n';
}

void apply_override(RunConfig& c, const std::string& key, const std::string& value) {
  json j = config_json(c);
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("config: empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) {
      throw ConfigError("config: unknown section in '" + key + "'");
    }
    node = &(*node)[parts[i]];
  }
  if (!node->contains(parts.back())) throw ConfigError("config: unknown key '" + key + "'");
  (*node)[parts.back()] = v;
  c = config_from(j);
}

}  // namespace dppdcc::config
