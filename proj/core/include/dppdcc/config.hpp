#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dppdcc/disentangle.hpp"
#include "dppdcc/encoder.hpp"
#include "dppdcc/graph.hpp"
#include "dppdcc/splits.hpp"

namespace dppdcc::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PathsConfig {
  std::string corpus;      // JSONL records; empty when generating a synthetic corpus
  std::string network;     // network store directory
  std::string embeddings;  // embedding store directory
  std::string splits;      // sample TSV directory
  std::string output;      // checkpoints, history, reports
};

struct SynthConfig {
  std::size_t papers = 0;  // 0: read paths.corpus instead
  std::uint64_t seed = 7;
};

struct EmbeddingConfig {
  std::string provider = "hashing";
  int dim = 384;
  std::string artifact;  // for the external provider
};

struct ModelConfig {
  int hidden_dim = 64;
  int layers = 4;
  double lambda = 0.5;
  double xi = 0.0;
  int heads = 4;
  int temporal_layers = 4;
  int temporal_heads = 4;
  bool share_snapshot_params = false;
  bool softmax_over_c = false;
  std::string gate = "vector";  // vector | scalar
  std::vector<int> snapshot_bins{0, 1, 2, 3, 6};
  int bins = 5;
  double alpha = 0.5;
  double tau = 0.4;
  bool single_head = false;
  std::string orthogonal = "squared_cosine";  // squared_cosine | elementwise
};

struct TrainConfig {
  int epochs = 500;
  int patience = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  double clip_norm = 0.0;
  double drop_fraction = 0.1;
  std::uint64_t seed = 0;
  bool track_train_metric = true;
};

struct RunConfig {
  PathsConfig paths;
  SynthConfig synth;
  EmbeddingConfig embedding;
  int window = 5;  // snapshots T
  graph::SamplingOptions sampling;
  splits::SplitConfig split;
  ModelConfig model;
  TrainConfig train;

  // Throws ConfigError naming the offending field.
  void validate() const;
  encoder::EncoderConfig encoder_config() const;
  disentangle::HeadConfig head_config() const;
};

// Structured text is JSON with nested sections mirroring RunConfig. Unknown
// keys are rejected; missing keys keep their defaults.
std::string to_json_text(const RunConfig& c, int indent = 2);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& file);
void save_config(const RunConfig& c, const std::filesystem::path& file);

// Sets a dotted key, e.g. "train.learning_rate" = "1e-3". The value is parsed
// as JSON when possible and taken as a string otherwise.
void apply_override(RunConfig& c, const std::string& key, const std::string& value);

}  // namespace dppdcc::config
