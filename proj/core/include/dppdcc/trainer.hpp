#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dppdcc/composition.hpp"
#include "dppdcc/config.hpp"
#include "dppdcc/dataset.hpp"
#include "dppdcc/disentangle.hpp"
#include "dppdcc/encoder.hpp"
#include "dppdcc/nn.hpp"

namespace dppdcc::pipeline {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Model {
 public:
  // Fresh parameters seeded from c.train.seed.
  explicit Model(config::RunConfig c);
  // Parameters taken from `params`; names and shapes must match.
  Model(config::RunConfig c, const nn::ParameterStore& params);

  const config::RunConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const encoder::Encoder& encoder() const { return encoder_; }
  const disentangle::PerspectiveHeads& heads() const { return heads_; }

  struct Forward {
    ad::Var o;
    disentangle::PerspectiveOutput out;
  };
  Forward forward(nn::Binder& b, const encoder::GraphInputs& inputs) const;
  disentangle::PredictionBreakdown predict(const encoder::GraphInputs& inputs) const;

 private:
  config::RunConfig config_;
  nn::ParameterStore store_;
  nn::Rng rng_;
  encoder::Encoder encoder_;
  disentangle::PerspectiveHeads heads_;
};

// Builds the full objective for one sample on b's tape. Augmented views are
// drawn from `augment_seed` when the auxiliary losses are active.
disentangle::LossComponents sample_loss(nn::Binder& b, const Model& m, const Sample& s, const Workspace& ws,
                                        std::uint64_t augment_seed);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0, reg = 0.0, dif = 0.0, con = 0.0, ort = 0.0;  // means over training samples
  std::optional<double> train_male;
  std::optional<double> val_male;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_male = 0.0;
  std::optional<double> min_train_male;
};

struct TrainOptions {
  std::ostream* log = nullptr;
  // Receives nonfinite_dump.json when a loss turns non-finite.
  std::filesystem::path dump_dir = ".";
  // Stop once training MALE falls below this value.
  std::optional<double> stop_below_train_male;
};

// Adam over shuffled mini-batches; keeps the parameters of the epoch with the
// best validation MALE (training MALE when there is no validation data).
// On return `m` holds those parameters.
TrainResult train(Model& m, const Dataset& d, const Workspace& ws, const TrainOptions& options = {});

void write_history(const std::filesystem::path& file, const std::vector<EpochRecord>& history);

// Checkpoint: JSON {format, version, config, bin_edges, params}.
void save_checkpoint(const std::filesystem::path& file, const Model& m, const disentangle::BinEdges& edges);
struct Checkpoint {
  config::RunConfig config;
  nn::ParameterStore params;
  disentangle::BinEdges edges;
};
Checkpoint read_checkpoint(const std::filesystem::path& file);

// ---- evaluation ----

std::vector<composition::BreakdownRow> predict_samples(const Model& m, std::span<const Sample> samples,
                                                       const Workspace& ws);

struct CategoryMetrics {
  std::string name;  // total, previous, fresh, immediate
  std::size_t n = 0;
  std::optional<double> male;
  std::optional<double> log_r2;
  std::string note;
};

struct EvalReport {
  std::vector<CategoryMetrics> rows;
  std::vector<composition::BreakdownRow> breakdowns;
  composition::CompositionTables composition;
  const CategoryMetrics& row(const std::string& name) const;
};

// Metrics and composition tables from exported predictions.
EvalReport score(std::vector<composition::BreakdownRow> rows, int value_bins = 5);
EvalReport evaluate(const Model& m, std::span<const Sample> samples, const Workspace& ws, int value_bins = 5);

std::string report_json(const EvalReport& r);
// report.json at `file`; breakdowns.csv and composition tables beside it.
void write_report(const EvalReport& r, const std::filesystem::path& file);

}  // namespace dppdcc::pipeline
