#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dppdcc/composition.hpp"
#include "dppdcc/config.hpp"
#include "dppdcc/corpus.hpp"
#include "dppdcc/dataset.hpp"
#include "dppdcc/features.hpp"
#include "dppdcc/graph.hpp"
#include "dppdcc/splits.hpp"
#include "dppdcc/trainer.hpp"

namespace fs = std::filesystem;
using namespace dppdcc;

namespace {

std::vector<int> parse_limits(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stoi(part));
  return out;
}

config::RunConfig resolve_config(const std::string& file, const std::vector<std::string>& sets) {
  config::RunConfig c = file.empty() ? config::RunConfig{} : config::load_config(file);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw config::ConfigError("--set expects key=value, got '" + kv + "'");
    config::apply_override(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

splits::SplitSet resolve_splits(const config::RunConfig& c, const corpus::GlobalCitationNetwork& net) {
  if (!c.paths.splits.empty() && fs::exists(fs::path(c.paths.splits) / "train.tsv")) {
    return splits::load_splits(c.paths.splits, net);
  }
  auto s = splits::make_splits(net, c.split);
  if (!c.paths.splits.empty()) splits::save_splits(s, net, c.paths.splits);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Citation increment prediction with dynamic heterogeneous graphs and disentangled heads"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus as JSON lines");
  std::size_t synth_papers = 1000;
  std::uint64_t synth_seed = 7;
  std::string synth_out;
  synth->add_option("--papers,--n", synth_papers, "Number of papers")->default_val(1000);
  synth->add_option("--seed", synth_seed, "Generator seed")->default_val(7);
  synth->add_option("--out", synth_out, "Output JSONL file")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a network store from a JSONL corpus");
  std::string ingest_corpus, ingest_out;
  bool ingest_strict = false;
  ingest->add_option("--corpus,--input", ingest_corpus, "JSONL records")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Store directory")->required();
  ingest->add_flag("--strict", ingest_strict, "Abort on the first malformed record");

  // embed
  auto* embed = app.add_subcommand("embed", "Compute paper text vectors");
  std::string embed_network, embed_provider = "hashing", embed_artifact, embed_out;
  int embed_dim = 384;
  embed->add_option("--network", embed_network, "Network store")->required();
  embed->add_option("--provider", embed_provider, "hashing | external")->default_val("hashing");
  embed->add_option("--dim", embed_dim, "Vector dimension")->default_val(384);
  embed->add_option("--artifact", embed_artifact, "JSONL {text, vector} for the external provider");
  embed->add_option("--out", embed_out, "Embedding store directory")->required();

  // split
  auto* split = app.add_subcommand("split", "Create train/val/test samples");
  std::string split_network, split_out;
  splits::SplitConfig split_cfg;
  int split_train = 0, split_val = 0;
  split->add_option("--network", split_network, "Network store")->required();
  split->add_option("--test-point", split_cfg.test_point, "Test observation point")->required();
  auto* opt_train = split->add_option("--train-point", split_train, "Train observation point (default test-5)");
  auto* opt_val = split->add_option("--val-point", split_val, "Validation observation point (default test-3)");
  split->add_option("--delta", split_cfg.delta, "Prediction interval")->default_val(5);
  split->add_option("--n-test", split_cfg.n_test, "Test sample size")->default_val(300000);
  split->add_option("--max-train", split_cfg.max_train, "Cap on training samples (0: all)")->default_val(0);
  split->add_option("--max-val", split_cfg.max_val, "Cap on validation samples (0: all)")->default_val(0);
  split->add_option("--seed", split_cfg.seed, "Sampling seed")->default_val(0);
  split->add_option("--out", split_out, "Sample directory")->required();

  // build-graphs
  auto* build = app.add_subcommand("build-graphs", "Build dynamic heterogeneous graphs for a split");
  std::string build_network, build_splits, build_which = "test", build_targets, build_out, build_limits = "100,20";
  int build_window = 5, build_hops = 2, build_obs = 0;
  build->add_option("--network", build_network, "Network store")->required();
  auto* opt_splits = build->add_option("--splits", build_splits, "Sample directory");
  build->add_option("--split", build_which, "train | val | test")->default_val("test");
  auto* opt_targets = build->add_option("--targets", build_targets, "File with one paper id per line");
  auto* opt_obs = build->add_option("--obs", build_obs, "Observation point for --targets");
  opt_targets->excludes(opt_splits)->needs(opt_obs);
  build->add_option("--window,--T", build_window, "Snapshots per graph")->default_val(5);
  build->add_option("--hops,--k", build_hops, "Sampling depth")->default_val(2);
  build->add_option("--limits,--K", build_limits, "Neighbours kept per hop, comma separated")->default_val("100,20");
  build->add_option("--out", build_out, "Graph directory")->required();

  // train
  auto* trn = app.add_subcommand("train", "Train a model");
  std::string train_config, train_out;
  std::vector<std::string> train_sets;
  trn->add_option("--config", train_config, "JSON run config");
  trn->add_option("--set", train_sets, "Override a config key, e.g. train.epochs=50");
  trn->add_option("--out", train_out, "Output directory (overrides paths.output)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_checkpoint, eval_split = "test", eval_out;
  std::vector<std::string> eval_sets;
  ev->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", eval_split, "train | val | test")->default_val("test");
  ev->add_option("--set", eval_sets, "Override a config key of the checkpoint");
  ev->add_option("--out", eval_out, "Report JSON path")->required();

  // encode
  auto* enc = app.add_subcommand("encode", "Write target representations for stored graphs");
  std::string enc_checkpoint, enc_graphs, enc_out;
  enc->add_option("--checkpoint", enc_checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  enc->add_option("--graphs", enc_graphs, "Graph directory")->required();
  enc->add_option("--out", enc_out, "Output TSV")->required();

  // report
  auto* rep = app.add_subcommand("report", "Composition tables from exported breakdowns");
  std::string rep_in, rep_out;
  int rep_bins = 5;
  rep->add_option("--breakdowns", rep_in, "breakdowns.csv")->required()->check(CLI::ExistingFile);
  rep->add_option("--bins", rep_bins, "Predicted-value bins")->default_val(5);
  rep->add_option("--out", rep_out, "Output directory")->required();

  // config
  auto* cfg = app.add_subcommand("config", "Print the resolved run config");
  std::string cfg_file;
  std::vector<std::string> cfg_sets;
  cfg->add_option("--config", cfg_file, "JSON run config");
  cfg->add_option("--set", cfg_sets, "Override a config key");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      auto corpus = corpus::synth_corpus(synth_papers, synth_seed);
      std::ofstream out(synth_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + synth_out);
      corpus::write_records(out, corpus.records);
      std::cout << "wrote " << corpus.records.size() << " records to " << synth_out << "\n";
    } else if (*ingest) {
      std::ifstream in(ingest_corpus, std::ios::binary);
      corpus::IngestOptions opts;
      opts.strict = ingest_strict;
      auto net = corpus::ingest_corpus(in, opts);
      corpus::save_network(net, ingest_out);
      const auto& st = net.stats();
      std::cout << "papers " << net.paper_count() << ", authors " << net.author_count() << ", venues "
                << net.venue_count() << ", cites " << net.cites_edge_count() << "\n"
                << "read " << st.records_read << ", malformed " << st.malformed << ", missing venue "
                << st.excluded_missing_venue << ", dangling refs " << st.dangling_references << ", self citations "
                << st.self_citations << ", duplicate refs " << st.duplicate_references << "\n";
      for (const auto& e : st.errors) std::cerr << "line " << e.line << ": " << e.message << "\n";
    } else if (*embed) {
      auto net = corpus::load_network(embed_network);
      auto provider = features::make_provider(embed_provider, static_cast<std::size_t>(embed_dim), embed_artifact);
      auto vectors = features::embed_papers(*provider, net);
      features::save_paper_vectors(embed_out, net, vectors);
      std::cout << "embedded " << vectors.rows() << " papers, dimension " << vectors.cols() << "\n";
    } else if (*split) {
      auto net = corpus::load_network(split_network);
      if (*opt_train) split_cfg.train_point = split_train;
      if (*opt_val) split_cfg.val_point = split_val;
      auto s = splits::make_splits(net, split_cfg);
      splits::save_splits(s, net, split_out);
      std::size_t counts[3] = {0, 0, 0};
      for (const auto& x : s.test) ++counts[static_cast<int>(x.category)];
      std::cout << "train " << s.train.size() << ", val " << s.val.size() << ", test " << s.test.size()
                << " (previous " << counts[0] << ", fresh " << counts[1] << ", immediate " << counts[2] << ")\n";
    } else if (*build) {
      auto net = corpus::load_network(build_network);
      std::vector<splits::SampleSpec> samples;
      if (*opt_targets) {
        std::ifstream in(build_targets);
        if (!in) throw std::runtime_error("cannot read " + build_targets);
        std::string id;
        while (std::getline(in, id)) {
          if (id.empty()) continue;
          splits::SampleSpec s;
          s.target = net.index_of(id);
          s.observation_point = build_obs;
          samples.push_back(s);
        }
      } else if (*opt_splits) {
        samples = splits::read_samples(fs::path(build_splits) / (build_which + ".tsv"), net);
      } else {
        throw std::invalid_argument("build-graphs needs --splits or --targets");
      }
      graph::SamplingOptions opts;
      opts.hops = build_hops;
      opts.limits = parse_limits(build_limits);
      std::vector<graph::DynamicHeteroGraph> graphs;
      graphs.reserve(samples.size());
      for (const auto& s : samples) {
        graphs.push_back(graph::build_dynamic_graph(net, s.target, s.observation_point, build_window, opts));
      }
      graph::save_graphs(graphs, net, build_out);
      std::cout << "wrote " << graphs.size() << " graphs\n";
    } else if (*trn) {
      auto c = resolve_config(train_config, train_sets);
      if (!train_out.empty()) c.paths.output = train_out;
      if (c.paths.output.empty()) c.paths.output = "run";
      fs::create_directories(c.paths.output);
      config::save_config(c, fs::path(c.paths.output) / "config.json");
      auto ws = pipeline::open_workspace(c);
      auto s = resolve_splits(c, *ws.net);
      auto d = pipeline::build_dataset(ws, s, c);
      for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "train " << d.train.size() << ", val " << d.val.size() << ", test " << d.test.size() << "\n";
      pipeline::Model model(c);
      std::cout << "parameters " << model.params().scalar_count() << "\n";
      pipeline::TrainOptions opts;
      opts.log = &std::cout;
      opts.dump_dir = c.paths.output;
      auto result = pipeline::train(model, d, ws, opts);
      pipeline::write_history(fs::path(c.paths.output) / "history.csv", result.history);
      pipeline::save_checkpoint(fs::path(c.paths.output) / "checkpoint.json", model, d.edges);
      std::cout << "best epoch " << result.best_epoch << ", validation MALE " << result.best_val_male << "\n";
      if (!d.test.empty()) {
        auto report = pipeline::evaluate(model, d.test, ws);
        pipeline::write_report(report, fs::path(c.paths.output) / "report.json");
        std::cout << pipeline::report_json(report) << "\n";
      }
    } else if (*ev) {
      auto ck = pipeline::read_checkpoint(eval_checkpoint);
      for (const auto& kv : eval_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw config::ConfigError("--set expects key=value");
        config::apply_override(ck.config, kv.substr(0, eq), kv.substr(eq + 1));
      }
      auto ws = pipeline::open_workspace(ck.config);
      auto s = resolve_splits(ck.config, *ws.net);
      const auto& which = eval_split == "train" ? s.train : eval_split == "val" ? s.val : s.test;
      if (eval_split != "train" && eval_split != "val" && eval_split != "test") {
        throw std::invalid_argument("--split must be train, val or test");
      }
      auto samples = pipeline::build_samples(ws, which, ck.config.window, ck.config.sampling);
      pipeline::Model model(ck.config, ck.params);
      auto report = pipeline::evaluate(model, samples, ws);
      pipeline::write_report(report, eval_out);
      std::cout << pipeline::report_json(report) << "\n";
    } else if (*enc) {
      auto ck = pipeline::read_checkpoint(enc_checkpoint);
      auto ws = pipeline::open_workspace(ck.config);
      pipeline::Model model(ck.config, ck.params);
      auto graphs = graph::load_graphs(enc_graphs, *ws.net);
      std::ofstream out(enc_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + enc_out);
      out.precision(17);
      for (const auto& g : graphs) {
        ad::Tape tape;
        nn::Binder b(tape, model.params());
        auto o = model.encoder().encode(b, encoder::prepare_inputs(g, *ws.table, *ws.net)).value();
        out << ws.net->paper(g.target).paper_id << '\t' << g.observation_point;
        for (ad::Index k = 0; k < o.cols(); ++k) out << '\t' << o(0, k);
        out << '\n';
      }
      std::cout << "encoded " << graphs.size() << " graphs\n";
    } else if (*rep) {
      auto rows = composition::read_breakdowns(rep_in);
      auto tables = composition::report_composition(rows, rep_bins);
      composition::write_tables(tables, rep_out);
      std::cout << "positive " << tables.positive << ", negative " << tables.negative.negative << "\n";
    } else if (*cfg) {
      std::cout << config::to_json_text(resolve_config(cfg_file, cfg_sets)) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
