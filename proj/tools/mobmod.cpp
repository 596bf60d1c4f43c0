#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mobmod/apps/apps.hpp"
#include "mobmod/baselines/baselines.hpp"
#include "mobmod/common/time.hpp"
#include "mobmod/ingest/ingest.hpp"
#include "mobmod/model/transformer.hpp"
#include "mobmod/sim/campus.hpp"
#include "mobmod/train/training.hpp"
#include "mobmod/trajectory/builder.hpp"

namespace fs = std::filesystem;
using namespace mobmod;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  open_out(path) << j.dump(2) << '\n';
}

model::Vocabulary vocab_for(const fs::path& trajectories, const std::string& explicit_path) {
  const fs::path p = explicit_path.empty() ? model::vocab_sidecar_path(trajectories) : fs::path(explicit_path);
  if (!fs::exists(p)) throw std::runtime_error("vocabulary not found: " + p.string());
  return model::Vocabulary::load(p);
}

void write_with_sidecar(const std::vector<trajectory::MultiScaleTrajectory>& ts,
                        const model::Vocabulary& vocab, const fs::path& out) {
  auto f = open_out(out);
  trajectory::write_trajectories(ts, f);
  vocab.save(model::vocab_sidecar_path(out));
}

// A loaded checkpoint of any kind.
struct AnyModel {
  std::string kind;
  model::Vocabulary vocab;
  std::optional<model::ModelParams> transformer;
  std::optional<baselines::NgramModel> ngram;
  std::optional<baselines::HmmModel> hmm;
};

AnyModel load_model(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("model not found: " + path.string());
  const auto j = model::load_json(path);
  AnyModel m;
  m.kind = model::checkpoint_kind(j);
  if (m.kind == "transformer" || m.kind == "simple") {
    m.transformer = model::transformer_from_checkpoint(j, &m.vocab);
  } else if (m.kind == "ngram") {
    m.ngram = baselines::ngram_from_checkpoint(j, &m.vocab);
  } else if (m.kind == "hmm") {
    m.hmm = baselines::hmm_from_checkpoint(j, &m.vocab);
  } else {
    throw model::CheckpointError("unknown checkpoint kind '" + m.kind + "'");
  }
  return m;
}

std::vector<baselines::Sequence> location_streams(const std::vector<model::TokenSeqs>& data,
                                                  const model::Vocabulary& vocab) {
  std::vector<baselines::Sequence> out;
  for (const auto& seq : data) out.push_back(baselines::location_stream(seq, vocab));
  return out;
}

void print_epoch(const train::EpochRecord& r) {
  std::cerr << "epoch " << r.epoch << " train_loss " << r.train_loss << " dev_loss " << r.dev_loss
            << '\n';
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string logs, ap_map, kinds, out, salt_env = "MOBMOD_SALT";
  int year = 2019;
  std::int64_t window = 300;
};

int run_ingest(const IngestArgs& a) {
  ingest::IngestOptions options;
  options.year = a.year;
  options.merge.window = a.window;
  if (const char* salt = std::getenv(a.salt_env.c_str())) options.salt = salt;
  if (!a.kinds.empty()) options.kinds = ingest::EventKindMap::load_csv(a.kinds);
  ingest::IngestReport report;
  const auto events = ingest::ingest_directory(a.logs, options, &report);
  std::size_t unknown_ap = 0;
  if (!a.ap_map.empty()) {
    const auto map = ingest::load_ap_map(a.ap_map);
    for (const auto& e : events) unknown_ap += !e.ap.empty() && !map.count(e.ap);
  }
  auto out = open_out(a.out);
  ingest::write_events_jsonl(events, out);
  std::cerr << "lines " << report.parse.lines << " events " << report.merge.output_events
            << " malformed " << report.parse.malformed << " non_presence "
            << report.parse.non_presence << " unknown_id " << report.parse.unknown_id
            << " duplicates " << report.merge.duplicates << " late_drops "
            << report.merge.late_drops;
  if (!a.ap_map.empty()) std::cerr << " unknown_ap " << unknown_ap;
  std::cerr << '\n';
  return 0;
}

struct BuildArgs {
  std::string events, ap_map, out;
  int granularity = 60;
};

int run_build(const BuildArgs& a) {
  const auto map = ingest::load_ap_map(a.ap_map);
  trajectory::BuildConfig config;
  config.granularity = a.granularity;
  const auto result = trajectory::build_trajectories(ingest::read_events_jsonl(fs::path(a.events)),
                                                     map, config);
  write_with_sidecar(result.trajectories, model::Vocabulary::from_ap_map(map), a.out);
  const auto& s = result.stats;
  std::cerr << "users " << s.users << " excluded " << s.excluded_users << " trajectories "
            << s.trajectories << " dwell_visits " << s.dwell_visits << " unknown_ap "
            << s.unknown_ap << " orphan_disassoc " << s.sessions.orphan_disassoc << '\n';
  return 0;
}

struct SimArgs {
  std::string config, noise, out;
  int days = 14;
  std::optional<std::uint64_t> seed;
};

int run_simulate_campus(const SimArgs& a) {
  auto config = sim::load_campus_config(a.config);
  if (a.seed) config.seed = *a.seed;
  const auto campus = sim::generate_campus(config);
  const auto population = sim::generate_days(campus, config.grammar, a.days, config.seed);
  const auto files = sim::emit_syslog(campus, population, sim::parse_noise(a.noise), config.seed);
  sim::write_simulation(a.out, campus, population, files);
  std::cerr << "agents " << population.agents.size() << " zones " << campus.zones.size()
            << " controllers " << files.lines.size() << '\n';
  return 0;
}

struct TrainArgs {
  std::string train, dev, vocab, out, loss_csv, split_out, type = "transformer";
  int layers = 4, heads = 4, d_model = 64, d_ff = 256, n_max = 96;
  int epochs = 15, order = 4, states = 32, iterations = 50;
  std::size_t batch = 100;
  double lr = 0.01, clip = 0.0;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a) {
  const auto vocab = vocab_for(a.train, a.vocab);
  auto train_days = trajectory::read_trajectories(fs::path(a.train));
  std::vector<trajectory::MultiScaleTrajectory> dev_days;
  if (!a.split_out.empty()) {
    auto splits = train::make_splits(train_days);
    write_with_sidecar(splits.train, vocab, fs::path(a.split_out) / "train.jsonl");
    write_with_sidecar(splits.dev, vocab, fs::path(a.split_out) / "dev.jsonl");
    write_with_sidecar(splits.test, vocab, fs::path(a.split_out) / "test.jsonl");
    if (!splits.excluded_users.empty()) {
      std::cerr << "excluded " << splits.excluded_users.size() << " users with fewer than "
                << train::kMinUserDays << " days\n";
    }
    train_days = std::move(splits.train);
    dev_days = std::move(splits.dev);
  }
  if (!a.dev.empty()) dev_days = trajectory::read_trajectories(fs::path(a.dev));
  const auto train_seqs = train::tokenize_all(train_days, vocab);
  const auto dev_seqs = train::tokenize_all(dev_days, vocab);

  if (a.type == "ngram") {
    const auto m = baselines::NgramModel::fit(location_streams(train_seqs, vocab), a.order);
    model::save_json(baselines::ngram_checkpoint(m, vocab), a.out);
    return 0;
  }
  if (a.type == "hmm") {
    baselines::HmmFitOptions options{a.states, a.iterations, a.seed};
    std::vector<double> trace;
    const auto m = baselines::HmmModel::fit(location_streams(train_seqs, vocab),
                                            baselines::location_vocab_size(vocab), options, &trace);
    if (!trace.empty()) std::cerr << "final log-likelihood " << trace.back() << '\n';
    model::save_json(baselines::hmm_checkpoint(m, vocab), a.out);
    return 0;
  }
  if (a.type != "transformer" && a.type != "simple") {
    throw CLI::ValidationError("--type", "unknown model type '" + a.type + "'");
  }
  model::ModelConfig config;
  config.layers = a.layers;
  config.heads = a.heads;
  config.d_model = a.d_model;
  config.d_ff = a.d_ff;
  config.n_max = a.n_max;
  config.vocab_size = vocab.size();
  if (a.type == "simple") config = model::simple_transformer_config(config);
  config.validate();
  train::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.adam.learning_rate = a.lr;
  tc.seed = a.seed;
  tc.clip_norm = a.clip;
  const auto result = train::train(model::ModelParams::init(config, a.seed), train_seqs, dev_seqs,
                                   tc, print_epoch);
  std::cerr << "best epoch " << result.best_epoch << '\n';
  model::save_json(model::transformer_checkpoint(result.params, vocab), a.out);
  if (!a.loss_csv.empty()) train::write_loss_csv(result.curve, fs::path(a.loss_csv));
  return 0;
}

struct FinetuneArgs {
  std::string model, data, user, out, loss_csv;
  int epochs = 3;
  double lr = 0.001;
  std::uint64_t seed = 0;
};

int run_finetune(const FinetuneArgs& a) {
  const auto m = load_model(a.model);
  if (!m.transformer) throw std::runtime_error("finetune needs a transformer checkpoint");
  std::vector<trajectory::MultiScaleTrajectory> days;
  for (auto& t : trajectory::read_trajectories(fs::path(a.data))) {
    if (t.user == a.user) days.push_back(std::move(t));
  }
  if (days.empty()) throw train::InsufficientData("no days for user " + a.user);
  const auto splits = train::make_splits(days);
  if (splits.train.empty()) throw train::InsufficientData("user " + a.user + " has too few days");
  train::FineTuneConfig config;
  config.epochs = a.epochs;
  config.learning_rate = a.lr;
  config.seed = a.seed;
  const auto result = train::fine_tune(*m.transformer, train::tokenize_all(splits.train, m.vocab),
                                       train::tokenize_all(splits.dev, m.vocab), config);
  for (const auto& r : result.curve) print_epoch(r);
  model::save_json(model::transformer_checkpoint(result.params, m.vocab), a.out);
  if (!a.loss_csv.empty()) train::write_loss_csv(result.curve, fs::path(a.loss_csv));
  return 0;
}

struct EvalArgs {
  std::string model, test, mode = "next-step", out;
};

int run_eval(const EvalArgs& a) {
  const auto m = load_model(a.model);
  const auto mode = train::eval_mode_from_string(a.mode);
  const auto test = train::tokenize_all(trajectory::read_trajectories(fs::path(a.test)), m.vocab);
  train::EvalReport report;
  if (m.transformer) {
    report = train::evaluate(*m.transformer, m.vocab, test, mode);
  } else if (m.ngram) {
    report = train::evaluate_baseline(std::to_string(m.ngram->order()) + "-gram",
                                      [&](const auto& h) { return m.ngram->predict(h); }, m.vocab,
                                      test, mode);
  } else {
    report = train::evaluate_baseline("hmm", [&](const auto& h) { return m.hmm->predict(h); },
                                      m.vocab, test, mode);
  }
  write_json_file(report.to_json(), a.out);
  return 0;
}

struct PredictArgs {
  std::string model, user_models, user, prefix, day, until, out;
  int top = 5;
};

int run_predict(const PredictArgs& a) {
  fs::path model_path = a.model;
  if (model_path.empty()) {
    if (a.user_models.empty() || a.user.empty()) {
      throw CLI::ValidationError("--model", "give --model or both --user-models and --user");
    }
    model_path = fs::path(a.user_models) / (a.user + ".ckpt");
    if (!fs::exists(model_path)) {
      throw apps::MissingUserModel("no fine-tuned model for user " + a.user + " at " +
                                   model_path.string());
    }
  }
  const auto m = load_model(model_path);
  if (!m.transformer) throw std::runtime_error("predict needs a transformer checkpoint");
  const auto days = trajectory::read_trajectories(fs::path(a.prefix));
  const trajectory::MultiScaleTrajectory* day = nullptr;
  for (const auto& t : days) {
    if ((a.user.empty() || t.user == a.user) && (a.day.empty() || format_date(t.day) == a.day)) {
      day = &t;
      break;
    }
  }
  if (!day) throw std::runtime_error("no matching day in " + a.prefix);
  const auto full = model::tokenize(*day, m.vocab);
  std::size_t length = full[0].size();
  if (!a.until.empty()) {
    const auto minutes = parse_clock_minutes(a.until);
    if (!minutes) throw CLI::ValidationError("--until", "expected HH:MM");
    length = static_cast<std::size_t>(*minutes / day->granularity);
  }
  if (length == 0 || length >= full[0].size()) {
    throw CLI::ValidationError("--until", "prefix must cover at least one bin and leave one to predict");
  }
  model::TokenSeqs prefix;
  for (std::size_t s = 0; s < trajectory::kScaleCount; ++s) {
    prefix[s].assign(full[s].begin(), full[s].begin() + static_cast<std::ptrdiff_t>(length));
  }
  const auto prediction = apps::assistant_next(*m.transformer, m.vocab, prefix, day->granularity, a.top);
  auto j = prediction.to_json();
  j["user"] = day->user;
  j["date"] = format_date(day->day);
  j["next_bin"] = format_clock(static_cast<std::int64_t>(length) * day->granularity * 60).substr(0, 5);
  write_json_file(j, a.out);
  return 0;
}

struct OccupancyArgs {
  std::string input, out, json;
  std::vector<std::string> zones;
  std::int64_t scale = 1;
};

int run_occupancy(const OccupancyArgs& a) {
  const auto grid = apps::aggregate_occupancy(trajectory::read_trajectories(fs::path(a.input)),
                                              a.zones, a.scale);
  if (a.out.empty() || a.out == "-") {
    apps::write_occupancy_csv(grid, std::cout);
  } else {
    auto out = open_out(a.out);
    apps::write_occupancy_csv(grid, out);
  }
  if (!a.json.empty()) write_json_file(grid.to_json(), a.json);
  return 0;
}

struct TracesArgs {
  std::string model, seed_days, out;
  std::size_t population = 0;
  int k = 5;
  std::uint64_t seed = 0;
};

int run_simulate_traces(const TracesArgs& a) {
  const auto m = load_model(a.model);
  if (!m.transformer) throw std::runtime_error("simulate-traces needs a transformer checkpoint");
  const auto seeds = trajectory::read_trajectories(fs::path(a.seed_days));
  const std::size_t population = a.population == 0 ? seeds.size() : a.population;
  const auto traces = apps::simulate_traces(*m.transformer, m.vocab, seeds, population, a.k, a.seed);
  write_with_sidecar(traces, m.vocab, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiFi mobility modeling toolkit", "mobmod"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Parse controller syslogs into presence events");
  ingest->add_option("--logs", ingest_args.logs, "Directory of syslog files")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--ap-map", ingest_args.ap_map, "AP map CSV, used to count unknown APs")->check(CLI::ExistingFile);
  ingest->add_option("--year", ingest_args.year, "Year of the log timestamps");
  ingest->add_option("--salt-env", ingest_args.salt_env, "Environment variable holding the anonymization salt");
  ingest->add_option("--kinds", ingest_args.kinds, "Event-kind map CSV")->check(CLI::ExistingFile);
  ingest->add_option("--window", ingest_args.window, "Reorder window in seconds");
  ingest->add_option("--out", ingest_args.out, "Output events JSON-lines")->required();

  BuildArgs build_args;
  auto* build = app.add_subcommand("build", "Build multi-scale day trajectories from events");
  build->add_option("--events", build_args.events, "Events JSON-lines")->required()->check(CLI::ExistingFile);
  build->add_option("--ap-map", build_args.ap_map, "AP map CSV")->required()->check(CLI::ExistingFile);
  build->add_option("--granularity", build_args.granularity, "Bin size in minutes")->check(CLI::IsMember({15, 30, 60}));
  build->add_option("--out", build_args.out, "Output trajectories JSON-lines")->required();

  SimArgs sim_args;
  auto* simulate = app.add_subcommand("simulate-campus", "Generate a synthetic campus with syslogs and ground truth");
  simulate->add_option("--config", sim_args.config, "Campus config JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--days", sim_args.days, "Days to simulate")->check(CLI::PositiveNumber);
  simulate->add_option("--noise", sim_args.noise, "Noise, e.g. dup=0.05,drop=0.05,reorder=0.02");
  simulate->add_option("--seed", sim_args.seed, "Override the config seed");
  simulate->add_option("--out", sim_args.out, "Output directory")->required();

  TrainArgs train_args;
  auto* trainer = app.add_subcommand("train", "Train a transformer or a baseline");
  trainer->add_option("--train", train_args.train, "Training trajectories")->required()->check(CLI::ExistingFile);
  trainer->add_option("--dev", train_args.dev, "Dev trajectories")->check(CLI::ExistingFile);
  trainer->add_option("--vocab", train_args.vocab, "Vocabulary (default: sidecar of --train)");
  trainer->add_option("--split-out", train_args.split_out, "Split --train per user into DIR/{train,dev,test}.jsonl first");
  trainer->add_option("--type", train_args.type, "transformer, simple, ngram or hmm")
      ->check(CLI::IsMember({"transformer", "simple", "ngram", "hmm"}));
  trainer->add_option("--layers", train_args.layers);
  trainer->add_option("--heads", train_args.heads);
  trainer->add_option("--d-model", train_args.d_model);
  trainer->add_option("--d-ff", train_args.d_ff);
  trainer->add_option("--n-max", train_args.n_max);
  trainer->add_option("--epochs", train_args.epochs);
  trainer->add_option("--batch", train_args.batch);
  trainer->add_option("--lr", train_args.lr);
  trainer->add_option("--clip", train_args.clip, "Gradient-norm clip, 0 disables");
  trainer->add_option("--order", train_args.order, "n-gram order")->check(CLI::Range(2, 4));
  trainer->add_option("--states", train_args.states, "HMM states");
  trainer->add_option("--iterations", train_args.iterations, "Baum-Welch iterations");
  trainer->add_option("--seed", train_args.seed);
  trainer->add_option("--loss-csv", train_args.loss_csv, "Write epoch,train_loss,dev_loss");
  trainer->add_option("--out", train_args.out, "Output checkpoint")->required();

  FinetuneArgs ft_args;
  auto* finetune = app.add_subcommand("finetune", "Fine-tune a global model on one user");
  finetune->add_option("--model", ft_args.model, "Global checkpoint")->required();
  finetune->add_option("--data", ft_args.data, "Trajectories containing the user's days")->required()->check(CLI::ExistingFile);
  finetune->add_option("--user", ft_args.user, "User id")->required();
  finetune->add_option("--epochs", ft_args.epochs);
  finetune->add_option("--lr", ft_args.lr);
  finetune->add_option("--seed", ft_args.seed);
  finetune->add_option("--loss-csv", ft_args.loss_csv);
  finetune->add_option("--out", ft_args.out, "Output checkpoint")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on test trajectories");
  eval->add_option("--model", eval_args.model, "Checkpoint")->required();
  eval->add_option("--test", eval_args.test, "Test trajectories")->required()->check(CLI::ExistingFile);
  eval->add_option("--mode", eval_args.mode, "next-step or rollout")->check(CLI::IsMember({"next-step", "rollout"}));
  eval->add_option("--out", eval_args.out, "Report JSON (default stdout)");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Rank the next (c, s, b, l) for a day prefix");
  predict->add_option("--model", predict_args.model, "Checkpoint");
  predict->add_option("--user-models", predict_args.user_models, "Directory of <user>.ckpt files");
  predict->add_option("--user", predict_args.user, "User id");
  predict->add_option("--prefix", predict_args.prefix, "Trajectories holding the day")->required()->check(CLI::ExistingFile);
  predict->add_option("--day", predict_args.day, "Date YYYY-MM-DD (default: first matching)");
  predict->add_option("--until", predict_args.until, "Prefix end HH:MM (default: all but the last bin)");
  predict->add_option("--top", predict_args.top)->check(CLI::PositiveNumber);
  predict->add_option("--out", predict_args.out, "Output JSON (default stdout)");

  OccupancyArgs occ_args;
  auto* occupancy = app.add_subcommand("occupancy", "Aggregate trajectories into zone occupancy");
  occupancy->add_option("--input", occ_args.input, "Trajectories")->required()->check(CLI::ExistingFile);
  occupancy->add_option("--zones", occ_args.zones, "Zones to report (default: all seen)");
  occupancy->add_option("--scale", occ_args.scale, "Multiplier for sampled populations")->check(CLI::PositiveNumber);
  occupancy->add_option("--out", occ_args.out, "CSV output (default stdout)");
  occupancy->add_option("--json", occ_args.json, "Also write the grid as JSON");

  TracesArgs traces_args;
  auto* traces = app.add_subcommand("simulate-traces", "Generate synthetic trajectories with a trained model");
  traces->add_option("--model", traces_args.model, "Checkpoint")->required();
  traces->add_option("--seed-days", traces_args.seed_days, "Days whose first bin seeds each rollout")->required()->check(CLI::ExistingFile);
  traces->add_option("--population", traces_args.population, "Number of synthetic days (default: all seed days)");
  traces->add_option("--k", traces_args.k, "Top-k sampling width")->check(CLI::PositiveNumber);
  traces->add_option("--seed", traces_args.seed);
  traces->add_option("--out", traces_args.out, "Output trajectories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto selected = app.get_subcommands();
    if (selected.empty() && argc > 1 && argv[1][0] != '-') {
      std::cerr << "mobmod: unknown subcommand '" << argv[1] << "'\n\n";
    } else {
      std::cerr << "mobmod: " << e.what() << "\n\n";
    }
    std::cerr << (selected.empty() ? app.help() : selected.front()->help());
    return 2;
  }

  try {
    if (*ingest) return run_ingest(ingest_args);
    if (*build) return run_build(build_args);
    if (*simulate) return run_simulate_campus(sim_args);
    if (*trainer) return run_train(train_args);
    if (*finetune) return run_finetune(ft_args);
    if (*eval) return run_eval(eval_args);
    if (*predict) return run_predict(predict_args);
    if (*occupancy) return run_occupancy(occ_args);
    if (*traces) return run_simulate_traces(traces_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "mobmod: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mobmod: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
