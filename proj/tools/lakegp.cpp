// Command-line front end: simulate / train / forecast / evaluate.

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "lakegp/config.hpp"

namespace fs = std::filesystem;
using namespace lakegp;

namespace {

// Exclusive lock on the state directory, released on scope exit.
class StateLock {
 public:
  explicit StateLock(const std::string& state_dir) {
    fs::create_directories(state_dir);
    path_ = state_dir + "/.lock";
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw StateError("state directory '" + state_dir + "' is locked (remove " + path_ +
                       " if no other run is active)");
  }
  ~StateLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  StateLock(const StateLock&) = delete;
  StateLock& operator=(const StateLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

InMemoryStore load_store(const RunConfig& cfg) {
  return InMemoryStore(read_ensemble_csv(cfg.ensemble_csv), read_field_csv(cfg.field_csv));
}

std::string state_path(const RunConfig& cfg) { return cfg.state_dir + "/state.txt"; }
std::string forecasts_path(const RunConfig& cfg) { return cfg.output_dir + "/forecasts.csv"; }

int cmd_simulate(const RunConfig& cfg) {
  Campaign campaign = generate_campaign(cfg.sim);
  if (!cfg.output_dir.empty()) fs::create_directories(cfg.output_dir);
  fs::create_directories(fs::path(cfg.ensemble_csv).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(cfg.ensemble_csv).parent_path());
  write_ensemble_csv(cfg.ensemble_csv, campaign.ensemble);
  write_field_csv(cfg.field_csv, campaign.field);
  std::cout << "simulate: wrote " << campaign.ensemble.size() << " ensemble rows, "
            << campaign.field.size() << " field rows\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  StateLock lock(cfg.state_dir);
  InMemoryStore store = load_store(cfg);
  Engine engine(cfg.engine_config());
  engine.initial_train(store, cfg.train_start, cfg.train_end);
  engine.save_snapshot(state_path(cfg));
  std::cout << "train: fitted on " << engine.replicates().n() << " unique inputs through "
            << format_date(engine.train_last()) << "\n";
  return 0;
}

int cmd_forecast(const RunConfig& cfg, const std::string& date, const std::string& from,
                 const std::string& to) {
  StateLock lock(cfg.state_dir);
  InMemoryStore store = load_store(cfg);
  Engine engine = Engine::load_snapshot(state_path(cfg), store, cfg.engine_config());
  fs::create_directories(cfg.output_dir);

  CivilDay first, last;
  if (!date.empty()) {
    first = last = parse_date(date);
  } else if (!from.empty() && !to.empty()) {
    first = parse_date(from);
    last = parse_date(to);
  } else {
    throw IoError("forecast: pass --date or both --from and --to");
  }
  if (first > last) throw IoError("forecast: empty date range");

  int64_t emitted = 0;
  // Retrospective part of the range: hindcasts from the current fits.
  const CivilDay hind_last = std::min(last, engine.current_day());
  if (first <= hind_last) {
    std::vector<ForecastRecord> recs = engine.hindcast(first, hind_last);
    write_forecasts_csv(forecasts_path(cfg), recs, true);
    emitted += static_cast<int64_t>(recs.size());
  }
  // Iterative part: one daily step per remaining day, snapshotting after each
  // so an aborted run resumes where it stopped.
  while (engine.current_day() < last) {
    std::vector<ForecastRecord> recs = engine.daily_step(store);
    write_forecasts_csv(forecasts_path(cfg), recs, true);
    engine.save_snapshot(state_path(cfg));
    emitted += static_cast<int64_t>(recs.size());
  }
  std::cout << "forecast: emitted " << emitted << " records through "
            << format_date(engine.current_day()) << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& from, const std::string& to,
                 bool by_depth, bool by_doy) {
  const CivilDay first = parse_date(from);
  const CivilDay last = parse_date(to);
  FieldSeries field = read_field_csv(cfg.field_csv);
  field.rebuild_index();
  std::vector<ForecastRecord> records = read_forecasts_csv(forecasts_path(cfg));

  std::vector<ForecastRecord> joined;
  joined.reserve(records.size());
  for (ForecastRecord& r : records) {
    if (r.ref_day < first || r.ref_day > last) continue;
    if (auto obs = field.lookup(r.ref_day + r.horizon, r.depth)) {
      r.has_truth = true;
      r.truth = *obs;
      joined.push_back(r);
    }
  }
  if (joined.empty()) throw DataError("evaluate: no forecast-truth pairs in range");

  std::vector<ScoreRow> rows = aggregate(joined, GroupBy::Horizon);
  if (by_depth) {
    std::vector<ScoreRow> extra = aggregate(joined, GroupBy::Depth);
    rows.insert(rows.end(), extra.begin(), extra.end());
  }
  if (by_doy) {
    std::vector<ScoreRow> extra = aggregate(joined, GroupBy::DoyMonth);
    rows.insert(rows.end(), extra.begin(), extra.end());
  }
  int64_t floored = 0;
  for (const ScoreRow& r : rows) floored += r.n_floored;
  if (floored > 0)
    std::cerr << "warning: " << floored
              << " group entries scored with the degenerate-sd floor (1e-6)\n";

  fs::create_directories(cfg.output_dir);
  write_scores_csv(cfg.output_dir + "/scores.csv", rows);
  std::cout << "evaluate: scored " << joined.size() << " pairs into " << rows.size()
            << " groups\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP ensemble forecasting engine"};
  app.require_subcommand(1);

  std::string config_path, date, from, to;
  bool by_depth = false, by_doy = false;

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic campaign");
  sim->add_option("--config", config_path)->required();
  CLI::App* train = app.add_subcommand("train", "run the initial training stage");
  train->add_option("--config", config_path)->required();
  CLI::App* fc = app.add_subcommand("forecast", "issue daily forecasts (and hindcasts)");
  fc->add_option("--config", config_path)->required();
  fc->add_option("--date", date, "single reference date");
  fc->add_option("--from", from, "range start");
  fc->add_option("--to", to, "range end");
  CLI::App* ev = app.add_subcommand("evaluate", "score forecasts against field truth");
  ev->add_option("--config", config_path)->required();
  ev->add_option("--from", from)->required();
  ev->add_option("--to", to)->required();
  ev->add_flag("--by-depth", by_depth, "also aggregate by depth");
  ev->add_flag("--by-doy", by_doy, "also aggregate by month of reference date");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = parse_config(config_path);
    if (sim->parsed()) return cmd_simulate(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (fc->parsed()) return cmd_forecast(cfg, date, from, to);
    if (ev->parsed()) return cmd_evaluate(cfg, from, to, by_depth, by_doy);
  } catch (const ContractError& e) {
    std::cerr << "error: contract: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const FitError& e) {
    std::cerr << "error: fit: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const StateError& e) {
    std::cerr << "error: state: " << e.what() << "\n";
    return 5;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
