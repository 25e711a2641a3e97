// ofe: order-flow entropy research pipeline.
//
//   ofe synth --out data               synthetic tick files + burst log
//   ofe ingest --in data --out data    ticks -> one-second bars
//   ofe entropy --in data --out data   bars -> entropy series
//   ofe signal / backtest              calibrate on the first train_days, run on the rest
//   ofe walkforward --in data --out o  rolling folds, pooled result
//   ofe validate --in data --out o     statistics, placebos, attribution, sweep
//   ofe report --in o                  text summary of a validate run
//
// Exit codes: 0 ok, 2 input error, 3 protocol / insufficient data,
// 4 stationary distribution did not converge somewhere.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ofe/config.hpp"
#include "ofe/report.hpp"
#include "ofe/store.hpp"
#include "ofe/synth.hpp"

namespace {

using namespace ofe;

constexpr int kExitInput = 2;
constexpr int kExitProtocol = 3;
constexpr int kExitNumerical = 4;

struct Common {
  std::string config_path;
  unsigned threads = 0;
  std::string in_dir;
  std::string out_dir;
};

RunConfig resolve_config(const Common& c) {
  std::string path = c.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("OFE_CONFIG")) path = env;
  }
  RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
  if (!c.in_dir.empty()) cfg.data_dir = c.in_dir;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  return cfg;
}

unsigned workers(const Common& c) {
  if (c.threads > 0) return c.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_json(const fs::path& p, const json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

// Every output directory carries the resolved config and the files written.
void write_provenance(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                      const std::vector<std::string>& files) {
  write_json(dir / ("provenance_" + command + ".json"),
             {{"command", command}, {"config", to_json(cfg)}, {"files", files}});
}

fs::path ensure_dir(const std::string& d) {
  fs::create_directories(d);
  return fs::path(d);
}

int warn_non_converged(std::size_t n) {
  if (n == 0) return 0;
  std::cerr << "warning: stationary distribution did not converge at " << n << " entropy points\n";
  return kExitNumerical;
}

int cmd_synth(const Common& c, int days, long long seed) {
  RunConfig cfg = resolve_config(c);
  if (days != -1) cfg.synth.n_days = days;
  if (seed != -1) cfg.synth.seed = static_cast<std::uint64_t>(seed);
  cfg.synth.session_s = cfg.session_s;
  cfg.synth.validate();
  const auto dir = ensure_dir(c.out_dir.empty() ? cfg.data_dir : c.out_dir);
  const auto m = generate_market(cfg.synth, workers(c));
  std::vector<std::string> files;
  std::size_t n_ticks = 0;
  for (const auto& d : m.days) {
    const auto name = day_file("ticks", d.date);
    write_ticks((dir / name).string(), d.ticks);
    files.push_back(name);
    n_ticks += d.ticks.size();
  }
  {
    auto out = open_out(dir / "bursts.csv");
    write_burst_log(out, m.bursts);
  }
  files.push_back("bursts.csv");
  write_provenance(dir, "synth", cfg, files);
  std::cout << "wrote " << m.days.size() << " days, " << n_ticks << " ticks, " << m.bursts.size()
            << " bursts to " << dir.string() << '\n';
  return 0;
}

int cmd_ingest(const Common& c) {
  RunConfig cfg = resolve_config(c);
  const auto ticks = discover(cfg.data_dir, "ticks");
  if (ticks.empty()) throw InputError("no ticks_*.csv files in " + cfg.data_dir);
  const auto dir = ensure_dir(c.out_dir.empty() ? cfg.data_dir : cfg.out_dir);
  std::vector<std::pair<Date, fs::path>> todo(ticks.begin(), ticks.end());
  std::vector<json> day_reports(todo.size());
  std::vector<std::string> errors(todo.size());
  parallel_for(todo.size(), workers(c), [&](std::size_t i) {
    try {
      const auto& [d, path] = todo[i];
      auto parsed = parse_ticks(path.string());
      std::size_t dropped = 0;
      const auto bars = ticks_to_bars(parsed.ticks, SessionSpec::from_open(d, cfg.session_s), &dropped);
      write_bars((dir / day_file("bars", d)).string(), bars);
      json errs = json::array();
      for (std::size_t k = 0; k < std::min<std::size_t>(parsed.errors.size(), 20); ++k) {
        errs.push_back({{"line", parsed.errors[k].line}, {"message", parsed.errors[k].message}});
      }
      day_reports[i] = {{"date", to_string(d)},
                        {"rows", parsed.rows},
                        {"row_errors", parsed.errors.size()},
                        {"first_errors", errs},
                        {"dropped_outside_session", dropped},
                        {"bars", bars.size()}};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw InputError(e);
  }
  std::vector<std::string> files;
  for (const auto& [d, p] : todo) files.push_back(day_file("bars", d));
  write_json(dir / "ingest_summary.json", {{"config", to_json(cfg)}, {"days", day_reports}});
  write_provenance(dir, "ingest", cfg, files);
  std::cout << "ingested " << todo.size() << " days into " << dir.string() << '\n';
  return 0;
}

int cmd_entropy(const Common& c) {
  RunConfig cfg = resolve_config(c);
  const auto dir = ensure_dir(c.out_dir.empty() ? cfg.data_dir : cfg.out_dir);
  LoadStats ls;
  auto sessions = load_sessions(cfg.data_dir, cfg.session_s, cfg.entropy, workers(c), &ls, false);
  std::vector<double> hs;
  std::size_t points = 0;
  std::size_t non_converged = 0;
  std::vector<std::string> files;
  for (auto& sd : sessions) {
    auto out = open_out(dir / day_file("entropy", sd.session.date));
    write_entropy_csv(out, sd.entropy);
    files.push_back(day_file("entropy", sd.session.date));
    if (!fs::exists(dir / day_file("bars", sd.session.date))) {
      write_bars((dir / day_file("bars", sd.session.date)).string(), sd.bars);
    }
    points += sd.entropy.size();
    for (const auto& p : sd.entropy) {
      if (p.defined) hs.push_back(p.h);
      non_converged += !p.converged;
    }
  }
  json pct = json::object();
  if (!hs.empty()) {
    std::sort(hs.begin(), hs.end());
    for (double q : {0.01, 0.05, 0.25, 0.5, 0.75, 0.95}) {
      pct[detail::fmt(q)] = percentile_sorted(hs, q);
    }
  }
  write_json(dir / "entropy_summary.json",
             {{"config", to_json(cfg)},
              {"days", sessions.size()},
              {"points", points},
              {"defined", hs.size()},
              {"fraction_defined", points ? static_cast<double>(hs.size()) / static_cast<double>(points) : 0.0},
              {"non_converged", non_converged},
              {"percentiles", pct}});
  write_provenance(dir, "entropy", cfg, files);
  std::cout << "entropy: " << sessions.size() << " days, " << points << " points, " << hs.size() << " defined\n";
  return warn_non_converged(non_converged);
}

std::vector<SessionData> load_all(const Common& c, const RunConfig& cfg, std::size_t* non_converged) {
  LoadStats ls;
  auto sessions = load_sessions(cfg.data_dir, cfg.session_s, cfg.entropy, workers(c), &ls);
  if (non_converged) *non_converged = ls.non_converged;
  return sessions;
}

// signal and backtest: calibrate on the first train_days sessions and apply
// the frozen thresholds to every later session.
int cmd_signal_or_backtest(const Common& c, bool with_backtest) {
  RunConfig cfg = resolve_config(c);
  std::size_t nc = 0;
  const auto sessions = load_all(c, cfg, &nc);
  const auto n_train = static_cast<std::size_t>(cfg.folds.train_days);
  if (sessions.size() <= n_train) {
    throw ProtocolError("insufficient data: " + std::to_string(sessions.size()) + " days, need more than " +
                        std::to_string(n_train) + " (train_days)");
  }
  std::span<const SessionData> all(sessions);
  const auto train = all.first(n_train);
  const auto test = all.subspan(n_train);
  const auto th = calibrate(train, cfg.signal, cfg.exit, cfg.costs);
  const auto signals = generate_signals(test, th, cfg.signal);
  const auto dir = ensure_dir(cfg.out_dir);
  std::vector<std::string> files{"signals.csv", "thresholds.json"};
  {
    auto out = open_out(dir / "signals.csv");
    write_signals_csv(out, signals);
  }
  json j{{"config", to_json(cfg)},
         {"train", period_of(all, 0, n_train)},
         {"test", period_of(all, n_train, all.size())},
         {"thresholds", to_json(th)},
         {"signals", signals.size()}};
  if (with_backtest) {
    const auto r = run_backtest(test, signals, th, cfg.exit, cfg.costs);
    auto out = open_out(dir / "trades.csv");
    write_trades_csv(out, r.trades);
    files.push_back("trades.csv");
    j["result"] = summary_json(r);
    if (r.n > 0) j["direction"] = to_json(binomial_direction(r.wins, r.n));
    std::cout << "backtest: " << r.n << " trades, win rate " << r.win_rate << ", net " << r.total_net_bps
              << " bps\n";
  } else {
    std::cout << "signal: " << signals.size() << " signals\n";
  }
  for (const auto& w : th.warnings) std::cerr << "warning: " << w << '\n';
  write_json(dir / "thresholds.json", j);
  write_provenance(dir, with_backtest ? "backtest" : "signal", cfg, files);
  return warn_non_converged(nc);
}

int cmd_walkforward(const Common& c) {
  RunConfig cfg = resolve_config(c);
  std::size_t nc = 0;
  const auto sessions = load_all(c, cfg, &nc);
  const auto wf = walk_forward(sessions, cfg.folds, cfg.strategy(), cfg.magnitude_options(), workers(c));
  const auto dir = ensure_dir(cfg.out_dir);
  std::vector<std::string> files;
  for (const auto& f : wf.folds) {
    const auto name = "fold_" + std::to_string(f.index) + ".json";
    json j = to_json(f, sessions);
    j["config"] = to_json(cfg);
    write_json(dir / name, j);
    files.push_back(name);
    const auto tname = "trades_fold_" + std::to_string(f.index) + ".csv";
    auto out = open_out(dir / tname);
    write_trades_csv(out, f.result.trades);
    files.push_back(tname);
  }
  json pooled = walkforward_json(wf, sessions);
  pooled["config"] = to_json(cfg);
  write_json(dir / "walkforward.json", pooled);
  {
    auto out = open_out(dir / "walkforward_table.csv");
    write_walkforward_table(out, wf, sessions);
  }
  {
    auto out = open_out(dir / "cumulative_pnl.csv");
    write_cumulative_pnl(out, wf);
  }
  {
    auto out = open_out(dir / "trades.csv");
    write_trades_csv(out, wf.pooled.trades);
  }
  for (const char* f : {"walkforward.json", "walkforward_table.csv", "cumulative_pnl.csv", "trades.csv"}) {
    files.push_back(f);
  }
  write_provenance(dir, "walkforward", cfg, files);
  std::cout << "walkforward: " << wf.folds.size() << " folds, " << wf.pooled.n << " trades, win rate "
            << wf.pooled.win_rate << ", net " << wf.pooled.total_net_bps << " bps\n";
  return warn_non_converged(nc);
}

int cmd_validate(const Common& c, const std::string& bursts_path, bool no_sweep) {
  RunConfig cfg = resolve_config(c);
  if (no_sweep) cfg.validation.sensitivity = false;
  std::size_t nc = 0;
  const auto sessions = load_all(c, cfg, &nc);
  BurstLog bursts;
  std::string bp = bursts_path;
  if (bp.empty() && fs::exists(fs::path(cfg.data_dir) / "bursts.csv")) bp = (fs::path(cfg.data_dir) / "bursts.csv").string();
  if (!bp.empty()) {
    std::ifstream in(bp);
    if (!in) throw InputError("cannot open burst log " + bp);
    bursts = read_burst_log(in);
  }
  const auto r = run_validation(sessions, cfg, workers(c), bursts);
  const auto dir = ensure_dir(cfg.out_dir);
  json j = to_json(r, sessions);
  j["config"] = to_json(cfg);
  write_json(dir / "stats_report.json", j);
  std::vector<std::string> files{"stats_report.json"};
  auto table = [&](const std::string& name, auto&& fn) {
    auto out = open_out(dir / name);
    fn(out);
    files.push_back(name);
  };
  table("quintiles.csv", [&](std::ostream& o) { write_quintile_table(o, r.stats.magnitude); });
  table("direction.csv", [&](std::ostream& o) { write_direction_table(o, r.wf); });
  table("cumulative_pnl.csv", [&](std::ostream& o) { write_cumulative_pnl(o, r.wf); });
  table("attribution.csv", [&](std::ostream& o) { write_attribution_table(o, r.stats.attribution); });
  table("walkforward_table.csv", [&](std::ostream& o) { write_walkforward_table(o, r.wf, sessions); });
  if (!r.sensitivity.empty()) {
    table("sensitivity.csv", [&](std::ostream& o) { write_sensitivity_table(o, r.sensitivity); });
  }
  write_provenance(dir, "validate", cfg, files);
  std::cout << "validate: ratio " << r.stats.magnitude_ratio << " (t " << r.stats.welch_t << "), win rate "
            << r.wf.pooled.win_rate << ", placebo z label " << r.label.z << " scramble " << r.scramble.z
            << " random " << r.random_entry.z << '\n';
  return warn_non_converged(nc);
}

std::string cell(const json& v, int prec = 3) {
  if (v.is_null()) return "-";
  std::ostringstream s;
  if (v.is_number_float()) {
    s << std::fixed << std::setprecision(prec) << v.get<double>();
  } else {
    s << v.dump();
  }
  return s.str();
}

int cmd_report(const Common& c) {
  RunConfig cfg = resolve_config(c);
  const fs::path p = fs::path(c.in_dir.empty() ? cfg.out_dir : c.in_dir) / "stats_report.json";
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string() + " (run validate first)");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(p.string() + ": " + e.what());
  }
  const auto& wf = j.at("walkforward");
  std::cout << "fold  period                   trades  win    ratio   t       pnl_bps\n";
  for (const auto& f : wf.at("folds")) {
    std::cout << std::left << std::setw(6) << f.at("fold").get<int>() << std::setw(25)
              << f.at("test").get<std::string>() << std::setw(8) << cell(f.at("result").at("n"))
              << std::setw(7) << cell(f.at("result").at("win_rate")) << std::setw(8)
              << cell(f.at("magnitude").at("q1_q5_ratio"), 2) << std::setw(8)
              << cell(f.at("magnitude").at("q1_vs_q5").at("t"), 2)
              << cell(f.at("result").at("total_net_bps"), 1) << '\n';
  }
  const auto& pooled = wf.at("pooled");
  std::cout << std::left << std::setw(31) << "pooled" << std::setw(8) << cell(pooled.at("n")) << std::setw(23)
            << cell(pooled.at("win_rate")) << cell(pooled.at("total_net_bps"), 1) << "\n\n";
  const auto& st = j.at("stats");
  std::cout << "magnitude ratio Q1/Q5   " << cell(st.at("magnitude_ratio")) << "  (Welch t " << cell(st.at("welch_t"), 2)
            << ")\n";
  std::cout << "direction               " << cell(st.at("direction_k")) << "/" << cell(st.at("direction_n"))
            << "  z " << cell(st.at("binom_z"), 2) << "  p " << cell(st.at("binom_p")) << '\n';
  for (const auto& pl : j.at("placebos")) {
    std::cout << "placebo " << std::setw(16) << pl.at("name").get<std::string>() << "z " << cell(pl.at("z"), 2)
              << "  (null " << cell(pl.at("null_mean")) << " +- " << cell(pl.at("null_sd")) << ")\n";
  }
  const auto& a = j.at("attribution");
  std::cout << "attribution             timing " << cell(a.at("timing_share")) << "  payoff "
            << cell(a.at("payoff_share")) << "  direction " << cell(a.at("direction_share")) << '\n';
  std::cout << "bonferroni alpha        " << cell(st.at("bonferroni_alpha"), 4) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"order-flow entropy research pipeline"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON run config (default: $OFE_CONFIG)");
  app.add_option("-j,--threads", common.threads, "worker threads (default: all cores)");

  auto add_io = [&](CLI::App* sub) {
    sub->add_option("-i,--in", common.in_dir, "input directory (default: config data_dir)");
    sub->add_option("-o,--out", common.out_dir, "output directory (default: config out_dir)");
  };

  int days = -1;
  long long seed = -1;
  auto* synth = app.add_subcommand("synth", "generate a synthetic market");
  synth->add_option("-o,--out", common.out_dir, "output directory (default: config data_dir)");
  synth->add_option("--days", days, "trading days")->check(CLI::Range(1, 100000));
  synth->add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);

  auto* ingest = app.add_subcommand("ingest", "tick files -> one-second bars");
  add_io(ingest);
  auto* entropy = app.add_subcommand("entropy", "bars -> rolling entropy series");
  add_io(entropy);
  auto* signal = app.add_subcommand("signal", "calibrate on the first train_days, emit later signals");
  add_io(signal);
  auto* backtest = app.add_subcommand("backtest", "as signal, then simulate trades");
  add_io(backtest);
  auto* walk = app.add_subcommand("walkforward", "rolling walk-forward validation");
  add_io(walk);
  std::string bursts_path;
  bool no_sweep = false;
  auto* validate = app.add_subcommand("validate", "statistics, placebos, attribution, sensitivity");
  add_io(validate);
  validate->add_option("--bursts", bursts_path, "burst log for the oracle report");
  validate->add_flag("--no-sweep", no_sweep, "skip the sensitivity sweep");
  auto* report = app.add_subcommand("report", "summarize a validate output directory");
  report->add_option("-i,--in", common.in_dir, "validate output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth) return cmd_synth(common, days, seed);
    if (*ingest) return cmd_ingest(common);
    if (*entropy) return cmd_entropy(common);
    if (*signal) return cmd_signal_or_backtest(common, false);
    if (*backtest) return cmd_signal_or_backtest(common, true);
    if (*walk) return cmd_walkforward(common);
    if (*validate) return cmd_validate(common, bursts_path, no_sweep);
    if (*report) return cmd_report(common);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ProtocolError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProtocol;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
