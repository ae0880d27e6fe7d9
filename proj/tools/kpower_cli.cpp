#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kpower/kpower.hpp"

namespace {

struct RunFlags {
  std::string config;
  std::string seeds;  // "a..b" inclusive, or a single seed
  std::size_t threads = 0;
  std::string output;
};

kpower::Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kpower::ConfigError("", "cannot open config file '" + path + "'");
  try {
    return kpower::Json::parse(in);
  } catch (const kpower::Json::parse_error& e) {
    throw kpower::ConfigError("", std::string("JSON parse error: ") + e.what());
  }
}

void apply_seed_range(kpower::Json& raw, const std::string& range) {
  const auto dots = range.find("..");
  try {
    if (dots == std::string::npos) {
      raw["seeds"] = kpower::Json::array({std::stoull(range)});
      return;
    }
    const auto a = std::stoull(range.substr(0, dots));
    const auto b = std::stoull(range.substr(dots + 2));
    if (b < a) throw kpower::ConfigError("--seeds", "empty range '" + range + "'");
    raw["seeds"] = {{"from", a}, {"count", b - a + 1}};
  } catch (const std::logic_error&) {
    throw kpower::ConfigError("--seeds", "expected N or A..B, got '" + range + "'");
  }
}

kpower::ExperimentConfig load(const RunFlags& f, const std::string& kind) {
  kpower::Json raw = read_json_file(f.config);
  if (!kind.empty()) {
    if (raw.contains("kind") && raw["kind"] != kind)
      throw kpower::ConfigError("kind", "config says '" + raw["kind"].get<std::string>() + "' but subcommand is '" +
                                            kind + "'");
    raw["kind"] = kind;
  }
  if (!f.seeds.empty()) apply_seed_range(raw, f.seeds);
  auto c = kpower::parse_config(raw);
  if (f.threads) c.threads = f.threads;
  if (!f.output.empty()) c.output = f.output;
  return c;
}

int do_run(const RunFlags& f, const std::string& kind) {
  const auto c = load(f, kind);
  const auto out = kpower::run_experiment(c);
  std::size_t ok = 0;
  for (const auto& r : out.records) ok += r["status"] == "ok";
  std::printf("%s: %zu/%zu trials ok, config %s\n", c.kind.c_str(), ok, out.records.size(),
              kpower::hex64(kpower::config_hash(c.raw)).c_str());
  if (c.output.empty()) std::fputs(kpower::summary_csv(out.summary).c_str(), stdout);
  else std::printf("wrote %s/{trials.jsonl,summary.csv}\n", c.output.c_str());
  for (const auto& a : out.assertions)
    std::printf("assert %s(%s) %s %g: observed %.17g %s%s\n", a.assertion.stat.c_str(), a.assertion.metric.c_str(),
                a.assertion.op.c_str(), a.assertion.value, a.observed, a.pass ? "PASS" : "FAIL",
                a.note.empty() ? "" : (" (" + a.note + ")").c_str());
  return out.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kpower: experiments on powers of Hamilton cycles in sparse random graphs"};
  app.require_subcommand(1);

  RunFlags flags;
  std::string kind;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("-c,--config", flags.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-s,--seeds", flags.seeds, "seed or inclusive range A..B (overrides config)");
    sub->add_option("-j,--threads", flags.threads, "worker threads");
    sub->add_option("-o,--output", flags.output, "output directory");
  };

  auto* run = app.add_subcommand("run", "run the experiment kind named in the config");
  add_run_flags(run);
  for (const auto& k : kpower::experiment_kinds()) {
    auto* sub = app.add_subcommand(k, "run a config of kind " + k);
    add_run_flags(sub);
    sub->callback([&kind, k] { kind = k; });
  }

  std::string records_path;
  std::size_t limit = 20;
  auto* rep = app.add_subcommand("replay", "re-run stored trial records and compare");
  rep->add_option("-c,--config", flags.config, "config the records came from")->required()->check(CLI::ExistingFile);
  rep->add_option("-r,--records", records_path, "trials.jsonl")->required()->check(CLI::ExistingFile);
  rep->add_option("-n,--limit", limit, "replay at most this many records");

  auto* sum = app.add_subcommand("summarize", "recompute summary.csv from a JSONL stream");
  sum->add_option("-r,--records", records_path, "trials.jsonl")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rep) {
      const auto c = load(flags, "");
      std::ifstream in(records_path);
      const auto records = kpower::read_jsonl(in);
      std::size_t same = 0, done = 0;
      for (const auto& r : records) {
        if (done == limit) break;
        ++done;
        const auto res = kpower::replay(c, r);
        same += res.identical;
        if (!res.identical)
          std::printf("mismatch at index %s seed %s\n", r["index"].dump().c_str(), r["seed"].dump().c_str());
      }
      std::printf("replay: %zu/%zu identical\n", same, done);
      return same == done ? 0 : 3;
    }
    if (*sum) {
      std::ifstream in(records_path);
      std::fputs(kpower::summary_csv(kpower::summarize(kpower::read_jsonl(in))).c_str(), stdout);
      return 0;
    }
    return do_run(flags, kind);
  } catch (const kpower::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const kpower::HashMismatch& e) {
    std::fprintf(stderr, "hash mismatch: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
