// Copyright 2026 The randstream Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// randstream: generate datasets, benchmark, run the adaptive loop, evaluate
// detections and replay shards.

#include <CLI11.hpp>

#include <iostream>

#include "randstream/app.hpp"
#include "randstream/wire.hpp"

namespace app = randstream::app;

namespace {

void add_fleet_options(CLI::App* cmd, app::FleetOptions& o) {
  cmd->add_option("--scene", o.scene, "scene name (a .cfg file in the scene directory)")->capture_default_str();
  cmd->add_option("--instances", o.instances, "producer processes")->capture_default_str();
  cmd->add_option("--seed", o.seed, "base seed; producer i uses seed + i")->capture_default_str();
  cmd->add_option("--producer", o.producer, "producer executable");
  cmd->add_option("--scene-dir", o.scene_dir, "scene directory");
  cmd->add_option("--set", o.settings, "scene override key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"randstream: adaptive domain-randomization pipeline"};
  cli.require_subcommand(1);

  app::GenerateOptions gen;
  auto* c_gen = cli.add_subcommand("generate", "record frames from a producer fleet into shard files");
  add_fleet_options(c_gen, gen);
  c_gen->add_option("--frames", gen.frames, "frames per producer")->capture_default_str();
  c_gen->add_option("--out", gen.out_dir, "output directory")->required();

  app::BenchOptions bench;
  auto* c_bench = cli.add_subcommand("bench", "measure receive-side frames per second");
  add_fleet_options(c_bench, bench);
  c_bench->add_option("--duration", bench.duration_s, "seconds to measure")->capture_default_str();
  c_bench->add_option("--workers", bench.workers, "consumer threads")->capture_default_str();

  app::DemoOptions demo;
  double drop0 = 0;
  auto* c_demo = cli.add_subcommand("demo-loop", "closed adaptive loop with a mock detector");
  add_fleet_options(c_demo, demo);
  c_demo->add_option("--steps", demo.steps, "feedback steps")->capture_default_str();
  c_demo->add_option("--classes", demo.classes, "number of classes K")->capture_default_str();
  c_demo->add_option("--cadence", demo.cadence, "frames per feedback step")->capture_default_str();
  c_demo->add_option("--drop-rate", demo.mock.drop_rate, "per-class miss rate of the mock detector");
  c_demo->add_option("--drop0", drop0, "shorthand: miss rate of class 0 only");
  c_demo->add_option("--jitter", demo.mock.box_jitter, "box corner noise, fraction of box size");
  c_demo->add_option("--false-positives", demo.mock.false_positive_rate, "spurious boxes per image");
  c_demo->add_option("--temperature", demo.policy.temperature)->capture_default_str();
  c_demo->add_option("--floor", demo.policy.floor)->capture_default_str();
  c_demo->add_option("--smoothing", demo.policy.smoothing)->capture_default_str();

  app::EvalOptions ev;
  bool all_points = false;
  auto* c_eval = cli.add_subcommand("eval", "AP/mAP of detection files against ground truth");
  c_eval->add_option("--gt", ev.gt, "ground-truth records")->required();
  c_eval->add_option("--det", ev.dets, "detection records, one file per run")->required();
  c_eval->add_option("--out", ev.out, "JSON report path");
  c_eval->add_option("--curves", ev.curves_csv, "PR-curve CSV path");
  c_eval->add_option("--max-det", ev.summary.max_detections, "detections kept per image and class")->capture_default_str();
  c_eval->add_option("--score-min", ev.summary.score_min, "minimum confidence")->capture_default_str();
  c_eval->add_option("--classes", ev.summary.num_classes, "number of classes (0 = infer)");
  c_eval->add_flag("--all-points", all_points, "all-points interpolation instead of 101 points");

  app::ReplayOptions rp;
  bool no_overlay = false;
  auto* c_replay = cli.add_subcommand("replay", "write a shard's frames as PNG images with annotation files");
  c_replay->add_option("--shard", rp.shard, "shard file")->required();
  c_replay->add_option("--png-dir", rp.png_dir, "output directory")->required();
  c_replay->add_option("--gt-out", rp.gt_out, "also write ground-truth records");
  c_replay->add_flag("--no-overlay", no_overlay, "do not draw boxes");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kExitUsage;
  }

  try {
    if (*c_gen) {
      const auto res = app::run_generate(gen);
      for (std::size_t b = 0; b < res.shards.size(); ++b) {
        std::cout << res.shards[b].string() << ' ' << res.counts[b] << " messages\n";
      }
    } else if (*c_bench) {
      std::cout << app::format_bench_row(app::run_bench(bench)) << '\n';
    } else if (*c_demo) {
      if (c_demo->count("--drop0")) {
        if (demo.mock.drop_rate.empty()) demo.mock.drop_rate.assign(1, 0.0);
        demo.mock.drop_rate[0] = drop0;
      }
      app::run_demo_loop(demo, &std::cout);
    } else if (*c_eval) {
      if (all_points) ev.summary.interpolation = randstream::eval::Interpolation::kAllPoints;
      const auto rep = app::run_eval(ev);
      if (ev.out.empty()) std::cout << app::report_json(rep) << '\n';
    } else if (*c_replay) {
      rp.overlay = !no_overlay;
      std::cout << app::run_replay(rp) << " frames written to " << rp.png_dir.string() << '\n';
    }
  } catch (const app::AppError& e) {
    std::cerr << "randstream: " << e.what() << '\n';
    return e.exit_code();
  } catch (const randstream::wire::WireError& e) {
    std::cerr << "randstream: " << e.what() << '\n';
    return app::kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "randstream: " << e.what() << '\n';
    return app::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "randstream: " << e.what() << '\n';
    return app::kExitRuntime;
  }
  return app::kExitOk;
}
