#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "team/analysis.hpp"
#include "team/bench.hpp"
#include "team/checkpoint.hpp"
#include "team/dataset.hpp"
#include "team/error.hpp"
#include "team/gradcheck.hpp"
#include "team/synthetic.hpp"
#include "team/training.hpp"

namespace team::cli {

namespace {

namespace fs = std::filesystem;

struct Ablation {
  bool no_adapt = false;
  bool no_exclusive = false;
  bool no_entanglement = false;
  double fixed_entanglement = 1.0;
  bool pos_enc = false;
  double tau = 1.0;

  void add_to(CLI::App* app) {
    app->add_flag("--no-adapt", no_adapt, "Use unadapted support tokens");
    app->add_flag("--no-exclusive", no_exclusive, "Drop exclusive tokens and the negative distance");
    app->add_flag("--no-entanglement", no_entanglement,
                  "Adapt with a constant entanglement instead of prototype similarity");
    app->add_option("--fixed-entanglement", fixed_entanglement,
                    "Entanglement used with --no-entanglement")->capture_default_str();
    app->add_flag("--pos-enc", pos_enc, "Add sinusoidal positional encoding to frames");
    app->add_option("--tau", tau, "Softmax temperature")->capture_default_str();
  }

  MatchingConfig matching() const {
    MatchingConfig m;
    m.use_exclusive = !no_exclusive;
    m.adaptation = no_adapt ? Adaptation::kNone : no_entanglement ? Adaptation::kFixed : Adaptation::kEntangled;
    m.fixed_entanglement = fixed_entanglement;
    m.temperature = tau;
    return m;
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << std::setprecision(9);
  return f;
}

void close_out(std::ofstream& f, const fs::path& path) {
  f.close();
  if (!f) throw IoError("write failed for " + path.string());
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v == 0) throw ConfigError("invalid frame count '" + item + "' in --t");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Alignment-free few-shot video matching: synthesis, training, evaluation and benchmarks", "team"};
  app.require_subcommand(1, 1);

  // synth
  SyntheticSpec synth;
  fs::path synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic feature dataset");
  synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
  synth_cmd->add_option("--classes", synth.classes)->capture_default_str();
  synth_cmd->add_option("--videos", synth.videos_per_class, "Videos per class")->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim)->capture_default_str();
  synth_cmd->add_option("--t-min", synth.t_min)->capture_default_str();
  synth_cmd->add_option("--t-max", synth.t_max)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Noise sigma")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--signatures", synth.signatures, "Signatures per class")->capture_default_str();
  synth_cmd->add_option("--duration-min", synth.duration_min)->capture_default_str();
  synth_cmd->add_option("--duration-max", synth.duration_max)->capture_default_str();
  synth_cmd->add_option("--speed-min", synth.speed_min)->capture_default_str();
  synth_cmd->add_option("--speed-max", synth.speed_max)->capture_default_str();
  synth_cmd->add_option("--overlap", synth.overlap, "Shared signature energy across classes")->capture_default_str();
  synth_cmd->add_option("--shared", synth.shared_signatures, "Signatures per class drawn from a common pool")
      ->capture_default_str();
  synth_cmd->add_option("--shared-pool", synth.shared_pool, "Size of the common signature pool")->capture_default_str();
  synth_cmd->add_option("--prefix", synth.class_prefix, "Class name prefix")->capture_default_str();

  // train
  TrainConfig train_cfg;
  Ablation train_abl;
  fs::path train_data, train_out, train_loss_out;
  auto* train_cmd = app.add_subcommand("train", "Train a pattern pool episodically");
  train_cmd->add_option("--data", train_data, "Training dataset directory")->required();
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--iters", train_cfg.iterations)->capture_default_str();
  train_cmd->add_option("--lr", train_cfg.lr)->capture_default_str();
  train_cmd->add_option("--momentum", train_cfg.momentum)->capture_default_str();
  train_cmd->add_option("--m", train_cfg.model.tokens, "Pattern tokens")->capture_default_str();
  train_cmd->add_option("--mlp-ratio", train_cfg.model.mlp_ratio)->capture_default_str();
  train_cmd->add_option("--n", train_cfg.way, "Way")->capture_default_str();
  train_cmd->add_option("--k", train_cfg.shot, "Shot")->capture_default_str();
  train_cmd->add_option("--u", train_cfg.queries, "Queries per class")->capture_default_str();
  train_cmd->add_option("--seed", train_cfg.seed)->capture_default_str();
  train_cmd->add_option("--loss-out", train_loss_out, "CSV of iteration,loss");
  train_abl.add_to(train_cmd);

  // eval
  EvalConfig eval_cfg;
  Ablation eval_abl;
  fs::path eval_data, eval_ckpt, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on random episodes");
  eval_cmd->add_option("--data", eval_data, "Evaluation dataset directory")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--episodes", eval_cfg.episodes)->capture_default_str();
  eval_cmd->add_option("--n", eval_cfg.way, "Way")->capture_default_str();
  eval_cmd->add_option("--k", eval_cfg.shot, "Shot")->capture_default_str();
  eval_cmd->add_option("--u", eval_cfg.queries, "Queries per class")->capture_default_str();
  eval_cmd->add_option("--seed", eval_cfg.seed)->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "CSV of episodes,accuracy,ci_low,ci_high");
  eval_abl.add_to(eval_cmd);

  // bench
  BenchConfig bench_cfg;
  std::string bench_frames = "8,16,32,64,128";
  fs::path bench_out, bench_svg;
  auto* bench_cmd = app.add_subcommand("bench", "Time matching strategies against frame count");
  bench_cmd->add_option("--t", bench_frames, "Comma-separated frame counts")->capture_default_str();
  bench_cmd->add_option("--repeats", bench_cfg.repeats)->capture_default_str();
  bench_cmd->add_option("--dim", bench_cfg.dim)->capture_default_str();
  bench_cmd->add_option("--m", bench_cfg.tokens, "Pattern tokens")->capture_default_str();
  bench_cmd->add_option("--seed", bench_cfg.seed)->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "CSV of method,T,median_ms,units_compared");
  bench_cmd->add_option("--svg", bench_svg, "Optional SVG chart of time against T");

  // gradcheck
  GradCheckConfig gc_cfg;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gc_cmd->add_option("--seed", gc_cfg.seed)->capture_default_str();

  // inspect
  fs::path insp_ckpt, insp_data, insp_att, insp_heat;
  std::string insp_video;
  bool insp_pos_enc = false;
  auto* insp_cmd = app.add_subcommand("inspect", "Export attention weights and discriminative-power heatmaps");
  insp_cmd->add_option("--checkpoint", insp_ckpt)->required();
  insp_cmd->add_option("--data", insp_data, "Dataset (required for --heatmap-out or a video id)");
  insp_cmd->add_option("--video", insp_video, "Video id in --data, or a .tfea blob path");
  insp_cmd->add_option("--attention-out", insp_att, "CSV of M x T attention weights");
  insp_cmd->add_option("--heatmap-out", insp_heat, "CSV of class,token,score");
  insp_cmd->add_flag("--pos-enc", insp_pos_enc, "Model was trained with positional encoding");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitContract;
  }

  try {
    if (*synth_cmd) {
      const FeatureDataset ds = generate_synthetic(synth);
      save_dataset(ds, synth_out);
      out << "wrote " << ds.classes.size() << " classes, " << ds.num_videos() << " videos to "
          << synth_out.string() << "\n";
    } else if (*train_cmd) {
      const FeatureDataset ds = load_dataset(train_data);
      train_cfg.model.dim = ds.dim;
      train_cfg.model.positional_encoding = train_abl.pos_enc;
      train_cfg.matching = train_abl.matching();
      const std::size_t every = std::max<std::size_t>(1, train_cfg.iterations / 20);
      const TrainResult r = train(ds, train_cfg, [&](std::size_t it, double loss) {
        if ((it + 1) % every == 0) out << "iter " << (it + 1) << " loss " << loss << "\n";
      });
      save_checkpoint(r.pool, train_out);
      if (!train_loss_out.empty()) {
        auto f = open_out(train_loss_out);
        f << "iteration,loss\n";
        for (std::size_t i = 0; i < r.losses.size(); ++i) f << i << ',' << r.losses[i] << '\n';
        close_out(f, train_loss_out);
      }
      out << "wrote checkpoint " << train_out.string() << "\n";
    } else if (*eval_cmd) {
      const FeatureDataset ds = load_dataset(eval_data);
      PatternPool<float> pool = load_checkpoint(eval_ckpt);
      pool.set_positional_encoding(eval_abl.pos_enc);
      eval_cfg.matching = eval_abl.matching();
      eval_cfg.threads = threads_from_env();
      const EvalResult r = evaluate(pool, ds, eval_cfg);
      out << std::fixed << std::setprecision(4) << "accuracy " << r.accuracy << " (95% CI "
          << r.ci_low << " - " << r.ci_high << ") over " << r.episodes << " episodes, "
          << r.predictions << " queries\n";
      if (!eval_out.empty()) {
        auto f = open_out(eval_out);
        f << "episodes,accuracy,ci_low,ci_high\n"
          << r.episodes << ',' << r.accuracy << ',' << r.ci_low << ',' << r.ci_high << '\n';
        close_out(f, eval_out);
      }
    } else if (*bench_cmd) {
      bench_cfg.frames = parse_list(bench_frames);
      const BenchReport r = run_scaling_bench(bench_cfg);
      write_timing_csv(out, r.rows);
      for (const auto& fit : r.fits)
        out << "# " << fit.method << " slope " << std::setprecision(4) << fit.slope << " r2 " << fit.r_squared << "\n";
      if (!bench_out.empty()) {
        auto f = open_out(bench_out);
        write_timing_csv(f, r.rows);
        close_out(f, bench_out);
      }
      if (!bench_svg.empty()) {
        auto f = open_out(bench_svg);
        f << render_timing_svg(r.rows);
        close_out(f, bench_svg);
      }
    } else if (*gc_cmd) {
      const GradCheckReport r = gradient_check(gc_cfg);
      out << std::scientific << std::setprecision(3);
      for (const auto& e : r.entries) out << e.parameter << " rel_err " << e.rel_error << "\n";
      out << "max rel_err " << r.max_rel_error << "\n";
      if (r.max_rel_error > 1e-5) {
        err << "gradient check failed: max relative error " << r.max_rel_error << " exceeds 1e-5\n";
        return kExitContract;
      }
    } else if (*insp_cmd) {
      PatternPool<float> pool = load_checkpoint(insp_ckpt);
      pool.set_positional_encoding(insp_pos_enc);
      std::optional<FeatureDataset> ds;
      if (!insp_data.empty()) ds = load_dataset(insp_data);
      if (insp_att.empty() && insp_heat.empty())
        throw ContractError("inspect needs --attention-out and/or --heatmap-out");
      if (!insp_att.empty()) {
        if (insp_video.empty()) throw ContractError("--attention-out requires --video");
        const FeatureSequence* video = nullptr;
        FeatureSequence from_blob;
        if (ds) {
          for (const auto& c : ds->classes)
            for (const auto& v : c.videos)
              if (v.id == insp_video) video = &v.features;
        }
        if (video == nullptr) {
          if (!fs::exists(insp_video))
            throw ContractError("video '" + insp_video + "' is neither an id in --data nor a blob file");
          from_blob = read_blob(insp_video);
          video = &from_blob;
        }
        auto f = open_out(insp_att);
        write_attention_csv(f, export_attention(pool, *video));
        close_out(f, insp_att);
        out << "wrote attention weights to " << insp_att.string() << "\n";
      }
      if (!insp_heat.empty()) {
        if (!ds) throw ContractError("--heatmap-out requires --data");
        auto f = open_out(insp_heat);
        write_heatmap_csv(f, discriminative_power(pool, *ds));
        close_out(f, insp_heat);
        out << "wrote discriminative-power heatmap to " << insp_heat.string() << "\n";
      }
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitOk;
}

}  // namespace team::cli
