#include "advsmooth/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "advsmooth/config.hpp"
#include "advsmooth/verify.hpp"

namespace advsmooth {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (f) {
    f.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char h[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(h, sizeof h, "%02x", md[i]);
    hex += h;
  }
  return hex;
}

namespace {

std::string sha256_string(const std::string& s) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(s.data(), s.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char h[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(h, sizeof h, "%02x", md[i]);
    hex += h;
  }
  return hex;
}

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
};

struct Context {
  Invocation inv;
  json config;  // after the seed override
  std::vector<std::string> artifacts;
  json seeds = json::object();
  std::ostream& out;
  std::ostream& err;

  std::string path(const std::string& name) const { return (fs::path(inv.out_dir) / name).string(); }
  void log(const std::string& s) const {
    if (inv.verbosity > 0) err << s << '\n';
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

void write_manifest(Context& ctx) {
  json arts = json::array();
  for (const auto& a : ctx.artifacts) arts.push_back({{"path", fs::path(a).filename().string()}, {"sha256", sha256_file(a)}});
  json m{{"subcommand", ctx.inv.command},
         {"config_path", ctx.inv.config_path},
         {"config", ctx.config},
         {"config_sha256", sha256_string(ctx.config.dump())},
         {"seed_override", ctx.inv.seed ? json(*ctx.inv.seed) : json(nullptr)},
         {"seeds", ctx.seeds},
         {"artifacts", arts}};
  write_text(ctx.path("manifest.json"), m.dump(2) + "\n");
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// ---------------------------------------------------------------------------

int cmd_surface(Context& ctx) {
  const SurfaceJob job = parse_surface_job(ctx.config);
  const LabeledDataset data = job.data.load();
  ctx.seeds = {{"seed", job.seed}, {"pgd_seed", job.pgd.seed}};
  if (job.data.synthetic) ctx.seeds["data_seed"] = job.data.seed;
  const std::string ext = job.format == ExportFormat::Csv ? ".csv" : ".json";
  for (const auto& item : job.surfaces) {
    const Model model = make_model({item.model, 2, {}, Activation::Swish}, 0);
    GridSpec spec = job.grid;
    spec.variant = item.variant;
    SurfaceGrid grid;
    std::string name = to_string(item.model) + "_";
    if (item.entropy) {
      const ScalarFn loss = make_variant_loss(model, data, item.variant, job.epsilon, job.pgd);
      grid = sample_entropy_surface(loss, spec, job.entropy_gamma, job.quadrature);
      grid.metadata.emplace_back("model", to_string(item.model));
      grid.metadata.emplace_back("epsilon", std::to_string(job.epsilon));
      name += "entropy_of_" + to_string(item.variant);
    } else {
      grid = sample_surface(model, data, spec, job.epsilon, job.pgd);
      name += to_string(item.variant);
    }
    const std::string path = ctx.path(name + ext);
    export_grid(grid, path, job.format);
    ctx.artifacts.push_back(path);
    if (job.format == ExportFormat::Csv) ctx.artifacts.push_back(path + ".meta.json");
    ctx.log(name + ": " + std::to_string(grid.flagged.size()) + " flagged edges");
  }
  write_manifest(ctx);
  ctx.out << "wrote " << job.surfaces.size() << " surfaces to " << ctx.inv.out_dir << '\n';
  return kExitOk;
}

int cmd_probe(Context& ctx) {
  const ProbeJob job = parse_probe_job(ctx.config);
  const LabeledDataset data = job.data.load();
  const Model model = make_model(job.model, job.init_seed);
  ctx.seeds = {{"seed", job.seed}, {"init_seed", job.init_seed}};
  ProbeReport rep = estimate_assumption1_constants(model, job.region, data, job.x_radius, job.n_pairs, job.seed,
                                                   job.min_sep);
  if (job.theta) {
    const Vector& th = *job.theta;
    AttackSpec spec{job.ball.value_or(NormBall{Norm::L2, 0.0}), AttackMethod::Pgd,
                    {20, std::max(job.ball ? job.ball->epsilon / 4.0 : 0.1, 1e-12), false, job.seed}};
    const ScalarFn L = [&](const Vector& t) { return adversarial_batch_loss(model, t, data, spec, {}, false).loss; };
    const VectorFn G = [&](const Vector& t) { return adversarial_batch_loss(model, t, data, spec).grad; };
    rep.spectral_norm = hessian_spectral_norm(G, th, 1e-8, 1000, 1e-4, job.seed).value;
    rep.epsilon_sharpness = epsilon_sharpness(L, G, th, job.sharpness_radius, job.sharpness_restarts, job.seed).value;
    if (job.ball && job.ball->epsilon > 0.0) {
      // curvature of the inner maximization at the first data point
      const Example& ex = data[0];
      const auto a = data.input_dim() <= 3 ? argmax_oracle(model, th, ex.x, ex.y, *job.ball, 61, 3, job.seed)
                                           : attack_example(model, th, ex, spec, 0);
      rep.curvature_c = interior_optimum_check(model, th, ex.x, a.x_prime, ex.y, *job.ball).c;
    }
  }
  const std::string path = ctx.path("probe_report.json");
  write_text(path, rep.to_json() + "\n");
  ctx.artifacts.push_back(path);
  write_manifest(ctx);
  ctx.out << "C_theta=" << rep.c_theta << " C_theta_theta=" << rep.c_theta_theta << " C_theta_x=" << rep.c_theta_x
          << '\n';
  return kExitOk;
}

int cmd_entropy(Context& ctx) {
  const EntropyJob job = parse_entropy_job(ctx.config);
  const LabeledDataset data = job.data.load();
  const Model model = make_model({job.model, 2, {}, Activation::Swish}, 0);
  ctx.seeds = {{"seed", job.seed}, {"pgd_seed", job.pgd.seed}};
  const ScalarFn loss = make_variant_loss(model, data, job.variant, job.epsilon, job.pgd);
  json rows = json::array();
  std::string csv = "theta1,theta2,neg_F,grad1,grad2,hess11,hess12,hess22,smoothness_bound\n";
  char buf[512];
  for (const auto& th : job.thetas) {
    const auto le = local_entropy_exact(loss, th, job.gamma, job.quadrature);
    rows.push_back({{"theta", vec_json(th)},
                    {"value", le.value},
                    {"gradient", vec_json(le.gradient)},
                    {"hessian", {vec_json(le.hessian.row(0)), vec_json(le.hessian.row(1))}},
                    {"mean", vec_json(le.mean)},
                    {"smoothness_bound", le.smoothness_bound}});
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", th[0], th[1], le.value,
                  le.gradient[0], le.gradient[1], le.hessian(0, 0), le.hessian(0, 1), le.hessian(1, 1),
                  le.smoothness_bound);
    csv += buf;
  }
  const std::string jp = ctx.path("entropy_table.json"), cp = ctx.path("entropy_table.csv");
  write_text(jp, json{{"gamma", job.gamma}, {"variant", to_string(job.variant)}, {"rows", rows}}.dump(2) + "\n");
  write_text(cp, csv);
  ctx.artifacts = {jp, cp};
  write_manifest(ctx);
  ctx.out << "evaluated -F at " << job.thetas.size() << " points\n";
  return kExitOk;
}

int cmd_train(Context& ctx) {
  const ExperimentConfig cfg = parse_experiment(ctx.config);
  ctx.seeds = {{"seed", cfg.seed}};
  if (cfg.data_seed) ctx.seeds["data_seed"] = *cfg.data_seed;
  const TrainingRun run = adversarial_train(cfg);
  const json echo = to_json(cfg);
  const std::string hash = sha256_string(echo.dump());

  std::string lines;
  for (const auto& r : run.records) {
    lines += json{{"epoch", r.epoch},
                  {"train_robust_loss", r.train_robust_loss},
                  {"train_robust_acc", r.train_robust_acc},
                  {"test_robust_acc", r.test_robust_acc},
                  {"test_clean_acc", r.test_clean_acc},
                  {"lr", r.lr},
                  {"outer_steps", r.outer_steps},
                  {"minibatches", r.minibatches},
                  {"wall_time", r.wall_time}}
                 .dump() +
             "\n";
    ctx.log("epoch " + std::to_string(r.epoch) + " loss " + std::to_string(r.train_robust_loss) + " robust acc " +
            std::to_string(r.test_robust_acc));
  }
  const std::string mp = ctx.path("metrics.jsonl"), cp = ctx.path("checkpoint.json");
  write_text(mp, lines);
  json ck{{"theta", vec_json(run.best_theta)},
          {"best_epoch", run.best_epoch},
          {"final_theta", vec_json(run.final_theta)},
          {"config_hash", hash},
          {"config", echo}};
  if (run.aborted)
    ck["abort"] = {{"reason", run.abort_reason},
                   {"epoch", run.abort_epoch},
                   {"batch", run.abort_batch},
                   {"theta", vec_json(run.abort_theta)}};
  write_text(cp, ck.dump(2) + "\n");
  ctx.artifacts = {mp, cp};
  write_manifest(ctx);
  if (run.aborted) {
    ctx.err << "numeric failure in train (epoch " << run.abort_epoch << ", batch " << run.abort_batch
            << "): " << run.abort_reason << '\n';
    return kExitNumeric;
  }
  const auto& last = run.records.back();
  ctx.out << "epochs " << run.records.size() << ", final train robust loss " << last.train_robust_loss
          << ", best test robust acc " << run.records[static_cast<std::size_t>(run.best_epoch - 1)].test_robust_acc
          << " at epoch " << run.best_epoch << '\n';
  return kExitOk;
}

int cmd_verify(Context& ctx) {
  const VerifyJob job = parse_verify_job(ctx.config);
  ctx.seeds = {{"seed", job.seed}};
  const auto results = run_lemma_checks(job.checks, job.seed, ctx.inv.verbosity > 0 ? &ctx.err : nullptr);
  json rows = json::array();
  std::vector<std::string> failed;
  for (const auto& r : results) {
    ctx.out << format_check(r) << '\n';
    rows.push_back({{"name", r.name},
                    {"passed", r.passed},
                    {"detail", r.detail},
                    {"seconds", r.seconds},
                    {"time_limit", r.time_limit}});
    if (!r.passed) failed.push_back(r.name);
  }
  const std::string path = ctx.path("verify_report.json");
  write_text(path, json{{"seed", job.seed}, {"checks", rows}}.dump(2) + "\n");
  ctx.artifacts = {path};
  write_manifest(ctx);
  if (!failed.empty()) {
    std::string names;
    for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
    ctx.err << "failing checks: " << names << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial-training smoothness laboratory", "advsmooth"};
  app.require_subcommand(1);
  Invocation inv;
  std::uint64_t seed = 0;
  const char* names[] = {"surface", "probe", "entropy", "train", "verify-lemmas"};
  const char* help[] = {"sample and export loss surfaces", "estimate smoothness constants",
                        "tabulate the local-entropy objective", "run adversarial training",
                        "run the lemma and property checks"};
  std::vector<CLI::App*> subs;
  for (int i = 0; i < 5; ++i) {
    auto* s = app.add_subcommand(names[i], help[i]);
    s->add_option("-c,--config", inv.config_path, "JSON config file")->required();
    s->add_option("-o,--out", inv.out_dir, "output directory")->capture_default_str();
    s->add_option("-s,--seed", seed, "override the config's master seed");
    s->add_flag("-v,--verbose", inv.verbosity, "progress output (repeat for more)");
    subs.push_back(s);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitConfig;
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) {
      inv.command = names[i];
      if (subs[i]->count("--seed")) inv.seed = seed;
    }
  }

  try {
    Context ctx{inv, read_json_file(inv.config_path), {}, json::object(), out, err};
    if (inv.seed) {
      if (!ctx.config.is_object()) throw ConfigError("$: expected an object");
      ctx.config["seed"] = *inv.seed;
    }
    std::error_code ec;
    fs::create_directories(inv.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + inv.out_dir + "': " + ec.message());
    if (inv.command == "surface") return cmd_surface(ctx);
    if (inv.command == "probe") return cmd_probe(ctx);
    if (inv.command == "entropy") return cmd_entropy(ctx);
    if (inv.command == "train") return cmd_train(ctx);
    return cmd_verify(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure in " << inv.command << ": " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace advsmooth
