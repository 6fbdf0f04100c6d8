#include "mas/experiment.hpp"

#include "mas/degradations.hpp"
#include "mas/image_io.hpp"
#include "mas/metrics.hpp"
#include "mas/toy_priors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <thread>

namespace mas {

namespace {

using ojson = nlohmann::ordered_json;

// Stream tags keep the measurement and solver generators of a cell independent.
constexpr std::uint64_t kMeasureStream = 1;
constexpr std::uint64_t kSolverStream = 2;
constexpr std::uint64_t kTruthStream = 3;

std::mt19937_64 cell_rng(std::uint64_t seed, Index image, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(image), std::uint32_t(stream)};
  return std::mt19937_64(seq);
}

SpectralOperatorD build_operator(const OperatorSpec& spec, const ImageShape& s) {
  if (spec.kind == "identity") return build_identity(s.size());
  if (spec.kind == "mask") {
    std::vector<bool> pix;
    if (spec.mask == "box") {
      pix = box_pixel_mask(s.height, s.width, spec.box_height, spec.box_width);
    } else {
      std::mt19937_64 rng(spec.mask_seed);
      pix = random_pixel_mask(s.height, s.width, spec.masked_fraction, rng);
    }
    return build_mask(broadcast_pixel_mask(pix, s.channels));
  }
  if (spec.kind == "block_downsample") return build_block_downsample(s.channels, s.height, s.width, spec.factor);
  if (spec.kind == "circular_blur")
    return build_circular_blur(s.channels, s.height, s.width, uniform_kernel(spec.kernel_size));
  return build_channel_average(s.channels, s.height, s.width);
}

std::optional<ImageShape> measurement_shape(const OperatorSpec& spec, const ImageShape& s) {
  if (spec.kind == "mask") return std::nullopt;
  if (spec.kind == "block_downsample") return ImageShape{s.channels, s.height / spec.factor, s.width / spec.factor};
  if (spec.kind == "channel_average") return ImageShape{1, s.height, s.width};
  return s;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct Measurement {
  VectorXd y;
  Image backprojection;
};

Measurement make_measurement(const ExperimentConfig& cfg, const Instance& inst, Index image, std::uint64_t seed) {
  auto rng = cell_rng(seed, image, kMeasureStream);
  Measurement m;
  m.y = measure(inst.op, inst.truths[std::size_t(image)].data, cfg.corruption, rng, inst.measurement_shape);
  m.backprojection = Image(cfg.image.channels, cfg.image.height, cfg.image.width, pinv_apply(inst.op, m.y));
  return m;
}

// One solver run; never throws.
CellResult solve_cell(const Instance& inst, const ImageShape& shape, const MethodConfigD& method, const VectorXd& y,
                      Index image, std::uint64_t seed, bool keep_trajectory) {
  CellResult cell;
  cell.image = image;
  cell.seed = seed;
  try {
    auto rng = cell_rng(seed, image, kSolverStream);
    auto rec = run(inst.op, y, inst.prior, inst.schedule, method, rng, RunOptions{false});
    cell.estimate = Image(shape.channels, shape.height, shape.width, rec.x0);
    const Image& truth = inst.truths[std::size_t(image)];
    cell.psnr = psnr(truth, cell.estimate);
    cell.identical = std::isinf(cell.psnr);
    if (shape.height >= 11 && shape.width >= 11) cell.ssim = ssim(truth, cell.estimate);
    cell.residual = (y - apply(inst.op, rec.x0)).norm();
    if (keep_trajectory) cell.trajectory = std::move(rec.trajectory);
    cell.ok = true;
  } catch (const SolverError& e) {
    cell.error = e.what();
    cell.failed_step = e.step();
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

struct Stats {
  std::size_t n = 0;
  double mean = 0;
  double std = 0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= double(v.size());
  if (v.size() > 1) {
    double acc = 0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(acc / double(v.size() - 1));
  }
  return s;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string image_ext(const ImageShape& s) { return s.channels == 1 ? ".pgm" : ".ppm"; }

}  // namespace

bool ExperimentResult::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

unsigned threads_from_env() {
  if (const char* env = std::getenv("MAS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return unsigned(std::min<long>(v, 256));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string method_label(const MethodSpec& spec) { return spec.label.empty() ? spec.name : spec.label; }

MethodConfigD to_method_config(const MethodSpec& spec) {
  MethodConfigD m;
  if (spec.name == "mas") m.kind = MethodKind::mas;
  else if (spec.name == "ddnm") m.kind = MethodKind::ddnm;
  else if (spec.name == "tmpd_scalar") m.kind = MethodKind::tmpd_scalar;
  else m.kind = MethodKind::unconditional;
  m.weights = {spec.eta1, spec.eta2, spec.allow_negative_eta2};
  if (spec.noise.kind == "known_gaussian") m.policy = NoisePolicyD::known_gaussian(spec.noise.sigma_y, spec.noise.inflation);
  else if (spec.noise.kind == "unknown") m.policy = NoisePolicyD::unknown(spec.noise.k, spec.noise.eta1_base);
  else m.policy = NoisePolicyD::noise_free();
  m.rt2 = spec.rt2 == "tweedie_scalar" ? Rt2Mode::tweedie_scalar : Rt2Mode::ratio;
  return m;
}

GaussianMixturePriorD build_prior(const PriorSpec& spec, const ImageShape& s) {
  if (spec.kind == "template_bank") return template_bank_prior(s, spec.templates, spec.tau, spec.seed);
  if (spec.kind == "gaussian")
    return GaussianMixturePriorD::single(VectorXd::Constant(s.size(), spec.mean_value), spec.tau * spec.tau);
  std::vector<GaussianComponent<double>> comps;
  for (std::size_t i = 0; i < spec.means.size(); ++i) {
    const std::string path = "/prior/means/" + std::to_string(i);
    VectorXd mean;
    if (const auto* file = std::get_if<std::string>(&spec.means[i])) {
      Image img;
      try {
        img = read_pnm(*file);
      } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
      }
      if (!(img.shape() == s)) throw ConfigError(path, "image shape does not match /task/image");
      mean = img.data;
    } else {
      const auto& v = std::get<std::vector<double>>(spec.means[i]);
      if (Index(v.size()) != s.size())
        throw ConfigError(path, "expected " + std::to_string(s.size()) + " values, got " + std::to_string(v.size()));
      mean = Eigen::Map<const VectorXd>(v.data(), Index(v.size()));
    }
    comps.push_back({spec.weights[i], std::move(mean), spec.variances[i]});
  }
  return GaussianMixturePriorD(std::move(comps));
}

Instance build_instance(const ExperimentConfig& cfg) {
  const ImageShape& s = cfg.image;
  auto op = build_operator(cfg.op, s);
  auto prior = build_prior(cfg.prior, s);
  using Variant = DiffusionScheduleD::Variant;
  auto sched = DiffusionScheduleD::linear_beta(cfg.schedule.steps,
                                               cfg.schedule.variant == "ddim" ? Variant::ddim : Variant::simple_ancestral,
                                               cfg.schedule.eta);
  std::vector<Image> truths;
  if (!cfg.ground_truth.files.empty()) {
    for (std::size_t i = 0; i < cfg.ground_truth.files.size(); ++i) {
      const std::string path = "/ground_truth/files/" + std::to_string(i);
      Image img;
      try {
        img = read_pnm(cfg.ground_truth.files[i]);
      } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
      }
      if (!(img.shape() == s)) throw ConfigError(path, "image shape does not match /task/image");
      truths.push_back(std::move(img));
    }
  } else {
    for (Index i = 0; i < cfg.ground_truth.count; ++i) {
      auto rng = cell_rng(cfg.ground_truth.seed, i, kTruthStream);
      truths.emplace_back(s.channels, s.height, s.width, sample_prior(prior, rng));
    }
  }
  return {std::move(op), measurement_shape(cfg.op, s), std::move(prior), std::move(sched), std::move(truths)};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunSettings& settings) {
  const Instance inst = build_instance(cfg);
  std::vector<MethodConfigD> methods;
  for (const auto& m : cfg.methods) methods.push_back(to_method_config(m));

  const Index images = Index(inst.truths.size());
  const std::size_t seeds = cfg.seeds.size();
  std::vector<Measurement> meas(std::size_t(images) * seeds);
  parallel_for(meas.size(), settings.threads, [&](std::size_t k) {
    meas[k] = make_measurement(cfg, inst, Index(k / seeds), cfg.seeds[k % seeds]);
  });

  ExperimentResult out;
  out.config_hash = config_hash(cfg);
  out.cells.resize(meas.size() * methods.size());
  parallel_for(out.cells.size(), settings.threads, [&](std::size_t k) {
    const std::size_t mi = k % methods.size();
    const std::size_t ms = k / methods.size();
    const Index image = Index(ms / seeds);
    out.cells[k] = solve_cell(inst, cfg.image, methods[mi], meas[ms].y, image, cfg.seeds[ms % seeds],
                              settings.keep_trajectories);
    out.cells[k].method = mi;
  });
  for (auto& m : meas) out.backprojections.push_back(std::move(m.backprojection));
  return out;
}

std::string metrics_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
  ojson root;
  root["config_hash"] = result.config_hash;
  ojson methods = ojson::array();
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    ojson runs = ojson::array();
    std::vector<double> ps, ss, rs;
    std::size_t failed = 0, identical = 0;
    for (const auto& c : result.cells) {
      if (c.method != mi) continue;
      ojson r;
      r["image"] = c.image;
      r["seed"] = c.seed;
      r["status"] = c.ok ? "ok" : "failed";
      if (c.ok) {
        r["psnr"] = number_or_null(c.psnr);
        r["identical"] = c.identical;
        r["ssim"] = c.ssim ? ojson(*c.ssim) : ojson(nullptr);
        r["residual"] = c.residual;
        if (c.identical) ++identical;
        else ps.push_back(c.psnr);
        if (c.ssim) ss.push_back(*c.ssim);
        rs.push_back(c.residual);
      } else {
        ++failed;
        r["error"] = c.error;
        r["failed_step"] = c.failed_step >= 0 ? ojson(c.failed_step) : ojson(nullptr);
      }
      runs.push_back(std::move(r));
    }
    const Stats p = stats(ps), s = stats(ss), res = stats(rs);
    ojson summary;
    summary["runs"] = runs.size();
    summary["failed"] = failed;
    summary["identical"] = identical;
    summary["psnr_mean"] = p.n ? ojson(p.mean) : ojson(nullptr);
    summary["psnr_std"] = p.n ? ojson(p.std) : ojson(nullptr);
    summary["ssim_mean"] = s.n ? ojson(s.mean) : ojson(nullptr);
    summary["ssim_std"] = s.n ? ojson(s.std) : ojson(nullptr);
    summary["residual_mean"] = res.n ? ojson(res.mean) : ojson(nullptr);
    summary["residual_max"] = res.n ? ojson(*std::max_element(rs.begin(), rs.end())) : ojson(nullptr);
    ojson m;
    m["label"] = method_label(cfg.methods[mi]);
    m["name"] = cfg.methods[mi].name;
    m["summary"] = std::move(summary);
    m["runs"] = std::move(runs);
    methods.push_back(std::move(m));
  }
  root["methods"] = std::move(methods);
  return root.dump(2) + "\n";
}

std::string trajectories_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
  ojson root;
  root["config_hash"] = result.config_hash;
  ojson runs = ojson::array();
  for (const auto& c : result.cells) {
    ojson r;
    r["image"] = c.image;
    r["seed"] = c.seed;
    r["method"] = method_label(cfg.methods[c.method]);
    ojson steps = ojson::array();
    for (const auto& s : c.trajectory) {
      ojson j;
      j["n"] = s.n;
      j["residual"] = number_or_null(s.residual);
      j["prior_residual"] = number_or_null(s.prior_residual);
      j["eta1"] = number_or_null(s.eta1);
      j["eta2"] = number_or_null(s.eta2);
      j["lambda_mean"] = number_or_null(s.lambda_mean);
      j["lambda_min"] = number_or_null(s.lambda_min);
      steps.push_back(std::move(j));
    }
    r["steps"] = std::move(steps);
    runs.push_back(std::move(r));
  }
  root["runs"] = std::move(runs);
  return root.dump() + "\n";
}

void write_manifest(const std::string& out_dir, const std::vector<std::string>& relative_paths) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths = relative_paths;
  std::sort(paths.begin(), paths.end());
  ojson files = ojson::array();
  for (const auto& p : paths) {
    const std::string bytes = read_file((fs::path(out_dir) / p).string());
    files.push_back(ojson{{"path", p}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  write_file_atomic((fs::path(out_dir) / "manifest.json").string(), ojson{{"files", files}}.dump(2) + "\n");
}

void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  auto put = [&](const std::string& rel, const std::string& bytes) {
    write_file_atomic((fs::path(out_dir) / rel).string(), bytes);
    written.push_back(rel);
  };
  const std::string ext = image_ext(cfg.image);
  const Instance inst = build_instance(cfg);
  const std::size_t seeds = cfg.seeds.size();

  put("config.json", to_json(cfg).dump(2) + "\n");
  for (std::size_t i = 0; i < inst.truths.size(); ++i)
    put("images/truth_" + std::to_string(i) + ext, encode_pnm(inst.truths[i]));
  for (std::size_t k = 0; k < result.backprojections.size(); ++k)
    put("images/backprojection_" + std::to_string(k / seeds) + "_seed" + std::to_string(cfg.seeds[k % seeds]) + ext,
        encode_pnm(result.backprojections[k]));
  for (const auto& c : result.cells) {
    if (!c.ok) continue;
    put("images/" + method_label(cfg.methods[c.method]) + "_" + std::to_string(c.image) + "_seed" +
            std::to_string(c.seed) + ext,
        encode_pnm(c.estimate));
  }
  put("metrics.json", metrics_json(cfg, result));
  put("trajectories.json", trajectories_json(cfg, result));
  write_manifest(out_dir, written);
}

// ---------------------------------------------------------------------------
// Sweeps.

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "eta1") return SweepParam::eta1;
  if (name == "eta2") return SweepParam::eta2;
  if (name == "k") return SweepParam::k;
  throw ConfigError("--param", "must be one of \"eta1\" \"eta2\" \"k\"");
}

namespace {

const char* param_name(SweepParam p) {
  switch (p) {
    case SweepParam::eta1: return "eta1";
    case SweepParam::eta2: return "eta2";
    case SweepParam::k: return "k";
  }
  return "?";
}

MethodSpec with_param(MethodSpec m, SweepParam p, double v) {
  switch (p) {
    case SweepParam::eta1: m.eta1 = v; break;
    case SweepParam::eta2: m.eta2 = v; break;
    case SweepParam::k: m.noise.k = v; break;
  }
  return m;
}

}  // namespace

ToyInstance toy_instance() {
  MatrixXd h(1, 2);
  h << 1.0, 0.5;
  VectorXd m(2), y(1);
  m << 0.2, 0.8;
  y << 1.0;
  return {build_dense(h), m, y};
}

SweepResult run_sweep(const ExperimentConfig& cfg, SweepParam param, const std::vector<double>& grid,
                      const RunSettings& settings) {
  if (grid.empty()) throw ConfigError("--grid", "grid is empty");
  const auto it = std::find_if(cfg.methods.begin(), cfg.methods.end(), [](const MethodSpec& m) { return m.name == "mas"; });
  if (it == cfg.methods.end()) throw ConfigError("/methods", "sweep needs a method named \"mas\"");
  const std::string mpath = "/methods/" + std::to_string(it - cfg.methods.begin());
  if (param == SweepParam::k && it->noise.kind != "unknown")
    throw ConfigError(mpath + "/noise/kind", "sweeping k needs the unknown noise policy");
  if (param != SweepParam::k && it->noise.kind == "unknown")
    throw ConfigError(mpath + "/noise/kind", "eta1 and eta2 are scheduled by the unknown noise policy; sweep k");

  const Instance inst = build_instance(cfg);
  const Index images = Index(inst.truths.size());
  const std::size_t seeds = cfg.seeds.size();
  std::vector<Measurement> meas(std::size_t(images) * seeds);
  parallel_for(meas.size(), settings.threads, [&](std::size_t k) {
    meas[k] = make_measurement(cfg, inst, Index(k / seeds), cfg.seeds[k % seeds]);
  });

  SweepResult out;
  out.rows.resize(grid.size() * seeds);
  parallel_for(out.rows.size(), settings.threads, [&](std::size_t k) {
    const double v = grid[k / seeds];
    const std::uint64_t seed = cfg.seeds[k % seeds];
    SweepRow& row = out.rows[k];
    row.value = v;
    row.seed = seed;
    MethodConfigD method;
    try {
      method = to_method_config(with_param(*it, param, v));
      method.weights.validate();
    } catch (const std::exception& e) {
      row.error = e.what();
      return;
    }
    std::vector<double> ps, ss, rs;
    std::size_t identical = 0;
    for (Index i = 0; i < images; ++i) {
      const auto& y = meas[std::size_t(i) * seeds + k % seeds].y;
      const CellResult c = solve_cell(inst, cfg.image, method, y, i, seed, false);
      if (!c.ok) {
        row.error = c.error;
        return;
      }
      if (c.identical) ++identical;
      else ps.push_back(c.psnr);
      if (c.ssim) ss.push_back(*c.ssim);
      rs.push_back(c.residual);
    }
    row.ok = true;
    row.identical = identical == std::size_t(images);
    row.psnr = row.identical ? std::numeric_limits<double>::infinity() : stats(ps).mean;
    if (!ss.empty()) row.ssim = stats(ss).mean;
    row.residual = stats(rs).mean;
  });

  const ToyInstance toy = toy_instance();
  out.toy_prior_mean = toy.m;
  out.toy_measurement = toy.y;
  for (double v : grid) {
    ToyPoint p;
    p.value = v;
    try {
      MasWeightsD w{it->eta1, it->eta2, it->allow_negative_eta2};
      if (param == SweepParam::eta1) w.eta1 = v;
      if (param == SweepParam::eta2) w.eta2 = v;
      // a_t / c_t = 1 on the toy instance, so k plays the role of eta2.
      if (param == SweepParam::k) w = {it->noise.eta1_base, v, false};
      p.x0_star = mas_posterior_mean(toy.op, toy.m, toy.y, w);
      p.ok = true;
    } catch (const std::exception& e) {
      p.error = e.what();
    }
    out.toy.push_back(std::move(p));
  }
  return out;
}

std::string sweep_csv(SweepParam param, const SweepResult& result) {
  std::string out = "param,value,seed,status,psnr,identical,ssim,residual,error\n";
  for (const auto& r : result.rows) {
    out += std::string(param_name(param)) + "," + fmt(r.value) + "," + std::to_string(r.seed) + ",";
    if (r.ok) {
      out += "ok," + (r.identical ? std::string() : fmt(r.psnr)) + "," + (r.identical ? "true" : "false") + "," +
             (r.ssim ? fmt(*r.ssim) : std::string()) + "," + fmt(r.residual) + ",\n";
    } else {
      out += "failed,,,,," + csv_field(r.error) + "\n";
    }
  }
  return out;
}

std::string toy_csv(SweepParam param, const SweepResult& result) {
  std::string out = "param,value,status,x0_1,x0_2,m_1,m_2,y,error\n";
  const std::string tail =
      fmt(result.toy_prior_mean[0]) + "," + fmt(result.toy_prior_mean[1]) + "," + fmt(result.toy_measurement[0]);
  for (const auto& p : result.toy) {
    out += std::string(param_name(param)) + "," + fmt(p.value) + ",";
    if (p.ok) out += "ok," + fmt(p.x0_star[0]) + "," + fmt(p.x0_star[1]) + "," + tail + ",\n";
    else out += "failed,,," + tail + "," + csv_field(p.error) + "\n";
  }
  return out;
}

}  // namespace mas
