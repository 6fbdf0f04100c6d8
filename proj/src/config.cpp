#include "mas/config.hpp"

#include "mas/image_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mas {

namespace {

using json = nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

// Typed access to one JSON object; remembers which keys were read so the
// rest can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const std::string& path() const { return path_; }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(join(path_, key), "missing required key");
    return j_.at(key);
  }

  Reader child(const std::string& key) { return Reader(raw(key), join(path_, key)); }

  template <typename T>
  T req(const std::string& key) {
    return convert<T>(raw(key), join(path_, key));
  }

  template <typename T>
  T opt(const std::string& key, T fallback) {
    return has(key) ? req<T>(key) : fallback;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown key");
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
      return d;
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      // Parsed text yields unsigned for non-negative literals; built documents may hold signed ones.
      const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
      if (!ok) throw ConfigError(path, "expected a non-negative integer");
      return v.get<std::uint64_t>();
    } else {
      static_assert(std::is_same_v<T, Index>);
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      return v.get<Index>();
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool cond, const std::string& path, const std::string& message) {
  if (!cond) throw ConfigError(path, message);
}

template <typename T>
void one_of(const T& value, std::initializer_list<T> allowed, const std::string& path) {
  if (std::find(allowed.begin(), allowed.end(), value) != allowed.end()) return;
  std::string msg = "must be one of";
  for (const auto& a : allowed) msg += " \"" + a + "\"";
  throw ConfigError(path, msg);
}

ImageShape parse_image(Reader r) {
  ImageShape s;
  s.channels = r.opt<Index>("channels", 1);
  s.height = r.req<Index>("height");
  s.width = r.req<Index>("width");
  require(s.channels == 1 || s.channels == 3, join(r.path(), "channels"), "must be 1 or 3");
  require(s.height > 0, join(r.path(), "height"), "must be positive");
  require(s.width > 0, join(r.path(), "width"), "must be positive");
  r.finish();
  return s;
}

OperatorSpec parse_operator(Reader r, const ImageShape& img) {
  OperatorSpec op;
  op.kind = r.req<std::string>("kind");
  const std::string kpath = join(r.path(), "kind");
  one_of<std::string>(op.kind, {"identity", "mask", "block_downsample", "circular_blur", "channel_average"}, kpath);
  if (op.kind == "mask") {
    op.mask = r.req<std::string>("mask");
    one_of<std::string>(op.mask, {"box", "random"}, join(r.path(), "mask"));
    if (op.mask == "box") {
      op.box_height = r.req<Index>("box_height");
      op.box_width = r.req<Index>("box_width");
      require(op.box_height >= 0 && op.box_height <= img.height, join(r.path(), "box_height"),
              "must lie in [0, image height]");
      require(op.box_width >= 0 && op.box_width <= img.width, join(r.path(), "box_width"),
              "must lie in [0, image width]");
      require(op.box_height * op.box_width < img.height * img.width, r.path(), "the box hides every pixel");
    } else {
      op.masked_fraction = r.req<double>("masked_fraction");
      op.mask_seed = r.opt<std::uint64_t>("seed", 0);
      require(op.masked_fraction >= 0.0 && op.masked_fraction < 1.0, join(r.path(), "masked_fraction"),
              "must lie in [0, 1)");
    }
  } else if (op.kind == "block_downsample") {
    op.factor = r.req<Index>("factor");
    require(op.factor >= 1 && img.height % op.factor == 0 && img.width % op.factor == 0, join(r.path(), "factor"),
            "must be positive and divide the image height and width");
  } else if (op.kind == "circular_blur") {
    op.kernel_size = r.req<Index>("kernel_size");
    require(op.kernel_size >= 1 && op.kernel_size % 2 == 1, join(r.path(), "kernel_size"), "must be odd and positive");
    require((img.height == 1 || op.kernel_size <= img.height) && (img.width == 1 || op.kernel_size <= img.width),
            join(r.path(), "kernel_size"), "exceeds the image size");
  } else if (op.kind == "channel_average") {
    require(img.channels == 3, kpath, "channel_average needs a 3-channel image");
  }
  r.finish();
  return op;
}

CorruptionSpecD parse_corruption(Reader r) {
  using Kind = CorruptionSpecD::Kind;
  CorruptionSpecD c;
  const auto kind = r.req<std::string>("kind");
  one_of<std::string>(kind, {"none", "gaussian", "salt_pepper", "periodic", "quantize", "dct_quantize"},
                      join(r.path(), "kind"));
  if (kind == "none") {
    c.kind = Kind::none;
  } else if (kind == "gaussian") {
    c.kind = Kind::gaussian;
    c.sigma = r.req<double>("sigma");
    require(c.sigma >= 0, join(r.path(), "sigma"), "must be >= 0");
  } else if (kind == "salt_pepper") {
    c.kind = Kind::salt_pepper;
    c.fraction = r.req<double>("fraction");
    c.clip = r.opt<bool>("clip", false);
    require(c.fraction >= 0 && c.fraction <= 1, join(r.path(), "fraction"), "must lie in [0, 1]");
  } else if (kind == "periodic") {
    c.kind = Kind::periodic;
    c.amplitude = r.req<double>("amplitude");
    c.frequency = r.req<double>("frequency");
    const auto axis = r.opt<std::string>("axis", "row");
    one_of<std::string>(axis, {"row", "column"}, join(r.path(), "axis"));
    c.axis = axis == "row" ? PeriodicAxis::row : PeriodicAxis::column;
    require(c.amplitude >= 0, join(r.path(), "amplitude"), "must be >= 0");
  } else if (kind == "quantize") {
    c.kind = Kind::quantize;
    c.bits = int(r.req<Index>("bits"));
    require(c.bits >= 1 && c.bits <= 30, join(r.path(), "bits"), "must lie in [1, 30]");
  } else {
    c.kind = Kind::dct_quantize;
    require(r.has("quality_proxy") != r.has("quality"), r.path(), "give exactly one of quality_proxy or quality");
    if (r.has("quality")) {
      const double q = r.req<double>("quality");
      require(q > 0 && q <= 100, join(r.path(), "quality"), "must lie in (0, 100]");
      c.quality_proxy = jpeg_quality_to_proxy(q);
    } else {
      c.quality_proxy = r.req<double>("quality_proxy");
      require(c.quality_proxy >= 0, join(r.path(), "quality_proxy"), "must be >= 0");
    }
  }
  r.finish();
  return c;
}

PriorSpec parse_prior(Reader r) {
  PriorSpec p;
  p.kind = r.req<std::string>("kind");
  one_of<std::string>(p.kind, {"template_bank", "gaussian", "bank"}, join(r.path(), "kind"));
  if (p.kind == "bank") {
    auto numbers = [&](const std::string& key) {
      const auto& arr = r.raw(key);
      const std::string apath = join(r.path(), key);
      require(arr.is_array() && !arr.empty(), apath, "expected a non-empty array");
      std::vector<double> out;
      for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(Reader::convert<double>(arr[i], join(apath, std::to_string(i))));
      return out;
    };
    p.weights = numbers("weights");
    p.variances = numbers("variances");
    const auto& means = r.raw("means");
    const std::string mpath = join(r.path(), "means");
    require(means.is_array(), mpath, "expected an array");
    for (std::size_t i = 0; i < means.size(); ++i) {
      const std::string ipath = join(mpath, std::to_string(i));
      if (means[i].is_string()) {
        p.means.emplace_back(means[i].get<std::string>());
      } else {
        require(means[i].is_array(), ipath, "expected an image path or an array of numbers");
        std::vector<double> v;
        for (std::size_t k = 0; k < means[i].size(); ++k)
          v.push_back(Reader::convert<double>(means[i][k], join(ipath, std::to_string(k))));
        p.means.emplace_back(std::move(v));
      }
    }
    require(p.means.size() == p.weights.size() && p.variances.size() == p.weights.size(), r.path(),
            "weights, means and variances must have the same length");
    double total = 0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      require(p.weights[i] >= 0, join(r.path(), "weights/" + std::to_string(i)), "must be >= 0");
      require(p.variances[i] > 0, join(r.path(), "variances/" + std::to_string(i)), "must be positive");
      total += p.weights[i];
    }
    require(std::abs(total - 1.0) <= 1e-12, join(r.path(), "weights"), "must sum to 1");
    r.finish();
    return p;
  }
  p.tau = r.opt<double>("tau", p.tau);
  require(p.tau > 0, join(r.path(), "tau"), "must be positive");
  if (p.kind == "template_bank") {
    p.templates = r.opt<Index>("templates", p.templates);
    p.seed = r.opt<std::uint64_t>("seed", p.seed);
    require(p.templates >= 1, join(r.path(), "templates"), "must be >= 1");
  } else {
    p.mean_value = r.opt<double>("mean", p.mean_value);
  }
  r.finish();
  return p;
}

GroundTruthSpec parse_ground_truth(Reader r) {
  GroundTruthSpec g;
  if (r.has("files")) {
    const auto& arr = r.raw("files");
    const std::string fpath = join(r.path(), "files");
    require(arr.is_array() && !arr.empty(), fpath, "expected a non-empty array of paths");
    for (std::size_t i = 0; i < arr.size(); ++i)
      g.files.push_back(Reader::convert<std::string>(arr[i], join(fpath, std::to_string(i))));
    g.count = Index(g.files.size());
  } else {
    g.count = r.opt<Index>("count", g.count);
    g.seed = r.opt<std::uint64_t>("seed", g.seed);
    require(g.count >= 1, join(r.path(), "count"), "must be >= 1");
  }
  r.finish();
  return g;
}

ScheduleSpec parse_schedule(Reader r) {
  ScheduleSpec s;
  s.steps = r.req<Index>("steps");
  s.variant = r.opt<std::string>("variant", s.variant);
  one_of<std::string>(s.variant, {"ddim", "simple_ancestral"}, join(r.path(), "variant"));
  if (s.variant == "ddim") {
    s.eta = r.opt<double>("eta", s.eta);
    require(s.eta >= 0 && s.eta <= 1, join(r.path(), "eta"), "must lie in [0, 1]");
  } else {
    s.eta = 0;
  }
  require(s.steps >= 1 && s.steps <= 1000, join(r.path(), "steps"), "must lie in [1, 1000]");
  r.finish();
  return s;
}

NoiseSpec parse_noise(Reader r) {
  NoiseSpec n;
  n.kind = r.req<std::string>("kind");
  one_of<std::string>(n.kind, {"noise_free", "known_gaussian", "unknown"}, join(r.path(), "kind"));
  if (n.kind == "known_gaussian") {
    n.sigma_y = r.req<double>("sigma_y");
    n.inflation = r.opt<double>("inflation", n.inflation);
    require(n.sigma_y >= 0, join(r.path(), "sigma_y"), "must be >= 0");
    require(n.inflation >= 1, join(r.path(), "inflation"), "must be >= 1");
  } else if (n.kind == "unknown") {
    n.k = r.req<double>("k");
    n.eta1_base = r.opt<double>("eta1_base", 0.0);
    require(n.k >= 0, join(r.path(), "k"), "must be >= 0");
    require(n.eta1_base >= -0.4 && n.eta1_base <= 0.1, join(r.path(), "eta1_base"), "must lie in [-0.4, 0.1]");
  }
  r.finish();
  return n;
}

MethodSpec parse_method(Reader r) {
  MethodSpec m;
  m.name = r.req<std::string>("name");
  one_of<std::string>(m.name, {"mas", "ddnm", "tmpd_scalar", "unconditional"}, join(r.path(), "name"));
  m.label = r.opt<std::string>("label", m.name);
  require(!m.label.empty() && m.label.find_first_of("/\\ \t\n,\"") == std::string::npos, join(r.path(), "label"),
          "must be non-empty without separators, quotes or whitespace");
  if (m.name == "mas") {
    m.eta1 = r.opt<double>("eta1", 0.0);
    m.eta2 = r.opt<double>("eta2", 0.0);
    m.allow_negative_eta2 = r.opt<bool>("allow_negative_eta2", false);
    require(m.eta2 >= 0 || m.allow_negative_eta2, join(r.path(), "eta2"), "negative eta2 needs allow_negative_eta2");
  }
  if (m.name == "mas" || m.name == "tmpd_scalar") {
    if (r.has("noise")) m.noise = parse_noise(r.child("noise"));
    if (m.name == "tmpd_scalar") {
      require(m.noise.kind != "unknown", join(r.path(), "noise/kind"), "tmpd_scalar needs a known noise level");
      m.rt2 = r.opt<std::string>("rt2", m.rt2);
      one_of<std::string>(m.rt2, {"ratio", "tweedie_scalar"}, join(r.path(), "rt2"));
    }
  }
  r.finish();
  return m;
}

json corruption_json(const CorruptionSpecD& c) {
  using Kind = CorruptionSpecD::Kind;
  switch (c.kind) {
    case Kind::none: return {{"kind", "none"}};
    case Kind::gaussian: return {{"kind", "gaussian"}, {"sigma", c.sigma}};
    case Kind::salt_pepper: return {{"kind", "salt_pepper"}, {"fraction", c.fraction}, {"clip", c.clip}};
    case Kind::periodic:
      return {{"kind", "periodic"},
              {"amplitude", c.amplitude},
              {"frequency", c.frequency},
              {"axis", c.axis == PeriodicAxis::row ? "row" : "column"}};
    case Kind::quantize: return {{"kind", "quantize"}, {"bits", c.bits}};
    case Kind::dct_quantize: return {{"kind", "dct_quantize"}, {"quality_proxy", c.quality_proxy}};
  }
  return {};
}

json operator_json(const OperatorSpec& op) {
  json j = {{"kind", op.kind}};
  if (op.kind == "mask") {
    j["mask"] = op.mask;
    if (op.mask == "box") {
      j["box_height"] = op.box_height;
      j["box_width"] = op.box_width;
    } else {
      j["masked_fraction"] = op.masked_fraction;
      j["seed"] = op.mask_seed;
    }
  } else if (op.kind == "block_downsample") {
    j["factor"] = op.factor;
  } else if (op.kind == "circular_blur") {
    j["kernel_size"] = op.kernel_size;
  }
  return j;
}

json noise_json(const NoiseSpec& n) {
  json j = {{"kind", n.kind}};
  if (n.kind == "known_gaussian") {
    j["sigma_y"] = n.sigma_y;
    j["inflation"] = n.inflation;
  } else if (n.kind == "unknown") {
    j["k"] = n.k;
    j["eta1_base"] = n.eta1_base;
  }
  return j;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  Reader r(j, "");
  ExperimentConfig cfg;
  {
    Reader task = r.child("task");
    cfg.image = parse_image(task.child("image"));
    cfg.op = parse_operator(task.child("operator"), cfg.image);
    if (task.has("corruption")) cfg.corruption = parse_corruption(task.child("corruption"));
    task.finish();
  }
  const bool image_measurement = cfg.op.kind != "mask";
  using Kind = CorruptionSpecD::Kind;
  if (!image_measurement && (cfg.corruption.kind == Kind::periodic || cfg.corruption.kind == Kind::dct_quantize))
    throw ConfigError("/task/corruption/kind", "periodic and dct_quantize need an image-shaped measurement");

  cfg.prior = parse_prior(r.child("prior"));
  if (r.has("ground_truth")) cfg.ground_truth = parse_ground_truth(r.child("ground_truth"));
  cfg.schedule = parse_schedule(r.child("schedule"));

  const auto& methods = r.raw("methods");
  require(methods.is_array() && !methods.empty(), "/methods", "expected a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string path = "/methods/" + std::to_string(i);
    cfg.methods.push_back(parse_method(Reader(methods[i], path)));
    require(labels.insert(cfg.methods.back().label).second, path + "/label", "duplicate method label");
  }

  if (r.has("seeds")) {
    const auto& seeds = r.raw("seeds");
    require(seeds.is_array() && !seeds.empty(), "/seeds", "expected a non-empty array");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < seeds.size(); ++i)
      cfg.seeds.push_back(Reader::convert<std::uint64_t>(seeds[i], "/seeds/" + std::to_string(i)));
  }
  cfg.output_dir = r.opt<std::string>("output_dir", cfg.output_dir);
  r.finish();
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("", e.what());
  }
  return parse_config_text(text);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["task"] = {{"image", {{"channels", cfg.image.channels}, {"height", cfg.image.height}, {"width", cfg.image.width}}},
               {"operator", operator_json(cfg.op)},
               {"corruption", corruption_json(cfg.corruption)}};
  if (cfg.prior.kind == "template_bank")
    j["prior"] = {{"kind", cfg.prior.kind},
                  {"templates", cfg.prior.templates},
                  {"tau", cfg.prior.tau},
                  {"seed", cfg.prior.seed}};
  else if (cfg.prior.kind == "gaussian")
    j["prior"] = {{"kind", cfg.prior.kind}, {"mean", cfg.prior.mean_value}, {"tau", cfg.prior.tau}};
  else {
    json means = json::array();
    for (const auto& m : cfg.prior.means)
      means.push_back(std::holds_alternative<std::string>(m) ? json(std::get<std::string>(m))
                                                              : json(std::get<std::vector<double>>(m)));
    j["prior"] = {{"kind", cfg.prior.kind},
                  {"weights", cfg.prior.weights},
                  {"means", std::move(means)},
                  {"variances", cfg.prior.variances}};
  }
  if (cfg.ground_truth.files.empty())
    j["ground_truth"] = {{"count", cfg.ground_truth.count}, {"seed", cfg.ground_truth.seed}};
  else
    j["ground_truth"] = {{"files", cfg.ground_truth.files}};
  j["schedule"] = {{"steps", cfg.schedule.steps}, {"variant", cfg.schedule.variant}};
  if (cfg.schedule.variant == "ddim") j["schedule"]["eta"] = cfg.schedule.eta;
  json methods = json::array();
  for (const auto& m : cfg.methods) {
    json mj = {{"name", m.name}, {"label", m.label}};
    if (m.name == "mas") {
      mj["eta1"] = m.eta1;
      mj["eta2"] = m.eta2;
      mj["allow_negative_eta2"] = m.allow_negative_eta2;
    }
    if (m.name == "mas" || m.name == "tmpd_scalar") mj["noise"] = noise_json(m.noise);
    if (m.name == "tmpd_scalar") mj["rt2"] = m.rt2;
    methods.push_back(std::move(mj));
  }
  j["methods"] = std::move(methods);
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Where artifacts land does not change what is computed.
  auto j = to_json(cfg);
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

}  // namespace mas
