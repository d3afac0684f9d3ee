#include "kflow/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "kflow/errors.hpp"
#include "kflow/io.hpp"

namespace kflow {

namespace {

using json = nlohmann::ordered_json;

// Tracks which keys of an object were consumed so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key) + ": must be finite");
    return x;
  }

  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(field(key) + ": out of range, must be > 0");
    return x;
  }

  long integer(const std::string& key, long fallback, long lo, long hi) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
    const long x = v.get<long>();
    if (x < lo || x > hi)
      throw ConfigError(field(key) + ": out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(field(key) + ": expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  Section child(const std::string& key) { return Section(raw(key), field(key)); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key \"" + field(it.key()) + "\"");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Eigen::VectorXd to_vector(const std::vector<double>& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

InitialConfig parse_initial(Section s, int d) {
  InitialConfig init;
  const std::string kind = s.string("kind", "bimodal");
  if (kind == "maxwellian") {
    init.kind = InitialConfig::Kind::maxwellian;
  } else if (kind == "bimodal") {
    init.kind = InitialConfig::Kind::bimodal;
    init.offset = s.number("offset", init.offset);
    init.var = s.positive("var", init.var);
  } else if (kind == "mixture") {
    init.kind = InitialConfig::Kind::mixture;
    if (!s.has("components")) throw ConfigError(s.field("components") + ": required for kind \"mixture\"");
    const json& comps = s.raw("components");
    if (!comps.is_array() || comps.empty()) throw ConfigError(s.field("components") + ": expected a nonempty array");
    for (std::size_t c = 0; c < comps.size(); ++c) {
      Section cs(comps[c], s.field("components") + "[" + std::to_string(c) + "]");
      GaussianComponent g;
      g.weight = cs.positive("weight", 1.0);
      const auto mean = cs.numbers("mean", std::vector<double>(static_cast<std::size_t>(d), 0.0));
      if (static_cast<int>(mean.size()) != d) throw ConfigError(cs.field("mean") + ": wrong dimension");
      g.mean = to_vector(mean);
      const double var = cs.positive("var", 1.0);
      g.cov = var * Eigen::MatrixXd::Identity(d, d);
      cs.finish();
      init.components.push_back(g);
    }
    double total = 0.0;
    for (const auto& g : init.components) total += g.weight;
    for (auto& g : init.components) g.weight /= total;
  } else if (kind == "values") {
    init.kind = InitialConfig::Kind::values;
    init.values = s.numbers("f", {});
    if (init.values.empty()) throw ConfigError(s.field("f") + ": required for kind \"values\"");
  } else {
    throw ConfigError(s.field("kind") + ": unknown initial kind \"" + kind + "\"");
  }
  if (s.has("targets")) {
    Section t = s.child("targets");
    init.targets.mass = t.positive("mass", 1.0);
    const auto p = t.numbers("momentum", std::vector<double>(static_cast<std::size_t>(d), 0.0));
    if (static_cast<int>(p.size()) != d) throw ConfigError(t.field("momentum") + ": wrong dimension");
    for (int c = 0; c < d; ++c) init.targets.momentum[c] = p[c];
    init.targets.energy = t.positive("energy", d * init.targets.mass);
    t.finish();
  }
  s.finish();
  return init;
}

json initial_json(const InitialConfig& init, int d) {
  json j;
  switch (init.kind) {
    case InitialConfig::Kind::maxwellian:
      j["kind"] = "maxwellian";
      break;
    case InitialConfig::Kind::bimodal:
      j["kind"] = "bimodal";
      j["offset"] = init.offset;
      j["var"] = init.var;
      break;
    case InitialConfig::Kind::mixture: {
      j["kind"] = "mixture";
      json arr = json::array();
      for (const auto& g : init.components) {
        json c;
        c["weight"] = g.weight;
        c["mean"] = std::vector<double>(g.mean.data(), g.mean.data() + g.mean.size());
        c["var"] = g.cov(0, 0);
        arr.push_back(c);
      }
      j["components"] = arr;
      break;
    }
    case InitialConfig::Kind::values:
      j["kind"] = "values";
      j["f"] = init.values;
      break;
  }
  json t;
  t["mass"] = init.targets.mass;
  t["momentum"] = std::vector<double>(init.targets.momentum.begin(), init.targets.momentum.begin() + d);
  t["energy"] = init.targets.energy < 0.0 ? d * init.targets.mass : init.targets.energy;
  j["targets"] = t;
  return j;
}

void check_times(const std::vector<double>& t, const std::string& field, double T) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < 0.0 || t[k] > T + 1e-12) throw ConfigError(field + ": times must lie in [0, T]");
    if (k > 0 && t[k] < t[k - 1]) throw ConfigError(field + ": times must be sorted");
  }
}

json kernel_json(const Kernel& k) {
  json j;
  switch (k.kind()) {
    case KernelKind::constant:
      j["kind"] = "constant";
      j["b"] = k.b();
      break;
    case KernelKind::clamp:
      j["kind"] = "clamp";
      j["lo"] = k.lo();
      j["hi"] = k.hi();
      break;
    case KernelKind::angular:
      j["kind"] = "angular";
      j["base"] = k.base();
      j["amp"] = k.amp();
      break;
  }
  return j;
}

json experiment_json(const Experiment& e, int d) {
  json j;
  j["type"] = experiment_name(e);
  if (const auto* x = std::get_if<ForwardExperiment>(&e)) {
    j["initial"] = initial_json(x->initial, d);
    j["T"] = x->T;
    j["dt_init"] = x->dt_init;
    j["rtol"] = x->rtol;
    j["atol"] = x->atol;
    j["record_dt"] = x->record_dt;
  } else if (const auto* x = std::get_if<DistanceExperiment>(&e)) {
    j["from"] = initial_json(x->from, d);
    j["to"] = initial_json(x->to, d);
    j["K"] = x->K;
    j["tol"] = x->tol;
    j["max_iter"] = x->max_iter;
  } else if (const auto* x = std::get_if<JkoExperiment>(&e)) {
    j["initial"] = initial_json(x->initial, d);
    j["tau"] = x->tau;
    j["T"] = x->T;
    j["K"] = x->K;
    j["tol"] = x->tol;
    j["max_iter"] = x->max_iter;
    j["probe_times"] = x->probe_times;
  } else if (const auto* x = std::get_if<KacExperiment>(&e)) {
    j["initial"] = initial_json(x->initial, d);
    j["N"] = x->N;
    j["T"] = x->T;
    j["replicates"] = x->replicates;
    j["snapshot_times"] = x->snapshot_times;
    j["ou_time"] = x->ou_time;
    j["entropy_samples"] = x->entropy_samples;
    j["log_events"] = x->log_events;
  } else if (const auto* x = std::get_if<ConsistencyExperiment>(&e)) {
    j["initial"] = initial_json(x->initial, d);
    j["N"] = x->N;
    j["replicates"] = x->replicates;
    j["T"] = x->T;
    j["probe_dt"] = x->probe_dt;
  }
  return j;
}

Experiment parse_experiment(Section s, const std::string& type, int d) {
  if (type == "network") {
    s.finish();
    return NetworkExperiment{};
  }
  auto initial = [&](const std::string& key) {
    return s.has(key) ? parse_initial(s.child(key), d) : InitialConfig{};
  };
  if (type == "forward") {
    ForwardExperiment x;
    x.initial = initial("initial");
    x.T = s.positive("T", x.T);
    x.dt_init = s.positive("dt_init", x.dt_init);
    x.rtol = s.positive("rtol", x.rtol);
    x.atol = s.positive("atol", x.atol);
    x.record_dt = s.positive("record_dt", x.record_dt);
    s.finish();
    return x;
  }
  if (type == "distance") {
    DistanceExperiment x;
    x.from = initial("from");
    if (s.has("to")) {
      x.to = parse_initial(s.child("to"), d);
    } else {
      x.to.kind = InitialConfig::Kind::maxwellian;
    }
    x.K = static_cast<int>(s.integer("K", x.K, 1, 4096));
    x.tol = s.positive("tol", x.tol);
    x.max_iter = static_cast<int>(s.integer("max_iter", x.max_iter, 1, 100000));
    s.finish();
    return x;
  }
  if (type == "jko") {
    JkoExperiment x;
    x.initial = initial("initial");
    x.tau = s.positive("tau", x.tau);
    x.T = s.positive("T", x.T);
    x.K = static_cast<int>(s.integer("K", x.K, 1, 4096));
    x.tol = s.positive("tol", x.tol);
    x.max_iter = static_cast<int>(s.integer("max_iter", x.max_iter, 1, 100000));
    x.probe_times = s.numbers("probe_times", x.probe_times);
    check_times(x.probe_times, s.field("probe_times"), x.T);
    s.finish();
    return x;
  }
  if (type == "kac") {
    KacExperiment x;
    x.initial = initial("initial");
    x.N = static_cast<int>(s.integer("N", x.N, 2, 100'000'000));
    x.T = s.number("T", x.T);
    if (x.T < 0.0) throw ConfigError(s.field("T") + ": out of range, must be >= 0");
    x.replicates = static_cast<int>(s.integer("replicates", x.replicates, 1, 100000));
    x.snapshot_times = s.numbers("snapshot_times", x.snapshot_times);
    for (auto& t : x.snapshot_times) t = std::min(t, x.T);
    check_times(x.snapshot_times, s.field("snapshot_times"), x.T);
    x.ou_time = s.positive("ou_time", x.ou_time);
    x.entropy_samples = static_cast<int>(s.integer("entropy_samples", x.entropy_samples, 0, 100'000'000));
    x.log_events = s.boolean("log_events", x.log_events);
    s.finish();
    if (x.initial.kind == InitialConfig::Kind::values)
      throw ConfigError(s.field("initial.kind") + ": particles need a mixture, bimodal or maxwellian datum");
    return x;
  }
  if (type == "consistency") {
    ConsistencyExperiment x;
    x.initial = initial("initial");
    if (s.has("N")) {
      const json& v = s.raw("N");
      if (!v.is_array() || v.empty()) throw ConfigError(s.field("N") + ": expected an array of integers");
      x.N.clear();
      for (const auto& n : v) {
        if (!n.is_number_integer() || n.get<long>() < 2) throw ConfigError(s.field("N") + ": entries must be integers >= 2");
        x.N.push_back(n.get<int>());
      }
    }
    x.replicates = static_cast<int>(s.integer("replicates", x.replicates, 1, 100000));
    x.T = s.positive("T", x.T);
    x.probe_dt = s.positive("probe_dt", x.probe_dt);
    s.finish();
    return x;
  }
  throw ConfigError(s.field("type") + ": unknown experiment type \"" + type + "\"");
}

}  // namespace

std::string experiment_name(const Experiment& e) {
  static const char* names[] = {"network", "forward", "distance", "jko", "kac", "consistency"};
  return names[e.index()];
}

RunConfig parse_config_text(const std::string& text, const std::string& forced_type) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  Section s(root, "");
  RunConfig cfg;
  if (s.has("network")) {
    Section n = s.child("network");
    cfg.network.d = static_cast<int>(n.integer("d", 2, 2, 3));
    cfg.network.V = n.number("V", 3.0);
    cfg.network.h = n.positive("h", 1.0);
    if (cfg.network.V < 0.0) throw ConfigError("network.V: out of range, must be >= 0");
    const double ratio = cfg.network.V / cfg.network.h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) throw ConfigError("network.V: V/h must be an integer");
    n.finish();
  }
  if (s.has("kernel")) {
    Section k = s.child("kernel");
    const std::string kind = k.string("kind", "constant");
    try {
      if (kind == "constant") {
        cfg.kernel = Kernel::constant(k.positive("b", 1.0));
      } else if (kind == "clamp") {
        const double lo = k.positive("lo", 0.5);
        cfg.kernel = Kernel::clamp(lo, k.positive("hi", 2.0));
      } else if (kind == "angular") {
        const double base = k.positive("base", 1.0);
        cfg.kernel = Kernel::angular(base, k.number("amp", 1.0));
      } else {
        throw ConfigError("kernel.kind: unknown kernel kind \"" + kind + "\"");
      }
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("kernel: ") + e.what());
    }
    k.finish();
  }
  std::string type = forced_type;
  if (s.has("experiment")) {
    Section e = s.child("experiment");
    const std::string given = e.string("type", forced_type);
    if (given.empty()) throw ConfigError("experiment.type: required");
    if (!forced_type.empty() && given != forced_type)
      throw ConfigError("experiment.type: config says \"" + given + "\" but the command is \"" + forced_type + "\"");
    type = given;
    cfg.experiment = parse_experiment(std::move(e), type, cfg.network.d);
  } else {
    if (type.empty()) type = "forward";
    cfg.experiment = parse_experiment(Section(json::object(), "experiment"), type, cfg.network.d);
  }
  cfg.output = s.string("output", cfg.output);
  if (s.has("seed")) {
    const json& v = s.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("seed: expected a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  s.finish();
  return cfg;
}

std::string canonical_json(const RunConfig& cfg) {
  json canon;
  canon["network"] = {{"d", cfg.network.d}, {"V", cfg.network.V}, {"h", cfg.network.h}};
  canon["kernel"] = kernel_json(cfg.kernel);
  canon["experiment"] = experiment_json(cfg.experiment, cfg.network.d);
  canon["seed"] = cfg.seed;
  return canon.dump(1) + "\n";
}

RunConfig parse_config(const std::filesystem::path& path, const std::string& forced_type) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text, forced_type);
}

RunConfig default_config(const std::string& type) { return parse_config_text("{}", type.empty() ? "forward" : type); }

DensityState build_initial(const VelocityNetwork& net, const InitialConfig& init) {
  switch (init.kind) {
    case InitialConfig::Kind::maxwellian:
      return maxent_project(net, init.targets);
    case InitialConfig::Kind::bimodal:
      return density_from_mixture(net, bimodal_mixture(net.dim(), init.offset, init.var), init.targets);
    case InitialConfig::Kind::mixture:
      return density_from_mixture(net, GaussianMixture(init.components), init.targets);
    case InitialConfig::Kind::values: {
      if (static_cast<int>(init.values.size()) != net.size())
        throw ConfigError("initial.f: expected " + std::to_string(net.size()) + " node values");
      DensityState f = to_vector(init.values);
      if (!(f.array() > 0.0).all()) throw ConfigError("initial.f: values must be strictly positive");
      return tilt_to_moments(net, f, init.targets);
    }
  }
  throw ConfigError("initial: unknown kind");
}

}  // namespace kflow
