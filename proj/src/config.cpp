#include "robustlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace robustlab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError("config: " + path + ": " + message);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

const json* maybe(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

// numbers plus fraction strings like "8/255"
float number_value(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<float>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    double num = 0, den = 0;
    if (std::sscanf(s.c_str(), "%lf/%lf", &num, &den) == 2 && den != 0.0)
      return static_cast<float>(num / den);
    fail(path, "expected a number or a fraction string, got '" + s + "'");
  }
  fail(path, "expected a number");
}

float get_number(const json& obj, const std::string& key, const std::string& path, float fallback) {
  const json* v = maybe(obj, key);
  return v ? number_value(*v, path + "." + key) : fallback;
}

int get_int(const json& obj, const std::string& key, const std::string& path, int fallback) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<int>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& path, bool fallback) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       const std::string& fallback) {
  const json* v = maybe(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

ModelSpec parse_model(const json& obj, const std::string& path) {
  check_keys(obj, path, {"family", "width_factor", "input_shape", "num_classes", "depth"});
  ModelSpec spec;
  const std::string family = get_string(obj, "family", path, "mlp");
  if (family == "mlp") spec.family = Family::mlp;
  else if (family == "cnn") spec.family = Family::cnn;
  else fail(path + ".family", "expected 'mlp' or 'cnn', got '" + family + "'");
  spec.width_factor = get_int(obj, "width_factor", path, 1);
  const json* shape = maybe(obj, "input_shape");
  if (!shape) fail(path + ".input_shape", "required");
  if (!shape->is_array()) fail(path + ".input_shape", "expected an array of extents");
  for (const auto& e : *shape) {
    if (!e.is_number_integer()) fail(path + ".input_shape", "extents must be integers");
    spec.input_shape.push_back(e.get<int>());
  }
  spec.num_classes = get_int(obj, "num_classes", path, 10);
  spec.depth = get_int(obj, "depth", path, 1);
  return spec;
}

PerturbationModel parse_pm(const json& obj, const std::string& path) {
  check_keys(obj, path, {"norm", "eps"});
  PerturbationModel pm;
  const std::string norm = get_string(obj, "norm", path, "linf");
  if (norm == "linf") pm.norm = Norm::linf;
  else if (norm == "l2") pm.norm = Norm::l2;
  else fail(path + ".norm", "expected 'linf' or 'l2', got '" + norm + "'");
  pm.eps = get_number(obj, "eps", path, 8.0f / 255.0f);
  if (pm.eps < 0.0f) fail(path + ".eps", "must be >= 0");
  return pm;
}

AttackSpec parse_attack(const json& obj, const std::string& path, const AttackSpec& defaults) {
  check_keys(obj, path, {"kind", "steps", "alpha", "random_init", "restarts", "clamp_input"});
  AttackSpec spec = defaults;
  const json* kind = maybe(obj, "kind");
  if (kind) {
    if (!kind->is_string()) fail(path + ".kind", "expected a string");
    const std::string k = kind->get<std::string>();
    if (k == "pgd") spec.kind = AttackKind::pgd;
    else if (k == "fgsm") spec.kind = AttackKind::fgsm;
    else if (k == "none") spec.kind = AttackKind::none;
    else fail(path + ".kind", "expected 'pgd', 'fgsm' or 'none', got '" + k + "'");
  }
  if (spec.kind == AttackKind::fgsm && !maybe(obj, "steps")) spec.steps = 1;
  spec.steps = get_int(obj, "steps", path, spec.steps);
  spec.step_size = get_number(obj, "alpha", path, spec.step_size);
  spec.random_init = get_bool(obj, "random_init", path, spec.random_init);
  spec.restarts = get_int(obj, "restarts", path, spec.restarts);
  spec.clamp_input = get_bool(obj, "clamp_input", path, spec.clamp_input);
  return spec;
}

ScheduleSpec parse_schedule(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"family", "total_epochs", "start_lr", "stages", "decrement", "period", "plateau_end",
              "ramp_end", "end_lr", "max_lr", "peak_fraction"});
  ScheduleSpec spec;
  const std::string family = get_string(obj, "family", path, "piecewise");
  if (family == "piecewise") spec.family = ScheduleFamily::piecewise;
  else if (family == "multiple_decay") spec.family = ScheduleFamily::multiple_decay;
  else if (family == "linear_decay") spec.family = ScheduleFamily::linear_decay;
  else if (family == "cyclic") spec.family = ScheduleFamily::cyclic;
  else if (family == "cosine") spec.family = ScheduleFamily::cosine;
  else fail(path + ".family", "unknown schedule family '" + family + "'");
  spec.total_epochs = get_int(obj, "total_epochs", path, 200);
  spec.start_lr = get_number(obj, "start_lr", path, spec.family == ScheduleFamily::cyclic ? 0.0f : 0.1f);
  spec.decrement = get_number(obj, "decrement", path, 0.01f);
  spec.period = get_int(obj, "period", path, 50);
  spec.plateau_end = get_int(obj, "plateau_end", path, spec.total_epochs / 2);
  spec.ramp_end = get_int(obj, "ramp_end", path, spec.total_epochs * 3 / 4);
  spec.end_lr = get_number(obj, "end_lr", path, 0.01f);
  spec.max_lr = get_number(obj, "max_lr", path, 0.2f);
  spec.peak_fraction = get_number(obj, "peak_fraction", path, 0.4f);
  const json* stages = maybe(obj, "stages");
  if (stages) {
    if (!stages->is_array()) fail(path + ".stages", "expected an array");
    float prev_rate = spec.start_lr;
    for (size_t i = 0; i < stages->size(); ++i) {
      const json& st = (*stages)[i];
      const std::string spath = path + ".stages[" + std::to_string(i) + "]";
      check_keys(st, spath, {"epoch", "rate", "factor"});
      const int epoch = get_int(st, "epoch", spath, -1);
      if (epoch < 0) fail(spath + ".epoch", "required");
      float rate;
      if (maybe(st, "rate")) rate = get_number(st, "rate", spath, 0.0f);
      else if (maybe(st, "factor")) rate = prev_rate / get_number(st, "factor", spath, 10.0f);
      else fail(spath, "needs 'rate' or 'factor'");
      spec.stages.emplace_back(epoch, rate);
      prev_rate = rate;
    }
  } else if (spec.family == ScheduleFamily::piecewise) {
    spec.stages = default_piecewise(spec.total_epochs).stages;
  }
  return spec;
}

RegularizerSpec parse_regularizer(const json& obj, const std::string& path) {
  check_keys(obj, path, {"kind", "lambda", "patch_len", "mixup_alpha", "labeled_fraction"});
  RegularizerSpec spec;
  const std::string kind = get_string(obj, "kind", path, "none");
  if (kind == "none") spec.kind = RegKind::none;
  else if (kind == "l1") spec.kind = RegKind::l1;
  else if (kind == "l2") spec.kind = RegKind::l2;
  else if (kind == "cutout") spec.kind = RegKind::cutout;
  else if (kind == "mixup") spec.kind = RegKind::mixup;
  else if (kind == "semisup") spec.kind = RegKind::semisup;
  else fail(path + ".kind", "unknown regularizer '" + kind + "'");
  spec.lambda = get_number(obj, "lambda", path, 0.0f);
  spec.patch_len = get_int(obj, "patch_len", path, 0);
  spec.mixup_alpha = get_number(obj, "mixup_alpha", path, 1.4f);
  spec.labeled_fraction = get_number(obj, "labeled_fraction", path, 0.5f);
  return spec;
}

DataConfig parse_data(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"kind", "images", "labels", "test_images", "test_labels", "unlabeled_images",
              "unlabeled_labels", "generator", "n", "test_n", "unlabeled_n", "d", "margin", "seed"});
  DataConfig data;
  const std::string kind = get_string(obj, "kind", path, "");
  if (kind == "idx") {
    data.kind = DataConfig::Kind::idx;
    data.images = get_string(obj, "images", path, "");
    data.labels = get_string(obj, "labels", path, "");
    data.test_images = get_string(obj, "test_images", path, "");
    data.test_labels = get_string(obj, "test_labels", path, "");
    data.unlabeled_images = get_string(obj, "unlabeled_images", path, "");
    data.unlabeled_labels = get_string(obj, "unlabeled_labels", path, "");
    if (data.images.empty() || data.labels.empty()) fail(path, "idx data needs images and labels");
    if (data.test_images.empty() || data.test_labels.empty())
      fail(path, "idx data needs test_images and test_labels");
  } else if (kind == "synthetic") {
    data.kind = DataConfig::Kind::synthetic;
    const std::string gen = get_string(obj, "generator", path, "two_gaussians");
    if (gen == "two_gaussians") data.synth.kind = SynthKind::two_gaussians;
    else if (gen == "rings") data.synth.kind = SynthKind::rings;
    else fail(path + ".generator", "unknown generator '" + gen + "'");
    data.synth.n = get_int(obj, "n", path, 512);
    data.synth.test_n = get_int(obj, "test_n", path, 128);
    data.synth.unlabeled_n = get_int(obj, "unlabeled_n", path, 0);
    data.synth.d = get_int(obj, "d", path, 8);
    data.synth.margin = get_number(obj, "margin", path, 2.0f);
    data.synth.seed = static_cast<uint64_t>(get_int(obj, "seed", path, 1));
  } else {
    fail(path + ".kind", "expected 'idx' or 'synthetic'");
  }
  return data;
}

}  // namespace

RunConfigDocument parse_config(const json& doc) {
  const std::string root = "$";
  check_keys(doc, root,
             {"model", "perturbation", "train_attack", "eval_attack", "schedule", "regularizer",
              "weight_decay", "momentum", "batch_size", "epochs", "seed", "val_holdout",
              "eval_subsample", "timing", "allow_decay_with_l2", "data"});
  RunConfigDocument cfg;

  const json* model = maybe(doc, "model");
  if (!model) fail(root + ".model", "required");
  cfg.train.model = parse_model(*model, root + ".model");

  const json* pm = maybe(doc, "perturbation");
  cfg.train.pm = pm ? parse_pm(*pm, root + ".perturbation") : PerturbationModel{};

  AttackSpec train_defaults;  // pgd, 10 steps of 2/255 from random init
  const json* ta = maybe(doc, "train_attack");
  cfg.train.train_attack = ta ? parse_attack(*ta, root + ".train_attack", train_defaults) : train_defaults;

  AttackSpec eval_defaults;
  if (cfg.train.pm.norm == Norm::l2) eval_defaults.step_size = 15.0f / 255.0f;
  const json* ea = maybe(doc, "eval_attack");
  cfg.train.eval_attack = ea ? parse_attack(*ea, root + ".eval_attack", eval_defaults) : eval_defaults;

  const json* sched = maybe(doc, "schedule");
  cfg.train.schedule = sched ? parse_schedule(*sched, root + ".schedule") : default_piecewise(200);

  const json* reg = maybe(doc, "regularizer");
  cfg.train.regularizer = reg ? parse_regularizer(*reg, root + ".regularizer") : RegularizerSpec{};

  cfg.train.weight_decay = get_number(doc, "weight_decay", root, 5e-4f);
  cfg.train.momentum = get_number(doc, "momentum", root, 0.9f);
  cfg.train.batch_size = get_int(doc, "batch_size", root, 128);
  cfg.train.epochs = get_int(doc, "epochs", root, cfg.train.schedule.total_epochs);
  cfg.train.seed = static_cast<uint64_t>(get_int(doc, "seed", root, 0));
  cfg.train.val_holdout = get_int(doc, "val_holdout", root, 0);
  cfg.train.eval_subsample = get_int(doc, "eval_subsample", root, 0);
  cfg.train.timing = get_bool(doc, "timing", root, false);
  cfg.train.allow_decay_with_l2 = get_bool(doc, "allow_decay_with_l2", root, false);

  const json* data = maybe(doc, "data");
  if (!data) fail(root + ".data", "required");
  cfg.data = parse_data(*data, root + ".data");

  validate(cfg.train);
  return cfg;
}

RunConfigDocument load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json resolve_config(const RunConfigDocument& cfg) {
  const TrainConfig& t = cfg.train;
  json model = {{"family", t.model.family == Family::mlp ? "mlp" : "cnn"},
                {"width_factor", t.model.width_factor},
                {"input_shape", t.model.input_shape},
                {"num_classes", t.model.num_classes},
                {"depth", t.model.depth}};
  json pm = {{"norm", t.pm.norm == Norm::linf ? "linf" : "l2"}, {"eps", t.pm.eps}};
  auto attack_json = [](const AttackSpec& a) {
    return json{{"kind", a.kind == AttackKind::pgd ? "pgd" : (a.kind == AttackKind::fgsm ? "fgsm" : "none")},
                {"steps", a.steps},
                {"alpha", a.step_size},
                {"random_init", a.random_init},
                {"restarts", a.restarts},
                {"clamp_input", a.clamp_input}};
  };
  json sched = {{"total_epochs", t.schedule.total_epochs}};
  switch (t.schedule.family) {
    case ScheduleFamily::piecewise: {
      sched["family"] = "piecewise";
      sched["start_lr"] = t.schedule.start_lr;
      json stages = json::array();
      for (const auto& [e, r] : t.schedule.stages) stages.push_back({{"epoch", e}, {"rate", r}});
      sched["stages"] = stages;
      break;
    }
    case ScheduleFamily::multiple_decay:
      sched["family"] = "multiple_decay";
      sched["start_lr"] = t.schedule.start_lr;
      sched["decrement"] = t.schedule.decrement;
      sched["period"] = t.schedule.period;
      break;
    case ScheduleFamily::linear_decay:
      sched["family"] = "linear_decay";
      sched["start_lr"] = t.schedule.start_lr;
      sched["end_lr"] = t.schedule.end_lr;
      sched["plateau_end"] = t.schedule.plateau_end;
      sched["ramp_end"] = t.schedule.ramp_end;
      break;
    case ScheduleFamily::cyclic:
      sched["family"] = "cyclic";
      sched["max_lr"] = t.schedule.max_lr;
      sched["peak_fraction"] = t.schedule.peak_fraction;
      break;
    case ScheduleFamily::cosine:
      sched["family"] = "cosine";
      sched["start_lr"] = t.schedule.start_lr;
      break;
  }
  const char* reg_names[] = {"none", "l1", "l2", "cutout", "mixup", "semisup"};
  json reg = {{"kind", reg_names[static_cast<int>(t.regularizer.kind)]},
              {"lambda", t.regularizer.lambda},
              {"patch_len", t.regularizer.patch_len},
              {"mixup_alpha", t.regularizer.mixup_alpha},
              {"labeled_fraction", t.regularizer.labeled_fraction}};
  json data;
  if (cfg.data.kind == DataConfig::Kind::idx) {
    data = {{"kind", "idx"},
            {"images", cfg.data.images},
            {"labels", cfg.data.labels},
            {"test_images", cfg.data.test_images},
            {"test_labels", cfg.data.test_labels}};
    if (!cfg.data.unlabeled_images.empty()) {
      data["unlabeled_images"] = cfg.data.unlabeled_images;
      data["unlabeled_labels"] = cfg.data.unlabeled_labels;
    }
  } else {
    data = {{"kind", "synthetic"},
            {"generator", cfg.data.synth.kind == SynthKind::two_gaussians ? "two_gaussians" : "rings"},
            {"n", cfg.data.synth.n},
            {"test_n", cfg.data.synth.test_n},
            {"unlabeled_n", cfg.data.synth.unlabeled_n},
            {"d", cfg.data.synth.d},
            {"margin", cfg.data.synth.margin},
            {"seed", static_cast<int64_t>(cfg.data.synth.seed)}};
  }
  return json{{"model", model},
              {"perturbation", pm},
              {"train_attack", attack_json(t.train_attack)},
              {"eval_attack", attack_json(t.eval_attack)},
              {"schedule", sched},
              {"regularizer", reg},
              {"weight_decay", t.weight_decay},
              {"momentum", t.momentum},
              {"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"seed", static_cast<int64_t>(t.seed)},
              {"val_holdout", t.val_holdout},
              {"eval_subsample", t.eval_subsample},
              {"timing", t.timing},
              {"allow_decay_with_l2", t.allow_decay_with_l2},
              {"data", data}};
}

std::string config_digest(const nlohmann::json& resolved) {
  const std::string text = resolved.dump();
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainData load_train_data(const DataConfig& data) {
  TrainData out;
  if (data.kind == DataConfig::Kind::idx) {
    out.train = load_idx(data.images, data.labels);
    out.test = load_idx(data.test_images, data.test_labels);
    out.test.tag = SplitTag::test;
    if (!data.unlabeled_images.empty()) {
      Dataset u = load_idx(data.unlabeled_images, data.unlabeled_labels);
      u.labels.clear();
      u.tag = SplitTag::unlabeled;
      out.unlabeled = std::move(u);
    }
  } else {
    const auto& s = data.synth;
    out.train = gen_synthetic(s.kind, s.n, s.d, s.margin, s.seed);
    out.test = gen_synthetic(s.kind, s.test_n, s.d, s.margin, derive(s.seed, {0x7E57ull}));
    out.test.tag = SplitTag::test;
    if (s.unlabeled_n > 0) {
      Dataset u = gen_synthetic(s.kind, s.unlabeled_n, s.d, s.margin, derive(s.seed, {0x0Aull}));
      u.labels.clear();
      u.tag = SplitTag::unlabeled;
      out.unlabeled = std::move(u);
    }
  }
  return out;
}

}  // namespace robustlab
