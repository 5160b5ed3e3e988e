#include "mtlcvr/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mtlcvr {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse number '" + s + "' in " + context);
  }
}

std::int64_t parse_int(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse integer '" + s + "' in " + context);
  }
}

}  // namespace

// --- hashing ---------------------------------------------------------------

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return fnv1a64(std::span<const char>(bytes.data(), bytes.size()));
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

// --- INI config --------------------------------------------------------------

bool IniFile::has_section(const std::string& name) const {
  return sections.count(name) > 0;
}

const std::map<std::string, std::string>& IniFile::section(
    const std::string& name) const {
  auto it = sections.find(name);
  if (it == sections.end())
    throw ConfigError("missing config section: " + name);
  return it->second;
}

std::string IniFile::get(const std::string& sec, const std::string& key,
                         const std::string& fallback) const {
  auto sit = sections.find(sec);
  if (sit == sections.end()) return fallback;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? fallback : kit->second;
}

double IniFile::get_double(const std::string& sec, const std::string& key,
                           double fallback) const {
  const std::string v = get(sec, key, "");
  return v.empty() ? fallback : parse_double(v, "[" + sec + "] " + key);
}

std::int64_t IniFile::get_int(const std::string& sec, const std::string& key,
                              std::int64_t fallback) const {
  const std::string v = get(sec, key, "");
  return v.empty() ? fallback : parse_int(v, "[" + sec + "] " + key);
}

bool IniFile::get_bool(const std::string& sec, const std::string& key,
                       bool fallback) const {
  const std::string v = get(sec, key, "");
  if (v.empty()) return fallback;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("cannot parse boolean '" + v + "' in [" + sec + "] " + key);
}

IniFile parse_ini(const std::string& text) {
  IniFile ini;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("malformed section header at line " +
                          std::to_string(lineno) + ": " + t);
      section = trim(t.substr(1, t.size() - 2));
      ini.sections[section];
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " +
                        std::to_string(lineno) + ": " + t);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("empty key at line " + std::to_string(lineno));
    ini.sections[section][key] = value;
  }
  return ini;
}

IniFile load_ini(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ini(ss.str());
}

// --- datasets ----------------------------------------------------------------

void write_schema_json(const std::filesystem::path& path,
                       const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& f : schema)
    features.push_back({{"name", f.name},
                        {"vocab_size", f.vocab_size},
                        {"embedding_dim", f.embedding_dim}});
  json doc = {{"format", "mtlcvr-schema"}, {"features", features}};
  open_out(path) << doc.dump(2) << '\n';
}

FeatureSchema read_schema_json(const std::filesystem::path& path) {
  const json doc = json::parse(read_file(path));
  FeatureSchema schema;
  for (const auto& f : doc.at("features"))
    schema.push_back({f.at("name").get<std::string>(),
                      f.at("vocab_size").get<std::size_t>(),
                      f.at("embedding_dim").get<std::size_t>()});
  return schema;
}

void write_events_jsonl(const std::filesystem::path& path,
                        std::span<const ClickEvent> events,
                        const FeatureSchema& schema) {
  std::ofstream out = open_out(path);
  std::string line;
  for (const auto& e : events) {
    if (e.features.size() != schema.size())
      throw std::invalid_argument("event features do not match schema");
    line.clear();
    line += "{\"event_id\":" + std::to_string(e.event_id);
    line += ",\"day\":" + std::to_string(e.day);
    line += ",\"seq\":" + std::to_string(e.seq);
    line += ",\"features\":{";
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (f > 0) line += ',';
      line += '"' + schema[f].name + "\":" + std::to_string(e.features[f]);
    }
    line += "},\"setup_id\":" + std::to_string(e.setup_id);
    line += ",\"advertiser_id\":" + std::to_string(e.advertiser_id);
    line += ",\"converted\":";
    line += e.converted ? "true" : "false";
    line += ",\"true_pcvr\":" + fmt_double(e.true_pcvr);
    line += "}\n";
    out << line;
  }
}

std::vector<ClickEvent> read_events_jsonl(const std::filesystem::path& path,
                                          const FeatureSchema& schema,
                                          std::size_t* malformed_lines) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("missing event log: " + path.string());
  std::vector<ClickEvent> events;
  std::size_t malformed = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const json doc = json::parse(line);
      ClickEvent e;
      e.event_id = doc.at("event_id").get<std::uint64_t>();
      e.day = doc.at("day").get<std::int32_t>();
      e.seq = doc.at("seq").get<std::int32_t>();
      const json& feats = doc.at("features");
      e.features.resize(schema.size());
      for (std::size_t f = 0; f < schema.size(); ++f)
        e.features[f] = feats.at(schema[f].name).get<std::uint32_t>();
      e.setup_id = doc.at("setup_id").get<std::int64_t>();
      e.advertiser_id = doc.at("advertiser_id").get<std::int64_t>();
      e.converted = doc.at("converted").get<bool>();
      e.true_pcvr = doc.at("true_pcvr").get<double>();
      events.push_back(std::move(e));
    } catch (const json::exception&) {
      ++malformed;
    }
  }
  if (malformed_lines != nullptr) *malformed_lines = malformed;
  return events;
}

void write_setups_csv(const std::filesystem::path& path,
                      std::span<const ConversionSetup> setups) {
  std::ofstream out = open_out(path);
  out << "setup_id,advertiser_id,category,base_cvr,daily_budget,"
         "value_per_conversion\n";
  for (const auto& s : setups)
    out << s.setup_id << ',' << s.advertiser_id << ',' << to_string(s.category)
        << ',' << fmt_double(s.base_cvr) << ',' << fmt_double(s.daily_budget)
        << ',' << fmt_double(s.value_per_conversion) << '\n';
}

std::vector<ConversionSetup> read_setups_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("missing setups table: " + path.string());
  std::vector<ConversionSetup> setups;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto parts = split(trim(line), ',');
    if (parts.size() != 6)
      throw std::runtime_error("malformed setups row: " + line);
    ConversionSetup s;
    s.setup_id = parse_int(parts[0], "setups csv");
    s.advertiser_id = parse_int(parts[1], "setups csv");
    s.category = category_from_string(parts[2]);
    s.base_cvr = parse_double(parts[3], "setups csv");
    s.daily_budget = parse_double(parts[4], "setups csv");
    s.value_per_conversion = parse_double(parts[5], "setups csv");
    setups.push_back(s);
  }
  return setups;
}

// --- assignments ---------------------------------------------------------------

void write_assignments_csv(const std::filesystem::path& path,
                           const AssignmentSet& set) {
  std::ofstream out = open_out(path);
  out << "setup_id,label,raw_label,decayed_cvr,decayed_clicks,source,"
         "as_of_day\n";
  for (const auto& a : set.assignments)
    out << a.setup_id << ',' << to_string(a.label) << ','
        << to_string(a.raw_label) << ',' << fmt_double(a.decayed_cvr) << ','
        << fmt_double(a.decayed_clicks) << ',' << to_string(a.source) << ','
        << set.as_of_day << '\n';
}

void write_assignment_meta_json(const std::filesystem::path& path,
                                const AssignmentSet& set,
                                const AssignmentConfig& cfg) {
  json doc = {{"format", "mtlcvr-assignments"},
              {"as_of_day", set.as_of_day},
              {"alpha", set.alpha},
              {"online_threshold", set.online_threshold},
              {"n_setups", set.assignments.size()},
              {"prior_fallbacks", set.prior_fallbacks},
              {"decay_lambda", cfg.decay_lambda},
              {"window_days", cfg.window_days},
              {"min_clicks", cfg.min_clicks},
              {"dwell_days", cfg.dwell_days},
              {"hysteresis_low", cfg.alpha_low()},
              {"hysteresis_high", cfg.alpha_high()}};
  open_out(path) << doc.dump(2) << '\n';
}

AssignmentSet read_assignments_csv(const std::filesystem::path& csv_path,
                                   const std::filesystem::path& meta_path) {
  const json meta = json::parse(read_file(meta_path));
  AssignmentSet set;
  set.as_of_day = meta.at("as_of_day").get<int>();
  set.alpha = meta.at("alpha").get<double>();
  set.online_threshold = meta.at("online_threshold").get<double>();
  set.prior_fallbacks = meta.at("prior_fallbacks").get<std::size_t>();

  std::ifstream in(csv_path, std::ios::binary);
  if (!in)
    throw MissingArtifact("missing assignments: " + csv_path.string());
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto parts = split(trim(line), ',');
    if (parts.size() != 7)
      throw std::runtime_error("malformed assignments row: " + line);
    TaskAssignment a;
    a.setup_id = parse_int(parts[0], "assignments csv");
    a.label = parts[1] == "soft" ? Task::kSoft : Task::kHard;
    a.raw_label = parts[2] == "soft" ? Task::kSoft : Task::kHard;
    a.decayed_cvr = parse_double(parts[3], "assignments csv");
    a.decayed_clicks = parse_double(parts[4], "assignments csv");
    a.source = parts[5] == "stats" ? AssignmentSource::kStats
                                   : AssignmentSource::kCategoryPrior;
    a.sufficient = a.source == AssignmentSource::kStats;
    set.assignments.push_back(a);
  }
  std::sort(set.assignments.begin(), set.assignments.end(),
            [](const TaskAssignment& x, const TaskAssignment& y) {
              return x.setup_id < y.setup_id;
            });
  return set;
}

// --- model checkpoints -----------------------------------------------------------

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kReLU: return "relu";
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::kReLU;
  if (s == "identity") return Activation::kIdentity;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw std::runtime_error("checkpoint: unknown activation " + s);
}

json schema_to_json(const FeatureSchema& schema) {
  json arr = json::array();
  for (const auto& f : schema)
    arr.push_back({{"name", f.name},
                   {"vocab_size", f.vocab_size},
                   {"embedding_dim", f.embedding_dim}});
  return arr;
}

FeatureSchema schema_from_json(const json& arr) {
  FeatureSchema schema;
  for (const auto& f : arr)
    schema.push_back({f.at("name").get<std::string>(),
                      f.at("vocab_size").get<std::size_t>(),
                      f.at("embedding_dim").get<std::size_t>()});
  return schema;
}

json config_to_json(const ModelConfig& cfg) {
  return {{"schema", schema_to_json(cfg.schema)},
          {"num_cross_layers", cfg.num_cross_layers},
          {"num_shared_dense_layers", cfg.num_shared_dense_layers},
          {"shared_dense_width", cfg.shared_dense_width},
          {"tower_widths", cfg.tower_widths},
          {"w_hard", cfg.w_hard},
          {"w_soft", cfg.w_soft},
          {"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed}};
}

ModelConfig config_from_json(const json& doc) {
  ModelConfig cfg;
  cfg.schema = schema_from_json(doc.at("schema"));
  cfg.num_cross_layers = doc.at("num_cross_layers").get<std::size_t>();
  cfg.num_shared_dense_layers =
      doc.at("num_shared_dense_layers").get<std::size_t>();
  cfg.shared_dense_width = doc.at("shared_dense_width").get<std::size_t>();
  cfg.tower_widths = doc.at("tower_widths").get<std::vector<std::size_t>>();
  cfg.w_hard = doc.at("w_hard").get<double>();
  cfg.w_soft = doc.at("w_soft").get<double>();
  cfg.learning_rate = doc.at("learning_rate").get<double>();
  cfg.batch_size = doc.at("batch_size").get<std::size_t>();
  cfg.epochs = doc.at("epochs").get<std::size_t>();
  cfg.seed = doc.at("seed").get<std::uint64_t>();
  return cfg;
}

json embeddings_to_json(const std::vector<EmbeddingTable>& tables) {
  json arr = json::array();
  for (const auto& t : tables)
    arr.push_back({{"name", t.feature_name},
                   {"vocab_size", t.vocab_size},
                   {"dim", t.dim},
                   {"data", t.table.data}});
  return arr;
}

std::vector<EmbeddingTable> embeddings_from_json(const json& arr) {
  std::vector<EmbeddingTable> tables;
  for (const auto& t : arr) {
    EmbeddingTable table(t.at("name").get<std::string>(),
                         t.at("vocab_size").get<std::size_t>(),
                         t.at("dim").get<std::size_t>());
    table.table.data = t.at("data").get<std::vector<double>>();
    if (table.table.data.size() != table.vocab_size * table.dim)
      throw std::runtime_error("checkpoint: embedding size mismatch for " +
                               table.feature_name);
    tables.push_back(std::move(table));
  }
  return tables;
}

json cross_to_json(const std::vector<CrossLayer>& layers) {
  json arr = json::array();
  for (const auto& l : layers)
    arr.push_back({{"weight", l.weight}, {"bias", l.bias}});
  return arr;
}

std::vector<CrossLayer> cross_from_json(const json& arr) {
  std::vector<CrossLayer> layers;
  for (const auto& l : arr) {
    CrossLayer layer;
    layer.weight = l.at("weight").get<std::vector<double>>();
    layer.bias = l.at("bias").get<std::vector<double>>();
    if (layer.weight.size() != layer.bias.size())
      throw std::runtime_error("checkpoint: cross layer size mismatch");
    layers.push_back(std::move(layer));
  }
  return layers;
}

json dense_to_json(const std::vector<DenseLayer>& layers) {
  json arr = json::array();
  for (const auto& l : layers)
    arr.push_back({{"out_dim", l.out_dim()},
                   {"in_dim", l.in_dim()},
                   {"activation", activation_name(l.act)},
                   {"weight", l.weight.data},
                   {"bias", l.bias}});
  return arr;
}

std::vector<DenseLayer> dense_from_json(const json& arr) {
  std::vector<DenseLayer> layers;
  for (const auto& l : arr) {
    DenseLayer layer(l.at("out_dim").get<std::size_t>(),
                     l.at("in_dim").get<std::size_t>(),
                     activation_from(l.at("activation").get<std::string>()));
    layer.weight.data = l.at("weight").get<std::vector<double>>();
    layer.bias = l.at("bias").get<std::vector<double>>();
    if (layer.weight.data.size() != layer.out_dim() * layer.in_dim() ||
        layer.bias.size() != layer.out_dim())
      throw std::runtime_error("checkpoint: dense layer size mismatch");
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const MtlNetwork& net) {
  json doc = {{"format", "mtlcvr-checkpoint"},
              {"version", 1},
              {"kind", "full"},
              {"config", config_to_json(net.config)},
              {"embeddings", embeddings_to_json(net.embeddings)},
              {"shared_cross", cross_to_json(net.shared_cross)},
              {"shared_dense", dense_to_json(net.shared_dense)},
              {"tower_hard", dense_to_json(net.tower_hard)},
              {"tower_soft", dense_to_json(net.tower_soft)}};
  open_out(path) << doc.dump() << '\n';
}

void save_checkpoint(const std::filesystem::path& path,
                     const InferenceModel& model) {
  json doc = {{"format", "mtlcvr-checkpoint"},
              {"version", 1},
              {"kind", "inference"},
              {"provenance", model.provenance},
              {"schema", schema_to_json(model.schema)},
              {"embeddings", embeddings_to_json(model.embeddings)},
              {"shared_cross", cross_to_json(model.shared_cross)},
              {"shared_dense", dense_to_json(model.shared_dense)},
              {"tower_hard", dense_to_json(model.tower)}};
  open_out(path) << doc.dump() << '\n';
}

namespace {
json load_checkpoint_doc(const std::filesystem::path& path,
                         const std::string& expected_kind) {
  const json doc = json::parse(read_file(path));
  if (doc.value("format", "") != "mtlcvr-checkpoint")
    throw std::runtime_error("not a model checkpoint: " + path.string());
  if (doc.value("kind", "") != expected_kind)
    throw std::runtime_error("checkpoint " + path.string() + " has kind '" +
                             doc.value("kind", "?") + "', expected '" +
                             expected_kind + "'");
  return doc;
}
}  // namespace

MtlNetwork load_full_checkpoint(const std::filesystem::path& path) {
  const json doc = load_checkpoint_doc(path, "full");
  MtlNetwork net;
  net.config = config_from_json(doc.at("config"));
  net.embeddings = embeddings_from_json(doc.at("embeddings"));
  net.shared_cross = cross_from_json(doc.at("shared_cross"));
  net.shared_dense = dense_from_json(doc.at("shared_dense"));
  net.tower_hard = dense_from_json(doc.at("tower_hard"));
  net.tower_soft = dense_from_json(doc.at("tower_soft"));
  return net;
}

InferenceModel load_inference_checkpoint(const std::filesystem::path& path) {
  const json doc = load_checkpoint_doc(path, "inference");
  InferenceModel model;
  model.provenance = doc.value("provenance", "");
  model.schema = schema_from_json(doc.at("schema"));
  model.embeddings = embeddings_from_json(doc.at("embeddings"));
  model.shared_cross = cross_from_json(doc.at("shared_cross"));
  model.shared_dense = dense_from_json(doc.at("shared_dense"));
  model.tower = dense_from_json(doc.at("tower_hard"));
  return model;
}

// --- reports -----------------------------------------------------------------

namespace {
json metric_report_to_json(const MetricReport& r) {
  return {{"label", r.label},
          {"n", r.n},
          {"gamma", r.gamma},
          {"mean_log_loss", r.mean_log_loss},
          {"rig", r.rig},
          {"auc", r.auc},
          {"calibration_ratio", r.calibration_ratio}};
}
}  // namespace

void write_metric_report_json(const std::filesystem::path& path,
                              const MetricReport& report,
                              const MetricReport* baseline,
                              const RelativeReport* relative) {
  json doc = {{"format", "mtlcvr-eval-report"},
              {"report", metric_report_to_json(report)}};
  if (baseline != nullptr) doc["baseline"] = metric_report_to_json(*baseline);
  if (relative != nullptr)
    doc["relative"] = {{"rig", relative->rig_delta},
                       {"rig_pct", format_percent(relative->rig_delta)},
                       {"auc", relative->auc_delta},
                       {"auc_pct", format_percent(relative->auc_delta)},
                       {"log_loss", relative->log_loss_delta},
                       {"calibration", relative->calibration_delta}};
  open_out(path) << doc.dump(2) << '\n';
}

std::string render_metric_table(const MetricReport& report,
                                const MetricReport* baseline,
                                const RelativeReport* relative) {
  std::ostringstream out;
  char buf[160];
  auto row = [&](const MetricReport& r) {
    std::snprintf(buf, sizeof(buf), "%-24s %8zu %9.5f %10.5f %9.5f %8.5f %8.3f\n",
                  r.label.c_str(), r.n, r.gamma, r.mean_log_loss, r.rig, r.auc,
                  r.calibration_ratio);
    out << buf;
  };
  std::snprintf(buf, sizeof(buf), "%-24s %8s %9s %10s %9s %8s %8s\n", "model",
                "n", "gamma", "log_loss", "rig", "auc", "calib");
  out << buf;
  row(report);
  if (baseline != nullptr) row(*baseline);
  if (relative != nullptr) {
    out << "relative to " << relative->baseline_label
        << ": RIG " << format_percent(relative->rig_delta) << ", AUC "
        << format_percent(relative->auc_delta) << '\n';
  }
  return out.str();
}

void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const SweepRow> rows) {
  std::ofstream out = open_out(path);
  out << "config_id,w_hard,w_soft,shared_layers,rig_rel,auc\n";
  for (const auto& r : rows)
    out << r.config_id << ',' << fmt_double(r.w_hard) << ','
        << fmt_double(r.w_soft) << ',' << r.shared_layers << ','
        << fmt_double(r.rig_rel) << ',' << fmt_double(r.auc) << '\n';
}

std::string render_sweep_table(std::span<const SweepRow> rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %7s %7s %14s %10s %8s\n", "config",
                "w_hard", "w_soft", "shared_layers", "rig_rel", "auc");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-8s %7.2f %7.2f %14zu %10s %8.5f\n",
                  r.config_id.c_str(), r.w_hard, r.w_soft, r.shared_layers,
                  format_percent(r.rig_rel).c_str(), r.auc);
    out << buf;
  }
  return out.str();
}

namespace {
json opt_to_json(const std::optional<double>& v) {
  return v.has_value() ? json(*v) : json(nullptr);
}

std::string delta_str(const std::optional<double>& ratio) {
  return ratio.has_value() ? format_percent(*ratio - 1.0, 1) : "n/a";
}
}  // namespace

void write_ab_report_json(const std::filesystem::path& path,
                          const AbReport& report) {
  const AbAggregates& a = report.aggregates;
  json groups = json::array();
  for (const auto& g : a.groups)
    groups.push_back({{"name", g.name},
                      {"spend_share_target", g.spend_share_target},
                      {"n_advertisers", g.n_advertisers},
                      {"cpa_ratio", opt_to_json(g.cpa_ratio)},
                      {"cpa_delta", delta_str(g.cpa_ratio)},
                      {"conversion_ratio", opt_to_json(g.conversion_ratio)},
                      {"conversion_delta", delta_str(g.conversion_ratio)}});
  json advertisers = json::array();
  for (const auto& o : report.advertisers)
    advertisers.push_back(
        {{"advertiser_id", o.advertiser_id},
         {"hard_spend_control", o.hard_spend_control},
         {"hard_spend_variant", o.hard_spend_variant},
         {"hard_conv_control", o.hard_conv_control},
         {"hard_conv_variant", o.hard_conv_variant},
         {"total_spend_control", o.total_spend_control},
         {"total_spend_variant", o.total_spend_variant},
         {"cpa_control", opt_to_json(o.cpa_control)},
         {"cpa_variant", opt_to_json(o.cpa_variant)},
         {"cpa_ratio", opt_to_json(o.cpa_ratio)},
         {"conversion_ratio", opt_to_json(o.conversion_ratio)}});
  json doc = {
      {"format", "mtlcvr-ab-report"},
      {"seed", report.seed},
      {"online_threshold", report.online_threshold},
      {"control_model", report.control_model},
      {"variant_model", report.variant_model},
      {"n_events", report.n_events},
      {"hard_routed_events", report.hard_routed_events},
      {"soft_routed_events", report.soft_routed_events},
      {"prior_routed_events", report.prior_routed_events},
      {"aggregates",
       {{"median_cpa_ratio", opt_to_json(a.median_cpa_ratio)},
        {"median_cpa_delta", delta_str(a.median_cpa_ratio)},
        {"median_conversion_ratio", opt_to_json(a.median_conversion_ratio)},
        {"median_conversion_delta", delta_str(a.median_conversion_ratio)},
        {"geomean_cpa_ratio", opt_to_json(a.geomean_cpa_ratio)},
        {"geomean_cpa_delta", delta_str(a.geomean_cpa_ratio)},
        {"geomean_conversion_ratio", opt_to_json(a.geomean_conversion_ratio)},
        {"geomean_conversion_delta", delta_str(a.geomean_conversion_ratio)},
        {"pooled_hard_cpa_ratio", opt_to_json(a.pooled_cpa_ratio)},
        {"pooled_hard_conversion_ratio",
         opt_to_json(a.pooled_conversion_ratio)},
        {"excluded_cpa", a.excluded_cpa},
        {"excluded_conversion", a.excluded_conversion},
        {"groups", groups}}},
      {"advertisers", advertisers}};
  open_out(path) << doc.dump(2) << '\n';
}

void write_ab_advertisers_csv(const std::filesystem::path& path,
                              const AbReport& report) {
  std::ofstream out = open_out(path);
  out << "advertiser_id,hard_spend_control,hard_spend_variant,"
         "hard_conv_control,hard_conv_variant,total_spend_control,"
         "total_spend_variant,cpa_control,cpa_variant,cpa_ratio,"
         "conversion_ratio\n";
  auto opt = [](const std::optional<double>& v) {
    return v.has_value() ? fmt_double(*v) : std::string();
  };
  for (const auto& o : report.advertisers)
    out << o.advertiser_id << ',' << fmt_double(o.hard_spend_control) << ','
        << fmt_double(o.hard_spend_variant) << ',' << o.hard_conv_control
        << ',' << o.hard_conv_variant << ',' << fmt_double(o.total_spend_control)
        << ',' << fmt_double(o.total_spend_variant) << ',' << opt(o.cpa_control)
        << ',' << opt(o.cpa_variant) << ',' << opt(o.cpa_ratio) << ','
        << opt(o.conversion_ratio) << '\n';
}

std::string render_ab_table(const AbReport& report) {
  const AbAggregates& a = report.aggregates;
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %12s %18s\n", "Metric Type",
                "CPA Ratio", "Conversion ratio");
  out << buf;
  auto row = [&](const char* name, const std::optional<double>& cpa,
                 const std::optional<double>& conv) {
    std::snprintf(buf, sizeof(buf), "%-16s %12s %18s\n", name,
                  delta_str(cpa).c_str(), delta_str(conv).c_str());
    out << buf;
  };
  row("Median", a.median_cpa_ratio, a.median_conversion_ratio);
  row("Spend-Weighted", a.geomean_cpa_ratio, a.geomean_conversion_ratio);
  const char* names[3] = {"Group I", "Group II", "Group III"};
  for (std::size_t g = 0; g < a.groups.size() && g < 3; ++g)
    row(names[g], a.groups[g].cpa_ratio, a.groups[g].conversion_ratio);
  std::snprintf(buf, sizeof(buf),
                "excluded advertisers: %zu (cpa), %zu (conversions)\n",
                a.excluded_cpa, a.excluded_conversion);
  out << buf;
  return out.str();
}

void write_ab_report_svg(const std::filesystem::path& path,
                         const AbReport& report) {
  const AbAggregates& agg = report.aggregates;
  struct Bar {
    std::string name;
    std::optional<double> cpa, conv;
  };
  std::vector<Bar> bars = {
      {"Median", agg.median_cpa_ratio, agg.median_conversion_ratio},
      {"Spend-Weighted", agg.geomean_cpa_ratio, agg.geomean_conversion_ratio}};
  const char* names[3] = {"Group I", "Group II", "Group III"};
  for (std::size_t g = 0; g < agg.groups.size() && g < 3; ++g)
    bars.push_back({names[g], agg.groups[g].cpa_ratio,
                    agg.groups[g].conversion_ratio});

  double max_abs = 0.05;
  for (const auto& b : bars) {
    if (b.cpa) max_abs = std::max(max_abs, std::abs(*b.cpa - 1.0));
    if (b.conv) max_abs = std::max(max_abs, std::abs(*b.conv - 1.0));
  }
  const int width = 640, row_h = 34, label_w = 130, top = 40;
  const int height = top + row_h * static_cast<int>(bars.size()) + 20;
  const double mid = label_w + (width - label_w - 20) / 2.0;
  const double scale = (width - label_w - 40) / 2.0 / max_abs;

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  out << "<text x=\"10\" y=\"20\">A/B deltas vs control (CPA: lower is "
         "better, conversions: higher is better)</text>\n";
  out << "<line x1=\"" << mid << "\" y1=\"" << top - 10 << "\" x2=\"" << mid
      << "\" y2=\"" << height - 10 << "\" stroke=\"#888\"/>\n";
  int y = top;
  for (const auto& b : bars) {
    out << "<text x=\"10\" y=\"" << y + 16 << "\">" << b.name << "</text>\n";
    auto bar = [&](const std::optional<double>& ratio, int offset,
                   const char* color) {
      if (!ratio.has_value()) return;
      const double delta = *ratio - 1.0;
      const double w = std::abs(delta) * scale;
      const double x = delta < 0 ? mid - w : mid;
      out << "<rect x=\"" << x << "\" y=\"" << y + offset << "\" width=\""
          << std::max(w, 0.5) << "\" height=\"10\" fill=\"" << color
          << "\"/>\n";
      out << "<text x=\"" << mid + (delta < 0 ? -w - 52 : w + 6) << "\" y=\""
          << y + offset + 9 << "\">" << format_percent(delta, 1)
          << "</text>\n";
    };
    bar(b.cpa, 2, "#c04040");
    bar(b.conv, 16, "#3070b0");
    y += row_h;
  }
  out << "</svg>\n";
}

void write_manifest_json(const std::filesystem::path& path,
                         const Manifest& manifest) {
  json doc = {{"format", "mtlcvr-manifest"},
              {"stage", manifest.stage},
              {"seed", manifest.seed},
              {"config_hash", manifest.config_hash},
              {"input_hashes", manifest.input_hashes},
              {"outputs", manifest.outputs}};
  open_out(path) << doc.dump(2) << '\n';
}

void write_history_csv(const std::filesystem::path& path,
                       std::span<const LossBreakdown> history) {
  std::ofstream out = open_out(path);
  out << "epoch,loss_total,loss_hard,loss_soft,n_hard,n_soft\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << i << ',' << fmt_double(history[i].loss_total) << ','
        << fmt_double(history[i].loss_hard) << ','
        << fmt_double(history[i].loss_soft) << ',' << history[i].n_hard << ','
        << history[i].n_soft << '\n';
}

}  // namespace mtlcvr
