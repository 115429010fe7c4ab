#include "sstht/streams.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace sstht {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SchemaDeclaration SchemaDeclaration::parse(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("schema declaration is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("features") || !doc.contains("targets"))
    throw ConfigurationError("schema declaration needs \"features\" and \"targets\"");
  SchemaDeclaration decl;
  std::vector<FeatureSpec> features;
  std::vector<std::string> targets;
  try {
    for (const auto& f : doc.at("features")) {
      const std::string name = f.at("name").get<std::string>();
      const std::string kind = f.value("kind", std::string("numeric"));
      if (kind == "numeric") {
        features.push_back(FeatureSpec::numeric(name));
        if (f.contains("missing_sentinel")) decl.missing_sentinels[name] = f.at("missing_sentinel").get<double>();
      } else if (kind == "nominal") {
        if (f.contains("missing_sentinel")) throw ConfigurationError("sentinel on nominal feature " + name);
        features.push_back(FeatureSpec::nominal(name, f.at("categories").get<std::vector<std::string>>()));
      } else {
        throw ConfigurationError("unknown feature kind '" + kind + "' for " + name);
      }
    }
    for (const auto& t : doc.at("targets")) {
      targets.push_back(t.is_object() ? t.at("name").get<std::string>() : t.get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed schema declaration: ") + e.what());
  }
  decl.schema = StreamSchema(std::move(features), std::move(targets));
  return decl;
}

SchemaDeclaration SchemaDeclaration::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open schema declaration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string SchemaDeclaration::dump() const {
  json doc;
  doc["features"] = json::array();
  for (const auto& f : schema.features()) {
    json jf{{"name", f.name}, {"kind", f.kind == FeatureKind::Nominal ? "nominal" : "numeric"}};
    if (f.kind == FeatureKind::Nominal) jf["categories"] = f.categories;
    if (auto it = missing_sentinels.find(f.name); it != missing_sentinels.end()) jf["missing_sentinel"] = it->second;
    doc["features"].push_back(jf);
  }
  doc["targets"] = schema.targets();
  return doc.dump(2) + "\n";
}

CsvSource::CsvSource(std::filesystem::path path, SchemaDeclaration decl)
    : path_(std::move(path)), decl_(std::move(decl)) {
  open();
}

void CsvSource::open() {
  in_ = std::ifstream(path_);
  if (!in_) throw ConfigurationError("cannot open " + path_.string());
  line_no_ = 0;
  skipped_lines_.clear();
  if (!std::getline(in_, line_)) throw ConfigurationError(path_.string() + ": missing header row");
  ++line_no_;
  if (line_.size() >= 3 && line_.compare(0, 3, "\xEF\xBB\xBF") == 0) line_.erase(0, 3);
  split_fields(line_, fields_);
  header_fields_ = fields_.size();
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < fields_.size(); ++i) index.emplace(std::string(fields_[i]), i);
  auto find = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw ConfigurationError(path_.string() + ": header lacks declared column '" + name + "'");
    return it->second;
  };
  const auto& schema = decl_.schema;
  feature_col_.clear();
  sentinel_.clear();
  target_col_.clear();
  for (const auto& f : schema.features()) {
    feature_col_.push_back(find(f.name));
    auto it = decl_.missing_sentinels.find(f.name);
    sentinel_.push_back(it == decl_.missing_sentinels.end() ? std::nullopt : std::optional<double>(it->second));
  }
  for (const auto& t : schema.targets()) target_col_.push_back(find(t));
}

void CsvSource::restart() { open(); }

std::optional<Instance> CsvSource::next() {
  const auto& schema = decl_.schema;
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (trim(line_).empty()) continue;
    split_fields(line_, fields_);
    if (fields_.size() != header_fields_) {
      skipped_lines_.push_back(line_no_);
      continue;
    }
    Instance x;
    x.features.resize(schema.num_features());
    x.targets.resize(schema.num_targets());
    bool ok = true;
    for (std::size_t j = 0; j < schema.num_features() && ok; ++j) {
      const std::string_view cell = fields_[feature_col_[j]];
      if (schema.is_nominal(j)) {
        if (cell.empty() || cell == "?") {
          x.features[j] = kMissing;
          continue;
        }
        const auto& cats = schema.feature(j).categories;
        std::size_t c = 0;
        while (c < cats.size() && cats[c] != cell) ++c;
        if (c == cats.size()) ok = false;
        else x.features[j] = static_cast<double>(c);
      } else {
        const auto v = parse_double(cell);
        if (!v || !std::isfinite(*v) || (sentinel_[j] && *v == *sentinel_[j])) x.features[j] = kMissing;
        else x.features[j] = *v;
      }
    }
    for (std::size_t t = 0; t < schema.num_targets() && ok; ++t) {
      const auto v = parse_double(fields_[target_col_[t]]);
      if (!v || !std::isfinite(*v)) ok = false;
      else x.targets[t] = *v;
    }
    if (!ok) {
      skipped_lines_.push_back(line_no_);
      continue;
    }
    return x;
  }
  return std::nullopt;
}

std::unique_ptr<CsvSource> read_csv(const std::filesystem::path& path, const SchemaDeclaration& decl) {
  return std::make_unique<CsvSource>(path, decl);
}

std::string_view to_string(GeneratorFamily f) {
  switch (f) {
    case GeneratorFamily::FriedmanMt: return "friedman_mt";
    case GeneratorFamily::PlaneMt: return "plane_mt";
    case GeneratorFamily::MvLike: return "mv_like";
  }
  return "unknown";
}

std::optional<GeneratorFamily> parse_family(std::string_view name) {
  for (auto f : {GeneratorFamily::FriedmanMt, GeneratorFamily::PlaneMt, GeneratorFamily::MvLike})
    if (to_string(f) == name) return f;
  return std::nullopt;
}

void GeneratorSpec::validate() const {
  if (targets < 1) throw ConfigurationError("generator needs at least one target");
  if (length < 1) throw ConfigurationError("generator length must be positive");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigurationError("noise_sd must be non-negative");
  if (!drift) return;
  const std::size_t expected = drift->mode == DriftMode::Synchronous ? 1 : targets;
  if (drift->positions.size() != expected)
    throw ConfigurationError(drift->mode == DriftMode::Synchronous
                                 ? "synchronous drift takes exactly one position"
                                 : "asynchronous drift needs one position per target");
  for (std::size_t p : drift->positions)
    if (p == 0 || p >= length) throw ConfigurationError("drift position must lie strictly inside the stream");
}

StreamSchema GeneratorSource::schema_for(GeneratorFamily family, std::size_t targets) {
  std::vector<FeatureSpec> features;
  switch (family) {
    case GeneratorFamily::FriedmanMt:
    case GeneratorFamily::PlaneMt:
      for (int j = 1; j <= 10; ++j) features.push_back(FeatureSpec::numeric("x" + std::to_string(j)));
      break;
    case GeneratorFamily::MvLike:
      for (int j = 1; j <= 6; ++j) features.push_back(FeatureSpec::numeric("x" + std::to_string(j)));
      features.push_back(FeatureSpec::nominal("color", {"red", "green"}));
      features.push_back(FeatureSpec::nominal("level", {"low", "mid", "high"}));
      features.push_back(FeatureSpec::nominal("flag", {"no", "yes"}));
      features.push_back(FeatureSpec::nominal("region", {"north", "south", "east", "west"}));
      break;
  }
  std::vector<std::string> names;
  for (std::size_t t = 1; t <= targets; ++t) names.push_back("y" + std::to_string(t));
  return StreamSchema(std::move(features), std::move(names));
}

GeneratorSource::GeneratorSource(GeneratorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  schema_ = schema_for(spec_.family, spec_.targets);
  std::mt19937_64 coef(spec_.seed);
  std::uniform_real_distribution<double> slope(0.5, 2.0), offset(-5.0, 5.0);
  for (std::size_t t = 0; t < spec_.targets; ++t) {
    slope_.push_back(slope(coef));
    offset_.push_back(offset(coef));
  }
  restart();
}

void GeneratorSource::restart() {
  rng_.seed(spec_.seed ^ 0x9E3779B97F4A7C15ull);
  index_ = 0;
}

double GeneratorSource::friedman_base(std::span<const double> x, bool drifted) {
  const double a = drifted ? x[3] : x[0];
  const double b = drifted ? x[4] : x[1];
  const double c = drifted ? x[0] : x[2];
  const double e = drifted ? x[1] : x[3];
  const double f = drifted ? x[2] : x[4];
  return 10.0 * std::sin(std::numbers::pi * a * b) + 20.0 * (c - 0.5) * (c - 0.5) + 10.0 * e + 5.0 * f;
}

double GeneratorSource::plane_base(std::span<const double> x, bool drifted) {
  const bool first = drifted ? x[0] < 0 : x[0] > 0;
  return first ? 3.0 + 3.0 * x[1] + 2.0 * x[2] + x[3] : -3.0 + 3.0 * x[4] + 2.0 * x[5] + x[6];
}

double GeneratorSource::mv_base(std::span<const double> x, bool drifted) {
  static constexpr double kRegionOffset[] = {-2.0, 0.0, 1.0, 3.0};
  bool green = x[6] == 1.0;
  if (drifted) green = !green;
  double g = green ? x[0] + 2.0 * x[1] : 0.5 * x[0] + x[1];
  g += 4.0 * x[7];
  g += (x[8] == 1.0 ? 3.0 : -3.0) * x[2];
  g += kRegionOffset[static_cast<std::size_t>(x[9])];
  g += 2.0 * x[3] * x[5];
  return g;
}

double GeneratorSource::base(std::span<const double> x, bool drifted) const {
  switch (spec_.family) {
    case GeneratorFamily::FriedmanMt: return friedman_base(x, drifted);
    case GeneratorFamily::PlaneMt: return plane_base(x, drifted);
    case GeneratorFamily::MvLike: return mv_base(x, drifted);
  }
  return 0.0;
}

void GeneratorSource::draw_features(std::vector<double>& x) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (spec_.family) {
    case GeneratorFamily::FriedmanMt:
      x.resize(10);
      for (auto& v : x) v = unit(rng_);
      break;
    case GeneratorFamily::PlaneMt: {
      x.resize(10);
      std::uniform_int_distribution<int> sign(0, 1), tri(-1, 1);
      x[0] = sign(rng_) ? 1.0 : -1.0;
      for (std::size_t j = 1; j < 10; ++j) x[j] = tri(rng_);
      break;
    }
    case GeneratorFamily::MvLike: {
      x.resize(10);
      std::uniform_real_distribution<double> u1(-5.0, 5.0), u2(-15.0, -10.0), sym(-1.0, 1.0), u5(0.0, 10.0);
      std::uniform_int_distribution<int> level(0, 2), region(0, 3);
      std::bernoulli_distribution flag(0.3);
      x[0] = u1(rng_);
      x[1] = u2(rng_);
      x[2] = sym(rng_);
      x[3] = unit(rng_);
      x[4] = u5(rng_);
      x[5] = sym(rng_);
      x[6] = x[0] > 0.0 ? 1.0 : 0.0;
      x[7] = level(rng_);
      x[8] = flag(rng_) ? 1.0 : 0.0;
      x[9] = region(rng_);
      break;
    }
  }
}

bool GeneratorSource::drifted(std::size_t target) const {
  if (!spec_.drift) return false;
  const auto& p = spec_.drift->positions;
  return index_ >= (spec_.drift->mode == DriftMode::Synchronous ? p[0] : p[target]);
}

std::optional<Instance> GeneratorSource::next() {
  if (index_ >= spec_.length) return std::nullopt;
  Instance x;
  draw_features(x.features);
  x.targets.resize(spec_.targets);
  std::normal_distribution<double> noise(0.0, spec_.noise_sd > 0.0 ? spec_.noise_sd : 1.0);
  const double clean = base(x.features, false);
  const double shifted = spec_.drift ? base(x.features, true) : clean;
  for (std::size_t t = 0; t < spec_.targets; ++t) {
    const double g = drifted(t) ? shifted : clean;
    x.targets[t] = slope_[t] * g + offset_[t];
    if (spec_.noise_sd > 0.0) x.targets[t] += noise(rng_);
  }
  ++index_;
  return x;
}

std::size_t write_csv(StreamSource& source, const std::filesystem::path& path, std::optional<std::size_t> count) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& schema = source.schema();
  bool first = true;
  for (const auto& f : schema.features()) {
    out << (first ? "" : ",") << f.name;
    first = false;
  }
  for (const auto& t : schema.targets()) out << ',' << t;
  out << '\n';
  std::size_t written = 0;
  while (!count || written < *count) {
    auto x = source.next();
    if (!x) break;
    for (std::size_t j = 0; j < x->features.size(); ++j) {
      if (j) out << ',';
      const double v = x->features[j];
      if (is_missing(v)) out << '?';
      else if (schema.is_nominal(j)) out << schema.feature(j).categories[static_cast<std::size_t>(v)];
      else out << format_double(v);
    }
    for (double y : x->targets) out << ',' << format_double(y);
    out << '\n';
    ++written;
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
  return written;
}

}  // namespace sstht
