#include "lad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lad {

namespace {

std::string format_number(Scalar v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_number(const std::string& s, Scalar& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line, char delim, bool collapse) {
  std::vector<std::string> out;
  std::string cur;
  bool pending = false;
  for (char c : line) {
    if (c == delim) {
      if (collapse) {
        if (pending) out.push_back(cur);
        pending = false;
      } else {
        out.push_back(trim(cur));
      }
      cur.clear();
    } else {
      cur.push_back(c);
      pending = true;
    }
  }
  if (collapse) {
    if (pending && !trim(cur).empty()) out.push_back(trim(cur));
  } else {
    out.push_back(trim(cur));
  }
  return out;
}

ColumnSpec categorical(std::string name, std::vector<std::string> levels) {
  return {std::move(name), FeatureKind::kCategorical, std::move(levels)};
}
ColumnSpec numeric(std::string name) { return {std::move(name), FeatureKind::kNumeric, {}}; }

std::vector<std::string> prefixed(const std::string& prefix, int first, int last) {
  std::vector<std::string> out;
  for (int i = first; i <= last; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<FeatureMeta> features, std::vector<std::string> class_names)
    : features_(std::move(features)), class_names_(std::move(class_names)) {
  std::set<std::string> seen;
  for (auto& f : features_) {
    if (!seen.insert(f.name).second) throw Error("duplicate feature name '" + f.name + "'");
    if (f.is_categorical()) {
      if (f.levels.empty()) throw Error("categorical feature '" + f.name + "' has no levels");
      std::set<std::string> lv(f.levels.begin(), f.levels.end());
      if (lv.size() != f.levels.size()) throw Error("duplicate level in feature '" + f.name + "'");
      f.lower = 0.0;
      f.upper = static_cast<Scalar>(f.levels.size() - 1);
    }
  }
}

Eigen::Index FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

Scalar FeatureSchema::encode_value(Eigen::Index feature, const std::string& raw) const {
  const FeatureMeta& f = this->feature(feature);
  if (f.is_categorical()) {
    auto it = std::find(f.levels.begin(), f.levels.end(), raw);
    if (it == f.levels.end()) {
      throw Error("unknown level '" + raw + "' for feature '" + f.name + "'");
    }
    return static_cast<Scalar>(it - f.levels.begin());
  }
  Scalar v = 0.0;
  if (!parse_number(raw, v)) {
    throw Error("feature '" + f.name + "': cannot parse '" + raw + "' as a number");
  }
  return v;
}

std::string FeatureSchema::decode_value(Eigen::Index feature, Scalar value) const {
  const FeatureMeta& f = this->feature(feature);
  if (f.is_categorical()) {
    const auto n = static_cast<long>(f.levels.size());
    const long code = std::clamp(std::lround(value), 0L, n - 1);
    return f.levels[static_cast<std::size_t>(code)];
  }
  return format_number(value);
}

Vector FeatureSchema::encode_row(const std::vector<std::string>& raw) const {
  if (static_cast<Eigen::Index>(raw.size()) != dimension()) {
    throw DimensionError("expected " + std::to_string(dimension()) + " values, got " +
                         std::to_string(raw.size()));
  }
  Vector out(dimension());
  for (Eigen::Index i = 0; i < dimension(); ++i) out[i] = encode_value(i, raw[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<std::string> FeatureSchema::decode_row(const VectorRef& values) const {
  if (values.size() != dimension()) throw DimensionError("row dimension mismatch");
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (Eigen::Index i = 0; i < dimension(); ++i) out.push_back(decode_value(i, values[i]));
  return out;
}

FeatureSchema FeatureSchema::with_fitted_bounds(const Matrix& rows) const {
  if (rows.rows() == 0) throw Error("cannot fit bounds on an empty set");
  if (rows.cols() != dimension()) throw DimensionError("row dimension mismatch");
  FeatureSchema out = *this;
  for (Eigen::Index i = 0; i < dimension(); ++i) {
    FeatureMeta& f = out.features_[static_cast<std::size_t>(i)];
    if (f.is_categorical()) continue;
    f.lower = rows.col(i).minCoeff();
    f.upper = rows.col(i).maxCoeff();
    if (!(f.lower < f.upper)) f.upper = f.lower + 1.0;
  }
  return out;
}

std::uint64_t FeatureSchema::hash() const {
  std::ostringstream os;
  for (const auto& f : features_) {
    os << f.name << '\x1f' << (f.is_categorical() ? 'c' : 'n');
    for (const auto& l : f.levels) os << '\x1f' << l;
    os << '\x1e';
  }
  for (const auto& c : class_names_) os << c << '\x1f';
  const std::string s = os.str();
  return fnv1a64(s.data(), s.size());
}

int LabeledSet::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

int LabeledSet::distinct_labels() const {
  return static_cast<int>(std::set<Label>(labels.begin(), labels.end()).size());
}

void LabeledSet::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != instances.rows()) {
    throw Error("instances and labels differ in length");
  }
  if (!instances.allFinite()) throw Error("non-finite feature value");
  for (Label l : labels) {
    if (l < 0) throw Error("negative class label");
  }
}

LabeledSet LabeledSet::subset(const std::vector<std::size_t>& indices) const {
  LabeledSet out;
  out.instances.resize(static_cast<Eigen::Index>(indices.size()), instances.cols());
  out.labels.reserve(indices.size());
  out.row_ids.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = indices[k];
    out.instances.row(static_cast<Eigen::Index>(k)) = instances.row(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
    out.row_ids.push_back(row_ids.empty() ? i : row_ids[i]);
  }
  return out;
}

SchemaSpec load_schema_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema file '" + path + "': " + e.what());
  }
  SchemaSpec spec;
  if (!j.contains("columns") || !j.contains("label")) {
    throw Error("schema file needs 'columns' and 'label'");
  }
  for (const auto& c : j.at("columns")) {
    ColumnSpec col;
    col.name = c.at("name").get<std::string>();
    const auto kind = c.value("kind", std::string("numeric"));
    if (kind == "categorical") {
      col.kind = FeatureKind::kCategorical;
    } else if (kind != "numeric") {
      throw Error("column '" + col.name + "': unknown kind '" + kind + "'");
    }
    if (c.contains("levels")) col.levels = c.at("levels").get<std::vector<std::string>>();
    spec.columns.push_back(std::move(col));
  }
  spec.label = j.at("label").get<std::string>();
  if (j.contains("delimiter")) spec.delimiter = j.at("delimiter").get<std::string>().at(0);
  spec.header = j.value("header", true);
  return spec;
}

SchemaSpec german_credit_spec() {
  SchemaSpec s;
  s.delimiter = ' ';
  s.header = false;
  s.collapse_delimiters = true;
  s.columns = {
      categorical("Status of existing checking account", prefixed("A1", 1, 4)),
      numeric("Duration in month"),
      categorical("Credit history", prefixed("A3", 0, 4)),
      categorical("Purpose", prefixed("A4", 0, 10)),
      numeric("Credit amount"),
      categorical("Savings account/bonds", prefixed("A6", 1, 5)),
      categorical("Present employment since", prefixed("A7", 1, 5)),
      numeric("Installment rate in percentage of disposable income"),
      categorical("Personal status and sex", prefixed("A9", 1, 5)),
      categorical("Other debtors / guarantors", prefixed("A10", 1, 3)),
      numeric("Present residence since"),
      categorical("Property", prefixed("A12", 1, 4)),
      numeric("Age in years"),
      categorical("Other installment plans", prefixed("A14", 1, 3)),
      categorical("Housing", prefixed("A15", 1, 3)),
      numeric("Number of existing credits at this bank"),
      categorical("Job", prefixed("A17", 1, 4)),
      numeric("Number of people being liable to provide maintenance for"),
      categorical("Telephone", prefixed("A19", 1, 2)),
      categorical("Foreign worker", prefixed("A20", 1, 2)),
      categorical("Credit risk", {"1", "2"}),
  };
  s.label = "Credit risk";
  return s;
}

Table parse_table(const std::string& text, const SchemaSpec& spec) {
  Eigen::Index label_col = -1;
  std::vector<FeatureMeta> metas;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    const auto& col = spec.columns[c];
    if (col.name == spec.label) {
      label_col = static_cast<Eigen::Index>(c);
      continue;
    }
    metas.push_back({col.name, col.kind, col.levels, 0.0, 1.0});
    feature_cols.push_back(c);
  }
  if (label_col < 0) throw Error("label column '" + spec.label + "' not among columns");

  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool skip_header = spec.header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (skip_header) {
      skip_header = false;
      continue;
    }
    rows.push_back(split_fields(line, spec.delimiter, spec.collapse_delimiters));
  }
  if (rows.empty()) throw Error("no rows");

  std::vector<std::string> class_names = spec.columns[static_cast<std::size_t>(label_col)].levels;
  if (class_names.empty()) {
    std::set<std::string> distinct;
    for (const auto& r : rows) {
      if (static_cast<std::size_t>(label_col) < r.size()) distinct.insert(r[static_cast<std::size_t>(label_col)]);
    }
    class_names.assign(distinct.begin(), distinct.end());
  }

  FeatureSchema schema(std::move(metas), class_names);
  Table table{{}, schema};
  LabeledSet& data = table.data;
  data.instances.resize(static_cast<Eigen::Index>(rows.size()), schema.dimension());
  data.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    const long row_index = static_cast<long>(r);
    if (fields.size() != spec.columns.size()) {
      throw ParseError("row " + std::to_string(r) + ": expected " + std::to_string(spec.columns.size()) +
                           " fields, got " + std::to_string(fields.size()),
                       row_index);
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string& raw = fields[feature_cols[k]];
      if (raw.empty() || raw == "?") {
        throw ParseError("row " + std::to_string(r) + ": missing value for '" +
                             schema.feature(static_cast<Eigen::Index>(k)).name + "'",
                         row_index);
      }
      const auto& meta = schema.feature(static_cast<Eigen::Index>(k));
      if (!meta.is_categorical()) {
        Scalar v = 0.0;
        if (!parse_number(raw, v)) {
          throw ParseError("row " + std::to_string(r) + ": cannot parse '" + raw + "' for '" + meta.name + "'",
                           row_index);
        }
        data.instances(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
      } else {
        data.instances(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
            schema.encode_value(static_cast<Eigen::Index>(k), raw);
      }
    }
    const std::string& raw_label = fields[static_cast<std::size_t>(label_col)];
    auto it = std::find(class_names.begin(), class_names.end(), raw_label);
    if (it == class_names.end()) {
      throw Error("unknown level '" + raw_label + "' for label '" + spec.label + "'");
    }
    data.labels.push_back(static_cast<Label>(it - class_names.begin()));
    data.row_ids.push_back(r);
  }
  return table;
}

Table load_table(const std::string& path, const SchemaSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open data file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str(), spec);
}

std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train fraction must lie in (0, 1)");
  }
  const int classes = set.num_classes();
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < set.labels.size(); ++i) by_class[static_cast<std::size_t>(set.labels[i])].push_back(i);
  for (int c = 0; c < classes; ++c) {
    const auto n = by_class[static_cast<std::size_t>(c)].size();
    if (n == 1) throw Error("class " + std::to_string(c) + " has fewer than 2 members; cannot stratify");
  }

  const auto n = static_cast<double>(set.labels.size());
  const auto target = static_cast<std::size_t>(std::llround(n * train_fraction));
  std::vector<std::size_t> quota(static_cast<std::size_t>(classes));
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (int c = 0; c < classes; ++c) {
    const double exact = static_cast<double>(by_class[static_cast<std::size_t>(c)].size()) * train_fraction;
    quota[static_cast<std::size_t>(c)] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[static_cast<std::size_t>(c)];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < target && k < remainders.size(); ++k, ++assigned) {
    ++quota[static_cast<std::size_t>(remainders[k].second)];
  }

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (int c = 0; c < classes; ++c) {
    auto members = by_class[static_cast<std::size_t>(c)];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    // Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(members[i - 1], members[j]);
    }
    const auto q = quota[static_cast<std::size_t>(c)];
    train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<long>(q));
    test_idx.insert(test_idx.end(), members.begin() + static_cast<long>(q), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {set.subset(train_idx), set.subset(test_idx)};
}

bool BoundingBox::contains(const VectorRef& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vector BoundingBox::clip(const VectorRef& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

BoundingBox BoundingBox::expanded_to(const VectorRef& x) const {
  return {lower.cwiseMin(x), upper.cwiseMax(x)};
}

Vector BoundingBox::sample(Rng& rng) const {
  Vector out(lower.size());
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    out[i] = lower[i] + (upper[i] - lower[i]) * uniform01(rng);
  }
  return out;
}

BoundingBox bounding_box(const Matrix& rows, double margin_fraction) {
  if (rows.rows() == 0) throw Error("bounding box of an empty set");
  Vector lo = rows.colwise().minCoeff().transpose();
  Vector hi = rows.colwise().maxCoeff().transpose();
  const Vector pad = margin_fraction * (hi - lo);
  return {lo - pad, hi + pad};
}

Scalar max_distance(const VectorRef& x_hat, const Matrix& rows) {
  if (rows.rows() == 0) throw Error("max distance to an empty set");
  if (rows.cols() != x_hat.size()) throw DimensionError("row dimension mismatch");
  return (rows.rowwise() - x_hat.transpose()).rowwise().norm().maxCoeff();
}

MinMaxScaler::MinMaxScaler(const FeatureSchema& schema) {
  const auto d = schema.dimension();
  lower_.resize(d);
  span_.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    lower_[i] = schema.feature(i).lower;
    span_[i] = schema.feature(i).upper - schema.feature(i).lower;
  }
  span_ = (span_.array() > 0.0).select(span_, 1.0);
}

MinMaxScaler::MinMaxScaler(Vector lower, Vector upper) : lower_(std::move(lower)), span_(upper - lower_) {
  span_ = (span_.array() > 0.0).select(span_, 1.0);
}

Vector MinMaxScaler::scale(const VectorRef& x) const {
  if (x.size() != lower_.size()) throw DimensionError("instance dimension mismatch");
  return (x - lower_).cwiseQuotient(span_);
}

Vector MinMaxScaler::unscale(const VectorRef& z) const {
  if (z.size() != lower_.size()) throw DimensionError("instance dimension mismatch");
  return z.cwiseProduct(span_) + lower_;
}

Matrix MinMaxScaler::scale(const Matrix& rows) const {
  if (rows.cols() != lower_.size()) throw DimensionError("row dimension mismatch");
  return (rows.rowwise() - lower_.transpose()).array().rowwise() / span_.transpose().array();
}

}  // namespace lad
