#include "scenario/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace scenario {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Rows of a CSV stream, blank and comment lines skipped, with line numbers.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      const std::string t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      fields = split(t);
      return true;
    }
    return false;
  }

  std::vector<std::string> header(const std::vector<std::string>& expected) {
    std::vector<std::string> h;
    if (!next(h)) fail("missing header");
    if (!expected.empty() && h != expected) {
      std::string want;
      for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
      fail("expected header '" + want + "'");
    }
    return h;
  }

  double number(const std::string& field) const {
    double v = 0.0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end) fail("not a number: '" + field + "'");
    return v;
  }

  std::int64_t integer(const std::string& field) const {
    std::int64_t v = 0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end) fail("not an integer: '" + field + "'");
    return v;
  }

  void expect_width(const std::vector<std::string>& fields, std::size_t n) const {
    if (fields.size() != n) {
      fail("expected " + std::to_string(n) + " fields, found " + std::to_string(fields.size()));
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

std::ostream& full_precision(std::ostream& out) { return out << std::setprecision(17); }

}  // namespace

Dataset read_dataset_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  const auto header = reader.header({});
  Index y_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "y") y_col = static_cast<Index>(j);
  }
  const Index width = static_cast<Index>(header.size());
  const Index dim = y_col >= 0 ? width - 1 : width;
  if (dim < 1) reader.fail("no input columns");

  std::vector<double> xs, ys;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    reader.expect_width(fields, header.size());
    for (Index j = 0; j < width; ++j) {
      const double v = reader.number(fields[static_cast<std::size_t>(j)]);
      (j == y_col ? ys : xs).push_back(v);
    }
  }
  const Index n = static_cast<Index>(xs.size()) / dim;
  if (n == 0) reader.fail("no data rows");
  Dataset d;
  d.inputs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(xs.data(), n, dim);
  if (y_col >= 0) d.outputs = Eigen::Map<const VecX>(ys.data(), n);
  return d;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(in, path.string());
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  full_precision(out);
  const Index dim = data.dimension();
  for (Index j = 0; j < dim; ++j) {
    out << (j ? "," : "") << (dim == 1 ? std::string("m") : "m" + std::to_string(j + 1));
  }
  if (data.has_outputs()) out << ",y";
  out << '\n';
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < dim; ++j) out << (j ? "," : "") << data.inputs(i, j);
    if (data.has_outputs()) out << ',' << data.outputs[i];
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<CostRiskRow>& rows) {
  full_precision(out) << "rho,cost,tube,s_star,eps_lower,eps_upper\n";
  for (const auto& r : rows) {
    if (r.error) {
      out << "# rho=" << r.rho << " failed: " << *r.error << '\n';
      continue;
    }
    out << r.rho << ',' << r.cost << ',' << r.tube << ',' << r.complexity << ',' << r.eps_lower << ','
        << r.eps_upper << '\n';
  }
}

std::vector<CostRiskRow> read_sweep_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.header({"rho", "cost", "tube", "s_star", "eps_lower", "eps_upper"});
  std::vector<CostRiskRow> rows;
  std::vector<std::string> f;
  while (reader.next(f)) {
    reader.expect_width(f, 6);
    rows.push_back({reader.number(f[0]), reader.number(f[1]), reader.number(f[2]), reader.integer(f[3]),
                    reader.number(f[4]), reader.number(f[5]), std::nullopt});
  }
  return rows;
}

void write_validation_csv(std::ostream& out, const ValidationReport& report) {
  full_precision(out) << "trial,s_star,empirical_risk,eps_lower,eps_upper,covered\n";
  for (const auto& t : report.trials) {
    out << t.trial << ',' << t.complexity << ',' << t.empirical_risk << ',' << t.eps_lower << ',' << t.eps_upper
        << ',' << (t.covered ? 1 : 0) << '\n';
  }
  out << "# coverage " << report.coverage_count << '/' << report.n_trials << '\n';
}

ValidationReport read_validation_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.header({"trial", "s_star", "empirical_risk", "eps_lower", "eps_upper", "covered"});
  ValidationReport report;
  std::vector<std::string> f;
  while (reader.next(f)) {
    reader.expect_width(f, 6);
    TrialResult t;
    t.trial = reader.integer(f[0]);
    t.complexity = reader.integer(f[1]);
    t.empirical_risk = reader.number(f[2]);
    t.eps_lower = reader.number(f[3]);
    t.eps_upper = reader.number(f[4]);
    const auto c = reader.integer(f[5]);
    if (c != 0 && c != 1) reader.fail("covered must be 0 or 1");
    t.covered = c == 1;
    report.coverage_count += c;
    report.trials.push_back(t);
  }
  report.n_trials = static_cast<std::int64_t>(report.trials.size());
  return report;
}

void write_bounds_csv(std::ostream& out, const std::vector<RiskInterval>& table) {
  out << std::setprecision(12) << "k,eps_lower,eps_upper\n";
  for (const auto& r : table) out << r.query.complexity << ',' << r.lower << ',' << r.upper << '\n';
}

std::vector<RiskInterval> read_bounds_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.header({"k", "eps_lower", "eps_upper"});
  std::vector<RiskInterval> table;
  std::vector<std::string> f;
  while (reader.next(f)) {
    reader.expect_width(f, 3);
    RiskInterval r;
    r.query.complexity = reader.integer(f[0]);
    r.lower = reader.number(f[1]);
    r.upper = reader.number(f[2]);
    table.push_back(r);
  }
  return table;
}

// ---- model JSON

namespace {

json vector_json(const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VecX vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VecX>(v.data(), static_cast<Index>(v.size()));
}

json matrix_json(const MatX& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

MatX matrix_from(const json& j, Index expected_rows) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (static_cast<Index>(rows.size()) != expected_rows) throw std::runtime_error("support_inputs size mismatch");
  const Index dim = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  MatX m(expected_rows, dim);
  for (Index i = 0; i < expected_rows; ++i) {
    if (static_cast<Index>(rows[i].size()) != dim) throw std::runtime_error("ragged support_inputs");
    m.row(i) = Eigen::Map<const VecX>(rows[i].data(), dim).transpose();
  }
  return m;
}

json kernel_json(const KernelSpec& k) {
  return {{"kind", to_string(k.kind)}, {"width", k.width}, {"degree", k.degree}, {"offset", k.offset}};
}

KernelSpec kernel_from(const json& j) {
  KernelSpec k;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") k.kind = KernelKind::linear;
  else if (kind == "gaussian") k.kind = KernelKind::gaussian;
  else if (kind == "polynomial") k.kind = KernelKind::polynomial;
  else throw std::runtime_error("unknown kernel kind '" + kind + "'");
  k.width = j.at("width").get<double>();
  k.degree = j.at("degree").get<int>();
  k.offset = j.at("offset").get<double>();
  k.validate();
  return k;
}

CertificateKind certificate_kind_from(const std::string& s) {
  for (auto k : {CertificateKind::svr, CertificateKind::svdd, CertificateKind::svm_violation,
                 CertificateKind::svm_misclassification}) {
    if (s == to_string(k)) return k;
  }
  throw std::runtime_error("unknown certificate kind '" + s + "'");
}

}  // namespace

const char* StoredModel::method() const {
  switch (model.index()) {
    case 0:
      return "svr";
    case 1:
      return "svdd";
    default:
      return "svm";
  }
}

std::string model_to_json(const StoredModel& stored) {
  json j;
  j["method"] = stored.method();
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        j["kernel"] = kernel_json(m.kernel);
        j["dual_coeffs"] = vector_json(m.dual_coeffs);
        j["support_inputs"] = matrix_json(m.support_inputs);
        j["relax_weight"] = m.relax_weight;
        if constexpr (std::is_same_v<M, SvrModel>) {
          j["offset"] = m.offset;
          j["tube_or_radius"] = m.tube;
          j["ridge_weight"] = m.ridge_weight;
          j["norm_sq"] = m.weight_norm_sq;
          j["cost"] = m.cost();
        } else if constexpr (std::is_same_v<M, SvddModel>) {
          j["offset"] = 0.0;
          j["tube_or_radius"] = m.radius_sq;
          j["norm_sq"] = m.center_norm_sq;
        } else {
          j["offset"] = m.offset;
          j["tube_or_radius"] = 0.0;
          j["norm_sq"] = m.weight_norm_sq;
          j["w_is_zero"] = m.w_is_zero;
          j["class_counts"] = {m.positive_count, m.negative_count};
        }
      },
      stored.model);
  const auto& c = stored.certificate;
  j["n_train"] = stored.n_train;
  j["s_star"] = c.complexity;
  j["certificate"] = {{"kind", to_string(c.kind)},
                      {"lower", c.interval.lower},
                      {"upper", c.interval.upper},
                      {"beta", c.interval.query.confidence_param},
                      {"confidence", c.confidence},
                      {"misclassification_upper", c.semantics == CertificateSemantics::misclassification_upper}};
  return j.dump(2) + "\n";
}

StoredModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    StoredModel out;
    const auto method = j.at("method").get<std::string>();
    auto fill_common = [&](auto& m) {
      m.kernel = kernel_from(j.at("kernel"));
      m.dual_coeffs = vector_from(j.at("dual_coeffs"));
      m.support_inputs = matrix_from(j.at("support_inputs"), m.dual_coeffs.size());
      m.relax_weight = j.at("relax_weight").get<double>();
    };
    if (method == "svr") {
      SvrModel m;
      fill_common(m);
      m.offset = j.at("offset").get<double>();
      m.tube = j.at("tube_or_radius").get<double>();
      m.ridge_weight = j.at("ridge_weight").get<double>();
      m.weight_norm_sq = j.at("norm_sq").get<double>();
      out.model = std::move(m);
    } else if (method == "svdd") {
      SvddModel m;
      fill_common(m);
      m.radius_sq = j.at("tube_or_radius").get<double>();
      m.center_norm_sq = j.at("norm_sq").get<double>();
      out.model = std::move(m);
    } else if (method == "svm") {
      SvmModel m;
      fill_common(m);
      m.offset = j.at("offset").get<double>();
      m.weight_norm_sq = j.at("norm_sq").get<double>();
      m.w_is_zero = j.at("w_is_zero").get<bool>();
      const auto counts = j.at("class_counts").get<std::vector<Index>>();
      if (counts.size() != 2) throw std::runtime_error("class_counts needs two entries");
      m.positive_count = counts[0];
      m.negative_count = counts[1];
      out.model = std::move(m);
    } else {
      throw std::runtime_error("unknown method '" + method + "'");
    }
    out.n_train = j.at("n_train").get<std::int64_t>();
    const auto& c = j.at("certificate");
    auto& cert = out.certificate;
    cert.kind = certificate_kind_from(c.at("kind").get<std::string>());
    cert.complexity = j.at("s_star").get<std::int64_t>();
    cert.interval.query = {out.n_train, cert.complexity, c.at("beta").get<double>()};
    cert.interval.query.validate();
    cert.interval.lower = c.at("lower").get<double>();
    cert.interval.upper = c.at("upper").get<double>();
    cert.interval.root_lower_t = 1.0 - cert.interval.lower;
    cert.interval.root_upper_t = 1.0 - cert.interval.upper;
    cert.confidence = c.at("confidence").get<double>();
    cert.semantics = c.at("misclassification_upper").get<bool>() ? CertificateSemantics::misclassification_upper
                                                                 : CertificateSemantics::violation;
    return out;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed model file: ") + e.what());
  }
}

std::vector<double> parse_number_list(const std::string& text) {
  const std::string t = trim(text);
  auto bad = [&]() -> std::invalid_argument { return std::invalid_argument("cannot parse number list '" + text + "'"); };
  auto number = [&](const std::string& f) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) throw bad();
    return v;
  };
  std::vector<double> out;
  if (t.rfind("pow(", 0) == 0) {
    if (t.back() != ')') throw bad();
    const auto args = split(t.substr(4, t.size() - 5));
    if (args.size() != 2) throw bad();
    const auto slash = args[0].find('/');
    const double base = slash == std::string::npos
                            ? number(args[0])
                            : number(trim(args[0].substr(0, slash))) / number(trim(args[0].substr(slash + 1)));
    const auto dots = args[1].find("..");
    if (dots == std::string::npos) throw bad();
    const double first = number(trim(args[1].substr(0, dots)));
    const double last = number(trim(args[1].substr(dots + 2)));
    if (first != std::floor(first) || last != std::floor(last) || last < first || last - first > 1e6) throw bad();
    for (double l = first; l <= last; l += 1.0) out.push_back(std::pow(base, l));
  } else {
    for (const auto& f : split(t)) out.push_back(number(f));
  }
  return out;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    out.close();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("failed writing " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace scenario
