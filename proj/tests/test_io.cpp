#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "scenario/io.hpp"
#include "scenario/svg_plot.hpp"

using namespace scenario;

namespace {

Dataset small_sinc(std::int64_t n, std::uint64_t seed) {
  SincConfig c;
  c.n_train = n;
  c.seed = seed;
  c.noise_scale = 0.1;
  return gen_sinc(c);
}

}  // namespace

TEST_CASE("dataset csv round trip") {
  const auto d = small_sinc(50, 1);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  CHECK(ss.str().rfind("m,y\n", 0) == 0);
  const auto back = read_dataset_csv(ss);
  CHECK(back.inputs == d.inputs);
  CHECK(back.outputs == d.outputs);

  std::stringstream multi("a,b,y\n1,2,1\n# comment\n\n3,4,-1\n");
  const auto m = read_dataset_csv(multi);
  CHECK(m.size() == 2);
  CHECK(m.dimension() == 2);
  CHECK(m.inputs(1, 1) == 4.0);
  CHECK(m.outputs[1] == -1.0);

  std::stringstream unlabeled("m\n0.5\n1.5\n");
  CHECK_FALSE(read_dataset_csv(unlabeled).has_outputs());
}

TEST_CASE("csv parse errors carry the line number") {
  std::stringstream bad("m,y\n1,2\n3,x\n");
  try {
    read_dataset_csv(bad, "data.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("data.csv:3") != std::string::npos);
  }
  std::stringstream ragged("m,y\n1,2\n3\n");
  CHECK_THROWS_AS(read_dataset_csv(ragged), ParseError);
  std::stringstream header_only("m,y\n");
  CHECK_THROWS_AS(read_dataset_csv(header_only), ParseError);
  std::stringstream wrong("k,lo,hi\n");
  CHECK_THROWS_AS(read_bounds_csv(wrong), ParseError);
  CHECK_THROWS(read_dataset_csv(std::filesystem::path("/nonexistent/file.csv")));
}

TEST_CASE("sweep, validation and bounds csv") {
  std::vector<CostRiskRow> rows(3);
  rows[0] = {0.5, 0.31, 0.2, 12, 0.01, 0.09, std::nullopt};
  rows[1].rho = 0.3;
  rows[1].error = "solver stalled";
  rows[2] = {0.1, 1.0 / 3.0, 0.25, 40, 0.05, 0.2, std::nullopt};
  std::stringstream ss;
  write_sweep_csv(ss, rows);
  CHECK(ss.str().rfind("rho,cost,tube,s_star,eps_lower,eps_upper\n", 0) == 0);
  CHECK(ss.str().find("solver stalled") != std::string::npos);
  const auto back = read_sweep_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].cost == 1.0 / 3.0);
  CHECK(back[1].complexity == 40);

  ValidationReport r;
  r.trials = {{0, 5, 0.02, 0.01, 0.1, true}, {1, 7, 0.2, 0.01, 0.12, false}};
  r.coverage_count = 1;
  r.n_trials = 2;
  std::stringstream vs;
  write_validation_csv(vs, r);
  CHECK(vs.str().find("# coverage 1/2") != std::string::npos);
  const auto vb = read_validation_csv(vs);
  CHECK(vb.n_trials == 2);
  CHECK(vb.coverage_count == 1);
  CHECK(vb.trials[1].empirical_risk == 0.2);

  const auto table = epsilon_table(30, 1e-3);
  std::stringstream bs;
  write_bounds_csv(bs, table);
  const auto tb = read_bounds_csv(bs);
  REQUIRE(tb.size() == 31);
  for (std::size_t k = 0; k < tb.size(); ++k) {
    CHECK(std::abs(tb[k].lower - table[k].lower) <= 1e-12);
    CHECK(std::abs(tb[k].upper - table[k].upper) <= 1e-12);
  }
}

TEST_CASE("model json round trip is exact") {
  const auto d = small_sinc(40, 3);
  const auto svr = fit_svr(d, 0.01, 0.2, KernelSpec::gaussian(1.0));
  StoredModel s{svr, certify(CertificateKind::svr, svr_complexity(svr, d), d.size(), 1e-4), d.size()};
  const auto text = model_to_json(s);
  const auto back = model_from_json(text);
  CHECK(std::string(back.method()) == "svr");
  const auto& m = std::get<SvrModel>(back.model);
  CHECK(m.dual_coeffs == svr.dual_coeffs);
  CHECK(m.support_inputs == svr.support_inputs);
  CHECK(m.offset == svr.offset);
  CHECK(m.tube == svr.tube);
  CHECK(m.cost() == svr.cost());
  CHECK(back.certificate.interval.lower == s.certificate.interval.lower);
  CHECK(back.certificate.interval.upper == s.certificate.interval.upper);
  CHECK(back.certificate.complexity == s.certificate.complexity);
  CHECK(model_to_json(back) == text);
  CHECK((svr_centers(m, d.inputs) - svr_centers(svr, d.inputs)).cwiseAbs().maxCoeff() == 0.0);

  Dataset pts;
  pts.inputs = d.inputs;
  const auto svdd = fit_svdd(pts, 0.1, KernelSpec::gaussian(1.0));
  StoredModel sd{svdd, certify(CertificateKind::svdd, svdd_complexity(svdd, pts), pts.size(), 1e-4), pts.size()};
  CHECK(model_to_json(model_from_json(model_to_json(sd))) == model_to_json(sd));
  CHECK(std::get<SvddModel>(model_from_json(model_to_json(sd)).model).radius_sq == svdd.radius_sq);

  Dataset labels = d;
  for (Index i = 0; i < labels.size(); ++i) labels.outputs[i] = labels.inputs(i, 0) > 0.3 ? 1.0 : -1.0;
  const auto svm = fit_svm(labels, 0.5, KernelSpec::linear());
  StoredModel sm{svm, certify(CertificateKind::svm_misclassification, svm_complexity(svm, labels), labels.size(), 1e-4),
                 labels.size()};
  const auto smb = model_from_json(model_to_json(sm));
  CHECK(std::get<SvmModel>(smb.model).offset == svm.offset);
  CHECK(smb.certificate.semantics == CertificateSemantics::misclassification_upper);
  CHECK(smb.certificate.confidence == sm.certificate.confidence);
}

TEST_CASE("model json rejects bad input") {
  CHECK_THROWS(model_from_json("{not json"));
  CHECK_THROWS(model_from_json(R"({"method":"lasso"})"));
  const auto d = small_sinc(10, 4);
  const auto svr = fit_svr(d, 0.01, 0.2, KernelSpec::gaussian(1.0));
  StoredModel s{svr, certify(CertificateKind::svr, svr_complexity(svr, d), d.size(), 1e-4), d.size()};
  auto text = model_to_json(s);
  const auto pos = text.find("\"svr\"");
  CHECK_THROWS(model_from_json(text.replace(pos, 5, "\"knn\"")));
}

TEST_CASE("atomic file writes") {
  const auto dir = std::filesystem::temp_directory_path() / "scenario_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  write_file_atomically(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  CHECK_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
  CHECK_THROWS(write_file_atomically(dir / "missing" / "x.txt", "x"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("svg plots are well formed and deterministic") {
  const auto b = plot_bounds({{1e-4, epsilon_table(50, 1e-4)}, {1e-8, epsilon_table(50, 1e-8)}});
  CHECK(b.rfind("<svg", 0) == 0);
  CHECK(b.find("</svg>") != std::string::npos);
  CHECK(b == plot_bounds({{1e-4, epsilon_table(50, 1e-4)}, {1e-8, epsilon_table(50, 1e-8)}}));
  std::vector<CostRiskRow> rows{{1.0, 0.5, 0.4, 3, 0.0, 0.2, {}}, {0.01, 0.3, 0.1, 30, 0.1, 0.4, {}}};
  const auto cr = plot_cost_risk(rows);
  CHECK(cr.find(">0.01<") != std::string::npos);  // decade tick on the log axis
  const auto d = small_sinc(30, 8);
  const auto svr = fit_svr(d, 0.01, 0.2, KernelSpec::gaussian(1.0));
  CHECK(plot_tube(d, svr).find("polyline") != std::string::npos);
  ValidationReport r;
  r.trials = {{0, 5, 0.02, 0.01, 0.1, true}};
  CHECK(plot_scatter(r, 200, 1e-2).find("circle") != std::string::npos);
}

TEST_CASE("parse_number_list") {
  const auto rhos = parse_number_list("pow(3/5,0..14)");
  REQUIRE(rhos.size() == 15);
  CHECK(rhos[0] == 1.0);
  CHECK(rhos[9] == doctest::Approx(0.010077696).epsilon(1e-12));
  CHECK(parse_number_list("pow(0.5, 1..2)") == std::vector<double>{0.5, 0.25});
  CHECK(parse_number_list("0.1, 1e-3") == std::vector<double>{0.1, 1e-3});
  CHECK_THROWS(parse_number_list("pow(3/5,4..1)"));
  CHECK_THROWS(parse_number_list("pow(3/5)"));
  CHECK_THROWS(parse_number_list("0.1,,2"));
  CHECK_THROWS(parse_number_list(""));
}
