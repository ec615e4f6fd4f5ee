// Command-line front end: bounds, gendata, fit, sweep, validate, plot.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "scenario/experiments.hpp"
#include "scenario/io.hpp"
#include "scenario/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace scenario;

namespace {

std::string sig3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string interval_text(const RiskInterval& iv) { return "[" + sig3(iv.lower) + ", " + sig3(iv.upper) + "]"; }

int default_threads() {
  if (const char* env = std::getenv("SCENARIO_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("SCENARIO_THREADS is not an integer: ") + env);
    }
  }
  return 1;
}

void check_output_path(const std::string& path) {
  if (path.empty()) return;
  const auto parent = fs::absolute(fs::path(path)).parent_path();
  if (!fs::is_directory(parent)) throw std::runtime_error("output directory does not exist: " + parent.string());
}

// Files go through an atomic rename; an empty path means standard output.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file_atomically(path, text);
  }
}

struct KernelFlags {
  std::string kind = "gaussian";
  double width = 1.0;
  int degree = 2;
  double offset = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--kernel", kind, "kernel kind")->check(CLI::IsMember({"linear", "gaussian", "polynomial"}));
    cmd->add_option("--width", width, "gaussian width");
    cmd->add_option("--degree", degree, "polynomial degree");
    cmd->add_option("--kernel-offset", offset, "polynomial offset");
  }

  KernelSpec spec() const {
    KernelSpec k = kind == "linear" ? KernelSpec::linear()
                   : kind == "polynomial" ? KernelSpec::polynomial(degree, offset)
                                          : KernelSpec::gaussian(width);
    k.validate();
    return k;
  }
};

const double default_rho = std::pow(0.6, 9);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario risk certificates for support vector methods"};
  app.require_subcommand(1);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "risk interval for one complexity, or the full table as CSV");
  std::int64_t b_n = 0;
  double b_beta = 0.0;
  std::optional<std::int64_t> b_k;
  std::string b_out;
  bounds->add_option("--n", b_n, "number of scenarios")->required();
  bounds->add_option("--beta", b_beta, "confidence parameter")->required();
  bounds->add_option("--k", b_k, "complexity");
  bounds->add_option("--out", b_out, "table CSV path (default stdout)");

  // gendata
  auto* gendata = app.add_subcommand("gendata", "noisy sinc samples as CSV m,y");
  SincConfig g_cfg;
  std::string g_out;
  gendata->add_option("--n", g_cfg.n_train, "number of samples");
  gendata->add_option("--seed", g_cfg.seed, "random seed");
  gendata->add_option("--noise-scale", g_cfg.noise_scale, "Laplace noise scale");
  gendata->add_option("--lo", g_cfg.input_lo, "input range start");
  gendata->add_option("--hi", g_cfg.input_hi, "input range end");
  gendata->add_option("--out", g_out, "output CSV (default stdout)");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a model and write it with its certificate as JSON");
  std::string f_method, f_data, f_out, f_cert = "violation";
  double f_tau = 0.01, f_rho = default_rho, f_beta = 1e-4;
  KernelFlags f_kernel;
  fit->add_option("--method", f_method, "svr, svdd or svm")->required()->check(CLI::IsMember({"svr", "svdd", "svm"}));
  fit->add_option("--data", f_data, "dataset CSV")->required();
  fit->add_option("--out", f_out, "model JSON path")->required();
  fit->add_option("--tau", f_tau, "SVR ridge weight");
  fit->add_option("--rho", f_rho, "relaxation weight");
  fit->add_option("--beta", f_beta, "confidence parameter");
  fit->add_option("--certificate", f_cert, "svm certificate: violation or misclassification")
      ->check(CLI::IsMember({"violation", "misclassification"}));
  f_kernel.attach(fit);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "cost and risk interval over a list of rho values");
  std::string s_data, s_rhos = "pow(3/5,0..14)", s_out;
  double s_tau = 0.01, s_beta = 1e-4;
  KernelFlags s_kernel;
  sweep->add_option("--data", s_data, "dataset CSV")->required();
  sweep->add_option("--rhos", s_rhos, "comma list or pow(a/b,i..j)");
  sweep->add_option("--tau", s_tau, "SVR ridge weight");
  sweep->add_option("--beta", s_beta, "confidence parameter");
  sweep->add_option("--out", s_out, "output CSV (default stdout)");
  s_kernel.attach(sweep);

  // validate
  auto* validate = app.add_subcommand("validate", "Monte Carlo check of the certificate on fresh sinc data");
  SincConfig v_cfg;
  ValidationSettings v_set;
  v_set.rho = default_rho;
  std::optional<int> v_threads;
  std::string v_out;
  KernelFlags v_kernel;
  validate->add_option("--trials", v_set.n_trials, "number of trials");
  validate->add_option("--n", v_cfg.n_train, "training points per trial");
  validate->add_option("--test", v_set.n_test, "test points per trial");
  validate->add_option("--beta", v_set.beta, "confidence parameter");
  validate->add_option("--rho", v_set.rho, "relaxation weight");
  validate->add_option("--tau", v_set.tau, "SVR ridge weight");
  validate->add_option("--seed", v_cfg.seed, "random seed");
  validate->add_option("--noise-scale", v_cfg.noise_scale, "Laplace noise scale");
  validate->add_option("--threads", v_threads, "worker threads (default $SCENARIO_THREADS or 1)");
  validate->add_option("--out", v_out, "report CSV (default stdout)");
  v_kernel.attach(validate);

  // plot
  auto* plot = app.add_subcommand("plot", "SVG from a bounds, sweep, validation or dataset CSV");
  std::string p_kind, p_csv, p_out, p_model;
  std::optional<std::int64_t> p_n;
  std::optional<double> p_beta;
  plot->add_option("--kind", p_kind, "bounds, cost_risk, scatter or tube")
      ->required()
      ->check(CLI::IsMember({"bounds", "cost_risk", "scatter", "tube"}));
  plot->add_option("--csv", p_csv, "input CSV")->required();
  plot->add_option("--out", p_out, "output SVG")->required();
  plot->add_option("--model", p_model, "model JSON (tube)");
  plot->add_option("--n", p_n, "training size (scatter)");
  plot->add_option("--beta", p_beta, "confidence parameter (scatter, bounds label)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bounds) {
      if (b_k) {
        const auto iv = epsilon_bounds({b_n, *b_k, b_beta});
        std::cout << "N=" << b_n << " k=" << *b_k << " beta=" << b_beta << " risk interval " << interval_text(iv)
                  << '\n';
      } else {
        check_output_path(b_out);
        std::ostringstream csv;
        write_bounds_csv(csv, epsilon_table(b_n, b_beta));
        emit(b_out, csv.str());
      }
    } else if (*gendata) {
      check_output_path(g_out);
      std::ostringstream csv;
      write_dataset_csv(csv, gen_sinc(g_cfg));
      emit(g_out, csv.str());
    } else if (*fit) {
      check_output_path(f_out);
      const auto data = read_dataset_csv(fs::path(f_data));
      const auto kernel = f_kernel.spec();
      StoredModel stored;
      stored.n_train = data.size();
      std::string summary;
      if (f_method == "svr") {
        const auto m = fit_svr(data, f_tau, f_rho, kernel);
        stored.certificate = certify(CertificateKind::svr, svr_complexity(m, data), data.size(), f_beta);
        summary = "svr: cost=" + sig3(m.cost()) + " tube=" + sig3(m.tube);
        stored.model = m;
      } else if (f_method == "svdd") {
        const auto m = fit_svdd(data, f_rho, kernel);
        stored.certificate = certify(CertificateKind::svdd, svdd_complexity(m, data), data.size(), f_beta);
        summary = "svdd: radius^2=" + sig3(m.radius_sq);
        stored.model = m;
      } else {
        const auto m = fit_svm(data, f_rho, kernel);
        const auto kind =
            f_cert == "misclassification" ? CertificateKind::svm_misclassification : CertificateKind::svm_violation;
        stored.certificate = certify(kind, svm_complexity(m, data), data.size(), f_beta);
        summary = std::string("svm: ") + (m.w_is_zero ? "w*=0" : "|w*|^2=" + sig3(m.weight_norm_sq)) +
                  " b*=" + sig3(m.offset);
        stored.model = m;
      }
      const auto& c = stored.certificate;
      summary += " s*=" + std::to_string(c.complexity) + " risk " + interval_text(c.interval) +
                 " confidence 1-" + sig3(1.0 - c.confidence);
      write_file_atomically(f_out, model_to_json(stored));
      std::cout << summary << '\n';
    } else if (*sweep) {
      check_output_path(s_out);
      const auto rhos = parse_number_list(s_rhos);
      const auto data = read_dataset_csv(fs::path(s_data));
      const auto rows = rho_sweep(data, rhos, s_tau, s_kernel.spec(), s_beta);
      std::ostringstream csv;
      write_sweep_csv(csv, rows);
      emit(s_out, csv.str());
      int failed = 0;
      for (const auto& r : rows) {
        if (r.error) {
          std::cerr << "rho=" << sig3(r.rho) << " failed: " << *r.error << '\n';
          ++failed;
        }
      }
      if (failed) return 3;
    } else if (*validate) {
      check_output_path(v_out);
      v_set.kernel = v_kernel.spec();
      v_set.threads = v_threads ? *v_threads : default_threads();
      const auto report = monte_carlo_validation(v_cfg, v_set);
      std::ostringstream csv;
      write_validation_csv(csv, report);
      emit(v_out, csv.str());
      std::cerr << "coverage " << report.coverage_count << "/" << report.n_trials << '\n';
    } else if (*plot) {
      check_output_path(p_out);
      std::ifstream in(p_csv);
      if (!in) throw std::runtime_error("cannot open " + p_csv);
      std::string svg;
      if (p_kind == "bounds") {
        const auto table = read_bounds_csv(in, p_csv);
        if (table.empty()) throw std::runtime_error(p_csv + ": no bounds rows");
        svg = plot_bounds({{p_beta.value_or(0.0), table}});
      } else if (p_kind == "cost_risk") {
        const auto rows = read_sweep_csv(in, p_csv);
        if (rows.empty()) throw std::runtime_error(p_csv + ": no sweep rows");
        svg = plot_cost_risk(rows);
      } else if (p_kind == "scatter") {
        if (!p_n || !p_beta) throw std::invalid_argument("scatter plot needs --n and --beta");
        const auto report = read_validation_csv(in, p_csv);
        if (report.trials.empty()) throw std::runtime_error(p_csv + ": no trial rows");
        svg = plot_scatter(report, *p_n, *p_beta);
      } else {
        if (p_model.empty()) throw std::invalid_argument("tube plot needs --model");
        const auto stored = model_from_json(read_file(p_model));
        const auto* svr = std::get_if<SvrModel>(&stored.model);
        if (!svr) throw std::invalid_argument("tube plot needs an svr model");
        svg = plot_tube(read_dataset_csv(in, p_csv), *svr);
      }
      write_file_atomically(p_out, svg);
    }
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << " (solver status " << to_string(e.status()) << ")\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
