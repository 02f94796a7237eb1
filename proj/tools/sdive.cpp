// sdive: robust location-scale estimation by minimum S-divergence with
// kernel-smoothed models. Subcommands: fit, simulate, diagnose, tune.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdive/datasets.hpp"
#include "sdive/diagnostics.hpp"
#include "sdive/estimator.hpp"
#include "sdive/simulation.hpp"
#include "sdive/tuning_selection.hpp"

using json = nlohmann::ordered_json;
using namespace sdive;

namespace {

// Six significant digits everywhere; locale-free.
double round6(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::strtod(buf, nullptr);
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols; ++j) row.push_back(round6(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

QuadratureSpec default_quad() {
    QuadratureSpec q;
    if (const char* env = std::getenv("SDIVE_QUAD_TOL")) {
        const double v = std::strtod(env, nullptr);
        if (v > 0.0 && v < 1.0) q.abs_tol = v;
    }
    return q;
}

BandwidthChoice parse_bandwidth_flag(const std::string& s) {
    if (s == "auto") return BandwidthChoice::auto_rule();
    if (s.rfind("rel:", 0) == 0) return BandwidthChoice::relative(std::stod(s.substr(4)));
    return BandwidthChoice::fixed(std::stod(s));
}

Vector parse_grid_range(const std::string& s) {
    const auto c1 = s.find(':');
    const auto c2 = s.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw InvalidInput("grid must be lo:hi:step");
    const double lo = std::stod(s.substr(0, c1));
    const double hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(s.substr(c2 + 1));
    if (!(step > 0.0) || hi < lo) throw InvalidInput("grid must satisfy lo <= hi, step > 0");
    Vector g;
    for (double v = lo; v <= hi + 1e-12 * step; v += step) g.push_back(v);
    return g;
}

Vector parse_number_csv(const std::string& s) {
    Vector out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw InvalidInput("empty number list");
    return out;
}

Dataset resolve_data(const std::string& arg) {
    if (arg.rfind("dataset:", 0) == 0) return load_dataset(arg.substr(8));
    return load_csv(arg);
}

Vector default_transparency_grid(double mu, double sigma) {
    Vector grid;
    for (int i = 0; i < 25; ++i) grid.push_back(mu - 5.0 * sigma + i * (10.0 * sigma / 24.0));
    return grid;
}

int cmd_fit(const std::string& data_arg, const std::string& model_name, double alpha,
            double lambda, const std::string& method_name, const std::string& bandwidth_flag,
            std::optional<double> quad_tol, bool with_cov) {
    if (model_name != "normal") throw InvalidInput("only the normal model is available");
    const Dataset ds = resolve_data(data_arg);
    const NormalModel model;

    FitConfig cfg;
    cfg.method = fit_method_from_name(method_name);
    cfg.tuning = TuningPair::make(alpha, lambda);
    cfg.quad = default_quad();
    if (quad_tol) cfg.quad.abs_tol = *quad_tol;

    std::optional<double> bandwidth;
    if (cfg.method != FitMethod::mdpde) {
        const BandwidthChoice bw = parse_bandwidth_flag(bandwidth_flag);
        // round the resolved bandwidth to the printed precision so a rerun
        // with the reported value reproduces the fit exactly
        bandwidth = round6(bw.resolve(ds.values));
        cfg.bandwidth = BandwidthChoice::fixed(*bandwidth);
    }

    const FitResult res = fit(ds.values, model, cfg);

    json out;
    out["method"] = method_name;
    out["alpha"] = round6(alpha);
    out["lambda"] = round6(lambda);
    out["bandwidth"] = bandwidth ? json(*bandwidth) : json(nullptr);
    out["theta_hat"] = {{"mu", round6(res.theta_hat[0])}, {"sigma", round6(res.theta_hat[1])}};
    out["objective"] = round6(res.objective);
    out["estimating_eq_norm"] = round6(res.estimating_eq_norm);
    out["converged"] = res.converged;
    out["iterations"] = res.iterations;
    if (with_cov) {
        if (cfg.method == FitMethod::msde_star) {
            const AsymptoticCov cov = sandwich_covariance(
                model, res.theta_hat, KernelSpec::gaussian(*bandwidth), alpha, cfg.quad);
            out["asymptotic_cov"] = matrix_json(cov.sandwich);
        } else if (cfg.method == FitMethod::mdpde) {
            const AsymptoticCov cov =
                mdpde_limit_covariance(model, res.theta_hat, alpha, cfg.quad);
            out["asymptotic_cov"] = matrix_json(cov.sandwich);
        } else {
            throw InvalidInput("--cov is not available for msde-beran");
        }
    }
    out["dataset_n"] = static_cast<int>(ds.values.size());
    std::cout << out.dump(2) << "\n";
    return res.converged ? 0 : 2;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const SimulationConfig cfg = SimulationConfig::parse_file(config_path);
    const NormalModel model;
    const SimulationReport rep = run_simulation(cfg, model);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "report.csv");
        out << rep.to_csv();
    }
    {
        std::ofstream out(fs::path(out_dir) / "meta.json");
        out << rep.metadata_json();
    }
    std::printf("cells=%zu wall_time_s=%.3f\n", rep.cells.size(), rep.wall_time_s);
    return 0;
}

int cmd_diagnose(double mu, double sigma, double alpha, double lambda,
                 const std::string& bandwidth_flag, const std::string& grid_arg,
                 bool second_order, bool transparency, const std::string& out_csv) {
    const QuadratureSpec quad = default_quad();
    const KernelSpec kernel = KernelSpec::gaussian(std::stod(bandwidth_flag));
    const Vector grid = parse_grid_range(grid_arg);
    const TuningPair tuning = TuningPair::make(alpha, lambda);

    json out;
    IFReport report;
    if (second_order) {
        // scalar-parameter analysis: normal mean with the scale held fixed
        const NormalMeanModel model(sigma);
        report = influence_function_model(model, {mu}, kernel, tuning, grid, quad);
        const SecondOrderReport so =
            second_order_influence(model, {mu}, kernel, tuning, grid, quad);
        report.second_order = so.t_second;
        report.second_order_defined = so.defined;
        report.has_second_order = true;
        report.param_names = {"mu"};

        const AsymptoticCov cov = sandwich_covariance(model, {mu}, kernel, alpha, quad);
        out["sandwich"] = matrix_json(cov.sandwich);
        if (transparency) {
            const TransparencyReport tr = transparency_residual(
                model, {mu}, kernel, alpha, quad, default_transparency_grid(mu, sigma));
            out["transparency"] = {{"max_residual", round6(tr.max_residual)},
                                   {"transparent", tr.transparent}};
        }
    } else {
        const NormalModel model;
        const Vector theta{mu, sigma};
        report = influence_function_model(model, theta, kernel, tuning, grid, quad);
        report.param_names = {"mu", "sigma"};

        const AsymptoticCov cov = sandwich_covariance(model, theta, kernel, alpha, quad);
        out["sandwich"] = matrix_json(cov.sandwich);
        if (transparency) {
            const TransparencyReport tr = transparency_residual(
                model, theta, kernel, alpha, quad, default_transparency_grid(mu, sigma));
            out["transparency"] = {{"max_residual", round6(tr.max_residual)},
                                   {"transparent", tr.transparent},
                                   {"M", matrix_json(tr.M)}};
        }
    }

    std::ofstream csv(out_csv);
    if (!csv) throw InvalidInput("cannot write " + out_csv);
    csv << report.to_csv();
    out["if_csv"] = out_csv;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_tune(const std::string& data_arg, const std::string& alpha_grid,
             const std::string& lambda_grid, const std::string& pilot,
             const std::string& bandwidth_flag, const std::string& surface_path) {
    const Dataset ds = resolve_data(data_arg);
    const NormalModel model;

    TuningSearchConfig cfg;
    cfg.alpha_grid = parse_number_csv(alpha_grid);
    cfg.lambda_grid = parse_number_csv(lambda_grid);
    cfg.quad = default_quad();
    cfg.kernel = KernelSpec::gaussian(bandwidth_flag == "auto"
                                          ? normal_reference_bandwidth(ds.values)
                                          : std::stod(bandwidth_flag));

    if (pilot != "mdpde1") {
        double m = 0.0, s = 0.0;
        if (std::sscanf(pilot.c_str(), "mu:%lf,sigma:%lf", &m, &s) != 2)
            throw InvalidInput("pilot must be 'mdpde1' or 'mu:<m>,sigma:<s>'");
        cfg.pilot_theta = Vector{m, s};
    }

    const TuningSelection sel = select_tuning(ds.values, model, cfg);
    {
        std::ofstream out(surface_path);
        if (!out) throw InvalidInput("cannot write " + surface_path);
        out << sel.surface_csv();
    }
    json out;
    out["best_alpha"] = round6(sel.best.alpha);
    out["best_lambda"] = round6(sel.best.lambda);
    out["surface_path"] = surface_path;
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimum S-divergence estimation with kernel-smoothed models"};
    app.require_subcommand(1);

    auto* fit_cmd = app.add_subcommand("fit", "fit a model to data");
    std::string data_arg, model_name = "normal", method_name = "msde-star";
    std::string bandwidth_flag = "auto";
    double alpha = 0.0, lambda = 0.0, quad_tol_val = 0.0;
    bool with_cov = false;
    std::uint64_t seed = 0;
    fit_cmd->add_option("--data", data_arg, "CSV path or dataset:<short|newcomb>")->required();
    fit_cmd->add_option("--model", model_name, "model family (normal)");
    fit_cmd->add_option("--alpha", alpha, "divergence alpha")->required();
    fit_cmd->add_option("--lambda", lambda, "divergence lambda");
    fit_cmd->add_option("--method", method_name, "msde-star | msde-beran | mdpde");
    fit_cmd->add_option("--bandwidth", bandwidth_flag, "auto | <h> | rel:<h0>");
    fit_cmd->add_option("--quad-tol", quad_tol_val, "quadrature absolute tolerance");
    fit_cmd->add_option("--seed", seed, "accepted for pipeline uniformity");
    fit_cmd->add_flag("--cov", with_cov, "report the asymptotic covariance");

    auto* sim_cmd = app.add_subcommand("simulate", "run a Monte-Carlo study");
    std::string config_path, out_dir;
    sim_cmd->add_option("--config", config_path, "simulation config file")->required();
    sim_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* diag_cmd = app.add_subcommand("diagnose", "influence-function diagnostics");
    std::string diag_model = "normal";
    double mu = 0.0, sigma = 1.0, d_alpha = 0.0, d_lambda = 0.0;
    std::string d_bandwidth, grid_arg = "-5:5:0.5", if_csv = "ifreport.csv";
    bool second_order = false, transparency = false;
    diag_cmd->add_option("--model", diag_model, "model family (normal)");
    diag_cmd->add_option("--mu", mu, "location")->required();
    diag_cmd->add_option("--sigma", sigma, "scale")->required();
    diag_cmd->add_option("--alpha", d_alpha, "divergence alpha")->required();
    diag_cmd->add_option("--lambda", d_lambda, "divergence lambda");
    diag_cmd->add_option("--bandwidth", d_bandwidth, "kernel bandwidth h")->required();
    diag_cmd->add_option("--grid", grid_arg, "evaluation grid lo:hi:step");
    diag_cmd->add_flag("--second-order", second_order, "scalar-parameter second-order analysis");
    diag_cmd->add_flag("--transparency", transparency, "transparent-kernel residual check");
    diag_cmd->add_option("--out", if_csv, "influence-function CSV path");

    auto* tune_cmd = app.add_subcommand("tune", "data-driven tuning selection");
    std::string t_data, t_alpha_grid = "0.1,0.15,0.2,0.25,0.5,1",
                        t_lambda_grid = "-0.5,-0.4,-0.3,0", t_pilot = "mdpde1",
                        t_bandwidth = "auto", surface_path = "tune_surface.csv";
    tune_cmd->add_option("--data", t_data, "CSV path or dataset:<name>")->required();
    tune_cmd->add_option("--alpha-grid", t_alpha_grid, "comma-separated alphas in [0,1]");
    tune_cmd->add_option("--lambda-grid", t_lambda_grid, "comma-separated lambdas");
    tune_cmd->add_option("--pilot", t_pilot, "mdpde1 | mu:<m>,sigma:<s>");
    tune_cmd->add_option("--bandwidth", t_bandwidth, "auto | <h>");
    tune_cmd->add_option("--surface", surface_path, "surface CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(fit_cmd)) {
            std::optional<double> qt;
            if (fit_cmd->count("--quad-tol")) qt = quad_tol_val;
            return cmd_fit(data_arg, model_name, alpha, lambda, method_name, bandwidth_flag, qt,
                           with_cov);
        }
        if (app.got_subcommand(sim_cmd)) return cmd_simulate(config_path, out_dir);
        if (app.got_subcommand(diag_cmd)) {
            if (diag_model != "normal") throw InvalidInput("only the normal model is available");
            return cmd_diagnose(mu, sigma, d_alpha, d_lambda, d_bandwidth, grid_arg,
                                second_order, transparency, if_csv);
        }
        if (app.got_subcommand(tune_cmd))
            return cmd_tune(t_data, t_alpha_grid, t_lambda_grid, t_pilot, t_bandwidth,
                            surface_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
