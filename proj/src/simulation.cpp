#include "sdive/simulation.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace sdive {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

Vector parse_number_list(const std::string& s, int line_no) {
    Vector out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidInput("config line " + std::to_string(line_no) +
                               ": bad number '" + item + "'");
        }
    }
    return out;
}

double parse_number(const std::string& s, int line_no) {
    const Vector v = parse_number_list(s, line_no);
    if (v.size() != 1)
        throw InvalidInput("config line " + std::to_string(line_no) + ": expected one number");
    return v[0];
}

BandwidthChoice parse_bandwidth(const std::string& s, int line_no) {
    if (s == "normal_reference" || s == "auto") return BandwidthChoice::auto_rule();
    if (s.rfind("fixed:", 0) == 0) return BandwidthChoice::fixed(parse_number(s.substr(6), line_no));
    if (s.rfind("relative:", 0) == 0)
        return BandwidthChoice::relative(parse_number(s.substr(9), line_no));
    throw InvalidInput("config line " + std::to_string(line_no) + ": bad bandwidth rule '" + s +
                       "'");
}

double fmt_round(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::strtod(buf, nullptr);
}

}  // namespace

void SimulationConfig::validate() const {
    quad.validate();
    if (alpha_grid.empty() || lambda_grid.empty())
        throw InvalidInput("simulation grids must be nonempty");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must be in [0,1)");
    if (n < 2 || replications < 1 || worker_count < 1)
        throw InvalidInput("invalid simulation sizes");
    if (epsilon > 0.0 && !contaminant)
        throw InvalidInput("epsilon > 0 requires a [contaminant] section");
    resolved_theta_true();
}

Vector SimulationConfig::resolved_theta_true() const {
    if (theta_true) return *theta_true;
    if (target.kind == DistributionSpec::Kind::normal) return {target.p1, target.p2};
    throw InvalidInput("non-normal target needs explicit true_mu/true_sigma");
}

SimulationConfig SimulationConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

SimulationConfig SimulationConfig::parse_text(const std::string& text) {
    SimulationConfig cfg;
    cfg.alpha_grid.clear();
    cfg.lambda_grid.clear();

    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    bool saw_contaminant_section = false;
    double true_mu = std::numeric_limits<double>::quiet_NaN();
    double true_sigma = std::numeric_limits<double>::quiet_NaN();

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InvalidInput("config line " + std::to_string(line_no) +
                                   ": unterminated section header");
            section = line.substr(1, line.size() - 2);
            if (section == "contaminant") saw_contaminant_section = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (section == "target") {
                if (key == "dist")
                    cfg.target = DistributionSpec::parse(val);
                else if (key == "true_mu")
                    true_mu = parse_number(val, line_no);
                else if (key == "true_sigma")
                    true_sigma = parse_number(val, line_no);
                else
                    throw InvalidInput("unknown key '" + key + "' in [target]");
            } else if (section == "contaminant") {
                if (key == "dist")
                    cfg.contaminant = DistributionSpec::parse(val);
                else if (key == "epsilon")
                    cfg.epsilon = parse_number(val, line_no);
                else
                    throw InvalidInput("unknown key '" + key + "' in [contaminant]");
            } else if (section == "grid") {
                if (key == "alpha")
                    cfg.alpha_grid = parse_number_list(val, line_no);
                else if (key == "lambda")
                    cfg.lambda_grid = parse_number_list(val, line_no);
                else
                    throw InvalidInput("unknown key '" + key + "' in [grid]");
            } else if (section == "run") {
                if (key == "n")
                    cfg.n = static_cast<int>(parse_number(val, line_no));
                else if (key == "replications")
                    cfg.replications = static_cast<int>(parse_number(val, line_no));
                else if (key == "method")
                    cfg.method = fit_method_from_name(val);
                else if (key == "bandwidth")
                    cfg.bandwidth = parse_bandwidth(val, line_no);
                else if (key == "seed")
                    cfg.seed = static_cast<std::uint64_t>(parse_number(val, line_no));
                else if (key == "workers")
                    cfg.worker_count = static_cast<int>(parse_number(val, line_no));
                else if (key == "max_iter")
                    cfg.max_iter = static_cast<int>(parse_number(val, line_no));
                else if (key == "quad_abs_tol")
                    cfg.quad.abs_tol = parse_number(val, line_no);
                else if (key == "quad_rel_tol")
                    cfg.quad.rel_tol = parse_number(val, line_no);
                else
                    throw InvalidInput("unknown key '" + key + "' in [run]");
            } else {
                throw InvalidInput("key outside a known section");
            }
        } catch (const InvalidInput& e) {
            const std::string what = e.what();
            if (what.rfind("config line", 0) == 0) throw;
            throw InvalidInput("config line " + std::to_string(line_no) + ": " + what);
        }
    }
    if (!std::isnan(true_mu) != !std::isnan(true_sigma))
        throw InvalidInput("true_mu and true_sigma must be given together");
    if (!std::isnan(true_mu)) cfg.theta_true = Vector{true_mu, true_sigma};
    if (cfg.epsilon == 0.0 && !saw_contaminant_section) cfg.contaminant.reset();
    cfg.validate();
    return cfg;
}

std::string SimulationConfig::echo() const {
    std::string s;
    char buf[256];
    s += "[target]\ndist = " + target.to_string() + "\n";
    if (contaminant) {
        std::snprintf(buf, sizeof buf, "[contaminant]\ndist = %s\nepsilon = %.6g\n",
                      contaminant->to_string().c_str(), epsilon);
        s += buf;
    }
    s += "[grid]\nalpha =";
    for (size_t i = 0; i < alpha_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : " ", alpha_grid[i]);
        s += buf;
    }
    s += "\nlambda =";
    for (size_t i = 0; i < lambda_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : " ", lambda_grid[i]);
        s += buf;
    }
    std::string bw = "normal_reference";
    if (bandwidth.rule == BandwidthChoice::Rule::fixed) {
        std::snprintf(buf, sizeof buf, "fixed:%.6g", bandwidth.value);
        bw = buf;
    } else if (bandwidth.rule == BandwidthChoice::Rule::relative) {
        std::snprintf(buf, sizeof buf, "relative:%.6g", bandwidth.value);
        bw = buf;
    }
    std::snprintf(buf, sizeof buf,
                  "\n[run]\nn = %d\nreplications = %d\nmethod = %s\nbandwidth = %s\nseed = "
                  "%llu\nworkers = %d\n",
                  n, replications, fit_method_name(method), bw.c_str(),
                  static_cast<unsigned long long>(seed), worker_count);
    s += buf;
    return s;
}

std::string SimulationReport::to_csv() const {
    std::string s = "alpha,lambda,parameter,bias,mse,mc_stderr,failures,unreliable\n";
    char buf[256];
    for (const CellRecord& c : cells) {
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%d,%.6g,%.6g,%.6g,%d,%d\n", c.alpha, c.lambda,
                      c.parameter, c.bias, c.mse, c.mc_stderr, c.failures, c.unreliable ? 1 : 0);
        s += buf;
    }
    return s;
}

std::string SimulationReport::metadata_json() const {
    std::string cfg_echo = config.echo();
    std::string escaped;
    for (char ch : cfg_echo) {
        if (ch == '\n')
            escaped += "\\n";
        else if (ch == '"')
            escaped += "\\\"";
        else
            escaped += ch;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "{\"cells\": %zu, \"replications\": %d, \"wall_time_s\": %.3f, \"config\": \"",
                  cells.size(), config.replications, wall_time_s);
    return std::string(buf) + escaped + "\"}\n";
}

const CellRecord* SimulationReport::find(double alpha, double lambda, int parameter) const {
    for (const CellRecord& c : cells)
        if (c.parameter == parameter && std::abs(c.alpha - alpha) < 1e-12 &&
            std::abs(c.lambda - lambda) < 1e-12)
            return &c;
    return nullptr;
}

SimulationReport run_simulation(const SimulationConfig& config, const ParametricModel& model) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const int reps = config.replications;
    const int p = model.dim();
    const size_t n_cells = config.alpha_grid.size() * config.lambda_grid.size();

    struct CellOutcome {
        Vector theta;
        bool ok = false;
    };
    // results[r * n_cells + c]; filled by replication index so aggregation is
    // independent of worker scheduling
    std::vector<CellOutcome> results(static_cast<size_t>(reps) * n_cells);

    auto run_replication = [&](int r) {
        const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
        const std::vector<double> sample = sample_contaminated(
            config.target, config.contaminant, config.epsilon, config.n, rep_seed);

        size_t cell = 0;
        for (double lambda : config.lambda_grid)
            for (double alpha : config.alpha_grid) {
                FitConfig fc;
                fc.method = config.method;
                fc.tuning = TuningPair::make(alpha, lambda);
                fc.bandwidth = config.bandwidth;
                fc.quad = config.quad;
                fc.max_iter = config.max_iter;
                CellOutcome& out = results[static_cast<size_t>(r) * n_cells + cell];
                try {
                    const FitResult fr = fit(sample, model, fc);
                    out.theta = fr.theta_hat;
                    out.ok = fr.converged;
                } catch (const Error&) {
                    out.ok = false;
                }
                ++cell;
            }
    };

    const int workers = std::min(config.worker_count, reps);
    if (workers <= 1) {
        for (int r = 0; r < reps; ++r) run_replication(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1))
                    run_replication(r);
            });
        for (auto& t : pool) t.join();
    }

    const Vector truth = config.resolved_theta_true();
    SimulationReport rep;
    rep.config = config;

    size_t cell = 0;
    for (double lambda : config.lambda_grid)
        for (double alpha : config.alpha_grid) {
            std::vector<Vector> errs;  // per converged replication, per parameter
            int failures = 0;
            for (int r = 0; r < reps; ++r) {
                const CellOutcome& out = results[static_cast<size_t>(r) * n_cells + cell];
                if (!out.ok) {
                    ++failures;
                    continue;
                }
                Vector e(p);
                for (int j = 0; j < p; ++j) e[j] = out.theta[j] - truth[j];
                errs.push_back(std::move(e));
            }
            const double m = static_cast<double>(errs.size());
            for (int j = 0; j < p; ++j) {
                CellRecord c;
                c.alpha = alpha;
                c.lambda = lambda;
                c.parameter = j;
                c.failures = failures;
                c.unreliable = failures > reps / 20;
                if (m > 0) {
                    std::vector<double> e(errs.size()), e2(errs.size());
                    for (size_t i = 0; i < errs.size(); ++i) {
                        e[i] = errs[i][j];
                        e2[i] = errs[i][j] * errs[i][j];
                    }
                    c.bias = pairwise_sum(e) / m;
                    c.mse = pairwise_sum(e2) / m;
                    if (m > 1) {
                        std::vector<double> dev(errs.size());
                        for (size_t i = 0; i < dev.size(); ++i)
                            dev[i] = (e2[i] - c.mse) * (e2[i] - c.mse);
                        c.mc_stderr = std::sqrt(pairwise_sum(dev) / (m * (m - 1.0)));
                    }
                    c.bias = fmt_round(c.bias);
                    c.mse = fmt_round(c.mse);
                    c.mc_stderr = fmt_round(c.mc_stderr);
                }
                rep.cells.push_back(c);
            }
            ++cell;
        }

    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::string StabilityTable::to_csv() const {
    std::string s = "method,alpha,lambda";
    char buf[64];
    for (double h0 : h0_values) {
        std::snprintf(buf, sizeof buf, ",h0_%.6g", h0);
        s += buf;
    }
    s += ",range,range_ratio\n";
    for (const StabilityRow& r : rows) {
        for (int side = 0; side < 2; ++side) {
            const Vector& sig = side == 0 ? r.msde_sigma : r.msde_star_sigma;
            const double range = side == 0 ? r.msde_range : r.msde_star_range;
            std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g", side == 0 ? "msde-beran" : "msde-star",
                          r.alpha, r.lambda);
            s += buf;
            for (double v : sig) {
                std::snprintf(buf, sizeof buf, ",%.6g", v);
                s += buf;
            }
            std::snprintf(buf, sizeof buf, ",%.6g,%.6g\n", range, r.range_ratio);
            s += buf;
        }
    }
    return s;
}

StabilityTable bandwidth_stability_experiment(std::span<const double> sample,
                                              const ParametricModel& model,
                                              const std::vector<TuningPair>& tunings,
                                              const Vector& h0_values,
                                              const QuadratureSpec& quad) {
    if (sample.empty()) throw InvalidInput("stability experiment requires a sample");
    if (tunings.empty() || h0_values.empty())
        throw InvalidInput("stability experiment requires tunings and h0 values");

    StabilityTable table;
    table.h0_values = h0_values;
    const int scale_index = model.dim() - 1;  // scale is the last coordinate

    for (const TuningPair& tuning : tunings) {
        StabilityRow row;
        row.alpha = tuning.alpha;
        row.lambda = tuning.lambda;
        for (double h0 : h0_values) {
            FitConfig fc;
            fc.tuning = tuning;
            fc.bandwidth = BandwidthChoice::relative(h0);
            fc.quad = quad;
            fc.method = FitMethod::msde_beran;
            row.msde_sigma.push_back(fit(sample, model, fc).theta_hat[scale_index]);
            fc.method = FitMethod::msde_star;
            row.msde_star_sigma.push_back(fit(sample, model, fc).theta_hat[scale_index]);
        }
        auto range_of = [](const Vector& v) {
            double lo = v[0], hi = v[0];
            for (double x : v) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            return hi - lo;
        };
        row.msde_range = range_of(row.msde_sigma);
        row.msde_star_range = range_of(row.msde_star_sigma);
        row.range_ratio = (h0_values.size() > 1 && row.msde_star_range > 0.0)
                              ? row.msde_range / row.msde_star_range
                              : std::numeric_limits<double>::quiet_NaN();
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace sdive
