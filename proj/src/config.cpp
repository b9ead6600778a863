#include "psa/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "psa/errors.hpp"

namespace psa {

namespace {

using nlohmann::json;

std::vector<double> expand_deltas(const json& j, std::vector<std::string>& errors,
                                  const std::string& where) {
    std::vector<double> deltas;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) {
                errors.push_back(where + ": deltas must be numbers");
                return deltas;
            }
            deltas.push_back(v.get<double>());
        }
    } else if (j.is_object() && j.contains("start") && j.contains("stop") && j.contains("steps")) {
        const double start = j["start"].get<double>();
        const double stop = j["stop"].get<double>();
        const int steps = j["steps"].get<int>();
        if (steps < 1) {
            errors.push_back(where + ": deltas.steps must be >= 1");
            return deltas;
        }
        for (int i = 0; i < steps; ++i)
            deltas.push_back(steps == 1 ? start
                                        : start + (stop - start) * static_cast<double>(i) /
                                                      (steps - 1));
    } else {
        errors.push_back(where + ": deltas must be a list or {start, stop, steps}");
    }
    for (double d : deltas)
        if (!(d >= 0.0) || !std::isfinite(d)) {
            errors.push_back(where + ": deltas must be finite and >= 0");
            break;
        }
    return deltas;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw parameter_error("config " + path + ": invalid JSON: " + e.what());
    }

    RunConfig cfg;
    std::vector<std::string> errors;

    // model
    if (!j.contains("model") || !j["model"].is_object()) {
        errors.push_back("model: required object");
    } else {
        const json& m = j["model"];
        cfg.model.kind = m.value("kind", "");
        if (cfg.model.kind == "linear") {
            if (!m.contains("intercept") || !m["intercept"].is_number())
                errors.push_back("model.intercept: required number");
            else
                cfg.model.intercept = m["intercept"].get<double>();
            if (!m.contains("coefficients") || !m["coefficients"].is_array() ||
                m["coefficients"].empty())
                errors.push_back("model.coefficients: required non-empty array");
            else
                for (const auto& c : m["coefficients"])
                    cfg.model.coefficients.push_back(c.get<double>());
        } else if (cfg.model.kind == "tabulated") {
            if (!m.contains("path") || !m["path"].is_string())
                errors.push_back("model.path: required string for tabulated models");
            else
                cfg.model.path = m["path"].get<std::string>();
        } else {
            errors.push_back("model.kind: must be \"linear\" or \"tabulated\"");
        }
    }

    // marginals
    if (!j.contains("marginals") || !j["marginals"].is_array() || j["marginals"].empty()) {
        errors.push_back("marginals: required non-empty array of distribution literals");
    } else {
        for (const auto& lit : j["marginals"]) {
            try {
                cfg.marginals.push_back(parse_distribution(lit.get<std::string>()));
            } catch (const std::exception& e) {
                errors.push_back(std::string("marginals: ") + e.what());
            }
        }
    }
    if (cfg.model.kind == "linear" && !cfg.model.coefficients.empty() &&
        !cfg.marginals.empty() && cfg.marginals.size() != cfg.model.coefficients.size())
        errors.push_back("marginals: count must match model.coefficients");

    // sample
    if (j.contains("sample")) {
        const json& s = j["sample"];
        SampleConfig sc;
        if (!s.contains("n") || !s["n"].is_number_unsigned() || s["n"].get<std::uint64_t>() < 1)
            errors.push_back("sample.n: required count >= 1");
        else
            sc.n = s["n"].get<std::size_t>();
        if (!s.contains("seed") || !s["seed"].is_number())
            errors.push_back("sample.seed: required integer");
        else
            sc.seed = s["seed"].get<std::uint64_t>();
        cfg.sample = sc;
    }
    if (cfg.model.kind == "linear" && !cfg.sample)
        errors.push_back("sample: required for linear models ({n, seed})");
    if (cfg.model.kind == "tabulated" && cfg.sample)
        errors.push_back("sample: must be absent for tabulated models");

    // plan
    if (!j.contains("plan") || !j["plan"].is_array()) {
        errors.push_back("plan: required array");
    } else {
        std::size_t idx = 0;
        for (const auto& pj : j["plan"]) {
            const std::string where = "plan[" + std::to_string(idx++) + "]";
            PlanEntry entry;
            if (pj.contains("variables") && pj["variables"].is_string() &&
                pj["variables"] == "all") {
                for (std::size_t i = 0; i < cfg.marginals.size(); ++i)
                    entry.variables.push_back(i);
            } else if (pj.contains("variables") && pj["variables"].is_array()) {
                for (const auto& v : pj["variables"]) {
                    const long long one_based = v.get<long long>();
                    if (one_based < 1 ||
                        static_cast<std::size_t>(one_based) > cfg.marginals.size()) {
                        errors.push_back(where + ": variable index " +
                                         std::to_string(one_based) + " out of range");
                        continue;
                    }
                    entry.variables.push_back(static_cast<std::size_t>(one_based - 1));
                }
            } else {
                errors.push_back(where + ": variables must be \"all\" or a list of indices");
            }
            if (!pj.contains("mode") || !pj["mode"].is_string()) {
                errors.push_back(where + ": mode literal required");
            } else {
                entry.mode_literal = pj["mode"].get<std::string>();
                for (std::size_t var : entry.variables) {
                    try {
                        parse_mode(entry.mode_literal, cfg.marginals[var].family);
                    } catch (const std::exception& e) {
                        errors.push_back(where + ": variable " + std::to_string(var + 1) + ": " +
                                         e.what());
                    }
                }
            }
            if (pj.contains("branches")) {
                for (const auto& b : pj["branches"]) {
                    try {
                        entry.branches.push_back(parse_branch(b.get<std::string>()));
                    } catch (const std::exception& e) {
                        errors.push_back(where + ": " + e.what());
                    }
                }
            }
            const bool boundary = entry.mode_literal.rfind("boundary.", 0) == 0;
            if (entry.branches.empty() && !boundary)
                errors.push_back(where + ": branches required for tilt modes");
            if (!pj.contains("deltas"))
                errors.push_back(where + ": deltas required");
            else
                entry.deltas = expand_deltas(pj["deltas"], errors, where);
            cfg.plan.push_back(std::move(entry));
        }
    }

    // output
    if (j.contains("output")) {
        const json& o = j["output"];
        cfg.output.path = o.value("path", cfg.output.path);
        cfg.output.format = o.value("format", cfg.output.format);
        cfg.output.confidence = o.value("confidence", cfg.output.confidence);
        if (o.contains("series_dir")) cfg.output.series_dir = o["series_dir"].get<std::string>();
    }
    if (cfg.output.format != "csv" && cfg.output.format != "json")
        errors.push_back("output.format: must be \"csv\" or \"json\"");
    if (!(cfg.output.confidence > 0.0 && cfg.output.confidence < 1.0))
        errors.push_back("output.confidence: must lie in (0,1)");

    if (!errors.empty()) {
        std::string msg = "config " + path + " invalid:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw parameter_error(msg);
    }
    return cfg;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_table_csv(const std::vector<SensitivityRecord>& records, std::ostream& out) {
    out << "variable,mode,branch,delta,tau,p_delta,s_hat,stderr,ci_lo,ci_hi,ess,flags\n";
    for (const auto& r : records) {
        out << (r.variable + 1) << ',' << r.mode_literal << ',' << branch_literal(r.branch) << ','
            << fmt(r.delta) << ',' << fmt(r.tau) << ',' << fmt(r.p_delta) << ',' << fmt(r.s_hat)
            << ',' << fmt(r.std_err) << ',' << fmt(r.ci_lo) << ',' << fmt(r.ci_hi) << ','
            << fmt(r.ess) << ',' << r.flags() << '\n';
    }
}

void write_table_json(const std::vector<SensitivityRecord>& records, std::ostream& out) {
    json arr = json::array();
    for (const auto& r : records) {
        json o;
        o["variable"] = r.variable + 1;
        o["mode"] = r.mode_literal;
        o["branch"] = branch_literal(r.branch);
        o["delta"] = r.delta;
        o["tau"] = fmt(r.tau);  // strings keep NaN for infeasible cells representable
        o["p_delta"] = fmt(r.p_delta);
        o["s_hat"] = fmt(r.s_hat);
        o["stderr"] = fmt(r.std_err);
        o["ci_lo"] = fmt(r.ci_lo);
        o["ci_hi"] = fmt(r.ci_hi);
        o["ess"] = r.ess;
        o["flags"] = r.flags();
        arr.push_back(std::move(o));
    }
    out << arr.dump(2) << '\n';
}

void write_series_files(const std::vector<SensitivityRecord>& records, const std::string& dir) {
    // One file per (variable, mode, branch) curve: delta, s_hat, ci_lo, ci_hi.
    std::map<std::string, std::vector<const SensitivityRecord*>> curves;
    for (const auto& r : records) {
        std::string mode = r.mode_literal;
        std::replace(mode.begin(), mode.end(), '.', '_');
        curves["x" + std::to_string(r.variable + 1) + "_" + mode + "_" +
               branch_literal(r.branch)]
            .push_back(&r);
    }
    for (const auto& [name, rows] : curves) {
        const std::string path = dir + "/" + name + ".csv";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot open series file " + path);
        out << "delta,s_hat,ci_lo,ci_hi\n";
        for (const auto* r : rows)
            out << fmt(r->delta) << ',' << fmt(r->s_hat) << ',' << fmt(r->ci_lo) << ','
                << fmt(r->ci_hi) << '\n';
        if (!out) throw io_error("write failed for " + path);
    }
}

}  // namespace

int run(const RunConfig& cfg, unsigned threads, const std::optional<std::string>& override_path) {
    try {
        std::optional<EvaluatedSample> sample;
        if (cfg.model.kind == "linear") {
            const PerformanceModel model =
                PerformanceModel::linear(cfg.model.intercept, cfg.model.coefficients);
            sample = build_sample(model, cfg.marginals, cfg.sample->n, cfg.sample->seed);
        } else {
            sample = ingest_sample(cfg.model.path, cfg.marginals);
            for (const auto& w : sample->warnings())
                std::cerr << "warning: " << w << '\n';
        }

        const FailureEstimate pf = estimate_pf(*sample);
        const std::vector<SensitivityRecord> records =
            sweep(*sample, cfg.plan, cfg.output.confidence, threads);

        const std::string out_path = override_path ? *override_path : cfg.output.path;
        {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw io_error("cannot open output file " + out_path);
            if (cfg.output.format == "csv")
                write_table_csv(records, out);
            else
                write_table_json(records, out);
            if (!out) throw io_error("write failed for " + out_path);
        }
        if (cfg.output.series_dir) write_series_files(records, *cfg.output.series_dir);

        // Summary: reference probability and per-variable peak |S|.
        std::map<std::size_t, double> peak;
        for (const auto& r : records)
            if (!r.infeasible && r.delta > 0.0)
                peak[r.variable] = std::max(peak[r.variable], std::abs(r.s_hat));
        std::vector<std::pair<std::size_t, double>> ranking(peak.begin(), peak.end());
        std::stable_sort(ranking.begin(), ranking.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });

        std::cout << "p_f_hat = " << fmt(pf.p_hat) << "  (N = " << pf.n
                  << ", failures = " << pf.failures << ")\n";
        std::cout << "records: " << records.size() << " -> " << out_path << '\n';
        std::cout << "max |S| per variable:";
        for (const auto& [var, s] : ranking) std::cout << "  x" << (var + 1) << "=" << fmt(s);
        std::cout << "\nranking:";
        for (const auto& [var, s] : ranking) std::cout << " x" << (var + 1);
        std::cout << '\n';
        return 0;
    } catch (const parameter_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace psa
