#include "psa/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psa/errors.hpp"
#include "psa/rng.hpp"
#include "psa/special.hpp"

namespace psa {

PerformanceModel PerformanceModel::linear(double intercept, std::vector<double> coefficients) {
    if (coefficients.empty())
        throw parameter_error("linear model needs at least one coefficient");
    bool any = false;
    for (double c : coefficients) any = any || c != 0.0;
    if (!any) throw parameter_error("linear model needs at least one nonzero coefficient");
    PerformanceModel m;
    m.kind = Kind::LinearGaussian;
    m.intercept = intercept;
    m.coefficients = std::move(coefficients);
    return m;
}

PerformanceModel PerformanceModel::from_table(std::shared_ptr<EvaluatedSample> sample) {
    if (!sample) throw parameter_error("tabulated model needs a sample");
    PerformanceModel m;
    m.kind = Kind::Tabulated;
    m.tabulated = std::move(sample);
    return m;
}

double evaluate(const PerformanceModel& model, const std::vector<double>& x) {
    if (model.kind == PerformanceModel::Kind::Tabulated)
        throw std::logic_error("evaluate: tabulated models carry precomputed values only");
    if (x.size() != model.coefficients.size())
        throw parameter_error("evaluate: input dimension mismatch");
    model.eval_count->fetch_add(1, std::memory_order_relaxed);
    double g = model.intercept;
    for (std::size_t i = 0; i < x.size(); ++i) g -= model.coefficients[i] * x[i];
    return g;
}

double analytic_pf_linear(const PerformanceModel& model,
                          const std::vector<DistributionSpec>& marginals) {
    if (model.kind != PerformanceModel::Kind::LinearGaussian)
        throw parameter_error("analytic_pf_linear: requires a linear model");
    if (marginals.size() != model.coefficients.size())
        throw parameter_error("analytic_pf_linear: dimension mismatch");
    double m = model.intercept;
    double s2 = 0.0;
    for (std::size_t i = 0; i < marginals.size(); ++i) {
        if (marginals[i].family != Family::Normal)
            throw parameter_error("analytic_pf_linear: all marginals must be normal");
        m -= model.coefficients[i] * marginals[i].mu;
        const double cs = model.coefficients[i] * marginals[i].sigma;
        s2 += cs * cs;
    }
    return norm_cdf(-m / std::sqrt(s2));
}

EvaluatedSample build_sample(const PerformanceModel& model,
                             const std::vector<DistributionSpec>& marginals, std::size_t n,
                             std::uint64_t seed) {
    if (model.kind != PerformanceModel::Kind::LinearGaussian)
        throw parameter_error("build_sample: tabulated samples come from ingest_sample");
    if (n < 1) throw parameter_error("build_sample: n must be >= 1");
    const std::size_t d = marginals.size();
    if (d != model.coefficients.size())
        throw parameter_error("build_sample: marginal count does not match model dimension");

    std::vector<double> points(n * d);
    // One substream per input column keeps every column reproducible
    // independently of d and of evaluation order.
    for (std::size_t i = 0; i < d; ++i) {
        RngStream rng = RngStream::substream(seed, i);
        for (std::size_t k = 0; k < n; ++k) points[k * d + i] = sample_one(marginals[i], rng);
    }
    std::vector<double> g(n);
    std::vector<double> x(d);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < d; ++i) x[i] = points[k * d + i];
        g[k] = evaluate(model, x);
    }
    return EvaluatedSample(std::move(points), std::move(g), marginals, seed);
}

void write_sample(const EvaluatedSample& sample, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings on every platform
    if (!out) throw io_error("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < sample.dim(); ++i) out << 'x' << (i + 1) << ',';
    out << "g\n";
    char buf[32];
    for (std::size_t k = 0; k < sample.size(); ++k) {
        for (std::size_t i = 0; i < sample.dim(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", sample.point(k, i));
            out << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", sample.g(k));
        out << buf << '\n';
    }
    if (!out) throw io_error("write failed for " + path);
}

EvaluatedSample ingest_sample(const std::string& path,
                              const std::vector<DistributionSpec>& marginals) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open sample file " + path);
    const std::size_t d = marginals.size();

    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::string expected;
        for (std::size_t i = 0; i < d; ++i) expected += "x" + std::to_string(i + 1) + ",";
        expected += "g";
        if (line != expected)
            throw io_error(path + ": bad header, expected \"" + expected + "\"");
    }

    std::vector<double> points;
    std::vector<double> g;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                throw io_error(path + ": row " + std::to_string(row) + ": non-numeric value \"" +
                               tok + "\"");
            }
            if (pos != tok.size())
                throw io_error(path + ": row " + std::to_string(row) + ": trailing characters in \"" +
                               tok + "\"");
            if (!std::isfinite(v))
                throw io_error(path + ": row " + std::to_string(row) + ": non-finite value");
            vals.push_back(v);
        }
        if (vals.size() != d + 1)
            throw io_error(path + ": row " + std::to_string(row) + ": expected " +
                           std::to_string(d + 1) + " columns, got " + std::to_string(vals.size()));
        for (std::size_t i = 0; i < d; ++i) points.push_back(vals[i]);
        g.push_back(vals[d]);
    }
    if (g.empty()) throw io_error(path + ": no data rows");

    EvaluatedSample sample(std::move(points), std::move(g), marginals, std::nullopt);

    // Distributional sanity check: empirical column means against the declared
    // marginals, warn only.
    const double n = static_cast<double>(sample.size());
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < sample.size(); ++k) s += sample.point(k, i);
        const double emp = s / n;
        const double se = std::sqrt(variance(marginals[i]) / n);
        if (std::abs(emp - mean(marginals[i])) > 6.0 * se)
            sample.add_warning("variable " + std::to_string(i + 1) +
                               ": empirical mean " + std::to_string(emp) +
                               " deviates more than 6 standard errors from declared marginal " +
                               format_distribution(marginals[i]));
    }
    return sample;
}

}  // namespace psa
