#include "fwlab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "fwlab/errors.hpp"

namespace fwlab {

namespace {

double param(const Coefficient& c, size_t i, double fallback = 0.0) {
    return i < c.params.size() ? c.params[i] : fallback;
}

double sum_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

std::map<std::string, CustomCoefficient>& registry() {
    static std::map<std::string, CustomCoefficient> reg = [] {
        std::map<std::string, CustomCoefficient> r;
        CustomCoefficient put;
        put.terminal = [](std::span<const double> p, std::span<const double> x) {
            double strike = p.empty() ? 1.0 : p[0];
            return std::max(strike - x[0], 0.0);
        };
        put.obstacle = [](std::span<const double> p, double, std::span<const double> x) {
            double strike = p.empty() ? 1.0 : p[0];
            return std::max(strike - x[0], 0.0);
        };
        r["put_payoff"] = std::move(put);
        return r;
    }();
    return reg;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

const CustomCoefficient& lookup_custom(const std::string& name) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end())
        throw SolverError(ErrorCode::ConfigError, "unknown custom coefficient '" + name + "'");
    return it->second;
}

[[noreturn]] void missing_role(const Coefficient& c, const char* role) {
    throw SolverError(ErrorCode::ConfigError, "coefficient family '" + family_name(c.family) +
                                                  (c.custom_name.empty() ? "" : "/" + c.custom_name) +
                                                  "' has no " + role + " form");
}

} // namespace

CoeffFamily parse_family(const std::string& name) {
    if (name == "constant") return CoeffFamily::Constant;
    if (name == "affine") return CoeffFamily::Affine;
    if (name == "scalar-linear") return CoeffFamily::ScalarLinear;
    if (name == "sinusoidal") return CoeffFamily::Sinusoidal;
    if (name == "composite-sum") return CoeffFamily::CompositeSum;
    if (name == "registered-custom") return CoeffFamily::Custom;
    throw SolverError(ErrorCode::ConfigError, "unknown coefficient family '" + name + "'");
}

std::string family_name(CoeffFamily family) {
    switch (family) {
        case CoeffFamily::Constant: return "constant";
        case CoeffFamily::Affine: return "affine";
        case CoeffFamily::ScalarLinear: return "scalar-linear";
        case CoeffFamily::Sinusoidal: return "sinusoidal";
        case CoeffFamily::CompositeSum: return "composite-sum";
        case CoeffFamily::Custom: return "registered-custom";
    }
    return "?";
}

void register_custom_coefficient(const std::string& name, CustomCoefficient coeff) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    registry()[name] = std::move(coeff);
}

void eval_drift(const Coefficient& c, double t, std::span<const double> x,
                std::span<double> out) {
    const int n = static_cast<int>(x.size());
    switch (c.family) {
        case CoeffFamily::Constant:
            for (int i = 0; i < n; ++i)
                out[i] = c.params.size() == 1 ? c.params[0] : param(c, i);
            return;
        case CoeffFamily::Affine:
            for (int i = 0; i < n; ++i) out[i] = param(c, i) + param(c, n + i) * x[i];
            return;
        case CoeffFamily::ScalarLinear:
            for (int i = 0; i < n; ++i) out[i] = param(c, 0) * x[i];
            return;
        case CoeffFamily::Sinusoidal: {
            double v = param(c, 0) * std::sin(param(c, 1, 1.0) * t + param(c, 2)) + param(c, 3);
            for (int i = 0; i < n; ++i) out[i] = v;
            return;
        }
        case CoeffFamily::CompositeSum: {
            std::fill(out.begin(), out.end(), 0.0);
            std::vector<double> tmp(n);
            for (const auto& term : c.terms) {
                eval_drift(term, t, x, tmp);
                for (int i = 0; i < n; ++i) out[i] += tmp[i];
            }
            return;
        }
        case CoeffFamily::Custom: {
            const auto& custom = lookup_custom(c.custom_name);
            if (!custom.drift) missing_role(c, "drift");
            custom.drift(c.params, t, x, out);
            return;
        }
    }
}

double eval_driver(const Coefficient& c, double t, std::span<const double> x, double y,
                   std::span<const double> z) {
    switch (c.family) {
        case CoeffFamily::Constant:
            return param(c, 0);
        case CoeffFamily::Affine:
            return param(c, 0) + param(c, 1) * y + param(c, 2) * sum_of(z) +
                   param(c, 3) * sum_of(x) + param(c, 4) * t;
        case CoeffFamily::ScalarLinear:
            return param(c, 0) * y;
        case CoeffFamily::Sinusoidal:
            return param(c, 0) * std::sin(param(c, 1, 1.0) * t + param(c, 2)) + param(c, 3);
        case CoeffFamily::CompositeSum: {
            double v = 0.0;
            for (const auto& term : c.terms) v += eval_driver(term, t, x, y, z);
            return v;
        }
        case CoeffFamily::Custom: {
            const auto& custom = lookup_custom(c.custom_name);
            if (!custom.driver) missing_role(c, "driver");
            return custom.driver(c.params, t, x, y, z);
        }
    }
    return 0.0;
}

double eval_terminal(const Coefficient& c, std::span<const double> x) {
    switch (c.family) {
        case CoeffFamily::Constant:
            return param(c, 0);
        case CoeffFamily::Affine: {
            double v = param(c, 0);
            for (size_t i = 0; i < x.size(); ++i) v += param(c, 1 + i) * x[i];
            return v;
        }
        case CoeffFamily::ScalarLinear:
            return param(c, 0) * sum_of(x);
        case CoeffFamily::Sinusoidal:
            return param(c, 0) * std::sin(param(c, 1, 1.0) * x[0] + param(c, 2)) + param(c, 3);
        case CoeffFamily::CompositeSum: {
            double v = 0.0;
            for (const auto& term : c.terms) v += eval_terminal(term, x);
            return v;
        }
        case CoeffFamily::Custom: {
            const auto& custom = lookup_custom(c.custom_name);
            if (!custom.terminal) missing_role(c, "terminal");
            return custom.terminal(c.params, x);
        }
    }
    return 0.0;
}

double eval_obstacle(const Coefficient& c, double t, std::span<const double> x) {
    switch (c.family) {
        case CoeffFamily::Constant:
            return param(c, 0);
        case CoeffFamily::Affine: {
            double v = param(c, 0) + param(c, 1) * t;
            for (size_t i = 0; i < x.size(); ++i) v += param(c, 2 + i) * x[i];
            return v;
        }
        case CoeffFamily::ScalarLinear:
            return param(c, 0) * sum_of(x);
        case CoeffFamily::Sinusoidal:
            return param(c, 0) * std::sin(param(c, 1, 1.0) * t + param(c, 2)) + param(c, 3);
        case CoeffFamily::CompositeSum: {
            double v = 0.0;
            for (const auto& term : c.terms) v += eval_obstacle(term, t, x);
            return v;
        }
        case CoeffFamily::Custom: {
            const auto& custom = lookup_custom(c.custom_name);
            if (!custom.obstacle) missing_role(c, "obstacle");
            return custom.obstacle(c.params, t, x);
        }
    }
    return 0.0;
}

} // namespace fwlab
