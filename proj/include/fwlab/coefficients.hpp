#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fwlab {

/// Closed set of parametric coefficient families, plus a registration point
/// for custom coefficients in code. One Coefficient value is reused for the
/// four roles (drift b, driver f, terminal g, obstacle h); the parameter
/// layout per role is documented at the eval functions.
enum class CoeffFamily {
    Constant,      // value c (drift: one c per coordinate, or broadcast)
    Affine,        // role-specific affine form, see eval_* below
    ScalarLinear,  // c * (state): drift b_i = c*x_i; driver f = c*y
    Sinusoidal,    // a*sin(w*arg + phi) + d, arg = t (drift, obstacle) or x_0 (terminal)
    CompositeSum,  // sum of sub-coefficients
    Custom,        // registered by name
};

struct Coefficient {
    CoeffFamily family = CoeffFamily::Constant;
    std::vector<double> params;
    std::string custom_name;         // Custom only
    std::vector<Coefficient> terms;  // CompositeSum only

    static Coefficient constant(double c) { return {CoeffFamily::Constant, {c}, {}, {}}; }
    static Coefficient zero() { return constant(0.0); }
    static Coefficient custom(std::string name, std::vector<double> p = {}) {
        Coefficient c;
        c.family = CoeffFamily::Custom;
        c.custom_name = std::move(name);
        c.params = std::move(p);
        return c;
    }
};

CoeffFamily parse_family(const std::string& name);
std::string family_name(CoeffFamily family);

/// Drift b(t, x) in R^n.
/// Constant: b_i = params[i] (broadcast if one param).
/// Affine: b_i = params[i] + params[n+i]*x_i  (2n params; n params means zero slope).
/// ScalarLinear: b_i = params[0]*x_i.
/// Sinusoidal: b_i = p0*sin(p1*t + p2) + p3 (state independent).
void eval_drift(const Coefficient& c, double t, std::span<const double> x,
                std::span<double> out);

/// Driver f(t, x, y, z) in R.
/// Constant: params[0].
/// Affine: p0 + p1*y + p2*sum(z) + p3*sum(x) + p4*t (trailing params optional).
/// ScalarLinear: params[0]*y.
double eval_driver(const Coefficient& c, double t, std::span<const double> x,
                   double y, std::span<const double> z);

/// Terminal g(x) in R.
/// Constant: params[0].
/// Affine: p0 + sum_i p_{1+i}*x_i.
/// ScalarLinear: params[0]*sum(x).
/// Sinusoidal: p0*sin(p1*x_0 + p2) + p3.
double eval_terminal(const Coefficient& c, std::span<const double> x);

/// Obstacle h(t, x) in R.
/// Constant: params[0].
/// Affine: p0 + p1*t + sum_i p_{2+i}*x_i.
/// ScalarLinear: params[0]*sum(x).
/// Sinusoidal: p0*sin(p1*t + p2) + p3.
double eval_obstacle(const Coefficient& c, double t, std::span<const double> x);

/// Custom coefficient hooks; only the roles a name is actually used in need
/// to be populated.
struct CustomCoefficient {
    std::function<void(std::span<const double> params, double t,
                       std::span<const double> x, std::span<double> out)> drift;
    std::function<double(std::span<const double> params, double t,
                         std::span<const double> x, double y,
                         std::span<const double> z)> driver;
    std::function<double(std::span<const double> params,
                         std::span<const double> x)> terminal;
    std::function<double(std::span<const double> params, double t,
                         std::span<const double> x)> obstacle;
};

/// Registration point for coefficients outside the parametric families.
/// Built in: "put_payoff" with params {strike}: max(strike - x_0, 0),
/// usable as terminal and obstacle.
void register_custom_coefficient(const std::string& name, CustomCoefficient coeff);

} // namespace fwlab
