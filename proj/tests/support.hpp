#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "tscv/problem.hpp"

namespace tscv::fixtures {

inline ProblemSpec make_spec(TimeScale ts, double a, double b, Flavor flavor, const std::string& l,
                             const std::string& g, Boundary left, Boundary right, Bindings params = {}) {
    return ProblemSpec{
        .scale = ts,
        .a = a,
        .b = b,
        .flavor = flavor,
        .lagrangian = parse_integrand(l, params),
        .generator = parse_generator(g, params),
        .constraint = std::nullopt,
        .gamma = std::nullopt,
        .left = left,
        .right = right,
        .params = params,
        .sense = Sense::minimize,
    };
}

inline ProblemSpec with_constraint(ProblemSpec spec, const std::string& f, double gamma) {
    spec.constraint = parse_integrand(f, spec.params);
    spec.gamma = gamma;
    return spec;
}

/// Random polynomial text such as "0.5*t*y^2 - 1.25*v + 0.75*z".
class PolyGen {
public:
    explicit PolyGen(std::uint64_t seed) : rng_(seed) {}

    double coef() { return std::round(std::uniform_real_distribution<double>(-2, 2)(rng_) * 8) / 8; }
    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    std::mt19937_64& rng() { return rng_; }

    static std::string power(const char* var, int k) {
        if (k == 0) return "";
        return k == 1 ? std::string("*") + var : std::string("*") + var + "^" + std::to_string(k);
    }

    /// Sum of monomials in t, y, v (total degree <= 3) plus, when `with_z`,
    /// a z term with a t-polynomial coefficient.
    std::string integrand(bool with_z, int terms = 4) {
        std::ostringstream os;
        os << coef() << "*v^2";
        for (int i = 0; i < terms; ++i) {
            const int dt = pick(0, 1);
            const int dy = pick(0, 2);
            const int dv = pick(0, 3 - dy > 2 ? 2 : 3 - dy);
            os << " + " << coef() << power("t", dt) << power("y", dy) << power("v", dv);
        }
        if (with_z) os << " + " << coef() << power("t", pick(0, 1)) << "*z";
        return os.str();
    }

    /// Polynomial in t, y, v for the running integral.
    std::string generator() {
        std::ostringstream os;
        os << coef() << "*v + " << coef() << "*y" << power("t", pick(0, 1)) << " + " << coef() << power("y", pick(0, 2));
        return os.str();
    }

    std::vector<double> values(std::size_t n, double lo = -1, double hi = 1) {
        std::vector<double> out(n);
        for (double& x : out) x = uniform(lo, hi);
        return out;
    }

private:
    std::mt19937_64 rng_;
};

/// Random values on the problem's index range with the fixed boundary values in place.
inline GridFunction random_trajectory(const Problem& p, PolyGen& gen, double lo = -1, double hi = 1) {
    std::vector<double> v = gen.values(p.last_index() - p.first_index() + 1, lo, hi);
    if (!p.spec().left.is_free) v[p.ia() - p.first_index()] = p.spec().left.value;
    if (!p.spec().right.is_free) v[p.ib() - p.first_index()] = p.spec().right.value;
    return GridFunction(p.scale(), p.first_index(), std::move(v));
}

}  // namespace tscv::fixtures
