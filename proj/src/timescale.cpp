#include "tscv/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "tscv/error.hpp"
#include "tscv/format.hpp"

namespace tscv {

const char* to_string(Flavor flavor) {
    return flavor == Flavor::delta ? "delta" : "nabla";
}

TimeScale::TimeScale(std::vector<double> points)
    : points_(std::make_shared<const std::vector<double>>(std::move(points))) {}

TimeScale TimeScale::from_points(std::vector<double> points) {
    for (double p : points) {
        if (!std::isfinite(p)) throw Error(ErrorCode::NonFiniteInput, "time scale point is not finite");
    }
    std::sort(points.begin(), points.end());
    if (!points.empty()) {
        const double tol = 1e-12 * (points.back() - points.front());
        points.erase(std::unique(points.begin(), points.end(),
                                 [tol](double x, double y) { return y - x <= tol; }),
                     points.end());
    }
    if (points.size() < 3) {
        throw Error(ErrorCode::TooFewPoints,
                    "a time scale needs at least 3 distinct points, got " + std::to_string(points.size()));
    }
    return TimeScale(std::move(points));
}

TimeScale TimeScale::uniform(double a, double b, std::size_t n) {
    if (!(a < b) || n < 3 || !std::isfinite(a) || !std::isfinite(b)) {
        throw Error(ErrorCode::BadParameters, "uniform scale needs a < b and n >= 3");
    }
    std::vector<double> pts(n);
    const double width = b - a;
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = a + width * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    pts.back() = b;
    return from_points(std::move(pts));
}

TimeScale TimeScale::h_scale(double h, double a, double b) {
    if (!(h > 0) || !(a < b) || !std::isfinite(h) || !std::isfinite(a) || !std::isfinite(b)) {
        throw Error(ErrorCode::BadParameters, "h-scale needs h > 0 and a < b");
    }
    const double steps = std::round((b - a) / h);
    if (std::abs(a + steps * h - b) > 1e-9 * std::max(1.0, b - a)) {
        throw Error(ErrorCode::BadParameters, "h-scale: (b - a) / h is not an integer");
    }
    const auto k_max = static_cast<std::size_t>(steps);
    std::vector<double> pts(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) pts[k] = a + static_cast<double>(k) * h;
    pts.back() = b;
    return from_points(std::move(pts));
}

TimeScale TimeScale::q_scale(double q, double a, double b) {
    if (!(q > 1) || !(a > 0) || !(a < b) || !std::isfinite(q) || !std::isfinite(b)) {
        throw Error(ErrorCode::BadParameters, "q-scale needs q > 1 and 0 < a < b");
    }
    const double steps = std::round(std::log(b / a) / std::log(q));
    if (std::abs(a * std::pow(q, steps) - b) > 1e-9 * b) {
        throw Error(ErrorCode::BadParameters, "q-scale: b / a is not an integer power of q");
    }
    const auto k_max = static_cast<std::size_t>(steps);
    std::vector<double> pts(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) pts[k] = a * std::pow(q, static_cast<double>(k));
    pts.back() = b;
    return from_points(std::move(pts));
}

std::optional<std::size_t> TimeScale::find(double t) const {
    const auto& pts = *points_;
    const double tol = 1e-12 * extent();
    auto it = std::lower_bound(pts.begin(), pts.end(), t - tol);
    if (it != pts.end() && std::abs(*it - t) <= tol) {
        return static_cast<std::size_t>(it - pts.begin());
    }
    return std::nullopt;
}

std::size_t TimeScale::index_of(double t) const {
    if (auto i = find(t)) return *i;
    throw Error(ErrorCode::PointNotInScale, "point " + format_shortest(t) + " is not in the time scale");
}

Jumps TimeScale::jumps(double t) const {
    const std::size_t i = index_of(t);
    return {sigma(i), rho(i), mu(i), nu(i)};
}

GridFunction::GridFunction(TimeScale scale) : scale_(std::move(scale)) {}

GridFunction::GridFunction(TimeScale scale, std::size_t first, std::vector<double> values)
    : scale_(std::move(scale)), first_(first), values_(std::move(values)) {
    if (!values_.empty() && first_ + values_.size() > scale_.size()) {
        throw Error(ErrorCode::TrajectoryDomainError, "grid function extends past the end of its scale");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "grid function value is not finite");
    }
}

double GridFunction::at(std::size_t i) const {
    if (!contains(i)) {
        throw Error(ErrorCode::TrajectoryDomainError,
                    "grid function is not defined at index " + std::to_string(i));
    }
    return values_[i - first_];
}

GridFunction derivative(const GridFunction& f, Flavor flavor) {
    if (f.size() < 2) throw Error(ErrorCode::DomainTooSmall, "derivative needs at least 2 points");
    const TimeScale& ts = f.scale();
    std::vector<double> out(f.size() - 1);
    if (flavor == Flavor::delta) {
        for (std::size_t i = f.first(); i < f.last(); ++i) {
            out[i - f.first()] = (f(i + 1) - f(i)) / ts.mu(i);
        }
        return GridFunction(ts, f.first(), std::move(out));
    }
    for (std::size_t i = f.first() + 1; i <= f.last(); ++i) {
        out[i - f.first() - 1] = (f(i) - f(i - 1)) / ts.nu(i);
    }
    return GridFunction(ts, f.first() + 1, std::move(out));
}

double integral_between(const GridFunction& f, std::size_t i1, std::size_t i2, Flavor flavor) {
    if (i1 == i2) return 0.0;
    if (i1 > i2) return -integral_between(f, i2, i1, flavor);
    const TimeScale& ts = f.scale();
    double sum = 0.0;
    if (flavor == Flavor::delta) {
        for (std::size_t k = i1; k < i2; ++k) sum += ts.mu(k) * f.at(k);
    } else {
        for (std::size_t k = i1 + 1; k <= i2; ++k) sum += ts.nu(k) * f.at(k);
    }
    return sum;
}

double integral(const GridFunction& f, double t1, double t2, Flavor flavor) {
    const TimeScale& ts = f.scale();
    return integral_between(f, ts.index_of(t1), ts.index_of(t2), flavor);
}

std::optional<AffineJump> check_condition_h(const TimeScale& scale) {
    // rho(t_i) = t_{i-1} for i >= 1; fit through the first two pairs, verify the rest.
    const double a1 = (scale[1] - scale[0]) / (scale[2] - scale[1]);
    const double a0 = scale[0] - a1 * scale[1];
    if (!(a1 > 0)) return std::nullopt;
    const double tol = 1e-9 * scale.extent();
    for (std::size_t i = 1; i < scale.size(); ++i) {
        if (std::abs(a1 * scale[i] + a0 - scale[i - 1]) > tol) return std::nullopt;
    }
    return AffineJump{a1, a0};
}

void write_points(std::ostream& out, const TimeScale& scale) {
    for (double p : scale.points()) out << format_double(p) << '\n';
}

TimeScale read_points(std::istream& in) {
    std::vector<double> pts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos || line[begin] == '#') continue;
        try {
            std::size_t used = 0;
            pts.push_back(std::stod(line.substr(begin), &used));
            if (line.find_first_not_of(" \t\r", begin + used) != std::string::npos) throw std::invalid_argument("");
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": not a decimal number: '" + line + "'");
        }
    }
    return TimeScale::from_points(std::move(pts));
}

}  // namespace tscv
