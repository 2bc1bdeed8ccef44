#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace tscv {

/// Which of the two dual calculi a quantity lives in.
enum class Flavor { delta, nabla };

const char* to_string(Flavor flavor);

struct Jumps {
    double sigma;
    double rho;
    double mu;
    double nu;
};

/// Coefficients of an affine backward jump rho(t) = a1 * t + a0.
struct AffineJump {
    double a1;
    double a0;
};

/// A finite time scale: a strictly increasing list of at least three reals.
///
/// Every point of a finite scale is isolated, so the forward and backward
/// jumps are simply the neighbouring points, with sigma(max) = max and
/// rho(min) = min. Copies share the underlying point storage.
class TimeScale {
public:
    /// Sorts, merges points closer than 1e-12 * span and validates.
    static TimeScale from_points(std::vector<double> points);
    /// `n` equally spaced points from `a` to `b` inclusive.
    static TimeScale uniform(double a, double b, std::size_t n);
    /// {a, a + h, ..., b}; (b - a) / h must be an integer.
    static TimeScale h_scale(double h, double a, double b);
    /// {a, q a, q^2 a, ..., b}; b / a must be an integer power of q > 1.
    static TimeScale q_scale(double q, double a, double b);

    std::size_t size() const noexcept { return points_->size(); }
    double operator[](std::size_t i) const { return (*points_)[i]; }
    std::span<const double> points() const noexcept { return *points_; }
    double min() const noexcept { return points_->front(); }
    double max() const noexcept { return points_->back(); }
    double extent() const noexcept { return max() - min(); }

    /// Lookup with tolerance 1e-12 * extent.
    std::optional<std::size_t> find(double t) const;
    /// As find(), but throws PointNotInScale.
    std::size_t index_of(double t) const;

    std::size_t sigma_index(std::size_t i) const noexcept { return i + 1 < size() ? i + 1 : i; }
    std::size_t rho_index(std::size_t i) const noexcept { return i > 0 ? i - 1 : i; }
    double sigma(std::size_t i) const noexcept { return (*this)[sigma_index(i)]; }
    double rho(std::size_t i) const noexcept { return (*this)[rho_index(i)]; }
    double mu(std::size_t i) const noexcept { return sigma(i) - (*this)[i]; }
    double nu(std::size_t i) const noexcept { return (*this)[i] - rho(i); }

    /// Jump operators and graininess at the point `t` (must belong to the scale).
    Jumps jumps(double t) const;

    /// Graininess in the given flavor: mu for delta, nu for nabla.
    double grain(std::size_t i, Flavor flavor) const noexcept {
        return flavor == Flavor::delta ? mu(i) : nu(i);
    }

    friend bool operator==(const TimeScale& lhs, const TimeScale& rhs) {
        return lhs.points_ == rhs.points_ || *lhs.points_ == *rhs.points_;
    }

private:
    explicit TimeScale(std::vector<double> points);

    std::shared_ptr<const std::vector<double>> points_;
};

/// Real values attached to a contiguous index range [first, last] of a scale.
class GridFunction {
public:
    /// Empty function on `scale`.
    explicit GridFunction(TimeScale scale);
    GridFunction(TimeScale scale, std::size_t first, std::vector<double> values);

    /// Samples `f(t)` at scale indices first..last.
    template <typename Fn>
    static GridFunction sample(const TimeScale& scale, std::size_t first, std::size_t last, Fn&& f) {
        std::vector<double> values;
        values.reserve(last - first + 1);
        for (std::size_t i = first; i <= last; ++i) values.push_back(f(scale[i]));
        return GridFunction(scale, first, std::move(values));
    }

    const TimeScale& scale() const noexcept { return scale_; }
    bool empty() const noexcept { return values_.empty(); }
    std::size_t size() const noexcept { return values_.size(); }
    /// First and last scale index of the domain; meaningless when empty().
    std::size_t first() const noexcept { return first_; }
    std::size_t last() const noexcept { return first_ + values_.size() - 1; }
    bool contains(std::size_t i) const noexcept {
        return !values_.empty() && i >= first_ && i <= last();
    }

    /// Value at scale index `i`; throws TrajectoryDomainError outside the domain.
    double at(std::size_t i) const;
    /// Unchecked value at scale index `i`.
    double operator()(std::size_t i) const noexcept { return values_[i - first_]; }
    double at_time(double t) const { return at(scale_.index_of(t)); }
    double time(std::size_t i) const noexcept { return scale_[i]; }

    std::span<const double> values() const noexcept { return values_; }

private:
    TimeScale scale_;
    std::size_t first_ = 0;
    std::vector<double> values_;
};

/// Exact delta or nabla derivative. The delta result drops the last domain
/// point, the nabla result drops the first.
GridFunction derivative(const GridFunction& f, Flavor flavor);

/// Cauchy integral between scale indices (oriented: i1 > i2 negates).
///   delta: sum over [i1, i2) of mu * f,  nabla: sum over (i1, i2] of nu * f.
double integral_between(const GridFunction& f, std::size_t i1, std::size_t i2, Flavor flavor);
double integral(const GridFunction& f, double t1, double t2, Flavor flavor);

/// Returns (a1, a0) with a1 > 0 if rho(t) = a1 t + a0 at every point except the
/// minimum, within 1e-9 * extent.
std::optional<AffineJump> check_condition_h(const TimeScale& scale);

/// One decimal point per line, 17 significant digits.
void write_points(std::ostream& out, const TimeScale& scale);
TimeScale read_points(std::istream& in);

}  // namespace tscv
