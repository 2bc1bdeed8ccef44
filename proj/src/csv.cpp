#include "tscv/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tscv/error.hpp"
#include "tscv/format.hpp"

namespace tscv {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return cells;
}

template <typename T>
void to_file(const T& item, const std::filesystem::path& path, void (*writer)(std::ostream&, const T&)) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    writer(out, item);
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

void write_solution_csv(std::ostream& out, const Solution& solution) {
    out << "t,y,z\n";
    const GridFunction& y = solution.y;
    if (y.empty()) return;
    for (std::size_t i = y.first(); i <= y.last(); ++i) {
        const double z = solution.z.contains(i) ? solution.z(i) : 0.0;
        out << format_double(y.time(i)) << ',' << format_double(y(i)) << ',' << format_double(z) << '\n';
    }
}

void write_report_csv(std::ostream& out, const ResidualReport& report) {
    out << "# max_abs," << format_double(report.max_abs) << '\n';
    if (report.boundary_left) out << "# boundary_left," << format_double(*report.boundary_left) << '\n';
    if (report.boundary_right) out << "# boundary_right," << format_double(*report.boundary_right) << '\n';
    out << "# integral_form_deviation," << format_double(report.integral_form_deviation) << '\n';
    out << "# lam0," << format_double(report.multipliers.lam0) << '\n';
    out << "# lam," << format_double(report.multipliers.lam) << '\n';
    out << "t,residual\n";
    const GridFunction& r = report.pointwise;
    if (r.empty()) return;
    for (std::size_t i = r.first(); i <= r.last(); ++i) {
        out << format_double(r.time(i)) << ',' << format_double(r(i)) << '\n';
    }
}

void emit_csv(const Solution& solution, const std::filesystem::path& path) {
    to_file(solution, path, &write_solution_csv);
}

void emit_csv(const ResidualReport& report, const std::filesystem::path& path) {
    to_file(report, path, &write_report_csv);
}

GridFunction read_trajectory_csv(std::istream& in, const TimeScale& scale) {
    std::string line;
    int line_no = 0;
    std::optional<std::size_t> t_col;
    std::optional<std::size_t> y_col;
    std::optional<std::size_t> first;
    std::vector<double> values;
    const auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::ParseError, "trajectory csv line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split(line);
        if (!t_col) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (cells[c] == "t") t_col = c;
                if (cells[c] == "y") y_col = c;
            }
            if (!t_col || !y_col) fail("header must name columns t and y");
            continue;
        }
        if (cells.size() <= std::max(*t_col, *y_col)) fail("missing column");
        double cell[2] = {0.0, 0.0};
        const std::size_t cols[2] = {*t_col, *y_col};
        for (int k = 0; k < 2; ++k) {
            const std::string& s = cells[cols[k]];
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cell[k]);
            if (ec != std::errc{} || ptr != s.data() + s.size()) fail("not a number: '" + s + "'");
        }
        const auto idx = scale.find(cell[0]);
        if (!idx) fail("t = " + format_shortest(cell[0]) + " is not a scale point");
        if (!first) first = *idx;
        if (*idx != *first + values.size()) fail("times must be consecutive scale points");
        values.push_back(cell[1]);
    }
    if (!t_col) throw Error(ErrorCode::ParseError, "trajectory csv has no header");
    if (values.empty()) return GridFunction(scale);
    return GridFunction(scale, *first, std::move(values));
}

GridFunction read_trajectory_csv(const std::filesystem::path& path, const TimeScale& scale) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return read_trajectory_csv(in, scale);
}

}  // namespace tscv
