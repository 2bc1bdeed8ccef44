#include "tscv/problem_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <variant>

#include "tscv/error.hpp"
#include "tscv/format.hpp"

namespace tscv {
namespace {

struct Value {
    std::variant<double, std::string, std::vector<double>> data;
    bool quoted = false;
    int line = 0;
};

using Section = std::map<std::string, Value, std::less<>>;

struct Document {
    std::map<std::string, Section, std::less<>> sections;
    std::map<std::string, int, std::less<>> section_lines;
};

class Reader {
public:
    explicit Reader(std::string_view origin) : origin_(origin) {}

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(line) + ": " + msg);
    }

    static std::string_view trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::optional<double> number(std::string_view s) const {
        s = trim(s);
        if (s.empty()) return std::nullopt;
        if (s.front() == '+') s.remove_prefix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
        return v;
    }

    // Drops a trailing comment that is not inside a string.
    static std::string_view strip_comment(std::string_view s) {
        bool in_string = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_string = !in_string;
            if (s[i] == '#' && !in_string) return s.substr(0, i);
        }
        return s;
    }

    Value value(std::string_view raw, int line) const {
        raw = trim(raw);
        Value v;
        v.line = line;
        if (raw.empty()) fail(line, "missing value");
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
            v.data = std::string(raw.substr(1, raw.size() - 2));
            v.quoted = true;
        } else if (raw.front() == '[') {
            if (raw.back() != ']') fail(line, "unterminated list");
            std::vector<double> list;
            std::string_view body = trim(raw.substr(1, raw.size() - 2));
            while (!body.empty()) {
                const auto comma = body.find(',');
                const std::string_view item = trim(body.substr(0, comma));
                if (!item.empty()) {
                    const auto x = number(item);
                    if (!x) fail(line, "not a number in list: '" + std::string(item) + "'");
                    list.push_back(*x);
                }
                if (comma == std::string_view::npos) break;
                body = body.substr(comma + 1);
            }
            v.data = std::move(list);
        } else if (const auto x = number(raw)) {
            v.data = *x;
        } else {
            v.data = std::string(raw);
        }
        return v;
    }

    Document read(std::string_view text) const {
        Document doc;
        std::string current;
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            line = trim(strip_comment(line));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(line_no, "malformed section header");
                current = std::string(trim(line.substr(1, line.size() - 2)));
                static const std::set<std::string, std::less<>> known = {"scale", "problem", "boundary",
                                                                        "constraint", "params"};
                if (!known.contains(current)) fail(line_no, "unknown section [" + current + "]");
                if (doc.section_lines.contains(current)) fail(line_no, "duplicate section [" + current + "]");
                doc.section_lines[current] = line_no;
                doc.sections[current];
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) fail(line_no, "expected key = value");
            const std::string key(trim(line.substr(0, eq)));
            if (key.empty()) fail(line_no, "missing key");
            if (current.empty()) fail(line_no, "key '" + key + "' outside of a section");
            auto& sec = doc.sections[current];
            if (sec.contains(key)) fail(line_no, "duplicate key '" + key + "' in [" + current + "]");
            sec.emplace(key, value(line.substr(eq + 1), line_no));
        }
        return doc;
    }

    std::string origin_;
};

class Builder {
public:
    Builder(const Reader& reader, Document doc, std::filesystem::path base)
        : r_(reader), doc_(std::move(doc)), base_(std::move(base)) {}

    ProblemSpec build() {
        check_keys("scale", {"kind", "start", "stop", "n", "h", "q", "points", "path"});
        check_keys("problem", {"flavor", "L", "g", "F", "extremum"});
        check_keys("boundary", {"a", "b", "left", "right"});
        check_keys("constraint", {"gamma"});

        Bindings params;
        if (auto* sec = find("params")) {
            for (const auto& [name, v] : *sec) {
                static const std::set<std::string, std::less<>> reserved = {"t", "y", "v", "z", "sin", "cos",
                                                                           "exp", "log", "sqrt", "abs"};
                if (reserved.contains(name) || !valid_identifier(name)) {
                    r_.fail(v.line, "invalid parameter name '" + name + "'");
                }
                params[name] = num(v, name);
            }
        }

        TimeScale scale = build_scale();
        const int problem_line = section_line("problem");
        if (!find("problem")) r_.fail(1, "missing section [problem]");
        const Value* l_text = get("problem", "L");
        if (!l_text) r_.fail(problem_line, "missing key 'L' in [problem]");

        Flavor flavor = Flavor::delta;
        if (const Value* f = get("problem", "flavor")) {
            const std::string s = str(*f, "flavor");
            if (s == "delta") flavor = Flavor::delta;
            else if (s == "nabla") flavor = Flavor::nabla;
            else r_.fail(f->line, "flavor must be delta or nabla, got '" + s + "'");
        }
        Sense sense = Sense::minimize;
        if (const Value* e = get("problem", "extremum")) {
            const std::string s = str(*e, "extremum");
            if (s == "min") sense = Sense::minimize;
            else if (s == "max") sense = Sense::maximize;
            else r_.fail(e->line, "extremum must be min or max, got '" + s + "'");
        }

        std::optional<Expression> constraint;
        if (const Value* f = get("problem", "F")) constraint = expr(*f, "F", params, true);
        std::optional<double> gamma;
        if (const Value* g = get("constraint", "gamma")) gamma = num(*g, "gamma");

        if (!find("boundary")) r_.fail(1, "missing section [boundary]");
        ProblemSpec spec{
            .scale = scale,
            .a = get("boundary", "a") ? num(*get("boundary", "a"), "a") : scale.min(),
            .b = get("boundary", "b") ? num(*get("boundary", "b"), "b") : scale.max(),
            .flavor = flavor,
            .lagrangian = expr(*l_text, "L", params, true),
            .generator = get("problem", "g") ? expr(*get("problem", "g"), "g", params, false) : Expression(),
            .constraint = constraint,
            .gamma = gamma,
            .left = boundary("left"),
            .right = boundary("right"),
            .params = params,
            .sense = sense,
        };

        const auto diagnostics = validate(spec);
        if (!diagnostics.empty()) {
            std::string message = "invalid problem in " + r_.origin_ + ":";
            for (const auto& d : diagnostics) {
                message += "\n  " + r_.origin_ + ":" + std::to_string(line_of(d.kind)) + ": " + to_string(d.kind) +
                           ": " + d.message;
            }
            throw Error(ErrorCode::ValidationError, message);
        }
        return spec;
    }

private:
    static bool valid_identifier(std::string_view s) {
        if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
        for (char c : s) {
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
        }
        return true;
    }

    const Section* find(std::string_view section) const {
        const auto it = doc_.sections.find(section);
        return it == doc_.sections.end() ? nullptr : &it->second;
    }
    const Value* get(std::string_view section, std::string_view key) const {
        const Section* s = find(section);
        if (!s) return nullptr;
        const auto it = s->find(key);
        return it == s->end() ? nullptr : &it->second;
    }
    int section_line(std::string_view section) const {
        const auto it = doc_.section_lines.find(section);
        return it == doc_.section_lines.end() ? 1 : it->second;
    }

    void check_keys(std::string_view section, std::initializer_list<std::string_view> allowed) const {
        const Section* s = find(section);
        if (!s) return;
        for (const auto& [key, v] : *s) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                r_.fail(v.line, "unknown key '" + key + "' in [" + std::string(section) + "]");
            }
        }
    }

    double num(const Value& v, std::string_view key) const {
        if (const double* d = std::get_if<double>(&v.data)) return *d;
        r_.fail(v.line, "'" + std::string(key) + "' must be a number");
    }
    std::string str(const Value& v, std::string_view key) const {
        if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
        r_.fail(v.line, "'" + std::string(key) + "' must be a string");
    }

    Expression expr(const Value& v, std::string_view key, const Bindings& params, bool with_z) const {
        std::string text;
        if (const auto* s = std::get_if<std::string>(&v.data)) text = *s;
        else if (const double* d = std::get_if<double>(&v.data)) text = format_shortest(*d);
        else r_.fail(v.line, "'" + std::string(key) + "' must be an expression string");
        try {
            return with_z ? parse_integrand(text, params) : parse_generator(text, params);
        } catch (const SyntaxError& e) {
            r_.fail(v.line, std::string(key) + ": " + e.what() + " (column " + std::to_string(e.position()) + ")");
        } catch (const Error& e) {
            r_.fail(v.line, std::string(key) + ": " + e.what());
        }
    }

    Boundary boundary(std::string_view side) const {
        const Value* v = get("boundary", side);
        if (!v) r_.fail(section_line("boundary"), "missing key '" + std::string(side) + "' in [boundary]");
        if (const auto* s = std::get_if<std::string>(&v->data)) {
            if (*s == "free") return Boundary::free();
            r_.fail(v->line, "'" + std::string(side) + "' must be a number or free");
        }
        return Boundary::fixed(num(*v, side));
    }

    TimeScale build_scale() const {
        if (!find("scale")) r_.fail(1, "missing section [scale]");
        const int line = section_line("scale");
        const Value* kind_v = get("scale", "kind");
        if (!kind_v) r_.fail(line, "missing key 'kind' in [scale]");
        const std::string kind = str(*kind_v, "kind");

        static const std::map<std::string, std::vector<std::string>, std::less<>> required = {
            {"uniform", {"start", "stop", "n"}}, {"hz", {"h", "start", "stop"}}, {"q", {"q", "start", "stop"}},
            {"points", {"points"}},             {"file", {"path"}},
        };
        const auto it = required.find(kind);
        if (it == required.end()) {
            r_.fail(kind_v->line, "unknown scale kind '" + kind + "' (uniform, hz, q, points, file)");
        }
        for (const auto& [key, v] : *find("scale")) {
            if (key == "kind") continue;
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
                r_.fail(v.line, "key '" + key + "' does not apply to scale kind '" + kind + "'");
            }
        }
        for (const auto& key : it->second) {
            if (!get("scale", key)) r_.fail(line, "missing key '" + key + "' for scale kind '" + kind + "'");
        }
        const auto n = [&](std::string_view key) { return num(*get("scale", key), key); };
        try {
            if (kind == "uniform") {
                const double count = n("n");
                if (count < 0 || count != std::floor(count)) r_.fail(get("scale", "n")->line, "'n' must be a count");
                return TimeScale::uniform(n("start"), n("stop"), static_cast<std::size_t>(count));
            }
            if (kind == "hz") return TimeScale::h_scale(n("h"), n("start"), n("stop"));
            if (kind == "q") return TimeScale::q_scale(n("q"), n("start"), n("stop"));
            if (kind == "points") {
                const Value& v = *get("scale", "points");
                const auto* list = std::get_if<std::vector<double>>(&v.data);
                if (!list) r_.fail(v.line, "'points' must be a list");
                return TimeScale::from_points(*list);
            }
            const Value& v = *get("scale", "path");
            std::filesystem::path p = str(v, "path");
            if (p.is_relative()) p = base_ / p;
            std::ifstream in(p);
            if (!in) throw Error(ErrorCode::IoError, "cannot open point file " + p.string());
            return read_points(in);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IoError || e.code() == ErrorCode::ParseError) throw;
            r_.fail(line, std::string("[scale]: ") + e.what());
        }
    }

    int line_of(Diagnostic::Kind kind) const {
        using K = Diagnostic::Kind;
        const auto key_line = [&](std::string_view sec, std::string_view key) {
            const Value* v = get(sec, key);
            return v ? v->line : section_line(sec);
        };
        switch (kind) {
            case K::EndpointNotInScale:
            case K::EndpointOrder:
            case K::NoInteriorPoint: return section_line("boundary");
            case K::NoPointBeyondB: return key_line("boundary", "right");
            case K::NoPointBeforeA: return key_line("boundary", "left");
            case K::MissingGamma: return key_line("problem", "F");
            case K::MissingConstraint: return key_line("constraint", "gamma");
            case K::UnknownName:
            case K::GeneratorUsesZ: return section_line("problem");
        }
        return 1;
    }

    const Reader& r_;
    Document doc_;
    std::filesystem::path base_;
};

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

ProblemSpec parse_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view origin) {
    const Reader reader(origin);
    return Builder(reader, reader.read(text), base_dir).build();
}

ProblemSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path().empty() ? "." : path.parent_path(), path.string());
}

void write_config(std::ostream& out, const ProblemSpec& spec) {
    out << "[scale]\nkind = \"points\"\npoints = [";
    const auto pts = spec.scale.points();
    for (std::size_t i = 0; i < pts.size(); ++i) out << (i ? ", " : "") << format_shortest(pts[i]);
    out << "]\n\n[problem]\n";
    out << "flavor = " << quoted(to_string(spec.flavor)) << "\n";
    out << "L = " << quoted(spec.lagrangian.to_string()) << "\n";
    out << "g = " << quoted(spec.generator.to_string()) << "\n";
    if (spec.constraint) out << "F = " << quoted(spec.constraint->to_string()) << "\n";
    out << "extremum = " << quoted(spec.sense == Sense::maximize ? "max" : "min") << "\n";
    const auto side = [](const Boundary& b) { return b.is_free ? std::string("\"free\"") : format_shortest(b.value); };
    out << "\n[boundary]\na = " << format_shortest(spec.a) << "\nb = " << format_shortest(spec.b) << "\n";
    out << "left = " << side(spec.left) << "\nright = " << side(spec.right) << "\n";
    if (spec.gamma) out << "\n[constraint]\ngamma = " << format_shortest(*spec.gamma) << "\n";
    if (!spec.params.empty()) {
        out << "\n[params]\n";
        for (const auto& [name, value] : spec.params) out << name << " = " << format_shortest(value) << "\n";
    }
}

}  // namespace tscv
