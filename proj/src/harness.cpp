#include "twolink/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace twolink {

namespace {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

double parse_double(const std::string& text, const std::string& where) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [p, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || p != end)
        throw ParseError(where + ": expected a number, got \"" + text + "\"");
    return value;
}

long parse_long(const std::string& text, const std::string& where) {
    long value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [p, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || p != end)
        throw ParseError(where + ": expected an integer, got \"" + text + "\"");
    return value;
}

bool parse_bool(const std::string& text, const std::string& where) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ParseError(where + ": expected true/false, got \"" + text + "\"");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "name",      "controller", "m1",         "m2",        "l1",
        "l2",        "J1",         "J2",         "theta1",    "theta2",
        "v1",        "v2",         "project_initial",         "xd_x",
        "xd_y",      "constraint", "ellipse_a",  "ellipse_b", "ellipse_cx",
        "ellipse_cy", "k1",        "k",          "eps1",      "eps2",
        "gravity",   "dt",         "duration",   "stride",    "settle_tol",
        "tool_error_tol",          "speed_tol",  "psi_tol"};
    return keys;
}

using KvMap = std::map<std::string, std::string>;

KvMap parse_flat_document(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known_keys().count(key))
            throw ParseError("line " + std::to_string(line_no) + ": unknown key \"" + key + "\"");
        if (kv.count(key))
            throw ParseError("line " + std::to_string(line_no) + ": duplicate key \"" + key + "\"");
        if (value.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty value for \"" + key + "\"");
        kv[key] = value;
    }
    return kv;
}

KvMap parse_json_document(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON scenario: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("JSON scenario must be an object");
    KvMap kv;
    for (const auto& [key, value] : doc.items()) {
        if (!known_keys().count(key)) throw ParseError("unknown key \"" + key + "\"");
        if (value.is_string())
            kv[key] = value.get<std::string>();
        else if (value.is_boolean())
            kv[key] = value.get<bool>() ? "true" : "false";
        else if (value.is_number())
            kv[key] = value.dump();
        else
            throw ParseError("key \"" + key + "\": value must be a string, number or boolean");
    }
    return kv;
}

Scenario scenario_from_kv(const KvMap& kv) {
    auto get = [&kv](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto get_double = [&](const std::string& key, double fallback) {
        const std::string* raw = get(key);
        return raw ? parse_double(*raw, key) : fallback;
    };

    Scenario sc;
    if (const std::string* name = get("name")) sc.name = *name;

    const std::string* controller = get("controller");
    if (!controller) throw ValidationError("controller: missing (free, tool-regulator, normal-only or constrained)");
    sc.controller = controller_from_string(*controller);

    sc.params.m1 = get_double("m1", sc.params.m1);
    sc.params.m2 = get_double("m2", sc.params.m2);
    sc.params.l1 = get_double("l1", sc.params.l1);
    sc.params.l2 = get_double("l2", sc.params.l2);
    sc.params.J1 = get_double("J1", sc.params.J1);
    sc.params.J2 = get_double("J2", sc.params.J2);

    sc.initial.q.theta1 = get_double("theta1", 0.0);
    sc.initial.q.theta2 = get_double("theta2", 0.0);
    sc.initial.v.v1 = get_double("v1", 0.0);
    sc.initial.v.v2 = get_double("v2", 0.0);

    sc.dt = get_double("dt", sc.dt);
    sc.duration = get_double("duration", sc.duration);
    if (const std::string* raw = get("stride")) {
        const long stride = parse_long(*raw, "stride");
        if (stride < 1 || stride > 1'000'000) throw ValidationError("stride: must be in [1, 1e6]");
        sc.stride = static_cast<int>(stride);
    }

    if (const std::string* raw = get("gravity")) {
        const double g0 = parse_double(*raw, "gravity");
        if (g0 < 0.0) throw ValidationError("gravity: must be >= 0");
        if (g0 > 0.0) sc.potential = PotentialSpec::gravity(g0);
    }

    const bool wants_reference = sc.controller == ControllerKind::tool_regulator ||
                                 sc.controller == ControllerKind::constrained;
    const bool wants_constraint = sc.controller == ControllerKind::normal_only ||
                                  sc.controller == ControllerKind::constrained;

    // Reference-side fields live exactly on the controllers that use them.
    for (const char* key : {"xd_x", "xd_y", "k1", "k", "settle_tol", "tool_error_tol", "speed_tol"})
        if (get(key) && !wants_reference)
            throw ValidationError(std::string(key) + ": not applicable to controller " +
                                  to_string(sc.controller));
    for (const char* key :
         {"constraint", "ellipse_a", "ellipse_b", "ellipse_cx", "ellipse_cy", "project_initial",
          "eps1", "psi_tol"})
        if (get(key) && !wants_constraint)
            throw ValidationError(std::string(key) + ": not applicable to controller " +
                                  to_string(sc.controller));
    if (get("eps2") && sc.controller != ControllerKind::constrained)
        throw ValidationError("eps2: only the constrained controller projects with it");

    if (wants_reference) {
        if (!get("xd_x") || !get("xd_y")) throw ValidationError("x_d: xd_x and xd_y are required");
        sc.x_d = ToolPoint{parse_double(*get("xd_x"), "xd_x"), parse_double(*get("xd_y"), "xd_y")};
        if (!get("k1")) throw ValidationError("k1: required");
        if (!get("k")) throw ValidationError("k: required");
        sc.gains.k1 = parse_double(*get("k1"), "k1");
        sc.gains.k = parse_double(*get("k"), "k");
        sc.settle_tol = get_double("settle_tol", sc.settle_tol);
        if (get("tool_error_tol")) sc.tool_error_tol = parse_double(*get("tool_error_tol"), "tool_error_tol");
        if (get("speed_tol")) sc.speed_tol = parse_double(*get("speed_tol"), "speed_tol");
    }

    if (wants_constraint) {
        const std::string* kind = get("constraint");
        if (!kind) throw ValidationError("constraint: required");
        if (*kind != "ellipse") throw ValidationError("constraint: only \"ellipse\" is available");
        if (!get("ellipse_a") || !get("ellipse_b"))
            throw ValidationError("constraint: ellipse_a and ellipse_b are required");
        sc.constraint = ConstraintSpec::ellipse(
            parse_double(*get("ellipse_a"), "ellipse_a"), parse_double(*get("ellipse_b"), "ellipse_b"),
            {get_double("ellipse_cx", 0.0), get_double("ellipse_cy", 0.0)});
        sc.gains.eps1 = get_double("eps1", sc.gains.eps1);
        sc.gains.eps2 = get_double("eps2", sc.gains.eps2);
        if (const std::string* raw = get("project_initial"))
            sc.project_initial = parse_bool(*raw, "project_initial");
        if (get("psi_tol")) sc.psi_tol = parse_double(*get("psi_tol"), "psi_tol");
    }

    sc.validate();
    return sc;
}

} // namespace

std::string to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::free: return "free";
        case ControllerKind::tool_regulator: return "tool-regulator";
        case ControllerKind::normal_only: return "normal-only";
        case ControllerKind::constrained: return "constrained";
    }
    return "?";
}

ControllerKind controller_from_string(const std::string& name) {
    if (name == "free") return ControllerKind::free;
    if (name == "tool-regulator" || name == "tool_regulator") return ControllerKind::tool_regulator;
    if (name == "normal-only" || name == "normal_only") return ControllerKind::normal_only;
    if (name == "constrained") return ControllerKind::constrained;
    throw ValidationError("controller: unknown value \"" + name + "\"");
}

void Scenario::validate() const {
    params.validate();
    if (!initial.finite()) throw ValidationError("initial: state components must be finite");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt: must be > 0 and finite");
    if (!(duration >= 0.0) || !std::isfinite(duration))
        throw ValidationError("duration: must be >= 0 and finite");
    if (stride < 1) throw ValidationError("stride: must be >= 1");
    gains.validate();
    if (!(settle_tol > 0.0)) throw ValidationError("settle_tol: must be > 0");

    const bool wants_reference =
        controller == ControllerKind::tool_regulator || controller == ControllerKind::constrained;
    const bool wants_constraint =
        controller == ControllerKind::normal_only || controller == ControllerKind::constrained;
    if (wants_reference != x_d.has_value())
        throw ValidationError(wants_reference ? "x_d: required by controller " + to_string(controller)
                                              : "x_d: not applicable to controller " + to_string(controller));
    if (wants_constraint != constraint.has_value())
        throw ValidationError(wants_constraint
                                  ? "constraint: required by controller " + to_string(controller)
                                  : "constraint: not applicable to controller " + to_string(controller));
    if (project_initial && !constraint)
        throw ValidationError("project_initial: needs a constraint");
    if (wants_constraint && potential.kind != PotentialSpec::Kind::none)
        throw ValidationError("gravity: constraint controllers assume zero potential");
    if (constraint && (!constraint->phi || !constraint->grad_phi))
        throw ValidationError("constraint: phi and grad_phi must be set");
}

bool Scenario::is_builtin(const std::string& name) {
    return name == "paper-sim-1" || name == "paper-sim-2" || name == "paper-constrained";
}

std::vector<std::string> Scenario::builtin_names() {
    return {"paper-sim-1", "paper-sim-2", "paper-constrained"};
}

Scenario Scenario::builtin(const std::string& name) {
    Scenario sc;
    sc.name = name;
    if (name == "paper-sim-1" || name == "paper-sim-2") {
        sc.controller = ControllerKind::tool_regulator;
        sc.x_d = name == "paper-sim-1" ? ToolPoint{0.0, 0.6} : ToolPoint{-0.6, 0.0};
        sc.gains.k1 = 200.0;
        sc.gains.k = 30.0;
        sc.tool_error_tol = 1e-3;
        sc.speed_tol = 1e-3;
    } else if (name == "paper-constrained") {
        sc.controller = ControllerKind::constrained;
        sc.x_d = ToolPoint{0.0, 0.3};
        sc.constraint = ConstraintSpec::ellipse(0.3, 0.6);
        sc.gains.k1 = 40.0;
        sc.gains.k = 30.0;
        sc.gains.eps1 = 1e-28;
        sc.gains.eps2 = 1e-28;
        // The zero configuration is kinematically singular and far off the
        // constraint, so no state there can satisfy "on the curve with
        // tangent velocity"; start from a guess whose projection is clean.
        sc.initial = {{std::numbers::pi / 2.0, std::numbers::pi / 2.0 - 0.5}, {0.0, 0.0}};
        sc.project_initial = true;
        sc.psi_tol = 1e-4;
        sc.tool_error_tol = 1e-2;
    } else {
        throw ValidationError("unknown built-in scenario \"" + name + "\"");
    }
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& text) {
    const std::string trimmed = trim(text);
    if (Scenario::is_builtin(trimmed)) return Scenario::builtin(trimmed);
    if (!trimmed.empty() && trimmed.front() == '{') return scenario_from_kv(parse_json_document(trimmed));
    return scenario_from_kv(parse_flat_document(text));
}

Scenario load_scenario_path(const std::string& path_or_builtin) {
    if (Scenario::is_builtin(path_or_builtin)) return Scenario::builtin(path_or_builtin);
    std::ifstream in(path_or_builtin, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file \"" + path_or_builtin + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

ControlLaw make_control_law(const Scenario& scenario) {
    const RobotParams params = scenario.params;
    const Gains gains = scenario.gains;
    switch (scenario.controller) {
        case ControllerKind::free:
            return [](const JointState&, double) { return TangentVector{0.0, 0.0}; };
        case ControllerKind::tool_regulator: {
            const ToolPoint x_d = *scenario.x_d;
            const PotentialSpec potential = scenario.potential;
            return [params, x_d, gains, potential](const JointState& s, double) {
                return tool_regulator(params, s, x_d, gains, potential).u;
            };
        }
        case ControllerKind::normal_only: {
            const ConstraintSpec c = *scenario.constraint;
            return [params, gains, c](const JointState& s, double) {
                return lambda_normal(params, s, c, gains.eps1) * grad_psi(params, s.q, c);
            };
        }
        case ControllerKind::constrained: {
            const ToolPoint x_d = *scenario.x_d;
            const ConstraintSpec c = *scenario.constraint;
            return [params, x_d, gains, c](const JointState& s, double) {
                return constrained_regulator(params, s, x_d, gains, c).u;
            };
        }
    }
    throw ValidationError("controller: unknown kind");
}

SampleAnnotator make_annotator(const Scenario& scenario) {
    if (!scenario.constraint) return nullptr;
    const RobotParams params = scenario.params;
    const ConstraintSpec c = *scenario.constraint;
    const double eps1 = scenario.gains.eps1;
    return [params, c, eps1](TrajectorySample& sample) {
        sample.psi = psi(params, sample.state.q, c);
        sample.lambda = lambda_normal(params, sample.state, c, eps1);
    };
}

Trajectory simulate(const Scenario& scenario) {
    scenario.validate();
    JointState initial = scenario.initial;
    if (scenario.project_initial)
        initial = init_on_constraint(scenario.params, initial.q, initial.v, *scenario.constraint);
    return integrate(scenario.params, initial, make_control_law(scenario), scenario.potential,
                     scenario.dt, scenario.duration, scenario.stride, make_annotator(scenario));
}

RunMetrics compute_metrics(const RobotParams& params, const Trajectory& traj,
                           const std::optional<ToolPoint>& x_d, double settle_tol) {
    RunMetrics m;
    const TrajectorySample& last = traj.back();
    m.final_speed = metric_at(params, last.state.q).norm(last.state.v);
    m.min_sing_margin = traj.front().sing_margin;
    for (const TrajectorySample& s : traj.samples) {
        m.min_sing_margin = std::min(m.min_sing_margin, s.sing_margin);
        if (s.psi) m.max_psi = std::max(m.max_psi.value_or(0.0), std::abs(*s.psi));
    }
    if (x_d) {
        auto tool_error = [&](const TrajectorySample& s) { return (s.tool - *x_d).norm(); };
        m.final_tool_error = tool_error(last);
        std::size_t settled_from = traj.size();  // first index of the final settled stretch
        while (settled_from > 0 && tool_error(traj.samples[settled_from - 1]) < settle_tol)
            --settled_from;
        if (settled_from < traj.size()) m.settling_time = traj.samples[settled_from].t;
    }
    m.energy_residual = traj.size() >= 3 ? energy_rate_residual(traj) : 0.0;
    return m;
}

RunResult run(const Scenario& scenario) {
    Trajectory traj = simulate(scenario);
    RunMetrics metrics = compute_metrics(scenario.params, traj, scenario.x_d, scenario.settle_tol);
    return {std::move(traj), metrics};
}

namespace {

constexpr const char* kCsvHeader =
    "t,theta1,theta2,theta1_wrapped,theta2_wrapped,v1,v2,tool_x,tool_y,u1,u2,lambda,psi,"
    "kinetic,potential,total_energy,power,sing_margin";

} // namespace

std::string export_csv(const Trajectory& traj) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const TrajectorySample& s : traj.samples) {
        const ChartPoint wrapped = s.state.q.wrap();
        out += format_double(s.t);
        for (double value : {s.state.q.theta1, s.state.q.theta2, wrapped.theta1, wrapped.theta2,
                             s.state.v.v1, s.state.v.v2, s.tool.x, s.tool.y, s.u.v1, s.u.v2}) {
            out += ',';
            out += format_double(value);
        }
        out += ',';
        if (s.lambda) out += format_double(*s.lambda);
        out += ',';
        if (s.psi) out += format_double(*s.psi);
        for (double value :
             {s.energy.kinetic, s.energy.potential, s.energy.total, s.energy.power, s.sing_margin}) {
            out += ',';
            out += format_double(value);
        }
        out += '\n';
    }
    return out;
}

namespace {

nlohmann::json sample_to_json(const TrajectorySample& s) {
    const ChartPoint wrapped = s.state.q.wrap();
    nlohmann::json j{{"t", s.t},
                     {"theta1", s.state.q.theta1},
                     {"theta2", s.state.q.theta2},
                     {"theta1_wrapped", wrapped.theta1},
                     {"theta2_wrapped", wrapped.theta2},
                     {"v1", s.state.v.v1},
                     {"v2", s.state.v.v2},
                     {"tool_x", s.tool.x},
                     {"tool_y", s.tool.y},
                     {"u1", s.u.v1},
                     {"u2", s.u.v2},
                     {"kinetic", s.energy.kinetic},
                     {"potential", s.energy.potential},
                     {"total_energy", s.energy.total},
                     {"power", s.energy.power},
                     {"sing_margin", s.sing_margin}};
    j["lambda"] = s.lambda ? nlohmann::json(*s.lambda) : nlohmann::json(nullptr);
    j["psi"] = s.psi ? nlohmann::json(*s.psi) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json optional_to_json(const std::optional<double>& value) {
    return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

} // namespace

std::string export_json(const Trajectory& traj, const RunMetrics& metrics) {
    nlohmann::json doc;
    doc["samples"] = nlohmann::json::array();
    for (const TrajectorySample& s : traj.samples) doc["samples"].push_back(sample_to_json(s));
    doc["metrics"] = {{"final_tool_error", optional_to_json(metrics.final_tool_error)},
                      {"final_speed", metrics.final_speed},
                      {"settling_time", optional_to_json(metrics.settling_time)},
                      {"max_psi", optional_to_json(metrics.max_psi)},
                      {"min_sing_margin", metrics.min_sing_margin},
                      {"energy_residual", metrics.energy_residual}};
    return doc.dump(2) + "\n";
}

Trajectory import_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid trajectory JSON: ") + e.what());
    }
    if (!doc.contains("samples") || !doc["samples"].is_array())
        throw ParseError("trajectory JSON: missing \"samples\" array");
    Trajectory traj;
    for (const nlohmann::json& j : doc["samples"]) {
        TrajectorySample s;
        s.t = j.at("t").get<double>();
        s.state.q = {j.at("theta1").get<double>(), j.at("theta2").get<double>()};
        s.state.v = {j.at("v1").get<double>(), j.at("v2").get<double>()};
        s.tool = {j.at("tool_x").get<double>(), j.at("tool_y").get<double>()};
        s.u = {j.at("u1").get<double>(), j.at("u2").get<double>()};
        if (!j.at("lambda").is_null()) s.lambda = j.at("lambda").get<double>();
        if (!j.at("psi").is_null()) s.psi = j.at("psi").get<double>();
        s.energy.kinetic = j.at("kinetic").get<double>();
        s.energy.potential = j.at("potential").get<double>();
        s.energy.total = j.at("total_energy").get<double>();
        s.energy.power = j.at("power").get<double>();
        s.sing_margin = j.at("sing_margin").get<double>();
        traj.samples.push_back(std::move(s));
    }
    return traj;
}

void export_to_file(const Trajectory& traj, const RunMetrics& metrics, ExportFormat format,
                    const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open \"" + path + "\" for writing");
    out << (format == ExportFormat::csv ? export_csv(traj) : export_json(traj, metrics));
    if (!out) throw IoError("write to \"" + path + "\" failed");
}

std::vector<ConstraintCriticalPoint> scan_constraint_critical_points(const ConstraintSpec& c,
                                                                     const ToolPoint& x_d,
                                                                     int samples) {
    std::vector<ConstraintCriticalPoint> found;
    if (!(c.a > 0.0) || !(c.b > 0.0) || samples < 8) return found;

    auto point_at = [&](double phi) {
        return ToolPoint{c.center.x + c.a * std::cos(phi), c.center.y + c.b * std::sin(phi)};
    };
    // derivative of ||p(phi) - x_d||^2 along the curve (up to the factor 2)
    auto slope = [&](double phi) {
        const ToolPoint d = point_at(phi) - x_d;
        return d.x * (-c.a * std::sin(phi)) + d.y * (c.b * std::cos(phi));
    };
    auto record = [&](double phi) {
        ConstraintCriticalPoint cp;
        cp.phi_param = phi;
        cp.tool = point_at(phi);
        cp.tool_error = (cp.tool - x_d).norm();
        const double delta = std::numbers::pi / samples;
        cp.is_minimum =
            (point_at(phi - delta) - x_d).norm() > cp.tool_error &&
            (point_at(phi + delta) - x_d).norm() > cp.tool_error;
        found.push_back(cp);
    };

    const double step = 2.0 * std::numbers::pi / samples;
    double prev = slope(0.0);
    for (int i = 0; i < samples; ++i) {
        const double phi0 = i * step;
        const double phi1 = (i + 1) * step;
        const double next = slope(phi1);
        if (prev == 0.0) {
            record(phi0);
        } else if (prev * next < 0.0) {
            double lo = phi0, hi = phi1, f_lo = prev;
            for (int iter = 0; iter < 60; ++iter) {
                const double mid = 0.5 * (lo + hi);
                const double f_mid = slope(mid);
                if (f_lo * f_mid <= 0.0)
                    hi = mid;
                else
                    lo = mid, f_lo = f_mid;
            }
            record(0.5 * (lo + hi));
        }
        prev = next;
    }
    return found;
}

} // namespace twolink
