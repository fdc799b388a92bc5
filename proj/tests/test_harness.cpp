#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "twolink/errors.hpp"
#include "twolink/harness.hpp"

using namespace twolink;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

const char* kCsvHeader =
    "t,theta1,theta2,theta1_wrapped,theta2_wrapped,v1,v2,tool_x,tool_y,u1,u2,lambda,psi,"
    "kinetic,potential,total_energy,power,sing_margin";
} // namespace

TEST_CASE("controller names round trip") {
    for (ControllerKind kind : {ControllerKind::free, ControllerKind::tool_regulator,
                                ControllerKind::normal_only, ControllerKind::constrained})
        CHECK(controller_from_string(to_string(kind)) == kind);
    CHECK(controller_from_string("tool_regulator") == ControllerKind::tool_regulator);
    CHECK_THROWS_AS(controller_from_string("pid"), ValidationError);
}

TEST_CASE("flat scenario documents") {
    SUBCASE("minimal free document gets all defaults") {
        const Scenario sc = load_scenario("controller = free\ntheta1 = 0.25\nv1 = 0.5\n");
        CHECK(sc.controller == ControllerKind::free);
        CHECK(sc.initial.q.theta1 == 0.25);
        CHECK(sc.initial.q.theta2 == 0.0);
        CHECK(sc.initial.v.v1 == 0.5);
        CHECK(sc.dt == 1e-3);
        CHECK(sc.duration == 10.0);
        CHECK(sc.stride == 10);
        CHECK(sc.params.l1 == 0.4);
        CHECK(sc.params.J1 == doctest::Approx(0.4 * 0.4 / 12.0));
        CHECK(!sc.x_d.has_value());
        CHECK(!sc.constraint.has_value());
        CHECK(sc.potential.kind == PotentialSpec::Kind::none);
    }
    SUBCASE("comments and blank lines are ignored") {
        const Scenario sc = load_scenario("# free drift\n\ncontroller = free # trailing\n");
        CHECK(sc.controller == ControllerKind::free);
    }
    SUBCASE("a complete regulator document") {
        const Scenario sc = load_scenario(
            "name = demo\ncontroller = tool-regulator\nxd_x = -0.6\nxd_y = 0\n"
            "k1 = 200\nk = 30\ndt = 2e-3\nduration = 4\nstride = 5\n"
            "tool_error_tol = 1e-3\nspeed_tol = 1e-3\n");
        CHECK(sc.name == "demo");
        REQUIRE(sc.x_d.has_value());
        CHECK(sc.x_d->x == -0.6);
        CHECK(sc.gains.k1 == 200.0);
        CHECK(sc.dt == 2e-3);
        CHECK(sc.stride == 5);
        REQUIRE(sc.tool_error_tol.has_value());
        CHECK(*sc.tool_error_tol == 1e-3);
    }
    SUBCASE("bad documents name the offending line or field") {
        CHECK_THROWS_WITH_AS(load_scenario("controller = free\nbogus = 1\n"),
                             doctest::Contains("line 2"), ParseError);
        CHECK_THROWS_WITH_AS(load_scenario("controller = free\nbogus = 1\n"),
                             doctest::Contains("bogus"), ParseError);
        CHECK_THROWS_WITH_AS(load_scenario("controller = free\ndt = 1e-3\ndt = 2e-3\n"),
                             doctest::Contains("duplicate"), ParseError);
        CHECK_THROWS_WITH_AS(load_scenario("controller = free\ndt =\n"),
                             doctest::Contains("empty value"), ParseError);
        CHECK_THROWS_AS(load_scenario("controller = free\ndt = abc\n"), ParseError);
        CHECK_THROWS_AS(load_scenario("controller = free\njust-words\n"), ParseError);
        CHECK_THROWS_WITH_AS(load_scenario("controller = free\ndt = -1\n"),
                             doctest::Contains("dt"), ValidationError);
        CHECK_THROWS_WITH_AS(load_scenario("theta1 = 1\n"), doctest::Contains("controller"),
                             ValidationError);
    }
    SUBCASE("reference and constraint keys are controller-gated") {
        CHECK_THROWS_WITH_AS(load_scenario("controller = free\nk1 = 5\n"),
                             doctest::Contains("k1"), ValidationError);
        CHECK_THROWS_WITH_AS(load_scenario("controller = free\nellipse_a = 0.3\n"),
                             doctest::Contains("ellipse_a"), ValidationError);
        CHECK_THROWS_WITH_AS(
            load_scenario("controller = tool-regulator\nxd_x = 0\nxd_y = 0.6\nk = 30\n"),
            doctest::Contains("k1"), ValidationError);
        CHECK_THROWS_WITH_AS(load_scenario("controller = normal-only\nconstraint = ellipse\n"
                                           "ellipse_a = 0.3\nellipse_b = 0.6\neps2 = 1e-20\n"),
                             doctest::Contains("eps2"), ValidationError);
        CHECK_THROWS_WITH_AS(
            load_scenario("controller = constrained\nxd_x = 0\nxd_y = 0.3\nk1 = 40\nk = 30\n"
                          "constraint = ellipse\nellipse_a = 0.3\nellipse_b = 0.6\ngravity = 9.81\n"),
            doctest::Contains("gravity"), ValidationError);
        CHECK_THROWS_WITH_AS(load_scenario("controller = normal-only\nconstraint = circle\n"),
                             doctest::Contains("ellipse"), ValidationError);
    }
    SUBCASE("gravity switches the potential on") {
        const Scenario sc = load_scenario("controller = free\ngravity = 9.81\n");
        CHECK(sc.potential.kind == PotentialSpec::Kind::gravity);
        CHECK(sc.potential.g0 == 9.81);
        const Scenario off = load_scenario("controller = free\ngravity = 0\n");
        CHECK(off.potential.kind == PotentialSpec::Kind::none);
        CHECK_THROWS_AS(load_scenario("controller = free\ngravity = -1\n"), ValidationError);
    }
}

TEST_CASE("json scenario documents") {
    const Scenario flat = load_scenario(
        "controller = tool-regulator\nxd_x = 0\nxd_y = 0.6\nk1 = 200\nk = 30\n");
    const Scenario json = load_scenario(
        R"({"controller": "tool-regulator", "xd_x": 0, "xd_y": 0.6, "k1": 200, "k": 30})");
    CHECK(json.controller == flat.controller);
    CHECK(json.x_d->x == flat.x_d->x);
    CHECK(json.x_d->y == flat.x_d->y);
    CHECK(json.gains.k1 == flat.gains.k1);
    CHECK(json.gains.k == flat.gains.k);
    CHECK(json.dt == flat.dt);

    CHECK_THROWS_AS(load_scenario("{\"controller\": "), ParseError);
    CHECK_THROWS_AS(load_scenario(R"(["controller"])"), ParseError);
    CHECK_THROWS_AS(load_scenario(R"({"controller": "free", "bogus": 1})"), ParseError);
    CHECK_THROWS_AS(load_scenario(R"({"controller": {"kind": "free"}})"), ParseError);
}

TEST_CASE("built-in scenarios") {
    CHECK(Scenario::builtin_names().size() == 3);
    for (const std::string& name : Scenario::builtin_names()) {
        CHECK(Scenario::is_builtin(name));
        CHECK(Scenario::builtin(name).name == name);
    }
    CHECK(!Scenario::is_builtin("paper-sim-3"));
    CHECK_THROWS_AS(Scenario::builtin("paper-sim-3"), ValidationError);

    const Scenario one = Scenario::builtin("paper-sim-1");
    CHECK(one.controller == ControllerKind::tool_regulator);
    CHECK(one.x_d->x == 0.0);
    CHECK(one.x_d->y == 0.6);
    CHECK(one.gains.k1 == 200.0);
    CHECK(one.gains.k == 30.0);
    CHECK(one.initial.q.theta1 == 0.0);
    CHECK(one.initial.q.theta2 == 0.0);
    CHECK(one.initial.v.v1 == 0.0);
    CHECK(one.dt == 1e-3);
    CHECK(one.duration == 10.0);

    const Scenario two = Scenario::builtin("paper-sim-2");
    CHECK(two.x_d->x == -0.6);
    CHECK(two.x_d->y == 0.0);
    CHECK(two.gains.k1 == 200.0);

    const Scenario con = Scenario::builtin("paper-constrained");
    CHECK(con.controller == ControllerKind::constrained);
    CHECK(con.x_d->y == 0.3);
    REQUIRE(con.constraint.has_value());
    CHECK(con.constraint->a == 0.3);
    CHECK(con.constraint->b == 0.6);
    CHECK(con.gains.k1 == 40.0);
    CHECK(con.gains.eps1 == 1e-28);
    CHECK(con.project_initial);

    // a bare built-in name is a valid scenario document
    CHECK(load_scenario("paper-sim-1\n").gains.k1 == 200.0);
}

TEST_CASE("scenario files shipped with the project match the built-ins") {
    for (const std::string& name : Scenario::builtin_names()) {
        const Scenario fromfile =
            load_scenario_path(std::string(TWOLINK_SOURCE_DIR) + "/scenarios/" + name + ".scn");
        const Scenario builtin = Scenario::builtin(name);
        CHECK(fromfile.controller == builtin.controller);
        CHECK(fromfile.gains.k1 == builtin.gains.k1);
        CHECK(fromfile.gains.k == builtin.gains.k);
        CHECK(fromfile.dt == builtin.dt);
        CHECK(fromfile.duration == builtin.duration);
        CHECK(fromfile.initial.q.theta1 == builtin.initial.q.theta1);
        CHECK(fromfile.initial.q.theta2 == builtin.initial.q.theta2);
        CHECK(fromfile.project_initial == builtin.project_initial);
        if (builtin.x_d) {
            CHECK(fromfile.x_d->x == builtin.x_d->x);
            CHECK(fromfile.x_d->y == builtin.x_d->y);
        }
        if (builtin.constraint) {
            CHECK(fromfile.constraint->a == builtin.constraint->a);
            CHECK(fromfile.constraint->b == builtin.constraint->b);
            CHECK(fromfile.gains.eps1 == builtin.gains.eps1);
            CHECK(fromfile.gains.eps2 == builtin.gains.eps2);
        }
        if (builtin.tool_error_tol) CHECK(*fromfile.tool_error_tol == *builtin.tool_error_tol);
        if (builtin.psi_tol) CHECK(*fromfile.psi_tol == *builtin.psi_tol);
    }
    CHECK(load_scenario_path("paper-sim-2").x_d->x == -0.6);
    CHECK_THROWS_AS(load_scenario_path("no/such/file.scn"), IoError);
}

TEST_CASE("run metrics") {
    Scenario sc = Scenario::builtin("paper-sim-1");
    const RunResult result = run(sc);
    REQUIRE(result.metrics.final_tool_error.has_value());
    CHECK(*result.metrics.final_tool_error < 1e-3);
    CHECK(result.metrics.final_speed < 1e-3);
    REQUIRE(result.metrics.settling_time.has_value());
    CHECK(*result.metrics.settling_time < 10.0);
    CHECK(result.metrics.min_sing_margin >= 0.0);
    CHECK(!result.metrics.max_psi.has_value());

    // after the reported settling time the error never leaves the tolerance
    for (const TrajectorySample& s : result.trajectory.samples)
        if (s.t > *result.metrics.settling_time)
            CHECK((s.tool - *sc.x_d).norm() < sc.settle_tol);

    SUBCASE("free runs have no reference metrics") {
        const Scenario drift = load_scenario("controller = free\nv1 = 1\nduration = 0.2\n");
        const RunResult r = run(drift);
        CHECK(!r.metrics.final_tool_error.has_value());
        CHECK(!r.metrics.settling_time.has_value());
        CHECK(r.metrics.final_speed > 0.0);
    }
}

TEST_CASE("constrained runs carry their diagnostics") {
    Scenario sc = Scenario::builtin("paper-constrained");
    sc.duration = 0.5; // enough to exercise the annotator
    const RunResult result = run(sc);
    REQUIRE(result.metrics.max_psi.has_value());
    CHECK(*result.metrics.max_psi <= 1e-6);
    for (const TrajectorySample& s : result.trajectory.samples) {
        REQUIRE(s.psi.has_value());
        REQUIRE(s.lambda.has_value());
    }
    // the projected start sits on the curve with tangent velocity
    const TrajectorySample& first = result.trajectory.front();
    CHECK(std::abs(*first.psi) <= 1e-12);
}

TEST_CASE("csv export") {
    SUBCASE("header is stable and complete") {
        const Scenario sc = load_scenario("controller = free\nduration = 0\n");
        const std::string csv = export_csv(simulate(sc));
        const std::vector<std::string> rows = lines_of(csv);
        REQUIRE(rows.size() == 2); // header + single sample
        CHECK(rows[0] == kCsvHeader);
    }
    SUBCASE("row count follows duration, step and stride") {
        const Scenario sc = load_scenario("controller = free\nv1 = 0.3\nduration = 0.05\n");
        const std::string csv = export_csv(simulate(sc));
        CHECK(lines_of(csv).size() == 1 + 6); // floor(0.05 / (1e-3 * 10)) + 1 samples
    }
    SUBCASE("constraint columns are empty exactly when no constraint is active") {
        const Scenario free_sc = load_scenario("controller = free\nv1 = 0.3\nduration = 0.02\n");
        for (const std::string& row : lines_of(export_csv(simulate(free_sc)))) {
            if (row == kCsvHeader) continue;
            CHECK(row.find(",,") != std::string::npos); // lambda and psi both empty
        }
        Scenario con = Scenario::builtin("paper-constrained");
        con.duration = 0.02;
        for (const std::string& row : lines_of(export_csv(simulate(con)))) {
            if (row == kCsvHeader) continue;
            CHECK(row.find(",,") == std::string::npos);
        }
    }
}

TEST_CASE("exports are deterministic and json round-trips exactly") {
    Scenario sc = Scenario::builtin("paper-sim-1");
    sc.duration = 1.0;
    const RunResult a = run(sc);
    const RunResult b = run(sc);
    CHECK(export_csv(a.trajectory) == export_csv(b.trajectory));
    const std::string json = export_json(a.trajectory, a.metrics);
    CHECK(json == export_json(b.trajectory, b.metrics));

    const Trajectory back = import_json(json);
    REQUIRE(back.size() == a.trajectory.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const TrajectorySample& x = a.trajectory.samples[i];
        const TrajectorySample& y = back.samples[i];
        CHECK(x.t == y.t);
        CHECK(x.state.q.theta1 == y.state.q.theta1);
        CHECK(x.state.q.theta2 == y.state.q.theta2);
        CHECK(x.state.v.v1 == y.state.v.v1);
        CHECK(x.state.v.v2 == y.state.v.v2);
        CHECK(x.tool.x == y.tool.x);
        CHECK(x.tool.y == y.tool.y);
        CHECK(x.u.v1 == y.u.v1);
        CHECK(x.u.v2 == y.u.v2);
        CHECK(x.energy.total == y.energy.total);
        CHECK(x.energy.power == y.energy.power);
        CHECK(x.sing_margin == y.sing_margin);
        CHECK(x.lambda.has_value() == y.lambda.has_value());
        CHECK(x.psi.has_value() == y.psi.has_value());
    }

    CHECK_THROWS_AS(import_json("{\"no_samples\": []}"), ParseError);
    CHECK_THROWS_AS(import_json("not json"), ParseError);
}

TEST_CASE("file export") {
    Scenario sc = load_scenario("controller = free\nv1 = 0.4\nduration = 0.02\n");
    const RunResult r = run(sc);
    const std::string path = "harness_export_test.csv";
    export_to_file(r.trajectory, r.metrics, ExportFormat::csv, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == kCsvHeader);
    in.close();
    std::remove(path.c_str());

    CHECK_THROWS_AS(
        export_to_file(r.trajectory, r.metrics, ExportFormat::json, "missing-dir/x/y.json"),
        IoError);
}

TEST_CASE("critical points of the regulated potential on the constraint") {
    const ConstraintSpec c = ConstraintSpec::ellipse(0.3, 0.6);

    SUBCASE("reference on the curve: the global minimum is the reference itself") {
        const auto pts = scan_constraint_critical_points(c, {0.0, 0.6});
        REQUIRE(pts.size() == 2);
        int minima = 0;
        for (const auto& cp : pts)
            if (cp.is_minimum) {
                ++minima;
                CHECK(cp.tool_error <= 1e-9);
            }
        CHECK(minima == 1);
    }
    SUBCASE("reference inside the curve: two spurious minima flank it") {
        // distance from (0, 0.3) to the ellipse bottoms out at sqrt(0.06)
        const auto pts = scan_constraint_critical_points(c, {0.0, 0.3});
        REQUIRE(pts.size() == 4);
        int minima = 0;
        for (const auto& cp : pts)
            if (cp.is_minimum) {
                ++minima;
                CHECK(cp.tool_error == doctest::Approx(std::sqrt(0.06)).epsilon(1e-6));
                CHECK(cp.tool_error > 1e-2); // no reachable point meets the tight tolerance
            }
        CHECK(minima == 2);
    }
}

TEST_CASE("free control law is identically zero") {
    const Scenario sc = load_scenario("controller = free\nv1 = 1\n");
    const ControlLaw law = make_control_law(sc);
    const TangentVector u = law({{0.3, -0.8}, {1.0, 2.0}}, 0.5);
    CHECK(u.v1 == 0.0);
    CHECK(u.v2 == 0.0);
}
