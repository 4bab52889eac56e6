// Command-line driver for quasi-differential boundary value problems.
//
// Usage:  qdo <validate|spectrum|resolvent|gresolvent|verify|compare>
//             --spec FILE [--out FILE] [--format csv|json]
//             [--jobs N] [--seed S] [--tol T]
//
// Exit status: 0 on success, 2 when a verification task reports failures,
// 1 on any error (with a single-line JSON error record on standard error).

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qdo/driver.hpp"

namespace {

struct CommonArgs {
    std::string spec_path;
    std::string out_path;
    std::string format;
    int jobs = 1;
    long seed = -1;
    bool seed_set = false;
    double tol = 0.0;
    bool tol_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--spec", a.spec_path, "operator specification file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out_path, "output file (default: standard output)");
    cmd->add_option("--format", a.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--jobs", a.jobs, "worker threads for randomized trials")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", a.seed, "seed for randomized trials")
        ->each([&a](const std::string&) { a.seed_set = true; });
    cmd->add_option("--tol", a.tol, "task tolerance override")
        ->check(CLI::PositiveNumber)
        ->each([&a](const std::string&) { a.tol_set = true; });
}

const char* task_name(qdo::TaskKind k) {
    switch (k) {
    case qdo::TaskKind::validate:
        return "validate";
    case qdo::TaskKind::spectrum:
        return "spectrum";
    case qdo::TaskKind::resolvent:
        return "resolvent";
    case qdo::TaskKind::generalized_resolvent:
        return "gresolvent";
    case qdo::TaskKind::verify:
        return "verify";
    case qdo::TaskKind::compare:
        return "compare";
    }
    return "?";
}

void emit_error(const std::string& code, const std::string& message) {
    qdo::json rec{{"error", qdo::json{{"code", code}, {"message", message}}}};
    std::cerr << rec.dump() << "\n";
}

int run(const std::string& subcommand, const CommonArgs& a) {
    qdo::OperatorSpecFile spec = qdo::parse_spec_file(a.spec_path);
    if (subcommand != task_name(spec.task.kind))
        qdo::fail(qdo::errc::task, "spec file declares task '" +
                                       std::string(task_name(spec.task.kind)) +
                                       "' but the subcommand is '" + subcommand + "'");
    qdo::DriverOptions d;
    d.jobs = a.jobs;
    if (a.seed_set) d.seed = a.seed;
    if (a.tol_set) d.tol = a.tol;
    if (!a.format.empty()) d.format = a.format;
    if (!a.out_path.empty()) d.out_path = a.out_path;

    qdo::RunOutcome out = qdo::run_spec(spec, d);

    std::string path = a.out_path.empty() ? spec.output.path : a.out_path;
    if (path.empty()) {
        std::cout << out.text;
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) qdo::fail(qdo::errc::task, "cannot open output file '" + path + "'");
        f << out.text;
        if (!f) qdo::fail(qdo::errc::task, "failed writing output file '" + path + "'");
    }
    return out.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary value problems for quasi-differential operators"};
    app.require_subcommand(1);

    const char* names[] = {"validate", "spectrum", "resolvent", "gresolvent", "verify", "compare"};
    const char* blurbs[] = {"check a specification and classify its boundary parameter",
                            "compute eigenvalues in a window or box",
                            "apply the resolvent to a forcing term",
                            "apply a generalized resolvent given a parameter family",
                            "run randomized and structural consistency checks",
                            "compare the classical and distributional coefficient forms"};
    CommonArgs args[6];
    for (int i = 0; i < 6; ++i) add_common(app.add_subcommand(names[i], blurbs[i]), args[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return 1;
    }

    try {
        for (int i = 0; i < 6; ++i)
            if (app.get_subcommand(names[i])->parsed()) return run(names[i], args[i]);
        emit_error("usage", "no subcommand given");
        return 1;
    } catch (const qdo::Error& e) {
        emit_error(qdo::errc_name(e.code()), e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
}
