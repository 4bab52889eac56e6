#pragma once

// Task execution behind the command-line driver.  Each task consumes a parsed
// specification and produces the artifact text (CSV or JSON) plus a process
// exit status: 0 on success, 2 when a verification-style task ran to
// completion but one of its checks failed.  Hard errors propagate as Error
// exceptions for the caller to report.

#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qdo/driver_checks.hpp"
#include "qdo/spec_file.hpp"

namespace qdo {

struct DriverOptions {
    int jobs = 1;
    std::optional<long> seed;
    std::optional<double> tol;
    std::optional<std::string> format;   // overrides the spec's output.format
    std::optional<std::string> out_path; // overrides the spec's output.path
};

struct RunOutcome {
    int exit_code = 0;
    std::string text;
};

namespace driver_detail {

inline std::string effective_format(const OperatorSpecFile& spec, const DriverOptions& d) {
    std::string f = d.format ? *d.format : spec.output.format;
    if (f != "csv" && f != "json") fail(errc::task, "output format must be 'csv' or 'json'");
    return f;
}

inline SpectralOptions spectral_options(const TaskSpec& t, const DriverOptions& d) {
    SpectralOptions o;
    if (t.grid_points) {
        if (*t.grid_points < 8) fail(errc::task, "grid_points must be at least 8");
        o.grid_points = *t.grid_points;
    }
    if (t.max_eigenvalues) {
        if (*t.max_eigenvalues < 1) fail(errc::task, "max_eigenvalues must be positive");
        o.max_eigenvalues = *t.max_eigenvalues;
    }
    if (d.tol)
        o.residual_threshold = *d.tol;
    else if (t.tol)
        o.residual_threshold = *t.tol;
    return o;
}

// Report rows shared by the validate / verify / compare tasks.
struct CheckRow {
    std::string name;
    std::string status; // pass | fail | skip
    std::string detail;
};

inline std::string csv_escape(const std::string& s) {
    bool need = s.find_first_of(",\"\n") != std::string::npos;
    if (!need) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline RunOutcome report_outcome(const std::vector<CheckRow>& rows, const std::string& format) {
    bool all_pass = true;
    for (const CheckRow& r : rows)
        if (r.status == "fail") all_pass = false;
    RunOutcome out;
    out.exit_code = all_pass ? 0 : 2;
    if (format == "csv") {
        out.text = "check,status,detail\n";
        for (const CheckRow& r : rows)
            out.text += r.name + "," + r.status + "," + csv_escape(r.detail) + "\n";
    } else {
        json checks = json::array();
        for (const CheckRow& r : rows)
            checks.push_back(json{{"check", r.name}, {"status", r.status}, {"detail", r.detail}});
        out.text = json{{"checks", std::move(checks)}, {"passed", all_pass}}.dump(2) + "\n";
    }
    return out;
}

} // namespace driver_detail

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

inline RunOutcome run_validate(const OperatorSpecFile& spec, const DriverOptions& d) {
    using driver_detail::CheckRow;
    std::vector<CheckRow> rows;

    std::vector<ValidityIssue> issues = spec.matrix->validate();
    if (issues.empty()) {
        rows.push_back({"matrix-structure", "pass", "all structural conditions hold"});
    } else {
        for (const ValidityIssue& is : issues)
            rows.push_back({"matrix-structure", "fail",
                            "[" + std::to_string(is.row) + "," + std::to_string(is.col) + "] " +
                                is.message});
    }

    rows.push_back({"formal-selfadjointness",
                    spec.matrix->is_formally_selfadjoint(1e-12) ? "pass" : "fail",
                    "matrix equals its Lagrange adjoint within 1e-12"});

    if (spec.odd) {
        try {
            spec.build_triplet();
            rows.push_back({"odd-weight-relations", "pass", "all five pairing relations hold"});
        } catch (const Error& e) {
            rows.push_back({"odd-weight-relations", "fail", e.what()});
        }
    }

    if (spec.extension) {
        try {
            BoundaryTriplet T = spec.build_triplet();
            ExtensionSpec ext = spec.build_extension(T);
            std::string kind = ext.flags.unitary      ? "self-adjoint (K unitary)"
                               : ext.flags.contraction ? "proper contraction"
                                                       : "not admissible";
            rows.push_back({"extension-parameter", ext.flags.contraction ? "pass" : "fail",
                            kind + "; operator norm " +
                                jsio::fmt_double(ext.flags.operator_norm)});
        } catch (const Error& e) {
            rows.push_back({"extension-parameter", "fail",
                            std::string(errc_name(e.code())) + ": " + e.what()});
        }
    }
    return driver_detail::report_outcome(rows, driver_detail::effective_format(spec, d));
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

inline RunOutcome run_spectrum(const OperatorSpecFile& spec, const DriverOptions& d) {
    spec.matrix->require_valid();
    BoundaryTriplet T = spec.build_triplet();
    ExtensionSpec ext = spec.build_extension(T);
    ExtensionProblem prob(*spec.matrix, T, ext, driver_detail::spectral_options(spec.task, d));
    SpectralResult r;
    if (spec.task.window)
        r = prob.eigenvalues_real_scan((*spec.task.window)[0], (*spec.task.window)[1]);
    else
        r = prob.eigenvalues_complex_box((*spec.task.box)[0], (*spec.task.box)[1],
                                         (*spec.task.box)[2], (*spec.task.box)[3]);
    RunOutcome out;
    if (driver_detail::effective_format(spec, d) == "csv")
        out.text = spectral_result_to_csv(r);
    else
        out.text = spectral_result_to_json(r).dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// resolvent / generalized resolvent
// ---------------------------------------------------------------------------

inline RunOutcome run_resolvent(const OperatorSpecFile& spec, const DriverOptions& d) {
    spec.matrix->require_valid();
    BoundaryTriplet T = spec.build_triplet();
    ExtensionSpec ext = spec.build_extension(T);
    ExtensionProblem prob(*spec.matrix, T, ext, driver_detail::spectral_options(spec.task, d));
    ResolventApplication app = prob.apply_resolvent(spec.task.lambda, *spec.task.forcing);
    const int m = spec.order();
    RunOutcome out;
    if (driver_detail::effective_format(spec, d) == "csv") {
        out.text = trajectory_to_csv(app.y, m, spec.task.samples);
    } else {
        json meta{{"lambda", jsio::complex_to(app.lambda)},
                  {"ode_residual", app.ode_residual},
                  {"sigma_ratio", app.sigma_ratio}};
        out.text = json{{"meta", std::move(meta)},
                        {"samples", trajectory_to_json(app.y, m, spec.task.samples)}}
                       .dump(2) +
                   "\n";
    }
    return out;
}

inline RunOutcome run_generalized_resolvent(const OperatorSpecFile& spec, const DriverOptions& d) {
    spec.matrix->require_valid();
    BoundaryTriplet T = spec.build_triplet();
    KFamily family = spec.task.family->build();
    GeneralizedResolventApplication g =
        apply_generalized_resolvent(*spec.matrix, T, family, spec.task.lambda, *spec.task.forcing,
                                    driver_detail::spectral_options(spec.task, d));
    const int m = spec.order();
    RunOutcome out;
    if (driver_detail::effective_format(spec, d) == "csv") {
        out.text = trajectory_to_csv(g.app.y, m, spec.task.samples);
    } else {
        json meta{{"lambda", jsio::complex_to(g.app.lambda)},
                  {"ode_residual", g.app.ode_residual},
                  {"sigma_ratio", g.app.sigma_ratio},
                  {"sign_used", g.sign_used == ExtensionSign::plus ? "plus" : "minus"},
                  {"family_norm", g.family_norm},
                  {"holomorphy_certified", g.holomorphy_certified}};
        out.text = json{{"meta", std::move(meta)},
                        {"samples", trajectory_to_json(g.app.y, m, spec.task.samples)}}
                       .dump(2) +
                   "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// verify: randomized and structural consistency checks on the given operator.
// ---------------------------------------------------------------------------

inline RunOutcome run_verify(const OperatorSpecFile& spec, const DriverOptions& d) {
    using driver_detail::CheckRow;
    std::vector<CheckRow> rows;
    const double tol = d.tol ? *d.tol : (spec.task.tol ? *spec.task.tol : 1e-8);
    const long seed = d.seed ? *d.seed : (spec.task.seed ? *spec.task.seed : 12345L);
    const int trials = spec.task.trials;
    const int jobs = d.jobs < 1 ? 1 : d.jobs;

    spec.matrix->require_valid();
    BoundaryTriplet T = spec.build_triplet();

    // 1. Green identity on random solution pairs (parallel across trials; the
    //    per-trial generators depend only on the seed and trial index, so the
    //    job count never changes the report).
    {
        std::vector<double> residuals(size_t(trials), 0.0);
        std::vector<std::string> errors{size_t(trials), std::string()};
        auto worker = [&](int begin, int step) {
            for (int i = begin; i < trials; i += step) {
                try {
                    residuals[size_t(i)] = detail::green_trial(*spec.matrix, T, seed, i);
                } catch (const Error& e) {
                    errors[size_t(i)] = e.what();
                }
            }
        };
        if (jobs == 1) {
            worker(0, 1);
        } else {
            std::vector<std::thread> pool;
            for (int j = 0; j < jobs; ++j) pool.emplace_back(worker, j, jobs);
            for (auto& th : pool) th.join();
        }
        double worst = 0.0;
        std::string first_error;
        for (int i = 0; i < trials; ++i) {
            if (!errors[size_t(i)].empty() && first_error.empty()) first_error = errors[size_t(i)];
            worst = std::max(worst, residuals[size_t(i)]);
        }
        if (!first_error.empty())
            rows.push_back({"green-identity", "fail", first_error});
        else
            rows.push_back({"green-identity", worst < tol ? "pass" : "fail",
                            std::to_string(trials) + " trials, worst residual " +
                                jsio::fmt_double(worst)});
    }

    // 2. The Lagrange adjoint is an involution on the given coefficients.
    {
        double dist = detail::involution_distance(*spec.matrix);
        rows.push_back({"adjoint-involution", dist <= 1e-10 ? "pass" : "fail",
                        "L1 distance " + jsio::fmt_double(dist)});
    }

    // 3. Odd-order mixed-row weights satisfy their pairing relations.
    if (spec.order() % 2 == 1) {
        try {
            spec.build_triplet();
            rows.push_back({"odd-weight-relations", "pass", "all five pairing relations hold"});
        } catch (const Error& e) {
            rows.push_back({"odd-weight-relations", "fail", e.what()});
        }
    } else {
        rows.push_back({"odd-weight-relations", "skip", "even order"});
    }

    // 4. Boundary parameter classification.
    {
        try {
            ExtensionSpec ext = spec.build_extension(T);
            std::string kind = ext.flags.unitary      ? "self-adjoint (K unitary)"
                               : ext.flags.contraction ? "proper contraction"
                                                       : "not admissible";
            rows.push_back({"extension-parameter", ext.flags.contraction ? "pass" : "fail",
                            kind + "; operator norm " +
                                jsio::fmt_double(ext.flags.operator_norm)});
        } catch (const Error& e) {
            rows.push_back({"extension-parameter", "fail",
                            std::string(errc_name(e.code())) + ": " + e.what()});
        }
    }

    // 5. Shifting the distributional potential by a constant leaves the
    //    spectrum invariant (primitives are defined up to a constant).  The
    //    check runs under Dirichlet conditions: those are the conditions that
    //    do not involve the quasi-derivative y' - Q y, whose meaning shifts
    //    with Q.
    if (spec.builder_type == "sturm_liouville") {
        try {
            PiecewiseCoefficient Q0 = *spec.sl_mode == SturmLiouvilleMode::classical
                                          ? spec.sl_potential->antiderivative()
                                          : *spec.sl_potential;
            PiecewiseCoefficient Qs = Q0 + PiecewiseCoefficient::constant(cxd(3.0), spec.a, spec.b);
            ShinZettlMatrix A1 =
                sturm_liouville_matrix(*spec.sl_p, Q0, SturmLiouvilleMode::distributional);
            ShinZettlMatrix A2 =
                sturm_liouville_matrix(*spec.sl_p, Qs, SturmLiouvilleMode::distributional);
            std::array<double, 2> win = spec.task.window ? *spec.task.window
                                                         : std::array<double, 2>{0.5, 30.5};
            ExtensionSpec dir = dirichlet_extension(spec.order());
            SpectralResult r1 =
                ExtensionProblem(A1, T, dir).eigenvalues_real_scan(win[0], win[1]);
            SpectralResult r2 =
                ExtensionProblem(A2, T, dir).eigenvalues_real_scan(win[0], win[1]);
            auto [ok, detail_msg] = detail::compare_spectra(r1, r2, 1e-7);
            rows.push_back({"potential-shift-invariance", ok ? "pass" : "fail",
                            detail_msg + " (Dirichlet comparison)"});
        } catch (const Error& e) {
            rows.push_back({"potential-shift-invariance", "fail",
                            std::string(errc_name(e.code())) + ": " + e.what()});
        }
    } else {
        rows.push_back({"potential-shift-invariance", "skip",
                        "applies to the sturm_liouville builder only"});
    }

    return driver_detail::report_outcome(rows, driver_detail::effective_format(spec, d));
}

// ---------------------------------------------------------------------------
// compare: classical coefficients against the distributional form built from
// the primitive of the same potential.
// ---------------------------------------------------------------------------

inline RunOutcome run_compare(const OperatorSpecFile& spec, const DriverOptions& d) {
    using driver_detail::CheckRow;
    const double tol = d.tol ? *d.tol : (spec.task.tol ? *spec.task.tol : 1e-6);
    spec.matrix->require_valid();
    BoundaryTriplet T = spec.build_triplet();
    ExtensionSpec ext = spec.build_extension(T);

    ShinZettlMatrix Ad = sturm_liouville_matrix(*spec.sl_p, spec.sl_potential->antiderivative(),
                                                SturmLiouvilleMode::distributional);
    std::array<double, 2> win =
        spec.task.window ? *spec.task.window : std::array<double, 2>{0.5, 100.5};
    SpectralResult rc = ExtensionProblem(*spec.matrix, T, ext).eigenvalues_real_scan(win[0], win[1]);
    SpectralResult rd = ExtensionProblem(Ad, T, ext).eigenvalues_real_scan(win[0], win[1]);

    const size_t n = std::min({rc.eigenvalues.size(), rd.eigenvalues.size(), size_t(spec.task.count)});
    std::vector<CheckRow> rows;
    if (rc.eigenvalues.size() != rd.eigenvalues.size())
        rows.push_back({"eigenvalue-count", "fail",
                        "classical found " + std::to_string(rc.eigenvalues.size()) +
                            ", distributional " + std::to_string(rd.eigenvalues.size()) +
                            " in the window"});
    else
        rows.push_back({"eigenvalue-count", "pass",
                        std::to_string(rc.eigenvalues.size()) + " eigenvalues in the window"});
    for (size_t i = 0; i < n; ++i) {
        const Eigenvalue& ec = rc.eigenvalues[i];
        const Eigenvalue& ed = rd.eigenvalues[i];
        double diff = std::abs(ec.lambda - ed.lambda);
        double rel = diff / std::max(1.0, std::abs(ec.lambda));
        bool ok = rel < tol && ec.multiplicity == ed.multiplicity;
        rows.push_back({"eigenvalue-" + std::to_string(i + 1), ok ? "pass" : "fail",
                        "classical " + jsio::fmt_double(ec.lambda.real()) + ", distributional " +
                            jsio::fmt_double(ed.lambda.real()) + ", relative difference " +
                            jsio::fmt_double(rel)});
    }
    return driver_detail::report_outcome(rows, driver_detail::effective_format(spec, d));
}

// ---------------------------------------------------------------------------

inline RunOutcome run_spec(const OperatorSpecFile& spec, const DriverOptions& d) {
    switch (spec.task.kind) {
    case TaskKind::validate:
        return run_validate(spec, d);
    case TaskKind::spectrum:
        return run_spectrum(spec, d);
    case TaskKind::resolvent:
        return run_resolvent(spec, d);
    case TaskKind::generalized_resolvent:
        return run_generalized_resolvent(spec, d);
    case TaskKind::verify:
        return run_verify(spec, d);
    case TaskKind::compare:
        return run_compare(spec, d);
    }
    fail(errc::task, "unhandled task kind");
}

} // namespace qdo
