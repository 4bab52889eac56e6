#pragma once

// Strict parsing of operator specification documents: interval, coefficient
// builder, boundary-parameter choice, optional odd-order weights, one task,
// and output routing.  Unknown keys and malformed values are rejected with
// JSON-pointer-style locations; mutually exclusive choices are enforced here
// so the driver only sees well-formed requests.

#include <array>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdo/extensions.hpp"
#include "qdo/io_json.hpp"

namespace qdo {

enum class TaskKind { validate, spectrum, resolvent, generalized_resolvent, verify, compare };

struct OddWeights {
    cxd alpha{}, beta{}, gamma{}, delta{};
};

struct ExtensionChoice {
    std::optional<std::string> preset; // dirichlet | neumann | quasi_periodic | custom_separated
    double theta = 0.0;                // quasi_periodic only
    std::optional<Eigen::MatrixXcd> block_a, block_b; // custom_separated only
    std::optional<Eigen::MatrixXcd> K;                // direct parameterization
    ExtensionSign sign = ExtensionSign::plus;
};

struct FamilyChoice {
    KFamily::Kind kind = KFamily::Kind::constant;
    Eigen::MatrixXcd constant;
    std::vector<std::vector<RationalEntry>> rational;
    std::vector<std::pair<cxd, Eigen::MatrixXcd>> samples;

    KFamily build() const {
        switch (kind) {
        case KFamily::Kind::constant:
            return KFamily::constant(constant);
        case KFamily::Kind::rational:
            return KFamily::rational(rational);
        default:
            return KFamily::tabulated(samples);
        }
    }
};

struct TaskSpec {
    TaskKind kind = TaskKind::validate;
    std::optional<std::array<double, 2>> window;   // spectrum, verify, compare
    std::optional<std::array<double, 4>> box;      // spectrum
    cxd lambda{};                                  // resolvent tasks
    std::optional<PiecewiseCoefficient> forcing;   // resolvent tasks
    std::optional<FamilyChoice> family;            // generalized resolvent
    int samples = 200;                             // trajectory dump resolution
    int trials = 20;                               // verify
    int count = 8;                                 // compare
    std::optional<long> seed;                      // verify (flag overrides)
    std::optional<double> tol;                     // task-specific tolerance
    std::optional<int> grid_points;                // spectrum scan resolution
    std::optional<int> max_eigenvalues;
};

struct OutputSpec {
    std::string path;            // empty: standard output
    std::string format = "csv";  // csv | json
};

struct OperatorSpecFile {
    double a = 0.0, b = 1.0;
    std::string builder_type; // raw_matrix | sturm_liouville | two_term
    std::optional<ShinZettlMatrix> matrix;
    // Retained Sturm-Liouville inputs so comparison tasks can rebuild both forms.
    std::optional<PiecewiseCoefficient> sl_p, sl_potential;
    std::optional<SturmLiouvilleMode> sl_mode;
    std::optional<OddWeights> odd;
    std::optional<ExtensionChoice> extension;
    TaskSpec task;
    OutputSpec output;

    int order() const { return matrix->order(); }

    BoundaryTriplet build_triplet() const {
        const int m = order();
        if (odd) return make_boundary_triplet(m, odd->alpha, odd->beta, odd->gamma, odd->delta);
        return make_boundary_triplet(m);
    }

    ExtensionSpec build_extension(const BoundaryTriplet& T) const {
        const ExtensionChoice& e = *extension;
        if (e.preset) {
            if (*e.preset == "dirichlet") return dirichlet_extension(order());
            if (*e.preset == "neumann") return neumann_extension(order());
            if (*e.preset == "quasi_periodic") return quasi_periodic_extension(T, e.theta, e.sign);
            return separated_extension(*e.block_a, *e.block_b, e.sign);
        }
        return make_extension(*e.K, e.sign);
    }
};

namespace specio {

inline OddWeights odd_weights_from(const json& j, const std::string& where) {
    using namespace jsio;
    restrict_keys(j, {"alpha", "beta", "gamma", "delta"}, where);
    OddWeights w;
    w.alpha = complex_from(require_key(j, "alpha", where), where + "/alpha");
    w.beta = complex_from(require_key(j, "beta", where), where + "/beta");
    w.gamma = complex_from(require_key(j, "gamma", where), where + "/gamma");
    w.delta = complex_from(require_key(j, "delta", where), where + "/delta");
    return w;
}

inline ExtensionChoice extension_from(const json& j, const std::string& where) {
    using namespace jsio;
    restrict_keys(j, {"preset", "theta", "K_a", "K_b", "K", "sign"}, where);
    ExtensionChoice e;
    const bool has_preset = j.contains("preset");
    const bool has_K = j.contains("K");
    if (has_preset && has_K)
        schema_fail(where, "'preset' and 'K' are mutually exclusive");
    if (!has_preset && !has_K)
        schema_fail(where, "expected either 'preset' or 'K'");
    if (j.contains("sign")) {
        std::string s = string_from(j["sign"], where + "/sign");
        if (s == "plus")
            e.sign = ExtensionSign::plus;
        else if (s == "minus")
            e.sign = ExtensionSign::minus;
        else
            schema_fail(where + "/sign", "expected 'plus' or 'minus'");
    }
    if (has_preset) {
        e.preset = string_from(j["preset"], where + "/preset");
        const std::string& p = *e.preset;
        if (p != "dirichlet" && p != "neumann" && p != "quasi_periodic" && p != "custom_separated")
            schema_fail(where + "/preset",
                        "unknown preset (expected dirichlet, neumann, quasi_periodic, or "
                        "custom_separated)");
        if (p == "quasi_periodic") {
            e.theta = number_from(require_key(j, "theta", where), where + "/theta");
        } else if (j.contains("theta")) {
            schema_fail(where + "/theta", "theta applies to the quasi_periodic preset only");
        }
        if (p == "custom_separated") {
            e.block_a = dense_from_json(require_key(j, "K_a", where), where + "/K_a");
            e.block_b = dense_from_json(require_key(j, "K_b", where), where + "/K_b");
            if (e.block_a->rows() != e.block_a->cols() || e.block_b->rows() != e.block_b->cols())
                schema_fail(where, "separated blocks must be square");
        } else if (j.contains("K_a") || j.contains("K_b")) {
            schema_fail(where, "K_a/K_b apply to the custom_separated preset only");
        }
    } else {
        e.K = dense_from_json(j["K"], where + "/K");
        if (e.K->rows() != e.K->cols()) schema_fail(where + "/K", "K must be square");
    }
    return e;
}

inline FamilyChoice family_from(const json& j, const std::string& where) {
    using namespace jsio;
    FamilyChoice f;
    std::string type = string_from(require_key(j, "type", where), where + "/type");
    if (type == "constant") {
        restrict_keys(j, {"type", "K"}, where);
        f.kind = KFamily::Kind::constant;
        f.constant = dense_from_json(require_key(j, "K", where), where + "/K");
        if (f.constant.rows() != f.constant.cols()) schema_fail(where + "/K", "K must be square");
    } else if (type == "rational") {
        restrict_keys(j, {"type", "entries"}, where);
        f.kind = KFamily::Kind::rational;
        const json& rows = require_key(j, "entries", where);
        if (!rows.is_array() || rows.empty())
            schema_fail(where + "/entries", "expected a non-empty array of rows");
        const int m = int(rows.size());
        for (int i = 0; i < m; ++i) {
            std::string rw = where + "/entries/" + std::to_string(i);
            const json& row = rows[size_t(i)];
            if (!row.is_array() || int(row.size()) != m)
                schema_fail(rw, "expected " + std::to_string(m) + " entries");
            std::vector<RationalEntry> out_row;
            for (int k = 0; k < m; ++k) {
                std::string ew = rw + "/" + std::to_string(k);
                const json& cell = row[size_t(k)];
                restrict_keys(cell, {"num", "den"}, ew);
                RationalEntry entry{
                    Polynomial(complex_list_from(require_key(cell, "num", ew), ew + "/num")),
                    Polynomial({cxd(1.0)})};
                if (cell.contains("den"))
                    entry.den = Polynomial(complex_list_from(cell["den"], ew + "/den"));
                out_row.push_back(std::move(entry));
            }
            f.rational.push_back(std::move(out_row));
        }
    } else if (type == "tabulated") {
        restrict_keys(j, {"type", "samples"}, where);
        f.kind = KFamily::Kind::tabulated;
        const json& arr = require_key(j, "samples", where);
        if (!arr.is_array() || arr.size() < 2)
            schema_fail(where + "/samples", "expected at least two samples");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string sw = where + "/samples/" + std::to_string(i);
            const json& sj = arr[i];
            restrict_keys(sj, {"lambda", "K"}, sw);
            cxd lam = complex_from(require_key(sj, "lambda", sw), sw + "/lambda");
            Eigen::MatrixXcd K = dense_from_json(require_key(sj, "K", sw), sw + "/K");
            if (K.rows() != K.cols()) schema_fail(sw + "/K", "K must be square");
            f.samples.emplace_back(lam, std::move(K));
        }
    } else {
        schema_fail(where + "/type", "unknown family type (expected constant, rational, or tabulated)");
    }
    return f;
}

} // namespace specio

inline OperatorSpecFile parse_spec_json(const json& doc) {
    using namespace jsio;
    const std::string root;
    restrict_keys(doc, {"interval", "builder", "extension", "odd_coeffs", "task", "output"}, "");

    OperatorSpecFile spec;
    auto [a, b] = interval_from(require_key(doc, "interval", ""), "/interval");
    spec.a = a;
    spec.b = b;

    // --- builder ---------------------------------------------------------
    {
        const json& bj = require_key(doc, "builder", "");
        const std::string bw = "/builder";
        spec.builder_type = string_from(require_key(bj, "type", bw), bw + "/type");
        if (spec.builder_type == "raw_matrix") {
            restrict_keys(bj, {"type", "matrix"}, bw);
            spec.matrix = matrix_from_json(require_key(bj, "matrix", bw), bw + "/matrix");
            if (spec.matrix->lower() != a || spec.matrix->upper() != b)
                schema_fail(bw + "/matrix/interval", "matrix interval differs from /interval");
        } else if (spec.builder_type == "sturm_liouville") {
            restrict_keys(bj, {"type", "mode", "p", "q", "Q"}, bw);
            std::string mode = string_from(require_key(bj, "mode", bw), bw + "/mode");
            if (mode == "classical")
                spec.sl_mode = SturmLiouvilleMode::classical;
            else if (mode == "distributional")
                spec.sl_mode = SturmLiouvilleMode::distributional;
            else
                schema_fail(bw + "/mode", "expected 'classical' or 'distributional'");
            spec.sl_p = coefficient_from_json(require_key(bj, "p", bw), bw + "/p");
            const char* pot_key =
                *spec.sl_mode == SturmLiouvilleMode::classical ? "q" : "Q";
            const char* other_key =
                *spec.sl_mode == SturmLiouvilleMode::classical ? "Q" : "q";
            if (bj.contains(other_key))
                schema_fail(bw, std::string("'") + other_key + "' does not apply to the " + mode +
                                    " form (use '" + pot_key + "')");
            spec.sl_potential =
                coefficient_from_json(require_key(bj, pot_key, bw), bw + std::string("/") + pot_key);
            for (const auto* c : {&*spec.sl_p, &*spec.sl_potential})
                if (c->lower() != a || c->upper() != b)
                    schema_fail(bw, "coefficient interval differs from /interval");
            spec.matrix = sturm_liouville_matrix(*spec.sl_p, *spec.sl_potential, *spec.sl_mode);
        } else if (spec.builder_type == "two_term") {
            restrict_keys(bj, {"type", "m", "k", "Q"}, bw);
            int m = int_from(require_key(bj, "m", bw), bw + "/m");
            int k = int_from(require_key(bj, "k", bw), bw + "/k");
            PiecewiseCoefficient Q = coefficient_from_json(require_key(bj, "Q", bw), bw + "/Q");
            if (Q.lower() != a || Q.upper() != b)
                schema_fail(bw + "/Q", "coefficient interval differs from /interval");
            spec.matrix = two_term_matrix(m, k, Q);
        } else {
            schema_fail(bw + "/type",
                        "unknown builder (expected raw_matrix, sturm_liouville, or two_term)");
        }
    }
    const int m = spec.order();

    // --- odd-order weights -------------------------------------------------
    if (doc.contains("odd_coeffs")) {
        if (m % 2 == 0)
            schema_fail("/odd_coeffs", "mixed-row weights apply to odd orders only");
        spec.odd = specio::odd_weights_from(doc["odd_coeffs"], "/odd_coeffs");
    }

    // --- extension ---------------------------------------------------------
    if (doc.contains("extension")) {
        spec.extension = specio::extension_from(doc["extension"], "/extension");
        const ExtensionChoice& e = *spec.extension;
        if (e.preset && *e.preset == "custom_separated") {
            if (m % 2 != 0)
                schema_fail("/extension/preset",
                            "custom_separated requires even order (separated conditions split the "
                            "boundary parameter into endpoint blocks of size m/2); order " +
                                std::to_string(m) + " is odd");
            if (int(e.block_a->rows()) != m / 2 || int(e.block_b->rows()) != m / 2)
                schema_fail("/extension", "separated blocks must have size m/2 = " +
                                              std::to_string(m / 2));
        }
        if (e.K && int(e.K->rows()) != m)
            schema_fail("/extension/K", "K must be " + std::to_string(m) + "x" + std::to_string(m));
    }

    // --- task ----------------------------------------------------------------
    {
        const json& tj = require_key(doc, "task", "");
        const std::string tw = "/task";
        std::string type = string_from(require_key(tj, "type", tw), tw + "/type");
        TaskSpec& t = spec.task;
        auto read_tol = [&](const json& node) {
            if (node.contains("tol")) t.tol = number_from(node["tol"], tw + "/tol");
        };
        if (type == "validate") {
            restrict_keys(tj, {"type"}, tw);
            t.kind = TaskKind::validate;
        } else if (type == "spectrum") {
            restrict_keys(tj, {"type", "window", "box", "grid_points", "max_eigenvalues", "tol"},
                          tw);
            t.kind = TaskKind::spectrum;
            const bool has_window = tj.contains("window");
            const bool has_box = tj.contains("box");
            if (has_window == has_box)
                schema_fail(tw, "expected exactly one of 'window' or 'box'");
            if (has_window) {
                auto [lo, hi] = interval_from(tj["window"], tw + "/window");
                t.window = {lo, hi};
            } else {
                const json& bx = tj["box"];
                if (!bx.is_array() || bx.size() != 4)
                    schema_fail(tw + "/box", "expected [re_lo, re_hi, im_lo, im_hi]");
                std::array<double, 4> v{};
                for (int i = 0; i < 4; ++i)
                    v[size_t(i)] = number_from(bx[size_t(i)], tw + "/box/" + std::to_string(i));
                if (!(v[0] < v[1]) || !(v[2] < v[3]))
                    schema_fail(tw + "/box", "box must satisfy re_lo < re_hi and im_lo < im_hi");
                t.box = v;
            }
            if (tj.contains("grid_points"))
                t.grid_points = int_from(tj["grid_points"], tw + "/grid_points");
            if (tj.contains("max_eigenvalues"))
                t.max_eigenvalues = int_from(tj["max_eigenvalues"], tw + "/max_eigenvalues");
            read_tol(tj);
        } else if (type == "resolvent" || type == "generalized_resolvent") {
            if (type == "resolvent") {
                restrict_keys(tj, {"type", "lambda", "forcing", "samples"}, tw);
                t.kind = TaskKind::resolvent;
            } else {
                restrict_keys(tj, {"type", "lambda", "forcing", "family", "samples"}, tw);
                t.kind = TaskKind::generalized_resolvent;
                t.family = specio::family_from(require_key(tj, "family", tw), tw + "/family");
            }
            t.lambda = jsio::complex_from(require_key(tj, "lambda", tw), tw + "/lambda");
            t.forcing = coefficient_from_json(require_key(tj, "forcing", tw), tw + "/forcing");
            if (t.forcing->lower() != spec.a || t.forcing->upper() != spec.b)
                schema_fail(tw + "/forcing", "forcing interval differs from /interval");
            if (tj.contains("samples")) {
                t.samples = int_from(tj["samples"], tw + "/samples");
                if (t.samples < 1) schema_fail(tw + "/samples", "expected a positive integer");
            }
        } else if (type == "verify") {
            restrict_keys(tj, {"type", "trials", "window", "seed", "tol"}, tw);
            t.kind = TaskKind::verify;
            if (tj.contains("trials")) {
                t.trials = int_from(tj["trials"], tw + "/trials");
                if (t.trials < 1) schema_fail(tw + "/trials", "expected a positive integer");
            }
            if (tj.contains("window")) {
                auto [lo, hi] = interval_from(tj["window"], tw + "/window");
                t.window = {lo, hi};
            }
            if (tj.contains("seed")) t.seed = long(int_from(tj["seed"], tw + "/seed"));
            read_tol(tj);
        } else if (type == "compare") {
            restrict_keys(tj, {"type", "count", "window", "tol"}, tw);
            t.kind = TaskKind::compare;
            if (tj.contains("count")) {
                t.count = int_from(tj["count"], tw + "/count");
                if (t.count < 1) schema_fail(tw + "/count", "expected a positive integer");
            }
            if (tj.contains("window")) {
                auto [lo, hi] = interval_from(tj["window"], tw + "/window");
                t.window = {lo, hi};
            }
            read_tol(tj);
            if (spec.builder_type != "sturm_liouville" ||
                *spec.sl_mode != SturmLiouvilleMode::classical)
                schema_fail(tw, "comparison requires the classical sturm_liouville builder; the "
                                "distributional comparand is derived from it");
        } else {
            schema_fail(tw + "/type", "unknown task (expected validate, spectrum, resolvent, "
                                      "generalized_resolvent, verify, or compare)");
        }
    }

    // --- extension presence rules ------------------------------------------
    const TaskKind k = spec.task.kind;
    if (k == TaskKind::generalized_resolvent) {
        if (spec.extension)
            schema_fail("/extension", "generalized_resolvent takes its boundary parameter from "
                                      "/task/family; remove /extension");
    } else if (k != TaskKind::validate && !spec.extension) {
        schema_fail("", "missing required key 'extension' for this task");
    }

    // --- output ---------------------------------------------------------------
    if (doc.contains("output")) {
        const json& oj = doc["output"];
        restrict_keys(oj, {"path", "format"}, "/output");
        if (oj.contains("path")) spec.output.path = string_from(oj["path"], "/output/path");
        if (oj.contains("format")) {
            spec.output.format = string_from(oj["format"], "/output/format");
            if (spec.output.format != "csv" && spec.output.format != "json")
                schema_fail("/output/format", "expected 'csv' or 'json'");
        }
    }
    return spec;
}

inline OperatorSpecFile parse_spec_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(errc::schema, std::string("not valid JSON: ") + e.what());
    }
    return parse_spec_json(doc);
}

inline OperatorSpecFile parse_spec_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::task, "cannot open spec file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec_text(ss.str());
}

} // namespace qdo
