#pragma once

// JSON serialization for coefficients, matrices, boundary parameters, and
// computation results, plus the CSV table writers used by the command-line
// driver.  Every parse error carries a JSON-pointer-style location.

#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "qdo/piecewise.hpp"
#include "qdo/shin_zettl.hpp"
#include "qdo/spectral.hpp"

namespace qdo {

using json = nlohmann::json;

[[noreturn]] inline void schema_fail(const std::string& where, const std::string& message) {
    fail(errc::schema, where + ": " + message);
}

namespace jsio {

inline const json& require_key(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) schema_fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_fail(where, std::string("missing required key '") + key + "'");
    return *it;
}

inline void restrict_keys(const json& obj, std::initializer_list<const char*> allowed,
                          const std::string& where) {
    if (!obj.is_object()) schema_fail(where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) schema_fail(where + "/" + it.key(), "unknown key");
    }
}

inline double number_from(const json& j, const std::string& where) {
    if (!j.is_number()) schema_fail(where, "expected a number");
    return j.get<double>();
}

inline int int_from(const json& j, const std::string& where) {
    if (!j.is_number_integer()) schema_fail(where, "expected an integer");
    return j.get<int>();
}

inline std::string string_from(const json& j, const std::string& where) {
    if (!j.is_string()) schema_fail(where, "expected a string");
    return j.get<std::string>();
}

inline bool bool_from(const json& j, const std::string& where) {
    if (!j.is_boolean()) schema_fail(where, "expected a boolean");
    return j.get<bool>();
}

// A complex value is either a plain number or a two-element [re, im] array.
inline cxd complex_from(const json& j, const std::string& where) {
    if (j.is_number()) return cxd(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2)
        return cxd(number_from(j[0], where + "/0"), number_from(j[1], where + "/1"));
    schema_fail(where, "expected a number or a [re, im] pair");
}

inline json complex_to(cxd z) { return json::array({z.real(), z.imag()}); }

inline std::vector<cxd> complex_list_from(const json& j, const std::string& where) {
    if (!j.is_array()) schema_fail(where, "expected an array of complex values");
    std::vector<cxd> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(complex_from(j[i], where + "/" + std::to_string(i)));
    return out;
}

inline json complex_list_to(const std::vector<cxd>& v) {
    json out = json::array();
    for (cxd z : v) out.push_back(complex_to(z));
    return out;
}

inline std::pair<double, double> interval_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) schema_fail(where, "expected a two-element [a, b] array");
    double a = number_from(j[0], where + "/0");
    double b = number_from(j[1], where + "/1");
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
        schema_fail(where, "interval endpoints must be finite with a < b");
    return {a, b};
}

} // namespace jsio

// ---------------------------------------------------------------------------
// Piecewise coefficient  {"pieces": [{lo, hi, coeffs | terms, ...}, ...]}
//
// A piece with a single polynomial term serializes as {"lo","hi","coeffs"};
// a single power term adds "singular_exponent" (and "anchor" when it cannot
// be inferred from the domain boundary).  General pieces use "terms", each
// term {"coeffs", "den_coeffs"?, "exponent"?, "anchor"?} standing for
// |t-anchor|^exponent * num(t) / den(t).
// ---------------------------------------------------------------------------

inline PiecewiseCoefficient coefficient_from_json(const json& j, const std::string& where) {
    using namespace jsio;
    jsio::restrict_keys(j, {"pieces"}, where);
    const json& parr = require_key(j, "pieces", where);
    if (!parr.is_array() || parr.empty()) schema_fail(where + "/pieces", "expected a non-empty array");

    struct RawPiece {
        double lo = 0, hi = 0;
        const json* node = nullptr;
        std::string where;
    };
    std::vector<RawPiece> raw;
    for (size_t i = 0; i < parr.size(); ++i) {
        std::string pw = where + "/pieces/" + std::to_string(i);
        const json& pj = parr[i];
        if (!pj.is_object()) schema_fail(pw, "expected an object");
        RawPiece rp;
        rp.lo = number_from(require_key(pj, "lo", pw), pw + "/lo");
        rp.hi = number_from(require_key(pj, "hi", pw), pw + "/hi");
        rp.node = &pj;
        rp.where = pw;
        raw.push_back(rp);
    }
    const double dom_lo = raw.front().lo;
    const double dom_hi = raw.back().hi;

    auto term_from = [&](const json& tj, const std::string& tw, double plo, double phi) {
        restrict_keys(tj, {"coeffs", "den_coeffs", "exponent", "anchor"}, tw);
        PieceTerm term{Polynomial(complex_list_from(require_key(tj, "coeffs", tw), tw + "/coeffs"))};
        if (tj.contains("den_coeffs"))
            term.den = Polynomial(complex_list_from(tj["den_coeffs"], tw + "/den_coeffs"));
        if (tj.contains("exponent")) term.exponent = number_from(tj["exponent"], tw + "/exponent");
        if (term.exponent != 0.0) {
            if (tj.contains("anchor"))
                term.anchor = number_from(tj["anchor"], tw + "/anchor");
            else if (plo == dom_lo && phi != dom_hi)
                term.anchor = plo;
            else if (phi == dom_hi && plo != dom_lo)
                term.anchor = phi;
            else
                schema_fail(tw, "anchor required: the singular point cannot be inferred");
        } else if (tj.contains("anchor")) {
            term.anchor = number_from(tj["anchor"], tw + "/anchor");
        }
        return term;
    };

    std::vector<Piece> pieces;
    for (const RawPiece& rp : raw) {
        const json& pj = *rp.node;
        Piece piece{rp.lo, rp.hi, {}};
        const bool has_coeffs = pj.contains("coeffs");
        const bool has_terms = pj.contains("terms");
        if (has_coeffs == has_terms)
            schema_fail(rp.where, "expected exactly one of 'coeffs' or 'terms'");
        if (has_coeffs) {
            restrict_keys(pj, {"lo", "hi", "coeffs", "singular_exponent", "anchor"}, rp.where);
            std::vector<cxd> c = complex_list_from(pj["coeffs"], rp.where + "/coeffs");
            bool all_zero = true;
            for (cxd z : c)
                if (z != cxd(0.0)) all_zero = false;
            if (!c.empty() && !(all_zero && !pj.contains("singular_exponent"))) {
                PieceTerm term{Polynomial(std::move(c))};
                if (pj.contains("singular_exponent")) {
                    term.exponent =
                        number_from(pj["singular_exponent"], rp.where + "/singular_exponent");
                    if (pj.contains("anchor"))
                        term.anchor = number_from(pj["anchor"], rp.where + "/anchor");
                    else if (rp.lo == dom_lo && rp.hi != dom_hi)
                        term.anchor = rp.lo;
                    else if (rp.hi == dom_hi && rp.lo != dom_lo)
                        term.anchor = rp.hi;
                    else if (rp.lo == dom_lo && rp.hi == dom_hi && term.exponent > 0.0)
                        term.anchor = rp.lo;
                    else
                        schema_fail(rp.where, "anchor required: the singular point cannot be inferred");
                } else if (pj.contains("anchor")) {
                    schema_fail(rp.where + "/anchor", "anchor is only meaningful with singular_exponent");
                }
                piece.terms.push_back(std::move(term));
            }
        } else {
            restrict_keys(pj, {"lo", "hi", "terms"}, rp.where);
            const json& tarr = pj["terms"];
            if (!tarr.is_array()) schema_fail(rp.where + "/terms", "expected an array");
            for (size_t k = 0; k < tarr.size(); ++k)
                piece.terms.push_back(
                    term_from(tarr[k], rp.where + "/terms/" + std::to_string(k), rp.lo, rp.hi));
        }
        pieces.push_back(std::move(piece));
    }

    try {
        return PiecewiseCoefficient(dom_lo, dom_hi, std::move(pieces));
    } catch (const Error& e) {
        schema_fail(where + "/pieces", e.what());
    }
}

inline json coefficient_to_json(const PiecewiseCoefficient& c) {
    auto poly_is_one = [](const Polynomial& p) {
        return p.degree() == 0 && p.coeffs().size() == 1 && p.coeffs()[0] == cxd(1.0);
    };
    json parr = json::array();
    for (const Piece& p : c.pieces()) {
        json pj;
        pj["lo"] = p.lo;
        pj["hi"] = p.hi;
        const bool simple =
            p.terms.empty() || (p.terms.size() == 1 && poly_is_one(p.terms[0].den));
        if (simple) {
            if (p.terms.empty()) {
                pj["coeffs"] = json::array();
            } else {
                const PieceTerm& t = p.terms[0];
                pj["coeffs"] = jsio::complex_list_to(t.num.coeffs());
                if (t.exponent != 0.0) {
                    pj["singular_exponent"] = t.exponent;
                    pj["anchor"] = t.anchor;
                }
            }
        } else {
            json tarr = json::array();
            for (const PieceTerm& t : p.terms) {
                json tj;
                tj["coeffs"] = jsio::complex_list_to(t.num.coeffs());
                if (!poly_is_one(t.den)) tj["den_coeffs"] = jsio::complex_list_to(t.den.coeffs());
                if (t.exponent != 0.0) {
                    tj["exponent"] = t.exponent;
                    tj["anchor"] = t.anchor;
                }
                tarr.push_back(std::move(tj));
            }
            pj["terms"] = std::move(tarr);
        }
        parr.push_back(std::move(pj));
    }
    return json{{"pieces", std::move(parr)}};
}

// ---------------------------------------------------------------------------
// Coefficient matrix  {"m": m, "interval": [a, b], "entries": [[...], ...]}
// with null marking structurally absent entries.
// ---------------------------------------------------------------------------

inline ShinZettlMatrix matrix_from_json(const json& j, const std::string& where) {
    using namespace jsio;
    restrict_keys(j, {"m", "interval", "entries"}, where);
    const int m = int_from(require_key(j, "m", where), where + "/m");
    if (m < 2) schema_fail(where + "/m", "order must be at least 2");
    auto [a, b] = interval_from(require_key(j, "interval", where), where + "/interval");
    const json& rows = require_key(j, "entries", where);
    if (!rows.is_array() || int(rows.size()) != m)
        schema_fail(where + "/entries", "expected " + std::to_string(m) + " rows");
    ShinZettlMatrix A(m, a, b);
    for (int i = 0; i < m; ++i) {
        const json& row = rows[size_t(i)];
        std::string rw = where + "/entries/" + std::to_string(i);
        if (!row.is_array() || int(row.size()) != m)
            schema_fail(rw, "expected " + std::to_string(m) + " entries");
        for (int k = 0; k < m; ++k) {
            const json& cell = row[size_t(k)];
            if (cell.is_null()) continue;
            std::string cw = rw + "/" + std::to_string(k);
            PiecewiseCoefficient c = coefficient_from_json(cell, cw);
            if (c.lower() != a || c.upper() != b)
                schema_fail(cw, "entry lives on a different interval than the matrix");
            A.set(i, k, std::move(c));
        }
    }
    return A;
}

inline json matrix_to_json(const ShinZettlMatrix& A) {
    json rows = json::array();
    for (int i = 0; i < A.order(); ++i) {
        json row = json::array();
        for (int k = 0; k < A.order(); ++k) {
            const PiecewiseCoefficient& c = A.at(i, k);
            if (c.is_zero())
                row.push_back(nullptr);
            else
                row.push_back(coefficient_to_json(c));
        }
        rows.push_back(std::move(row));
    }
    return json{{"m", A.order()},
                {"interval", json::array({A.lower(), A.upper()})},
                {"entries", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// Dense complex matrices (boundary parameters K):  [[[re,im], ...], ...]
// ---------------------------------------------------------------------------

inline Eigen::MatrixXcd dense_from_json(const json& j, const std::string& where) {
    using namespace jsio;
    if (!j.is_array() || j.empty()) schema_fail(where, "expected a non-empty array of rows");
    const int rows = int(j.size());
    int cols = -1;
    Eigen::MatrixXcd M;
    for (int i = 0; i < rows; ++i) {
        const json& row = j[size_t(i)];
        std::string rw = where + "/" + std::to_string(i);
        if (!row.is_array() || row.empty()) schema_fail(rw, "expected a non-empty array");
        if (cols < 0) {
            cols = int(row.size());
            M.resize(rows, cols);
        }
        if (int(row.size()) != cols) schema_fail(rw, "rows have inconsistent lengths");
        for (int k = 0; k < cols; ++k)
            M(i, k) = complex_from(row[size_t(k)], rw + "/" + std::to_string(k));
    }
    return M;
}

inline json dense_to_json(const Eigen::MatrixXcd& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (int k = 0; k < M.cols(); ++k) row.push_back(jsio::complex_to(M(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Result writers.  Doubles in CSV output use %.17g so results round-trip and
// identical inputs produce byte-identical files.
// ---------------------------------------------------------------------------

namespace jsio {

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace jsio

inline json spectral_result_to_json(const SpectralResult& r) {
    json evs = json::array();
    for (const Eigenvalue& e : r.eigenvalues) {
        json ej{{"re", e.lambda.real()},
                {"im", e.lambda.imag()},
                {"mult", e.multiplicity},
                {"residual", e.residual}};
        if (e.extrapolation_uncertainty > 0.0) ej["uncertainty"] = e.extrapolation_uncertainty;
        evs.push_back(std::move(ej));
    }
    json meta{{"method", r.method},
              {"count", r.eigenvalues.size()},
              {"grid_points", r.grid_points},
              {"warnings", r.warnings}};
    return json{{"eigenvalues", std::move(evs)}, {"meta", std::move(meta)}};
}

inline std::string spectral_result_to_csv(const SpectralResult& r) {
    std::string out = "re,im,mult,residual\n";
    for (const Eigenvalue& e : r.eigenvalues) {
        out += jsio::fmt_double(e.lambda.real());
        out += ',';
        out += jsio::fmt_double(e.lambda.imag());
        out += ',';
        out += std::to_string(e.multiplicity);
        out += ',';
        out += jsio::fmt_double(e.residual);
        out += '\n';
    }
    return out;
}

// Solution trajectories dump as a table of the quasi-derivative vector w(t)
// on an even grid: columns t, Re w_1, Im w_1, ..., Re w_m, Im w_m.
inline std::string trajectory_to_csv(const Trajectory& y, int m, int samples) {
    if (samples < 1) samples = 1;
    std::string out = "t";
    for (int k = 1; k <= m; ++k) {
        out += ",Re w_" + std::to_string(k);
        out += ",Im w_" + std::to_string(k);
    }
    out += '\n';
    const double a = y.t_begin, b = y.t_end;
    for (int i = 0; i <= samples; ++i) {
        double t = a + (b - a) * double(i) / double(samples);
        Eigen::MatrixXcd w = y.value(t);
        out += jsio::fmt_double(t);
        for (int k = 0; k < m; ++k) {
            out += ',';
            out += jsio::fmt_double(w(k, 0).real());
            out += ',';
            out += jsio::fmt_double(w(k, 0).imag());
        }
        out += '\n';
    }
    return out;
}

inline json trajectory_to_json(const Trajectory& y, int m, int samples) {
    if (samples < 1) samples = 1;
    json rows = json::array();
    const double a = y.t_begin, b = y.t_end;
    for (int i = 0; i <= samples; ++i) {
        double t = a + (b - a) * double(i) / double(samples);
        Eigen::MatrixXcd w = y.value(t);
        json wj = json::array();
        for (int k = 0; k < m; ++k) wj.push_back(jsio::complex_to(w(k, 0)));
        rows.push_back(json{{"t", t}, {"w", std::move(wj)}});
    }
    return rows;
}

} // namespace qdo
