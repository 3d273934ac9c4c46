#include "identpde/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace identpde {

using nlohmann::json;

std::string Provenance::header_line() const {
    return "# identpde " + std::string(kToolVersion) + " spec=" + spec_hash + " seed=" + std::to_string(seed);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

namespace {

json provenance_json(const Provenance& prov) {
    return {{"tool", "identpde"}, {"version", std::string(kToolVersion)}, {"spec_hash", prov.spec_hash}, {"seed", prov.seed}};
}

// JSON has no infinity; non-finite numbers are written as strings.
json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

}  // namespace

json field_to_json(const Field<double>& f) {
    const auto& g = f.grid;
    json grid = {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"dx", g.dx()}, {"n_x", g.n_x()},
                 {"t_min", g.t_min()}, {"dt", g.dt()},       {"n_t", g.n_t()}};
    json values = json::array();
    for (Index n = 0; n < g.n_t(); ++n) {
        json slice = json::array();
        for (Index i = 0; i < g.n_x(); ++i) slice.push_back(number(f.values(i, n)));
        values.push_back(std::move(slice));
    }
    return {{"grid", std::move(grid)}, {"values", std::move(values)}};
}

Field<double> field_from_json(const json& j) {
    try {
        const json& g = j.at("grid");
        const auto nx = g.at("n_x").get<Index>();
        const auto nt = g.at("n_t").get<Index>();
        const auto grid = Grid<double>::from_parts(g.at("x_min").get<double>(), g.at("x_max").get<double>(), g.at("dx").get<double>(),
                                                   nx, g.at("t_min").get<double>(), g.at("dt").get<double>(), nt);
        const json& values = j.at("values");
        if (!values.is_array() || static_cast<Index>(values.size()) != nt)
            throw std::invalid_argument("field JSON: expected " + std::to_string(nt) + " time slices");
        Matrix<double> v(nx, nt);
        for (Index n = 0; n < nt; ++n) {
            const json& slice = values[static_cast<std::size_t>(n)];
            if (!slice.is_array() || static_cast<Index>(slice.size()) != nx)
                throw std::invalid_argument("field JSON: slice " + std::to_string(n) + " does not have n_x values");
            for (Index i = 0; i < nx; ++i) v(i, n) = slice[static_cast<std::size_t>(i)].get<double>();
        }
        return Field<double>(grid, std::move(v));
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("field JSON: ") + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_field_json(const std::filesystem::path& path, const Field<double>& f, const Provenance& prov) {
    json j = field_to_json(f);
    j["provenance"] = provenance_json(prov);
    write_json(path, j);
}

Field<double> read_field_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open field file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("field file " + path.string() + ": " + e.what());
    }
    return field_from_json(j);
}

std::string csv_cell(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const Provenance& prov, const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary), width_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out_ << prov.header_line() << '\n';
    row(columns);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("CSV row width does not match the header in " + path_.string());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out_ << ',';
        out_ << csv_cell(cells[k]);
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.flush();
    if (!out_) throw std::runtime_error("failed writing " + path_.string());
    out_.close();
}

std::string support_label(const std::vector<int>& support, const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (k) s += ' ';
        s += names.at(static_cast<std::size_t>(support[k]));
    }
    return s;
}

std::string coefficient_label(const PdeModel<double>& model) {
    std::string s;
    for (std::size_t k = 0; k < model.coefficients.size(); ++k) {
        if (k) s += ' ';
        const auto& c = model.coefficients[k];
        if (c.size() == 1) {
            s += format_double(c(0));
        } else {
            s += '[';
            for (Index l = 0; l < c.size(); ++l) s += (l ? ";" : "") + format_double(c(l));
            s += ']';
        }
    }
    return s;
}

json model_to_json(const PdeModel<double>& model, const std::vector<std::string>& names) {
    json terms = json::array();
    for (std::size_t k = 0; k < model.support.size(); ++k) {
        const auto& c = model.coefficients[k];
        json t = {{"feature", names.at(static_cast<std::size_t>(model.support[k]))}};
        if (c.size() == 1) t["coefficient"] = number(c(0));
        else {
            json nodes = json::array();
            for (Index l = 0; l < c.size(); ++l) nodes.push_back(number(c(l)));
            t["node_values"] = std::move(nodes);
        }
        terms.push_back(std::move(t));
    }
    return {{"terms", std::move(terms)}, {"basis_l", model.basis.size()}, {"r", model.r}};
}

namespace {

PdeModel<double> record_model(const IdentResult<double>& r, const TeeRecord<double>& rec) {
    PdeModel<double> m;
    m.basis = r.model.basis;
    m.support = rec.support;
    Index off = 0;
    std::vector<Index> offsets;
    for (Index sz : r.block_size) {
        offsets.push_back(off);
        off += sz;
    }
    for (int j : rec.support)
        m.coefficients.push_back(rec.coefficients.segment(offsets[static_cast<std::size_t>(j)], r.block_size[static_cast<std::size_t>(j)]));
    m.r = derivative_order_of(m.support);
    return m;
}

}  // namespace

json result_to_json(const IdentResult<double>& r, const Provenance& prov) {
    json features = json::array();
    Index off = 0;
    for (std::size_t j = 0; j < r.feature_names.size(); ++j) {
        json coeffs = json::array();
        for (Index k = 0; k < r.block_size[j]; ++k) coeffs.push_back(number(r.lasso_coefficients(off + k)));
        off += r.block_size[j];
        features.push_back({{"name", r.feature_names[j]}, {"magnitude", number(r.magnitudes(static_cast<Index>(j)))}, {"coefficients", coeffs}});
    }
    json candidates = json::array();
    for (int j : r.candidates) candidates.push_back(r.feature_names.at(static_cast<std::size_t>(j)));
    json tee = json::array();
    for (const auto& rec : r.tee_table)
        tee.push_back({{"support", support_label(rec.support, r.feature_names)},
                       {"coefficients", coefficient_label(record_model(r, rec))},
                       {"tee", number(rec.tee)},
                       {"blew_up", rec.blew_up},
                       {"rank_deficient", rec.rank_deficient}});
    json j = {{"provenance", provenance_json(prov)},
              {"lasso",
               {{"lambda", r.lasso.lambda},
                {"rho", r.lasso.rho},
                {"iterations", r.lasso.iterations},
                {"converged", r.lasso.converged},
                {"features", std::move(features)}}},
              {"candidates", std::move(candidates)},
              {"tee_table", std::move(tee)},
              {"model", model_to_json(r.model, r.feature_names)},
              {"coherence", {{"mu", number(r.coherence.mu)}}},
              {"reason", r.reason}};
    j["nsr"] = r.nsr ? number(*r.nsr) : json(nullptr);
    return j;
}

void write_tee_csv(const std::filesystem::path& path, const IdentResult<double>& r, const Provenance& prov) {
    CsvWriter csv(path, prov, {"support", "coefficients", "tee", "blew_up"});
    for (const auto& rec : r.tee_table)
        csv.row({support_label(rec.support, r.feature_names), coefficient_label(record_model(r, rec)), format_double(rec.tee),
                 rec.blew_up ? "1" : "0"});
    csv.close();
}

void write_coherence_csv(const std::filesystem::path& path, const IdentResult<double>& r, const Provenance& prov) {
    std::vector<std::string> cols{"feature"};
    cols.insert(cols.end(), r.feature_names.begin(), r.feature_names.end());
    CsvWriter csv(path, prov, cols);
    for (Index a = 0; a < r.coherence.pairwise.rows(); ++a) {
        std::vector<std::string> row{r.feature_names.at(static_cast<std::size_t>(a))};
        for (Index b = 0; b < r.coherence.pairwise.cols(); ++b) row.push_back(format_double(r.coherence.pairwise(a, b)));
        csv.row(row);
    }
    csv.close();
}

void write_magnitudes_csv(const std::filesystem::path& path, const IdentResult<double>& r, const Provenance& prov) {
    CsvWriter csv(path, prov, {"feature", "magnitude", "candidate"});
    for (std::size_t j = 0; j < r.feature_names.size(); ++j) {
        const bool cand = std::find(r.candidates.begin(), r.candidates.end(), static_cast<int>(j)) != r.candidates.end();
        csv.row({r.feature_names[j], format_double(r.magnitudes(static_cast<Index>(j))), cand ? "1" : "0"});
    }
    csv.close();
}

void write_report(std::ostream& os, const IdentResult<double>& r) {
    os << "candidates: " << (r.candidates.empty() ? "(none)" : support_label(r.candidates, r.feature_names)) << '\n';
    os << std::left << std::setw(36) << "active terms" << std::setw(44) << "coefficients" << "TEE\n";
    for (std::size_t k = 0; k < r.tee_table.size(); ++k) {
        const auto& rec = r.tee_table[k];
        const bool chosen = r.chosen && *r.chosen == k;
        os << std::setw(36) << ((chosen ? "* " : "  ") + support_label(rec.support, r.feature_names)) << std::setw(44)
           << coefficient_label(record_model(r, rec)) << (rec.rank_deficient ? "rank-deficient" : format_double(rec.tee)) << '\n';
    }
    if (r.model.empty()) os << "no model identified (" << r.reason << ")\n";
    else {
        os << "u_t =";
        for (std::size_t k = 0; k < r.model.support.size(); ++k) {
            const auto& c = r.model.coefficients[k];
            os << (k ? " + " : " ");
            if (c.size() == 1) os << format_double(c(0));
            else os << "c" << k + 1 << "(x)";
            os << " " << r.feature_names.at(static_cast<std::size_t>(r.model.support[k]));
        }
        os << '\n';
    }
}

}  // namespace identpde
