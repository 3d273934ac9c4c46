#pragma once

#include "identpde/ident.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace identpde {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Who produced an artifact: tool version, hash of the experiment spec, seed.
struct Provenance {
    std::string spec_hash;
    std::uint64_t seed = 0;

    std::string header_line() const;  // "# identpde <version> spec=<hash> seed=<seed>"
};

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

nlohmann::json field_to_json(const Field<double>& f);
Field<double> field_from_json(const nlohmann::json& j);
void write_field_json(const std::filesystem::path& path, const Field<double>& f, const Provenance& prov);
Field<double> read_field_json(const std::filesystem::path& path);

/// Comma-separated table with a provenance comment and a header row.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const Provenance& prov, const std::vector<std::string>& columns);

    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t width_;
};

/// Quotes a CSV cell when it holds a comma, quote or newline.
std::string csv_cell(std::string_view s);

std::string support_label(const std::vector<int>& support, const std::vector<std::string>& names);
std::string coefficient_label(const PdeModel<double>& model);

nlohmann::json model_to_json(const PdeModel<double>& model, const std::vector<std::string>& names);
nlohmann::json result_to_json(const IdentResult<double>& r, const Provenance& prov);

void write_tee_csv(const std::filesystem::path& path, const IdentResult<double>& r, const Provenance& prov);
void write_coherence_csv(const std::filesystem::path& path, const IdentResult<double>& r, const Provenance& prov);
void write_magnitudes_csv(const std::filesystem::path& path, const IdentResult<double>& r, const Provenance& prov);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Plain-text report with the TEE table.
void write_report(std::ostream& os, const IdentResult<double>& r);

}  // namespace identpde
