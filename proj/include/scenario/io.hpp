#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "scenario/experiments.hpp"
#include "scenario/risk_bounds.hpp"
#include "scenario/sv_models.hpp"

namespace scenario {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// CSV files carry a header row. Values are written with 17 significant digits
// except the bounds table, which uses 12. Lines starting with '#' are comments.

/// Columns other than `y` are inputs; without a `y` column the outputs are empty.
Dataset read_dataset_csv(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

void write_sweep_csv(std::ostream& out, const std::vector<CostRiskRow>& rows);
std::vector<CostRiskRow> read_sweep_csv(std::istream& in, const std::string& source = "<stream>");

void write_validation_csv(std::ostream& out, const ValidationReport& report);
ValidationReport read_validation_csv(std::istream& in, const std::string& source = "<stream>");

void write_bounds_csv(std::ostream& out, const std::vector<RiskInterval>& table);
std::vector<RiskInterval> read_bounds_csv(std::istream& in, const std::string& source = "<stream>");

/// A fitted model with the certificate it was issued.
struct StoredModel {
  std::variant<SvrModel, SvddModel, SvmModel> model;
  RiskCertificate certificate;
  std::int64_t n_train = 0;

  const char* method() const;
};

std::string model_to_json(const StoredModel& stored);
StoredModel model_from_json(const std::string& text);

/// Parses "0.5,0.1,1e-3" or "pow(a/b,i..j)" (a single number works as a base too),
/// the latter giving (a/b)^l for l = i..j.
std::vector<double> parse_number_list(const std::string& text);

/// Writes to a temporary sibling and renames, so a failed run leaves no partial file.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace scenario
