#include "convexito/report.hpp"

#include "convexito/errors.hpp"

#include <charconv>
#include <cmath>

namespace cvx {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw ConfigError("table row has the wrong number of columns");
  rows_.push_back(std::move(row));
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out << ',';
    const std::string& c = cells[k];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      out << c;
    } else {
      out << '"';
      for (char ch : c) out << (ch == '"' ? "\"\"" : std::string(1, ch));
      out << '"';
    }
  }
  out << '\n';
}

}  // namespace

void Table::write_csv(std::ostream& out) const {
  write_line(out, header_);
  for (const auto& r : rows_) write_line(out, r);
}

Table estimates_table(const std::vector<MCEstimate>& estimates) {
  Table t({"t", "mean", "stderr", "n", "seed"});
  for (const auto& e : estimates)
    t.add_row({format_number(e.t), format_number(e.mean), format_number(e.std_error), std::to_string(e.n),
               std::to_string(e.seed)});
  return t;
}

}  // namespace cvx
