#include "eshed/error.hpp"
#include "eshed/netmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>

#include <fmt/format.h>

namespace eshed::net {

namespace {

struct Cell {
  double value;
  int line;
  int column;
};

using Row = std::vector<Cell>;

// Hand-rolled scanner for the MATPOWER subset: `%` comments, `mpc.x = ...;`
// assignments, numeric matrices in [...] with `;` or newline row breaks.
class Scanner {
public:
  explicit Scanner(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  int line() const { return line_; }
  int column() const { return static_cast<int>(pos_ - line_start_) + 1; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      line_start_ = pos_ + 1;
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("syntax error: " + what, line(), column()); }

  void skip_comment() {
    while (!at_end() && peek() != '\n') advance();
  }

  // Skips spaces, tabs, comments and (optionally) newlines.
  void skip_blank(bool newlines) {
    while (!at_end()) {
      const char c = peek();
      if (c == '%' || c == '#')
        skip_comment();
      else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n'))
        advance();
      else if (c == '.' && text_.substr(pos_, 3) == "...") {
        skip_comment(); // continuation
        if (!at_end()) advance();
      } else
        break;
    }
  }

  std::string identifier() {
    std::string out;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '.')) {
      out += peek();
      advance();
    }
    return out;
  }

  void expect(char c) {
    skip_blank(false);
    if (peek() != c) fail(fmt::format("expected '{}'", c));
    advance();
  }

  Cell number() {
    const int l = line(), col = column();
    std::string tok;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-')
        tok += c;
      else
        break;
      advance();
    }
    if (tok.empty()) throw ParseError("syntax error: expected number", l, col);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ParseError("syntax error: invalid number '" + tok + "'", l, col);
    return {v, l, col};
  }

  std::vector<Row> matrix() {
    expect('[');
    std::vector<Row> rows;
    Row current;
    auto flush = [&] {
      if (!current.empty()) rows.push_back(std::move(current));
      current.clear();
    };
    for (;;) {
      skip_blank(false);
      if (at_end()) fail("unterminated matrix");
      const char c = peek();
      if (c == ']') {
        advance();
        break;
      }
      if (c == ';' || c == '\n') {
        advance();
        flush();
      } else if (c == ',') {
        advance();
      } else {
        current.push_back(number());
      }
    }
    flush();
    return rows;
  }

  // Skips a value we do not interpret: string, cell array, matrix or scalar.
  void skip_value() {
    skip_blank(false);
    const char open = peek();
    if (open == '\'' || open == '"') {
      advance();
      while (!at_end() && peek() != open && peek() != '\n') advance();
      if (peek() != open) fail("unterminated string");
      advance();
      return;
    }
    if (open == '[' || open == '{') {
      const char close = open == '[' ? ']' : '}';
      int depth = 0;
      while (!at_end()) {
        const char c = peek();
        if (c == '%') {
          skip_comment();
          continue;
        }
        if (c == '\'' || c == '"') {
          skip_value();
          continue;
        }
        if (c == open) ++depth;
        if (c == close && --depth == 0) {
          advance();
          return;
        }
        advance();
      }
      fail("unterminated block");
    }
    while (!at_end() && peek() != ';' && peek() != '\n') advance();
  }

  void end_statement() {
    skip_blank(false);
    if (peek() == ';') advance();
    skip_blank(false);
    if (!at_end() && peek() != '\n') fail("unexpected trailing input");
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::size_t line_start_ = 0;
};

struct RawCase {
  std::optional<Cell> base_mva;
  std::optional<std::vector<Row>> bus;
  std::optional<std::vector<Row>> branch;
};

RawCase scan(std::string_view text, std::vector<std::string>* warnings) {
  Scanner sc(text);
  RawCase raw;
  auto warn = [&](std::string w) {
    if (warnings) warnings->push_back(std::move(w));
  };
  for (;;) {
    sc.skip_blank(true);
    if (sc.at_end()) break;
    const int l = sc.line(), col = sc.column();
    if (!std::isalpha(static_cast<unsigned char>(sc.peek()))) sc.fail("expected an assignment");
    const std::string name = sc.identifier();
    if (name == "function") {
      sc.skip_comment();
      continue;
    }
    if (name == "return" || name == "end") {
      sc.end_statement();
      continue;
    }
    sc.expect('=');
    sc.skip_blank(false);
    if (name == "mpc.baseMVA") {
      raw.base_mva = sc.number();
    } else if (name == "mpc.bus") {
      raw.bus = sc.matrix();
    } else if (name == "mpc.branch") {
      raw.branch = sc.matrix();
    } else {
      if (name.rfind("mpc.", 0) != 0) throw ParseError("syntax error: unexpected identifier '" + name + "'", l, col);
      warn(fmt::format("ignored field {} (line {})", name, l));
      sc.skip_value();
    }
    sc.end_statement();
  }
  if (!raw.base_mva) throw ParseError("missing mpc.baseMVA");
  if (!raw.bus) throw ParseError("missing mpc.bus");
  if (!raw.branch) throw ParseError("missing mpc.branch");
  return raw;
}

void require_columns(const Row& row, std::size_t n, const char* table) {
  if (row.size() < n)
    throw ParseError(fmt::format("{} row needs at least {} columns, found {}", table, n, row.size()), row[0].line,
                     row[0].column);
}

int as_id(const Cell& c) {
  if (c.value != std::floor(c.value) || c.value < 1 || c.value > std::numeric_limits<int>::max())
    throw ParseError(fmt::format("bus id must be a positive integer, got {}", c.value), c.line, c.column);
  return static_cast<int>(c.value);
}

} // namespace

Network parse_matpower_case(std::string_view text, std::vector<std::string>* warnings) {
  const RawCase raw = scan(text, warnings);
  Network net;
  if (!(raw.base_mva->value > 0) || !std::isfinite(raw.base_mva->value))
    throw ParseError("baseMVA must be positive", raw.base_mva->line, raw.base_mva->column);
  net.base_mva = raw.base_mva->value;

  std::map<int, int> seen;
  std::optional<int> reference;
  for (const Row& row : *raw.bus) {
    require_columns(row, 3, "bus");
    const int id = as_id(row[0]);
    if (!seen.emplace(id, net.num_buses()).second)
      throw ParseError(fmt::format("duplicate bus id {}", id), row[0].line, row[0].column);
    net.buses.push_back({id, row[2].value != 0.0});
    if (row[1].value == 3) {
      if (reference && warnings) warnings->push_back(fmt::format("several reference buses; keeping {}", *reference));
      if (!reference) reference = id;
    }
  }
  if (net.buses.empty()) throw ParseError("case has no buses");
  net.reference_bus = reference ? *reference : seen.begin()->first;

  for (const Row& row : *raw.branch) {
    require_columns(row, 6, "branch");
    if (row.size() >= 11 && row[10].value == 0) {
      if (warnings) warnings->push_back(fmt::format("skipped out-of-service branch on line {}", row[0].line));
      continue;
    }
    Branch br;
    br.from = as_id(row[0]);
    br.to = as_id(row[1]);
    for (const Cell* c : {&row[0], &row[1]})
      if (!seen.count(static_cast<int>(c->value)))
        throw ParseError(fmt::format("branch references unknown bus {}", c->value), c->line, c->column);
    if (br.from == br.to) throw ParseError("branch connects a bus to itself", row[0].line, row[0].column);
    br.reactance = row[3].value;
    if (!(br.reactance > 0) || !std::isfinite(br.reactance))
      throw ParseError(fmt::format("nonpositive reactance {}", br.reactance), row[3].line, row[3].column);
    br.rating_mva = row[5].value;
    if (br.rating_mva < 0 || std::isnan(br.rating_mva))
      throw ParseError("negative rateA", row[5].line, row[5].column);
    br.flow_limit = br.rating_mva == 0 ? std::numeric_limits<double>::infinity() : br.rating_mva / net.base_mva;
    net.branches.push_back(br);
  }
  return net;
}

std::string serialize_matpower_case(const Network& network) {
  std::string out = "function mpc = eshed_case\n";
  out += fmt::format("mpc.baseMVA = {};\n\n", network.base_mva);
  out += "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\nmpc.bus = [\n";
  for (const Bus& b : network.buses)
    out += fmt::format("\t{}\t{}\t{}\t0\t0\t0\t1\t1\t0\t345\t1\t1.06\t0.94;\n", b.id,
                       b.id == network.reference_bus ? 3 : 1, b.has_load ? 1 : 0);
  out += "];\n\n%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\nmpc.branch = [\n";
  for (const Branch& br : network.branches)
    out += fmt::format("\t{}\t{}\t0\t{}\t0\t{}\t{}\t{}\t0\t0\t1\t-360\t360;\n", br.from, br.to, br.reactance,
                       br.rating_mva, br.rating_mva, br.rating_mva);
  out += "];\n";
  return out;
}

} // namespace eshed::net
