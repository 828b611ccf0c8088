#include "eshed/error.hpp"
#include "eshed/netmodel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace eshed::net {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, int line, int column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError(fmt::format("invalid number '{}'", field), line, column);
  return v;
}

} // namespace

Profiles parse_profiles(std::string_view csv, const Network& network, const TimeGrid& grid) {
  Profiles p;
  p.gen = Matrix::Zero(network.num_buses(), grid.steps);
  p.load = Matrix::Zero(network.num_buses(), grid.steps);
  const std::size_t width = static_cast<std::size_t>(grid.steps) + 2;

  bool header = true;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t nl = csv.find('\n', pos);
    if (nl == std::string_view::npos) nl = csv.size();
    const std::string_view line = trim(csv.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != width)
      throw ParseError(fmt::format("wrong column count: expected {}, found {}", width, fields.size()), line_no, 1);
    if (header) {
      header = false;
      if (fields[0] != "bus" || fields[1] != "kind") throw ParseError("header must start with bus,kind", line_no, 1);
      continue;
    }
    const double id_value = parse_double(fields[0], line_no, 1);
    const int id = static_cast<int>(id_value);
    if (id_value != id || !network.has_bus(id))
      throw ParseError(fmt::format("unknown bus {}", fields[0]), line_no, 1);
    Matrix* target = nullptr;
    if (fields[1] == "load")
      target = &p.load;
    else if (fields[1] == "gen")
      target = &p.gen;
    else
      throw ParseError(fmt::format("unknown kind '{}'", fields[1]), line_no, 2);
    const int row = network.index_of(id);
    for (int t = 0; t < grid.steps; ++t) {
      const double v = parse_double(fields[t + 2], line_no, t + 3);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ParseError(fmt::format("negative profile value {} for bus {}", v, id), line_no, t + 3);
      (*target)(row, t) = v;
    }
  }
  return p;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace eshed::net
