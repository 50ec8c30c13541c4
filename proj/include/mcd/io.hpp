#pragma once

/// @file io.hpp
/// CSV (comma separated, '.' decimal, LF, 17 significant digits) and legacy
/// ASCII VTK point-data output, plus a small CSV reader for reference tables.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcd/operators.hpp"

namespace mcd {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return static_cast<int>(k);
    }
    throw IoError("missing CSV column '" + name + "'");
  }
  std::vector<double> values(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
  }
};

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t k = 0; k < t.header.size(); ++k) os << (k ? "," : "") << t.header[k];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << format_double(r[k]);
    os << '\n';
  }
}

inline void write_csv(const std::string& path, const Table& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_csv(os, t);
  if (!os) throw IoError("write to '" + path + "' failed");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Reads a header row and numeric rows. Lines starting with '#' (provenance
/// notes) and blank lines are skipped.
inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    auto cells = detail::split_csv_line(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw IoError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                    " fields, expected " + std::to_string(t.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0) throw IoError("CSV line " + std::to_string(line_no) + ": not a number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw IoError("CSV input has no header");
  return t;
}

inline Table read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_csv(is);
}

/// Nodal output fields over the active nodes, in node order.
struct Snapshot {
  std::vector<int> node;
  std::vector<Vec2> position;
  std::vector<double> u, v, p, div, vorticity;
};

inline Snapshot make_snapshot(const Discretization& disc, const VectorField& u, const ScalarField& p,
                              const ScalarField& div, const ScalarField& vort) {
  Snapshot s;
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.active(i)) continue;
    s.node.push_back(i);
    s.position.push_back(disc.nodes.position[i]);
    s.u.push_back(u.empty() ? 0.0 : u[i].x);
    s.v.push_back(u.empty() ? 0.0 : u[i].y);
    s.p.push_back(p.empty() ? 0.0 : p[i]);
    s.div.push_back(div.empty() ? 0.0 : div[i]);
    s.vorticity.push_back(vort.empty() ? 0.0 : vort[i]);
  }
  return s;
}

inline Table snapshot_table(const Snapshot& s) {
  Table t;
  t.header = {"node", "x", "y", "u", "v", "p", "div", "vorticity"};
  for (std::size_t k = 0; k < s.node.size(); ++k) {
    t.rows.push_back({static_cast<double>(s.node[k]), s.position[k].x, s.position[k].y, s.u[k], s.v[k],
                      s.p[k], s.div[k], s.vorticity[k]});
  }
  return t;
}

inline void write_snapshot_csv(const std::string& path, const Snapshot& s) {
  write_csv(path, snapshot_table(s));
}

inline void write_snapshot_vtk(std::ostream& os, const Snapshot& s, const std::string& title) {
  const std::size_t n = s.node.size();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
  os << "POINTS " << n << " double\n";
  for (const auto& x : s.position) os << format_double(x.x) << ' ' << format_double(x.y) << " 0\n";
  os << "VERTICES " << n << ' ' << 2 * n << '\n';
  for (std::size_t k = 0; k < n; ++k) os << "1 " << k << '\n';
  os << "POINT_DATA " << n << '\n';
  auto scalar = [&](const char* name, const std::vector<double>& f) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f) os << format_double(v) << '\n';
  };
  scalar("u", s.u);
  scalar("v", s.v);
  scalar("p", s.p);
  scalar("div", s.div);
  scalar("vorticity", s.vorticity);
  os << "VECTORS velocity double\n";
  for (std::size_t k = 0; k < n; ++k) os << format_double(s.u[k]) << ' ' << format_double(s.v[k]) << " 0\n";
}

inline void write_snapshot_vtk(const std::string& path, const Snapshot& s,
                               const std::string& title = "mcd snapshot") {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_snapshot_vtk(os, s, title);
  if (!os) throw IoError("write to '" + path + "' failed");
}

}  // namespace mcd
