#include "vampire/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "vampire/errors.hpp"

namespace vampire {

namespace {

// Reads one whitespace/comment-delimited header token.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) throw DataError("malformed PGM header (unexpected EOF): " + path);
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

struct PgmHeader {
  int width = 0, height = 0, maxval = 0;
};

PgmHeader read_header(std::istream& in, const std::string& path) {
  std::string magic = next_token(in, path);
  if (magic != "P5") throw DataError("malformed PGM header (expected P5, got '" + magic + "'): " + path);
  PgmHeader h;
  try {
    h.width = std::stoi(next_token(in, path));
    h.height = std::stoi(next_token(in, path));
    h.maxval = std::stoi(next_token(in, path));
  } catch (const std::exception&) {
    throw DataError("malformed PGM header (non-numeric field): " + path);
  }
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535)
    throw DataError("malformed PGM header (bad dimensions or maxval): " + path);
  return h;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  return in;
}

}  // namespace

void write_pgm16(const Grid& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "P5\n" << g.cols << " " << g.rows << "\n65535\n";
  std::vector<unsigned char> buf(g.size() * 2);
  for (size_t i = 0; i < g.size(); ++i) {
    double x = std::clamp(g.v[i], 0.0, 1.0);
    auto q = static_cast<unsigned>(std::lround(x * 65535.0));
    buf[2 * i] = static_cast<unsigned char>(q >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Grid read_pgm16(const std::filesystem::path& path) {
  auto in = open_input(path);
  PgmHeader h = read_header(in, path.string());
  Grid g(h.height, h.width);
  if (h.maxval > 255) {
    std::vector<unsigned char> buf(g.size() * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size())
      throw DataError("truncated PGM pixel data: " + path.string());
    for (size_t i = 0; i < g.size(); ++i) {
      unsigned q = (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1];
      g.v[i] = static_cast<double>(q) / h.maxval;
    }
  } else {
    std::vector<unsigned char> buf(g.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size())
      throw DataError("truncated PGM pixel data: " + path.string());
    for (size_t i = 0; i < g.size(); ++i) g.v[i] = static_cast<double>(buf[i]) / h.maxval;
  }
  return g;
}

void write_pgm_mask(const Mask& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "P5\n" << m.cols << " " << m.rows << "\n1\n";
  out.write(reinterpret_cast<const char*>(m.v.data()), static_cast<std::streamsize>(m.size()));
}

Mask read_pgm_mask(const std::filesystem::path& path) {
  auto in = open_input(path);
  PgmHeader h = read_header(in, path.string());
  Mask m(h.height, h.width);
  std::vector<unsigned char> buf(m.size() * (h.maxval > 255 ? 2 : 1));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(in.gcount()) != buf.size())
    throw DataError("truncated PGM pixel data: " + path.string());
  if (h.maxval > 255) {
    for (size_t i = 0; i < m.size(); ++i)
      m.v[i] = ((static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1]) ? 1 : 0;
  } else {
    for (size_t i = 0; i < m.size(); ++i) m.v[i] = buf[i] ? 1 : 0;
  }
  return m;
}

}  // namespace vampire
