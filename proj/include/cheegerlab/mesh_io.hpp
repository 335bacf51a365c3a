#pragma once

#include <cctype>
#include <charconv>
#include <limits>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "cheegerlab/ambient_geometry.hpp"
#include "cheegerlab/error.hpp"
#include "cheegerlab/format.hpp"

namespace cheegerlab {

/// OFF with an ambient tag on the second line:
///   OFF
///   #ambient hyperboloid b=-1 n=3
///   V F 0
///   <coords()> numbers per vertex, then "3 i j k" per face.
inline void write_off(std::ostream& out, const SampledSubmanifold& P) {
  const int nc = P.ambient.coords();
  std::string buf = "OFF\n" + P.ambient.tag() + "\n" + std::to_string(P.vertices.size()) + " " +
                    std::to_string(P.faces.size()) + " 0\n";
  out << buf;
  for (const auto& v : P.vertices) {
    buf.clear();
    for (int i = 0; i < nc; ++i) {
      if (i) buf += ' ';
      buf += format_double(v[i]);
    }
    buf += '\n';
    out << buf;
  }
  for (const auto& f : P.faces)
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline void write_off(const std::string& path, const SampledSubmanifold& P) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write mesh file " + path);
  write_off(out, P);
  if (!out) throw ParseError("error while writing mesh file " + path);
}

namespace detail {

inline AmbientSpace parse_ambient_tag(std::string_view line) {
  auto fields = split(line.substr(std::string_view("#ambient").size()), ' ');
  std::string model;
  int n = 3;
  double b = 0.0;
  bool have_b = false;
  for (auto f : fields) {
    if (f.empty()) continue;
    if (f.starts_with("n=")) {
      const auto v = f.substr(2);
      if (std::from_chars(v.data(), v.data() + v.size(), n).ec != std::errc{})
        throw ParseError("bad dimension in ambient tag");
    } else if (f.starts_with("b=")) {
      b = parse_double(f.substr(2));
      have_b = true;
    } else if (model.empty()) {
      model = std::string(f);
    } else {
      throw ParseError("unexpected field '" + std::string(f) + "' in ambient tag");
    }
  }
  if (model == "euclidean") {
    if (have_b && b != 0.0) throw ParseError("euclidean ambient tag with nonzero b");
    return AmbientSpace::euclidean(n);
  }
  if (model == "hyperboloid") return AmbientSpace::hyperboloid(n, have_b ? b : -1.0);
  throw ParseError("unknown ambient model '" + model + "'");
}

// Whitespace tokenizer over the whole file that skips '#' comments.
class OffTokens {
public:
  explicit OffTokens(std::string text) : text_(std::move(text)) {}

  std::string_view next() {
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ >= text_.size()) throw ParseError("unexpected end of mesh file");
      if (text_[pos_] != '#') break;
      while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    }
    const std::size_t b = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string_view(text_).substr(b, pos_ - b);
  }

  template <class Int>
  Int integer() {
    const auto tok = next();
    Int v{};
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
      throw ParseError("expected an integer in mesh file, got '" + std::string(tok) + "'");
    return v;
  }

  double real() { return parse_double(next()); }

  std::size_t position() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  const std::string& text() const { return text_; }

private:
  std::string text_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Reads a mesh and builds its per-face data. A missing ambient tag means
/// Euclidean 3-space.
inline SampledSubmanifold read_off(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  detail::OffTokens tok(ss.str());
  const std::string& text = tok.text();

  std::size_t eol = text.find('\n');
  std::string_view first = std::string_view(text).substr(0, eol);
  while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.remove_suffix(1);
  if (first != "OFF") throw ParseError("mesh file must start with 'OFF'");
  AmbientSpace ambient = AmbientSpace::euclidean(3);
  std::size_t body = eol == std::string::npos ? text.size() : eol + 1;
  if (body < text.size()) {
    std::size_t eol2 = text.find('\n', body);
    std::string_view second = std::string_view(text).substr(body, eol2 == std::string::npos ? std::string::npos : eol2 - body);
    while (!second.empty() && (second.back() == '\r' || second.back() == ' ')) second.remove_suffix(1);
    if (second.starts_with("#ambient")) {
      ambient = detail::parse_ambient_tag(second);
      body = eol2 == std::string::npos ? text.size() : eol2 + 1;
    }
  }
  tok.seek(body);
  const auto nv = tok.integer<std::size_t>();
  const auto nf = tok.integer<std::size_t>();
  (void)tok.integer<std::size_t>();
  if (nv >= std::numeric_limits<std::uint32_t>::max()) throw ParseError("too many vertices");
  const int nc = ambient.coords();
  std::vector<Point> vertices(nv);
  for (auto& v : vertices)
    for (int i = 0; i < nc; ++i) v[i] = tok.real();
  std::vector<Face> faces(nf);
  for (auto& f : faces) {
    if (tok.integer<int>() != 3) throw ParseError("only triangle faces are supported");
    for (auto& idx : f) idx = tok.integer<std::uint32_t>();
  }
  return SampledSubmanifold::build(ambient, std::move(vertices), std::move(faces));
}

inline SampledSubmanifold read_off(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file " + path);
  return read_off(in);
}

} // namespace cheegerlab
