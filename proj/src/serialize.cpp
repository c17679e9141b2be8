#include "ratvol/serialize.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace ratvol {

namespace {

using nlohmann::json;

json matrix_to_json(const CMatrix& m) {
  std::vector<double> re, im;
  re.reserve(m.size());
  im.reserve(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      re.push_back(m(i, j).real());
      im.push_back(m(i, j).imag());
    }
  return json{{"re", re}, {"im", im}};
}

CMatrix matrix_from_json(const json& j, Index rows, Index cols) {
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (static_cast<Index>(re.size()) != rows * cols || re.size() != im.size())
    throw ConfigError("matrix JSON has wrong entry count");
  CMatrix m(rows, cols);
  Index k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j2 = 0; j2 < cols; ++j2, ++k) m(i, j2) = Complex(re[k], im[k]);
  return m;
}

json realization_json(const Realization& r) {
  return json{{"n", r.state_dim()}, {"m", r.in_dim()},       {"p", r.out_dim()},
              {"A", matrix_to_json(r.a)}, {"B", matrix_to_json(r.b)},
              {"C", matrix_to_json(r.c)}, {"D", matrix_to_json(r.d)}};
}

Realization realization_from(const json& j) {
  const Index n = j.at("n").get<Index>();
  const Index m = j.at("m").get<Index>();
  const Index p = j.at("p").get<Index>();
  return Realization(matrix_from_json(j.at("A"), n, n), matrix_from_json(j.at("B"), n, m),
                     matrix_from_json(j.at("C"), p, n), matrix_from_json(j.at("D"), p, m));
}

}  // namespace

std::string realization_to_json(const Realization& r) {
  return realization_json(r).dump(2);
}

Realization realization_from_json(const std::string& text) {
  return realization_from(json::parse(text));
}

std::string pdf_to_json(const RationalPdf& p) {
  json j = realization_json(p.summand.to_realization());
  j["norm_const"] = p.norm_const;
  j["codegree"] = p.codegree;
  return j.dump(2);
}

RationalPdf pdf_from_json(const std::string& text) {
  const json j = json::parse(text);
  Realization r = realization_from(j);
  RationalPdf p;
  p.summand = SpectralSummand(r.a, r.b, r.c);
  p.norm_const = j.at("norm_const").get<double>();
  p.codegree = j.at("codegree").get<Index>();
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

}  // namespace ratvol
