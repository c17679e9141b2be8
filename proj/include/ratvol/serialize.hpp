#pragma once

#include <string>

#include "ratvol/ratpdf.hpp"

namespace ratvol {

// JSON document for a realization: fields n, m, p and flat row-major re/im
// arrays for A, B, C, D.
std::string realization_to_json(const Realization& r);
Realization realization_from_json(const std::string& text);

// RationalPdf: the summand realization (B slot holds M) plus norm_const and
// codegree.
std::string pdf_to_json(const RationalPdf& p);
RationalPdf pdf_from_json(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ratvol
