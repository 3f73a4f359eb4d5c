// io.hpp
// State import/export. Two interchangeable formats:
//   - CSV: one "re,im" pair per line, basis index ascending
//   - JSON: {"n": int, "re": [...], "im": [...]}
// Raw real vectors (one value per line, or a JSON array) are accepted on
// load and routed through amplitude_encode with zero padding.

#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qssm/state.hpp"

namespace qssm {

using nlohmann::json;

inline void write_state_csv(const StateVector& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < s.amp.size(); ++i)
    out << s.amp[i].real() << "," << s.amp[i].imag() << "\n";
}

inline json state_to_json(const StateVector& s) {
  json j;
  j["n"] = s.n;
  auto& re = j["re"] = json::array();
  auto& im = j["im"] = json::array();
  for (Eigen::Index i = 0; i < s.amp.size(); ++i) {
    re.push_back(s.amp[i].real());
    im.push_back(s.amp[i].imag());
  }
  return j;
}

inline void write_state_json(const StateVector& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << state_to_json(s).dump(2) << "\n";
}

inline StateVector state_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("re"))
    throw std::runtime_error("state JSON requires fields \"n\" and \"re\"");
  int n = j.at("n").get<int>();
  check_register_count(n);
  const auto& re = j.at("re");
  std::vector<double> im(re.size(), 0.0);
  if (j.contains("im")) {
    if (j.at("im").size() != re.size())
      throw std::runtime_error("state JSON: re/im length mismatch");
    im = j.at("im").get<std::vector<double>>();
  }
  if (static_cast<std::int64_t>(re.size()) != dim_of(n))
    throw std::runtime_error("state JSON: amplitude count does not equal 2^n");
  Vec amp(dim_of(n));
  for (std::size_t i = 0; i < re.size(); ++i)
    amp[static_cast<Eigen::Index>(i)] = cplx(re[i].get<double>(), im[i]);
  return state_from_amplitudes(n, std::move(amp));
}

struct ParsedAmplitudeFile {
  std::vector<cplx> values;
  bool complex_entries = false;  // true when any line carried an imaginary part
};

// Parses CSV lines of "re" or "re,im". Empty lines and lines starting with
// '#' are skipped. Parse failures name the offending 1-based line number.
inline ParsedAmplitudeFile parse_amplitude_csv(std::istream& in) {
  ParsedAmplitudeFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    double re = 0.0, im = 0.0;
    std::replace(trimmed.begin(), trimmed.end(), ',', ' ');
    std::istringstream ls(trimmed);
    if (!(ls >> re))
      throw std::runtime_error("parse error at line " + std::to_string(lineno) +
                               ": expected a number");
    if (ls >> im) out.complex_entries = true;
    std::string rest;
    if (ls >> rest)
      throw std::runtime_error("parse error at line " + std::to_string(lineno) +
                               ": trailing content \"" + rest + "\"");
    out.values.emplace_back(re, im);
  }
  return out;
}

struct LoadedState {
  StateVector state;
  bool padded = false;       // zeros appended to reach 2^n
  bool renormalized = false; // input was not unit norm
};

// Loads a state from CSV or JSON (by extension; anything not ".json" is
// treated as CSV/plain text). Real vectors of any length <= 2^n are padded
// and normalized; complex vectors must already have length 2^n.
inline LoadedState load_state_file(const std::string& path,
                                   std::optional<int> n_hint = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open state file: " + path);
  LoadedState out;
  auto ends_with = [&](const char* suf) {
    std::string s(suf);
    return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".json")) {
    json j = json::parse(in);
    if (j.is_array()) {
      std::vector<double> data = j.get<std::vector<double>>();
      int n = n_hint.value_or(0);
      if (n == 0) {
        n = 1;
        while (dim_of(n) < static_cast<std::int64_t>(data.size())) ++n;
      }
      out.state = amplitude_encode(data, n);
      out.padded = static_cast<std::int64_t>(data.size()) != dim_of(n);
      out.renormalized = true;
      return out;
    }
    out.state = state_from_json(j);
  } else {
    ParsedAmplitudeFile parsed = parse_amplitude_csv(in);
    if (parsed.values.empty()) throw std::runtime_error("state file is empty: " + path);
    if (parsed.complex_entries) {
      int n = n_hint.value_or(0);
      if (n == 0) {
        n = 1;
        while (dim_of(n) < static_cast<std::int64_t>(parsed.values.size())) ++n;
      }
      if (static_cast<std::int64_t>(parsed.values.size()) != dim_of(n))
        throw std::runtime_error("complex amplitude file must contain exactly 2^n lines");
      Vec amp(dim_of(n));
      for (std::size_t i = 0; i < parsed.values.size(); ++i)
        amp[static_cast<Eigen::Index>(i)] = parsed.values[i];
      out.state = state_from_amplitudes(n, std::move(amp));
    } else {
      std::vector<double> data;
      data.reserve(parsed.values.size());
      for (auto v : parsed.values) data.push_back(v.real());
      int n = n_hint.value_or(0);
      if (n == 0) {
        n = 1;
        while (dim_of(n) < static_cast<std::int64_t>(data.size())) ++n;
      }
      out.state = amplitude_encode(data, n);
      out.padded = static_cast<std::int64_t>(data.size()) != dim_of(n);
      out.renormalized = true;
      return out;
    }
  }
  const double nrm = out.state.amp.norm();
  if (std::abs(nrm - 1.0) > 1e-9) {
    if (nrm == 0.0) throw std::domain_error("state file encodes the zero vector");
    out.state.amp /= nrm;
    out.renormalized = true;
  }
  return out;
}

}  // namespace qssm
