#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qecclab/trainer.hpp"

namespace qecclab {

/// Decode-report CSV schema. One row per evaluated error rate; `seconds` is
/// wall-clock metadata, everything else is deterministic for a given seed.
inline constexpr const char* kReportHeader =
    "decoder,family,L,sector,channel,p,q,T,samples,failures,ler,ler_lo,ler_hi,bit_errors,bits,ber,"
    "seconds,seed";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string report_to_csv(const DecodeReport& report) {
  std::ostringstream os;
  os << kReportHeader << "\n";
  for (const auto& pt : report.points) {
    WilsonInterval ci = pt.ler_interval();
    os << report.decoder << ',' << family_name(report.family) << ',' << report.L << ','
       << sector_name(report.sector) << ',' << channel_name(report.channel) << ','
       << format_double(pt.p) << ',' << format_double(pt.q) << ',' << pt.T << ',' << pt.samples
       << ',' << pt.failures << ',' << format_double(pt.ler()) << ',' << format_double(ci.lo)
       << ',' << format_double(ci.hi) << ',' << pt.bit_errors << ',' << pt.bits << ','
       << format_double(pt.ber()) << ',' << format_double(pt.seconds) << ',' << report.seed
       << "\n";
  }
  return os.str();
}

inline void write_report_csv(const std::string& path, const DecodeReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << report_to_csv(report);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline CodeFamily parse_family(const std::string& s) {
  if (s == "toric") return CodeFamily::toric;
  if (s == "surface") return CodeFamily::surface;
  if (s == "custom") return CodeFamily::custom;
  throw std::invalid_argument("unknown code family: " + s);
}

inline Sector parse_sector(const std::string& s) {
  if (s == "joint") return Sector::joint;
  if (s == "x") return Sector::x;
  if (s == "z") return Sector::z;
  throw std::invalid_argument("unknown sector: " + s);
}

}  // namespace detail

/// Parses one or more concatenated report CSVs; rows regroup by
/// (decoder, family, L, sector, channel, seed).
inline std::vector<DecodeReport> parse_report_csv(std::istream& is) {
  std::vector<DecodeReport> reports;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line == kReportHeader) {
      have_header = true;
      continue;
    }
    if (!have_header) throw std::invalid_argument("report csv: missing schema header");
    auto f = detail::split_csv_line(line);
    if (f.size() != 18) throw std::invalid_argument("report csv: bad column count");
    DecodeReport row;
    row.decoder = f[0];
    row.family = detail::parse_family(f[1]);
    row.L = std::stoi(f[2]);
    row.sector = detail::parse_sector(f[3]);
    row.channel = parse_channel(f[4]);
    row.seed = std::stoull(f[17]);
    EvalPoint pt;
    pt.p = std::stod(f[5]);
    pt.q = std::stod(f[6]);
    pt.T = std::stoi(f[7]);
    pt.samples = std::stoull(f[8]);
    pt.failures = std::stoull(f[9]);
    pt.bit_errors = std::stoull(f[13]);
    pt.bits = std::stoull(f[14]);
    pt.seconds = std::stod(f[16]);

    DecodeReport* dst = nullptr;
    for (auto& r : reports) {
      if (r.decoder == row.decoder && r.family == row.family && r.L == row.L &&
          r.sector == row.sector && r.channel == row.channel && r.seed == row.seed)
        dst = &r;
    }
    if (!dst) {
      reports.push_back(row);
      dst = &reports.back();
    }
    dst->points.push_back(pt);
  }
  return reports;
}

inline std::vector<DecodeReport> read_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return parse_report_csv(is);
}

}  // namespace qecclab
