#include "ggfr/output.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ggfr/errors.hpp"

namespace ggfr::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

Csv::Csv(const std::vector<std::string>& header) : columns_(header.size()) {
  for (std::size_t c = 0; c < header.size(); ++c) text_ += (c ? "," : "") + header[c];
  text_ += '\n';
}

Csv& Csv::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw DimensionMismatch("csv row width differs from header");
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c) text_ += ',';
    text_ += format_double(values[c]);
  }
  text_ += '\n';
  return *this;
}

std::string distribution_csv(const tpm::DiscreteDistribution& pdf) {
  Csv csv({"value", "prob"});
  for (const auto& a : pdf.atoms) csv.row({a.value, a.prob});
  return csv.text();
}

std::string joint_csv(const tpm::JointOutcomeDistribution& jd) {
  Csv csv({"E_ini", "q_ini", "E_fin", "q_fin", "prob"});
  const auto& ini = jd.initial();
  const auto& fin = jd.final_labels();
  for (const auto& r : jd.records()) {
    const double qi = ini.charge_values.cols() ? ini.charge_values(r.initial, 0) : 0.0;
    const double qf = fin.charge_values.cols() ? fin.charge_values(r.final, 0) : 0.0;
    csv.row({ini.energies[r.initial], qi, fin.energies[r.final], qf, r.prob});
  }
  return csv.text();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void ArtifactSet::add(const std::string& name, std::string content) { files_[name] = std::move(content); }

void ArtifactSet::write(const std::string& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  for (const auto& [name, content] : files_) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("cannot write '" + path.string() + "'");
  }
}

}  // namespace ggfr::io
