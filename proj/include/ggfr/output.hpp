#pragma once

// Plot-ready data files and run manifests.

#include <map>
#include <string>
#include <vector>

#include "ggfr/tpm.hpp"

namespace ggfr::io {

/// Scientific notation with 17 significant digits; round-trips through strtod.
std::string format_double(double v);

/// Comma-separated text with a header line.
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header);
  Csv& row(const std::vector<double>& values);
  const std::string& text() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

/// `value,prob`
std::string distribution_csv(const tpm::DiscreteDistribution& pdf);

/// `E_ini,q_ini,E_fin,q_fin,prob` over the nonzero outcomes. The q columns hold
/// the first charge of each side (0 when the side has no charges).
std::string joint_csv(const tpm::JointOutcomeDistribution& jd);

std::string sha256_hex(const std::string& data);

/// Named file contents written together into one directory. Writing is
/// serialised in name order so the directory content does not depend on the
/// order in which results were produced.
class ArtifactSet {
 public:
  void add(const std::string& name, std::string content);
  const std::map<std::string, std::string>& files() const { return files_; }
  /// Creates `dir` if needed. Throws Error on I/O failure.
  void write(const std::string& dir) const;

 private:
  std::map<std::string, std::string> files_;
};

}  // namespace ggfr::io
