#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "turbgen/stats.hpp"

namespace turb {

// Structured key-value report stream: one record per estimator with name,
// shape, estimate/SE entries, optional target and z-scores. The header
// lines carry provenance supplied by the caller.
void write_reports(std::ostream& out, const std::vector<std::string>& headerLines,
                   const std::vector<EstimatorReport>& reports);

void write_reports_file(const std::string& path, const std::vector<std::string>& headerLines,
                        const std::vector<EstimatorReport>& reports);

std::vector<EstimatorReport> read_reports(std::istream& in);
std::vector<EstimatorReport> read_reports_file(const std::string& path);

}  // namespace turb
