#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "krigeweight/study.hpp"

namespace krigeweight::io {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every recognised study configuration key with its default.
const std::vector<ConfigKey>& study_config_keys();

/// Parses `key = value` lines; `#` starts a comment. Duplicate or unknown
/// keys and lines without `=` raise InputError with the line number.
std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source,
                                                    const std::vector<ConfigKey>& known);

StudyConfig study_config_from(const std::map<std::string, std::string>& values);
StudyConfig read_study_config(std::istream& in, const std::string& source = "<stream>");
StudyConfig read_study_config(const std::filesystem::path& path);

/// Writes the effective configuration in the same key-value format.
void write_study_config(std::ostream& out, const StudyConfig& config);

}  // namespace krigeweight::io
