#pragma once

#include <string>

namespace bow {

// Reads a prompt template file verbatim (bytes preserved; no trailing
// newline trimming beyond what the file contains).
std::string load_prompt_template(const std::string& path);

// Replaces the first occurrence of "{key}" with the value. Throws Error when
// the placeholder is absent, so a mismatched template fails loudly.
std::string fill_prompt(std::string tmpl, const std::string& key, const std::string& value);

}  // namespace bow
