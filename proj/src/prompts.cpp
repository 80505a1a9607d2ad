#include "bow/prompts.hpp"

#include <fstream>
#include <sstream>

#include "bow/errors.hpp"

namespace bow {

std::string load_prompt_template(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UnreadablePathError(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string fill_prompt(std::string tmpl, const std::string& key, const std::string& value) {
    const std::string needle = "{" + key + "}";
    const std::size_t at = tmpl.find(needle);
    if (at == std::string::npos) throw Error("prompt template is missing placeholder " + needle);
    return tmpl.replace(at, needle.size(), value);
}

}  // namespace bow
