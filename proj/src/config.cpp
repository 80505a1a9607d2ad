#include "bow/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "bow/errors.hpp"

namespace bow {

using nlohmann::json;

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::kBow: return "bow";
        case Mode::kNoJudge: return "no-judge";
        case Mode::kSlm: return "slm";
        case Mode::kRandomFilter: return "random-filter";
    }
    return "bow";
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::uint64_t parsed = std::stoull(value, &used);
        if (used != value.size()) throw ConfigTypeError(key, value);
        return parsed;
    } catch (const ConfigTypeError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigTypeError(key, value);
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used != value.size()) throw ConfigTypeError(key, value);
        return parsed;
    } catch (const ConfigTypeError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigTypeError(key, value);
    }
}

bool parse_onoff(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true") return true;
    if (value == "off" || value == "false") return false;
    throw ConfigTypeError(key, value);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct KeyHandler {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
    auto u64_field = [](auto member) {
        return KeyHandler{
            [member](RunConfig& c, const std::string& k, const std::string& v) {
                c.*member = static_cast<std::remove_reference_t<decltype(c.*member)>>(
                    parse_u64(k, v));
            },
            [member](const RunConfig& c) { return std::to_string(c.*member); }};
    };
    auto dbl_field = [](auto member) {
        return KeyHandler{[member](RunConfig& c, const std::string& k, const std::string& v) {
                              c.*member = parse_double(k, v);
                          },
                          [member](const RunConfig& c) { return format_double(c.*member); }};
    };
    auto str_field = [](auto member) {
        return KeyHandler{[member](RunConfig& c, const std::string&, const std::string& v) {
                              c.*member = v;
                          },
                          [member](const RunConfig& c) { return c.*member; }};
    };

    static const std::vector<std::pair<std::string, KeyHandler>> table = {
        {"mode",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              if (v == "bow") c.mode = Mode::kBow;
              else if (v == "no-judge") c.mode = Mode::kNoJudge;
              else if (v == "slm") c.mode = Mode::kSlm;
              else if (v == "random-filter") c.mode = Mode::kRandomFilter;
              else throw ConfigTypeError(k, v);
          },
          [](const RunConfig& c) { return mode_name(c.mode); }}},
        {"regularizer",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.regularizer_on = parse_onoff(k, v);
          },
          [](const RunConfig& c) { return c.regularizer_on ? "on" : "off"; }}},
        {"seed",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.seed = parse_u64(k, v);
              c.train.seed = c.seed;
          },
          [](const RunConfig& c) { return std::to_string(c.seed); }}},

        {"alpha",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.reward.alpha = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.reward.alpha); }}},
        {"judge_temperature",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.reward.judge_temperature = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.reward.judge_temperature); }}},
        {"top_k",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.reward.top_k = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.reward.top_k); }}},

        {"group_size",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              const auto n = static_cast<std::size_t>(parse_u64(k, v));
              c.sampling.group_size = n;
              c.train.group_size = n;
          },
          [](const RunConfig& c) { return std::to_string(c.sampling.group_size); }}},
        {"max_trajectory_length",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.sampling.max_trajectory_length = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.sampling.max_trajectory_length); }}},
        {"sampling_temperature",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.sampling.temperature = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.sampling.temperature); }}},

        {"learning_rate",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.learning_rate = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.train.learning_rate); }}},
        {"beta1",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.beta1 = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.train.beta1); }}},
        {"beta2",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.beta2 = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.train.beta2); }}},
        {"weight_decay",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.weight_decay = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.train.weight_decay); }}},
        {"clip_epsilon",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.clip_epsilon = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.train.clip_epsilon); }}},
        {"total_batch",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.total_batch = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.train.total_batch); }}},
        {"mini_batch",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.mini_batch = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.train.mini_batch); }}},
        {"epochs",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.epochs = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.train.epochs); }}},
        {"sigma_floor",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.sigma_floor = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.train.sigma_floor); }}},
        {"entropy_coef",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.entropy_coef = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.train.entropy_coef); }}},
        {"checkpoint_every", u64_field(&RunConfig::checkpoint_every)},

        {"judge_order", u64_field(&RunConfig::judge_order)},
        {"judge_smoothing", dbl_field(&RunConfig::judge_smoothing)},
        {"feature_count", u64_field(&RunConfig::feature_count)},
        {"window_length", u64_field(&RunConfig::window_length)},

        {"eval_samples", u64_field(&RunConfig::eval_samples)},
        {"eval_temperature", dbl_field(&RunConfig::eval_temperature)},
        {"eval_judge_temperature", dbl_field(&RunConfig::eval_judge_temperature)},

        {"random_count", u64_field(&RunConfig::random_count)},
        {"min_context_length", u64_field(&RunConfig::min_context_length)},
        {"max_doc_tokens", u64_field(&RunConfig::max_doc_tokens)},
        {"determinism_threshold", dbl_field(&RunConfig::determinism_threshold)},
        {"stopwords", str_field(&RunConfig::stopwords)},

        {"synth",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.synth_enabled = parse_onoff(k, v);
          },
          [](const RunConfig& c) { return c.synth_enabled ? "on" : "off"; }}},
        {"categories",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.synth.categories = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.synth.categories); }}},
        {"words_per_category",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.synth.words_per_category = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.synth.words_per_category); }}},
        {"templates",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.synth.templates = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.synth.templates); }}},
        {"vocab_seed",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.synth.vocab_seed = parse_u64(k, v);
          },
          [](const RunConfig& c) { return std::to_string(c.synth.vocab_seed); }}},
        {"corpus_size",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.synth.corpus_size = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.synth.corpus_size); }}},

        {"corpus", str_field(&RunConfig::corpus_path)},
        {"judge_corpus", str_field(&RunConfig::judge_corpus_path)},
        {"pairs", str_field(&RunConfig::pairs_path)},
        {"eval_set", str_field(&RunConfig::eval_set_path)},
        {"vocab", str_field(&RunConfig::vocab_path)},
        {"checkpoint", str_field(&RunConfig::checkpoint_path)},
        {"metrics", str_field(&RunConfig::metrics_path)},
        {"results", str_field(&RunConfig::results_path)},

        {"filter", str_field(&RunConfig::filter_mode)},
        {"prompt_dir", str_field(&RunConfig::prompt_dir)},
        {"endpoint_url",
         {[](RunConfig& c, const std::string&, const std::string& v) { c.endpoint.base_url = v; },
          [](const RunConfig& c) { return c.endpoint.base_url; }}},
        {"endpoint_model",
         {[](RunConfig& c, const std::string&, const std::string& v) { c.endpoint.model = v; },
          [](const RunConfig& c) { return c.endpoint.model; }}},
        {"endpoint_timeout",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.endpoint.timeout_seconds = parse_double(k, v);
          },
          [](const RunConfig& c) { return format_double(c.endpoint.timeout_seconds); }}},
        {"endpoint_retries",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.endpoint.retry_limit = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.endpoint.retry_limit); }}},
        {"endpoint_concurrency",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.endpoint.max_concurrent = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.endpoint.max_concurrent); }}},
        {"logprobs_k",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.endpoint.top_k_logprobs = static_cast<std::size_t>(parse_u64(k, v));
          },
          [](const RunConfig& c) { return std::to_string(c.endpoint.top_k_logprobs); }}},
        {"remote_mode", str_field(&RunConfig::remote_mode)},
        {"cassette", str_field(&RunConfig::cassette_path)},
    };
    return table;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
    for (const auto& [name, handler] : key_table()) {
        if (name == key) {
            handler.set(*this, key, value);
            return;
        }
    }
    throw UnknownKeyError(key);
}

std::map<std::string, std::string> RunConfig::echo() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, handler] : key_table()) out[name] = handler.get(*this);
    return out;
}

std::string RunConfig::hash() const {
    std::string canonical;
    for (const auto& [key, value] : echo()) {
        canonical += key;
        canonical += '=';
        canonical += value;
        canonical += '\n';
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunConfig::header_record() const {
    json config = json::object();
    for (const auto& [key, value] : echo()) config[key] = value;
    return json{{"config_hash", hash()}, {"config", config}}.dump();
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UnreadablePathError(path);
    RunConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigTypeError(line, "(missing '=')");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigTypeError(key, value);
        cfg.apply(key, value);
    }
    return cfg;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace bow
