#include "shelf/config.hpp"

#include "shelf/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace shelf {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': " + what + " (got '" + value + "')");
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || !std::isfinite(d)) bad(key, v, "expected a finite number");
    return d;
}

long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long i = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0') bad(key, v, "expected an integer");
    return i;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    if (!v.empty() && v[0] == '-') bad(key, v, "expected a non-negative integer");
    char* end = nullptr;
    const unsigned long long i = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0') bad(key, v, "expected a non-negative integer");
    return i;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad(key, v, "expected true or false");
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const PipelineConfig&)>;

struct Key {
    Setter set;
    Getter get;
};

std::string num(double d) {
    std::ostringstream o;
    o.precision(17);
    o << d;
    return o.str();
}

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = {
        {"dataset", {[](auto& c, auto&, auto& v) { c.dataset = v; }, [](auto& c) { return c.dataset.string(); }}},
        {"workdir", {[](auto& c, auto&, auto& v) { c.workdir = v; }, [](auto& c) { return c.workdir.string(); }}},
        {"variant",
         {[](auto& c, auto& k, auto& v) {
              try {
                  c.variant = parse_variant(v);
              } catch (const Error&) {
                  bad(k, v, "expected FULL, DP_SVM, DP_HS, DP_PYR_HS or BASELINE");
              }
          },
          [](auto& c) { return variant_name(c.variant); }}},
        {"svm_c", {[](auto& c, auto& k, auto& v) { c.svm_c = to_double(k, v); }, [](auto& c) { return num(c.svm_c); }}},
        {"kernel",
         {[](auto& c, auto& k, auto& v) {
              if (v != "rbf" && v != "linear") bad(k, v, "expected rbf or linear");
              c.kernel = parse_kernel(v);
          },
          [](auto& c) { return kernel_name(c.kernel); }}},
        {"kernel_param",
         {[](auto& c, auto& k, auto& v) { c.kernel_param = to_double(k, v); }, [](auto& c) { return num(c.kernel_param); }}},
        {"gamma_per_dimension",
         {[](auto& c, auto& k, auto& v) { c.gamma_per_dimension = to_bool(k, v); },
          [](auto& c) { return std::string(c.gamma_per_dimension ? "true" : "false"); }}},
        {"standardize",
         {[](auto& c, auto& k, auto& v) { c.standardize = to_bool(k, v); },
          [](auto& c) { return std::string(c.standardize ? "true" : "false"); }}},
        {"fire_threshold",
         {[](auto& c, auto& k, auto& v) { c.fire_threshold = static_cast<float>(to_double(k, v)); },
          [](auto& c) { return num(c.fire_threshold); }}},
        {"top_k",
         {[](auto& c, auto& k, auto& v) { c.top_k = static_cast<std::size_t>(to_uint(k, v)); },
          [](auto& c) { return std::to_string(c.top_k); }}},
        {"pyramid_levels",
         {[](auto& c, auto& k, auto& v) { c.pyramid_levels = static_cast<int>(to_int(k, v)); },
          [](auto& c) { return std::to_string(c.pyramid_levels); }}},
        {"mining_rounds",
         {[](auto& c, auto& k, auto& v) { c.mining_rounds = static_cast<int>(to_int(k, v)); },
          [](auto& c) { return std::to_string(c.mining_rounds); }}},
        {"negatives_per_class",
         {[](auto& c, auto& k, auto& v) { c.negatives_per_class = static_cast<int>(to_int(k, v)); },
          [](auto& c) { return std::to_string(c.negatives_per_class); }}},
        {"tau", {[](auto& c, auto& k, auto& v) { c.tau = to_double(k, v); }, [](auto& c) { return num(c.tau); }}},
        {"vocabulary_size",
         {[](auto& c, auto& k, auto& v) { c.vocabulary_size = static_cast<int>(to_int(k, v)); },
          [](auto& c) { return std::to_string(c.vocabulary_size); }}},
        {"seed", {[](auto& c, auto& k, auto& v) { c.seed = to_uint(k, v); }, [](auto& c) { return std::to_string(c.seed); }}},
        {"workers",
         {[](auto& c, auto& k, auto& v) { c.workers = static_cast<unsigned>(to_uint(k, v)); },
          [](auto& c) { return std::to_string(c.workers); }}},
        {"host", {[](auto& c, auto&, auto& v) { c.host = v; }, [](auto& c) { return c.host; }}},
        {"port",
         {[](auto& c, auto& k, auto& v) { c.port = static_cast<int>(to_int(k, v)); },
          [](auto& c) { return std::to_string(c.port); }}},
    };
    return table;
}

}  // namespace

MiningParams PipelineConfig::mining() const {
    MiningParams p;
    p.pyramid_levels = pyramid_levels;
    p.rounds = mining_rounds;
    p.negatives_per_class = negatives_per_class;
    p.top_k = top_k;
    p.fire_threshold = fire_threshold;
    p.seed = seed;
    p.workers = workers;
    return p;
}

SvmParams PipelineConfig::svm() const {
    SvmParams p;
    p.kernel = kernel;
    p.c = svm_c;
    p.gamma = kernel_param;
    p.gamma_per_dimension = gamma_per_dimension;
    p.standardize = standardize;
    p.workers = workers;
    return p;
}

BowParams PipelineConfig::bow() const {
    BowParams p;
    p.vocabulary_size = vocabulary_size;
    p.seed = seed;
    p.svm = svm();
    return p;
}

ConfigValues parse_config_text(const std::string& text) {
    ConfigValues out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(number) + ": empty key");
        out[key] = value;
    }
    return out;
}

void apply_config(PipelineConfig& config, const ConfigValues& values) {
    for (const auto& [key, value] : values) {
        const auto it = keys().find(key);
        if (it == keys().end()) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        it->second.set(config, key, value);
    }
}

ConfigValues environment_overrides() {
    ConfigValues out;
    for (const auto& [key, _] : keys()) {
        std::string name = "SHELF_";
        for (char ch : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (const char* v = std::getenv(name.c_str())) out[key] = v;
    }
    return out;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    PipelineConfig config;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::NotFound, "cannot open config file " + path.string());
        std::stringstream buffer;
        buffer << in.rdbuf();
        apply_config(config, parse_config_text(buffer.str()));
    }
    apply_config(config, environment_overrides());
    validate_config(config);
    return config;
}

void validate_config(const PipelineConfig& c) {
    auto require = [](bool ok, const std::string& key, const std::string& what) {
        if (!ok) throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': " + what);
    };
    require(c.svm_c > 0, "svm_c", "must be positive");
    require(c.kernel_param > 0, "kernel_param", "must be positive");
    require(std::isfinite(c.fire_threshold), "fire_threshold", "must be finite");
    require(c.top_k >= 1, "top_k", "must be >= 1");
    require(c.pyramid_levels >= 1, "pyramid_levels", "must be >= 1");
    require(c.mining_rounds >= 0, "mining_rounds", "must be >= 0");
    require(c.negatives_per_class >= 1, "negatives_per_class", "must be >= 1");
    require(std::isfinite(c.tau), "tau", "must be finite");
    require(c.vocabulary_size >= 1, "vocabulary_size", "must be >= 1");
    require(c.workers >= 1, "workers", "must be >= 1");
    require(c.port >= 0 && c.port <= 65535, "port", "must be in [0, 65535]");
}

std::string dump_config(const PipelineConfig& config) {
    std::string out;
    for (const auto& [key, k] : keys()) out += key + " = \"" + k.get(config) + "\"\n";
    return out;
}

}  // namespace shelf
