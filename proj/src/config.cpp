#include "cmine/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cmine/error.hpp"
#include "cmine/parallel.hpp"

namespace cmine::cli {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && quoted) {
            ++i;
        } else if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == '#' && !quoted) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string unquote(const std::string& v, std::size_t lineno) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') return v;
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] != '\\') {
            out.push_back(v[i]);
            continue;
        }
        if (++i + 1 > v.size() - 1)
            throw ConfigError("line " + std::to_string(lineno) + ": dangling escape");
        switch (v[i]) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            default: throw ConfigError("line " + std::to_string(lineno) + ": unknown escape");
        }
    }
    return out;
}

// ["a", "b"] -> "a,b"
std::string flatten_array(const std::string& v, std::size_t lineno) {
    if (v.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated array");
    std::string body = v.substr(1, v.size() - 2);
    std::string out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (!out.empty()) out += ",";
        out += unquote(item, lineno);
    }
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        T out{};
        if constexpr (std::is_floating_point_v<T>) {
            out = static_cast<T>(std::stod(v, &used));
        } else {
            if (!v.empty() && v.front() == '-') throw std::invalid_argument("negative");
            out = static_cast<T>(std::stoull(v, &used));
        }
        if (used != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": " + v);
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
    if (v.empty()) return {};
    std::filesystem::path p(v);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "provider", "vectors", "unit_vectors", "out", "seed", "blocklist", "log_level", "workers",
        "embed.dim", "embed.batch_size", "embed.max_in_flight",
        "mining.k_stage1", "mining.k_stage2", "mining.min_mean_cluster_size", "mining.k_nn",
        "mining.tau", "mining.theta", "mining.entropy_keep_fraction", "mining.central_n",
        "mining.max_iter", "mining.tol", "mining.seed_stage1", "mining.seed_stage2",
        "synth.n", "synth.per_type", "synth.client", "synth.responses", "synth.max_in_flight",
        "synth.timeout_ms",
        "analyze.pairs_cp", "analyze.pairs_baseline", "analyze.metric", "analyze.k_nn",
        "analyze.per_language", "analyze.seed"};
    return keys;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    return out + "\"";
}

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::stringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        value = !value.empty() && value.front() == '[' ? flatten_array(value, lineno) : unquote(value, lineno);
        kv[key] = value;
    }
    return kv;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

std::string env_name(const std::string& key) {
    std::string out = "CMINE_";
    for (char c : key) out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return out;
}

std::map<std::string, std::size_t> default_quotas() {
    return {{"de", 1000000}, {"en", 3000000}, {"es", 1000000},
            {"fr", 1000000}, {"ja", 1000000}, {"zh", 1000000}};
}

RunConfig parse_config(const KeyValues& file_kv, const std::filesystem::path& base_dir, const EnvLookup& env) {
    KeyValues kv = file_kv;
    std::vector<std::string> candidates = known_keys();
    for (const auto& [k, v] : file_kv) candidates.push_back(k);
    for (const auto& key : candidates)
        if (auto v = env(env_name(key))) kv[key] = *v;

    RunConfig cfg;
    cfg.mining.workers = default_workers();
    cfg.blocklist = corpus::default_blocklist();
    cfg.out_dir = resolve(base_dir, "out");
    bool quotas_given = false;

    for (const auto& [key, value] : kv) {
        auto num = [&](auto& field) { field = parse_number<std::decay_t<decltype(field)>>(key, value); };
        if (key.rfind("corpus.", 0) == 0) {
            cfg.corpora[key.substr(7)] = resolve(base_dir, value);
        } else if (key.rfind("quota.", 0) == 0) {
            quotas_given = true;
            cfg.quotas[key.substr(6)] = parse_number<std::size_t>(key, value);
        } else if (key == "provider") {
            cfg.provider = value;
        } else if (key == "vectors") {
            cfg.vectors = resolve(base_dir, value);
        } else if (key == "unit_vectors") {
            cfg.unit_vectors = resolve(base_dir, value);
        } else if (key == "out") {
            cfg.out_dir = resolve(base_dir, value);
        } else if (key == "seed") {
            num(cfg.seed);
        } else if (key == "blocklist") {
            auto items = split_list(value);
            cfg.blocklist = std::set<std::string>(items.begin(), items.end());
        } else if (key == "log_level") {
            cfg.log_level = value;
        } else if (key == "workers") {
            num(cfg.mining.workers);
        } else if (key == "embed.dim") {
            num(cfg.embed_dim);
        } else if (key == "embed.batch_size") {
            num(cfg.embed_batch);
        } else if (key == "embed.max_in_flight") {
            num(cfg.embed_in_flight);
        } else if (key == "mining.k_stage1") {
            num(cfg.mining.k_stage1);
        } else if (key == "mining.k_stage2") {
            num(cfg.mining.k_stage2);
        } else if (key == "mining.min_mean_cluster_size") {
            num(cfg.mining.min_mean_cluster_size);
        } else if (key == "mining.k_nn") {
            num(cfg.mining.k_nn);
        } else if (key == "mining.tau") {
            num(cfg.mining.tau);
        } else if (key == "mining.theta") {
            num(cfg.mining.theta);
        } else if (key == "mining.entropy_keep_fraction") {
            num(cfg.mining.entropy_keep_fraction);
        } else if (key == "mining.central_n") {
            num(cfg.mining.central_n);
        } else if (key == "mining.max_iter") {
            num(cfg.mining.max_iter);
        } else if (key == "mining.tol") {
            num(cfg.mining.tol);
        } else if (key == "mining.seed_stage1") {
            num(cfg.mining.seed_stage1);
        } else if (key == "mining.seed_stage2") {
            num(cfg.mining.seed_stage2);
        } else if (key == "synth.n") {
            num(cfg.synth.n);
        } else if (key == "synth.per_type") {
            num(cfg.synth.per_type);
        } else if (key == "synth.client") {
            cfg.synth.client = value;
        } else if (key == "synth.responses") {
            cfg.synth.responses = resolve(base_dir, value);
        } else if (key == "synth.max_in_flight") {
            num(cfg.synth.max_in_flight);
        } else if (key == "synth.timeout_ms") {
            num(cfg.synth.timeout_ms);
        } else if (key == "analyze.pairs_cp") {
            cfg.analyze.pairs_cp = resolve(base_dir, value);
        } else if (key == "analyze.pairs_baseline") {
            cfg.analyze.pairs_baseline = resolve(base_dir, value);
        } else if (key == "analyze.metric") {
            cfg.analyze.metric = value;
        } else if (key == "analyze.k_nn") {
            num(cfg.analyze.k_nn);
        } else if (key == "analyze.per_language") {
            num(cfg.analyze.per_language);
        } else if (key == "analyze.seed") {
            num(cfg.analyze.seed);
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }
    if (!quotas_given) cfg.quotas = default_quotas();
    if (cfg.mining.workers == 0) cfg.mining.workers = 1;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(parse_key_values(ss.str()), path.parent_path(), env);
}

void RunConfig::validate() const {
    const bool has_provider = !provider.empty();
    const bool has_vectors = !vectors.empty();
    if (has_provider == has_vectors)
        throw ConfigError("exactly one of provider or vectors must be set");
    if (!unit_vectors.empty() && !has_vectors)
        throw ConfigError("unit_vectors requires vectors");
    for (const auto& [lang, path] : corpora)
        if (!std::filesystem::exists(path)) throw ConfigError("corpus for " + lang + " not found: " + path.string());
    if (has_vectors && !std::filesystem::exists(vectors))
        throw ConfigError("vector file not found: " + vectors.string());
    if (!unit_vectors.empty() && !std::filesystem::exists(unit_vectors))
        throw ConfigError("unit vector file not found: " + unit_vectors.string());
    if (synth.client != "mock" && synth.client != "replay")
        throw ConfigError("synth.client must be mock or replay");
    if (synth.client == "replay" && synth.responses.empty())
        throw ConfigError("synth.client = replay needs synth.responses");
    if (analyze.metric != "cosine" && analyze.metric != "euclidean")
        throw ConfigError("analyze.metric must be cosine or euclidean");
    mining.validate();
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [lang, p] : corpora) c[lang] = p.generic_string();
    j["corpus"] = c;
    j["quota"] = quotas;
    j["blocklist"] = blocklist;
    j["provider"] = provider;
    j["vectors"] = vectors.generic_string();
    j["unit_vectors"] = unit_vectors.generic_string();
    j["embed"] = {{"dim", embed_dim}, {"batch_size", embed_batch}, {"max_in_flight", embed_in_flight}};
    j["out"] = out_dir.generic_string();
    j["seed"] = seed;
    j["workers"] = mining.workers;
    nlohmann::ordered_json m;
    mining::to_json(m, mining);
    j["mining"] = m;
    j["synth"] = {{"n", synth.n},
                  {"per_type", synth.per_type},
                  {"client", synth.client},
                  {"responses", synth.responses.generic_string()},
                  {"max_in_flight", synth.max_in_flight},
                  {"timeout_ms", synth.timeout_ms}};
    j["analyze"] = {{"pairs_cp", analyze.pairs_cp.generic_string()},
                    {"pairs_baseline", analyze.pairs_baseline.generic_string()},
                    {"metric", analyze.metric},
                    {"k_nn", analyze.k_nn},
                    {"per_language", analyze.per_language},
                    {"seed", analyze.seed}};
    j["log_level"] = log_level;
    return j;
}

std::string render_config(const RunConfig& cfg) {
    std::ostringstream os;
    auto path = [](const std::filesystem::path& p) { return quote(p.generic_string()); };
    os << "# cmine run configuration\n";
    if (!cfg.provider.empty()) os << "provider = " << quote(cfg.provider) << "\n";
    if (!cfg.vectors.empty()) os << "vectors = " << path(cfg.vectors) << "\n";
    if (!cfg.unit_vectors.empty()) os << "unit_vectors = " << path(cfg.unit_vectors) << "\n";
    os << "out = " << path(cfg.out_dir) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "log_level = " << quote(cfg.log_level) << "\n";
    os << "blocklist = [";
    bool first = true;
    for (const auto& b : cfg.blocklist) {
        os << (first ? "" : ", ") << quote(b);
        first = false;
    }
    os << "]\n\n[corpus]\n";
    for (const auto& [lang, p] : cfg.corpora) os << lang << " = " << path(p) << "\n";
    os << "\n[quota]\n";
    for (const auto& [lang, q] : cfg.quotas) os << lang << " = " << q << "\n";
    os << "\n[embed]\ndim = " << cfg.embed_dim << "\nbatch_size = " << cfg.embed_batch
       << "\nmax_in_flight = " << cfg.embed_in_flight << "\n";
    const auto& m = cfg.mining;
    os << "\n[mining]\nk_stage1 = " << m.k_stage1 << "\nk_stage2 = " << m.k_stage2
       << "\nmin_mean_cluster_size = " << m.min_mean_cluster_size << "\nk_nn = " << m.k_nn
       << "\ntau = " << m.tau << "\ntheta = " << fmt_double(m.theta)
       << "\nentropy_keep_fraction = " << fmt_double(m.entropy_keep_fraction)
       << "\ncentral_n = " << m.central_n << "\nmax_iter = " << m.max_iter
       << "\ntol = " << fmt_double(m.tol) << "\nseed_stage1 = " << m.seed_stage1
       << "\nseed_stage2 = " << m.seed_stage2 << "\n";
    os << "\n[synth]\nn = " << cfg.synth.n << "\nper_type = " << cfg.synth.per_type
       << "\nclient = " << quote(cfg.synth.client) << "\n";
    if (!cfg.synth.responses.empty()) os << "responses = " << path(cfg.synth.responses) << "\n";
    os << "max_in_flight = " << cfg.synth.max_in_flight << "\ntimeout_ms = " << cfg.synth.timeout_ms << "\n";
    os << "\n[analyze]\n";
    if (!cfg.analyze.pairs_cp.empty()) os << "pairs_cp = " << path(cfg.analyze.pairs_cp) << "\n";
    if (!cfg.analyze.pairs_baseline.empty()) os << "pairs_baseline = " << path(cfg.analyze.pairs_baseline) << "\n";
    os << "metric = " << quote(cfg.analyze.metric) << "\nk_nn = " << cfg.analyze.k_nn
       << "\nper_language = " << cfg.analyze.per_language << "\nseed = " << cfg.analyze.seed << "\n";
    return os.str();
}

}  // namespace cmine::cli
