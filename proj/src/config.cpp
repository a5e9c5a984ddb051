#include "izsfd/config.hpp"

#include "izsfd/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace izsfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---- parser ------------------------------------------------------------------

namespace {

class Parser {
public:
    Parser(std::string_view text, std::string_view origin) : text_(text), origin_(origin) {}

    json run() {
        json root = json::object();
        json* table = &root;
        while (!at_end()) {
            skip_blank();
            if (at_end()) break;
            if (peek() == '[') {
                table = &open_table(root);
            } else {
                const std::string key = parse_key();
                skip_inline_space();
                expect('=');
                skip_inline_space();
                json value = parse_value();
                if (table->contains(key)) fail("duplicate key '" + key + "'");
                (*table)[key] = std::move(value);
            }
            end_line();
        }
        return root;
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(std::string(origin_) + ":" + std::to_string(line_) + ": " + what);
    }

    void advance() {
        if (peek() == '\n') ++line_;
        ++pos_;
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    void skip_inline_space() {
        while (peek() == ' ' || peek() == '\t' || peek() == '\r') advance();
    }

    void skip_comment() {
        if (peek() == '#')
            while (!at_end() && peek() != '\n') advance();
    }

    // Whitespace, newlines and comments.
    void skip_blank() {
        while (!at_end()) {
            skip_inline_space();
            skip_comment();
            if (peek() == '\n')
                advance();
            else
                break;
        }
    }

    void end_line() {
        skip_inline_space();
        skip_comment();
        if (at_end()) return;
        if (peek() != '\n') fail("unexpected text after value");
        advance();
    }

    static bool key_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    }

    std::string parse_key() {
        std::string key;
        while (key_char(peek())) {
            key += peek();
            advance();
        }
        if (key.empty()) fail("expected a key");
        return key;
    }

    json& open_table(json& root) {
        expect('[');
        json* t = &root;
        while (true) {
            skip_inline_space();
            const std::string part = parse_key();
            if (!t->contains(part)) (*t)[part] = json::object();
            t = &(*t)[part];
            if (!t->is_object()) fail("'" + part + "' is not a table");
            skip_inline_space();
            if (peek() == '.') {
                advance();
                continue;
            }
            break;
        }
        expect(']');
        return *t;
    }

    json parse_value() {
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        if (text_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return parse_number();
    }

    json parse_string() {
        expect('"');
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = peek();
            advance();
            if (c == '"') break;
            if (c == '\\') {
                const char e = peek();
                advance();
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    json parse_array() {
        expect('[');
        json arr = json::array();
        while (true) {
            skip_blank();
            if (peek() == ']') {
                advance();
                return arr;
            }
            arr.push_back(parse_value());
            skip_blank();
            if (peek() == ',') {
                advance();
                continue;
            }
            skip_blank();
            expect(']');
            return arr;
        }
    }

    json parse_number() {
        std::size_t end = pos_;
        while (end < text_.size() && std::string_view("+-0123456789.eE_").find(text_[end]) != std::string_view::npos)
            ++end;
        std::string token(text_.substr(pos_, end - pos_));
        std::erase(token, '_');
        if (token.empty()) fail("expected a value");
        if (token.front() == '+') token.erase(0, 1);
        const bool is_float = token.find_first_of(".eE") != std::string::npos;
        if (is_float) {
            double v;
            const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc() || p != token.data() + token.size() || !std::isfinite(v))
                fail("malformed number '" + token + "'");
            pos_ = end;
            return v;
        }
        long long v;
        const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || p != token.data() + token.size()) fail("malformed number '" + token + "'");
        pos_ = end;
        return v;
    }

    std::string_view text_;
    std::string_view origin_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Typed access with key checking.
class Table {
public:
    Table(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("[" + name_ + "] must be a table");
    }

    ~Table() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError("unknown key '" + k + "' in [" + name_ + "]");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    template <typename T>
    T get(const std::string& k, T fallback) {
        used_.insert(k);
        if (!j_.contains(k)) return fallback;
        return convert<T>(j_.at(k), k);
    }

    template <typename T>
    std::optional<T> maybe(const std::string& k) {
        used_.insert(k);
        if (!j_.contains(k)) return std::nullopt;
        return convert<T>(j_.at(k), k);
    }

    const json& sub(const std::string& k) {
        used_.insert(k);
        static const json empty = json::object();
        return j_.contains(k) ? j_.at(k) : empty;
    }

private:
    template <typename T>
    T convert(const json& v, const std::string& k) const {
        const std::string where = name_.empty() ? k : name_ + "." + k;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where + " must be a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ConfigError(where + " must be a number");
            return v.get<double>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
            const auto x = v.get<long long>();
            if (std::is_unsigned_v<T> && x < 0) throw ConfigError(where + " must be non-negative");
            return static_cast<T>(x);
        } else {
            if (!v.is_array()) throw ConfigError(where + " must be an array");
            T out;
            for (const auto& e : v) {
                if (!e.is_number_integer()) throw ConfigError(where + " must hold integers");
                out.push_back(e.get<typename T::value_type>());
            }
            return out;
        }
    }

    const json& j_;
    std::string name_;
    std::set<std::string> used_;
};

void read_train(Table t, TrainConfig& c) {
    c.epochs = t.get("epochs", c.epochs);
    c.batch_size = t.get("batch_size", c.batch_size);
    c.learning_rate = t.get("learning_rate", c.learning_rate);
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

}  // namespace

json parse_toml(std::string_view text, std::string_view origin) { return Parser(text, origin).run(); }

json load_toml(const fs::path& path) { return parse_toml(read_text(path), path.string()); }

Protocol parse_protocol(const std::string& text) {
    if (text == "category-increment" || text == "category") return Protocol::category_increment;
    if (text == "attribute-increment" || text == "attribute") return Protocol::attribute_increment;
    throw ConfigError("unknown protocol '" + text + "'");
}

Method parse_method(const std::string& text) {
    if (text == "bdmaff") return Method::bdmaff;
    if (text == "jl") return Method::jl;
    if (text == "sft") return Method::sft;
    throw ConfigError("unknown method '" + text + "'");
}

SyntheticSpec synthetic_spec_from(const json& table) {
    SyntheticSpec s;
    Table t(table, "synthetic");
    s.cardinalities = t.get("cardinalities", s.cardinalities);
    s.categories = t.get("categories", s.categories);
    s.dim = t.get("dim", s.dim);
    s.sigma = t.get("sigma", s.sigma);
    s.direction_scale = t.get("direction_scale", s.direction_scale);
    s.train_per_category = t.get("train_per_category", s.train_per_category);
    s.test_per_category = t.get("test_per_category", s.test_per_category);
    s.seed = t.get("seed", s.seed);
    try {
        s.validate();
    } catch (const SpecError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

SyntheticSpec load_synthetic_spec(const fs::path& path) {
    const json j = load_toml(path);
    return synthetic_spec_from(j.contains("synthetic") && j.size() == 1 ? j.at("synthetic") : j);
}

void ExperimentConfig::override_seed(std::uint64_t s) {
    seed = s;
    plan_seed = s;
    raw["seed"] = s;
    if (raw.contains("plan") && raw["plan"].contains("seed")) raw["plan"]["seed"] = s;
}

ExperimentConfig experiment_config_from(const json& table, const fs::path& base_dir) {
    ExperimentConfig c;
    c.raw = table;
    Table root(table, "");
    c.seed = root.get<std::uint64_t>("seed", c.seed);
    {
        Table t(root.sub("data"), "data");
        c.data.source = t.get<std::string>("source", c.data.source);
        if (auto p = t.maybe<std::string>("path")) c.data.path = resolve(*p, base_dir);
        if (c.data.source == "dataset" && c.data.path.empty()) throw ConfigError("data.path is required for a dataset source");
        if (c.data.source != "dataset" && c.data.source != "synthetic")
            throw ConfigError("data.source must be \"synthetic\" or \"dataset\"");
    }
    c.data.synthetic = synthetic_spec_from(root.sub("synthetic"));
    {
        Table t(root.sub("plan"), "plan");
        c.protocol = parse_protocol(t.get<std::string>("protocol", "category-increment"));
        c.stages = t.get("stages", c.stages);
        c.unseen_count = t.maybe<std::size_t>("unseen");
        c.unseen_fraction = t.get("unseen_fraction", c.unseen_fraction);
        c.plan_seed = t.maybe<std::uint64_t>("seed");
        if (c.stages < 1) throw ConfigError("plan.stages must be at least 1");
        if (!(c.unseen_fraction >= 0.0 && c.unseen_fraction < 1.0))
            throw ConfigError("plan.unseen_fraction must lie in [0, 1)");
    }
    {
        Table t(root.sub("model"), "model");
        auto& s = c.training.shape;
        s.fe_hidden = t.get("fe_hidden", s.fe_hidden);
        s.feature_dim = t.get("feature_dim", s.feature_dim);
        s.noise_dim = t.get("noise_dim", s.noise_dim);
        s.generator_hidden = t.get("generator_hidden", s.generator_hidden);
        s.critic_hidden = t.get("critic_hidden", s.critic_hidden);
    }
    read_train(Table(root.sub("pretrain"), "pretrain"), c.training.pretrain);
    read_train(Table(root.sub("head"), "head"), c.training.head);
    {
        Table t(root.sub("gan"), "gan");
        auto& g = c.training.gan;
        g.lambda_gp = t.get("lambda_gp", g.lambda_gp);
        g.lambda_att = t.get("lambda_att", g.lambda_att);
        g.lambda_fe = t.get("lambda_fe", g.lambda_fe);
        g.alpha_limit = t.get("alpha_limit", g.alpha_limit);
        g.critic_steps = t.get("critic_steps", g.critic_steps);
        g.epochs = t.get("epochs", g.epochs);
        g.batch_size = t.get("batch_size", g.batch_size);
        g.learning_rate = t.get("learning_rate", g.learning_rate);
    }
    {
        Table t(root.sub("replay"), "replay");
        c.training.replay_volume = t.get("volume", c.training.replay_volume);
        c.training.fidelity_samples = t.get("fidelity_samples", c.training.fidelity_samples);
    }
    {
        Table t(root.sub("memory"), "memory");
        c.training.target_scale = t.get("target_scale", c.training.target_scale);
    }
    {
        Table t(root.sub("baseline"), "baseline");
        c.training.retain_data = t.get("retain_data", c.training.retain_data);
    }
    {
        Table t(root.sub("output"), "output");
        c.output_dir = resolve(t.get<std::string>("dir", c.output_dir.string()), base_dir);
        c.checkpoints = t.get("checkpoints", c.checkpoints);
        c.projection = t.get("projection", c.projection);
    }
    c.training.validate();
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return experiment_config_from(load_toml(path), path.parent_path());
}

}  // namespace izsfd
