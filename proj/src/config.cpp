#include "folopt/config.hpp"

#include <cstdio>
#include <stdexcept>

#include "folopt/csv.hpp"

namespace folopt {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.text_ = text;
    cfg.origin_ = origin;
    std::string section;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string at = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw std::runtime_error(at + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw std::runtime_error(at + ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(at + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error(at + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.values_.count(full)) throw std::runtime_error(at + ": duplicate key " + full);
        cfg.values_[full] = value;
    }
    return cfg;
}

Config Config::load(const std::string& path) { return parse(read_text_file(path), path); }

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::runtime_error(origin_ + ": missing required key " + key);
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error(origin_ + ": key " + key + " is not a number: '" + v + "'");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const double x = get_double(key);
    const long n = static_cast<long>(x);
    if (static_cast<double>(n) != x)
        throw std::runtime_error(origin_ + ": key " + key + " must be an integer");
    return n;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::runtime_error(origin_ + ": key " + key + " must be a boolean");
}

std::vector<double> Config::get_list(const std::string& key) const {
    const std::string v = get_string(key);
    std::vector<double> out;
    std::string field;
    auto flush = [&]() {
        const std::string f = trim(field);
        field.clear();
        if (f.empty()) return;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(f, &used));
            if (used != f.size()) throw std::invalid_argument(f);
        } catch (const std::exception&) {
            throw std::runtime_error(origin_ + ": key " + key + " has a non-numeric entry '" + f +
                                     "'");
        }
    };
    for (char c : v) {
        if (c == ',')
            flush();
        else
            field += c;
    }
    flush();
    if (out.empty()) throw std::runtime_error(origin_ + ": key " + key + " is an empty list");
    return out;
}

ModelParams params_from_config(const Config& cfg) {
    ModelParams p;
    p.t0 = cfg.get_double("t0", p.t0);
    p.t1 = cfg.get_double("t1", p.t1);
    p.c1 = cfg.get_double("c1", p.c1);
    p.c2 = cfg.get_double("c2", p.c2);
    p.ys = cfg.get_double("ys", p.ys);
    p.w = cfg.get_double("w", p.w);
    if (!cfg.has("cs"))
        throw std::runtime_error(cfg.origin() +
                                 ": cs has no canonical default and must be set explicitly");
    p.cs = cfg.get_double("cs");
    return p;
}

std::string params_to_config(const ModelParams& p) {
    std::string out;
    auto kv = [&](const char* k, double v) {
        out += k;
        out += " = ";
        out += format_double(v);
        out += '\n';
    };
    kv("t0", p.t0);
    kv("t1", p.t1);
    kv("c1", p.c1);
    kv("c2", p.c2);
    kv("cs", p.cs);
    kv("ys", p.ys);
    kv("w", p.w);
    return out;
}

}  // namespace folopt
