#pragma once

#include <map>
#include <string>
#include <vector>

#include "folopt/params.hpp"

namespace folopt {

/// Flat key=value configuration with optional [section] headers.
/// Keys are addressed as "name" (top level) or "section.name".
/// '#' starts a comment; blank lines are ignored.
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin);
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key) const;  // comma separated

    /// Raw file bytes, hashed into output headers for provenance.
    const std::string& text() const { return text_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> values_;
    std::string text_;
    std::string origin_;
};

/// Model parameters from the top-level keys t0,t1,c1,c2,cs,ys,w.
/// Everything but cs defaults to the canonical values; cs must be given.
ModelParams params_from_config(const Config& cfg);

/// Flat config text for a parameter set (round-trips through parse).
std::string params_to_config(const ModelParams& p);

}  // namespace folopt
