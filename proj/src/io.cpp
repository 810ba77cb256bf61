#include "torwalk/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "torwalk/version.hpp"

namespace torwalk {

namespace fs = std::filesystem;

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text,
                                          const std::string& origin) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto notspace = [](unsigned char c) { return !std::isspace(c); };
        auto b = std::find_if(line.begin(), line.end(), notspace);
        auto e = std::find_if(line.rbegin(), line.rend(), notspace).base();
        if (b >= e) continue;
        std::string trimmed(b, e);
        auto eq = trimmed.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        auto strip = [](std::string s) {
            auto sb = s.find_first_not_of(" \t");
            auto se = s.find_last_not_of(" \t");
            return sb == std::string::npos ? std::string() : s.substr(sb, se - sb + 1);
        };
        std::string key = strip(trimmed.substr(0, eq));
        std::string value = strip(trimmed.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const {
    return values_.count(key) > 0;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    consumed_[key] = true;
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& def) const {
    auto v = get(key);
    return v ? *v : def;
}

double KeyValueConfig::get_double(const std::string& key, double def) const {
    auto v = get(key);
    if (!v) return def;
    try {
        std::size_t pos = 0;
        double d = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + *v);
    }
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t def) const {
    auto v = get(key);
    if (!v) return def;
    try {
        std::size_t pos = 0;
        std::int64_t i = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
        return i;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + *v);
    }
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    std::vector<double> def) const {
    auto v = get(key);
    if (!v) return def;
    std::vector<double> out;
    for (const auto& tok : split_list(*v)) out.push_back(std::stod(tok));
    return out;
}

std::vector<std::int64_t> KeyValueConfig::get_int_list(
    const std::string& key, std::vector<std::int64_t> def) const {
    auto v = get(key);
    if (!v) return def;
    std::vector<std::int64_t> out;
    for (const auto& tok : split_list(*v)) out.push_back(std::stoll(tok));
    return out;
}

std::vector<std::string> KeyValueConfig::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
}

std::vector<std::string> KeyValueConfig::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!consumed_.count(k)) out.push_back(k);
    return out;
}

std::string KeyValueConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const std::string& canonical_text) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_text)));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string metrics_json_to_csv(const std::string& json_text) {
    auto j = nlohmann::ordered_json::parse(json_text);
    std::string csv = "metric,value,stderr,trials,censored,pass\n";
    for (const auto& m : j.at("metrics")) {
        csv += m.at("name").get<std::string>() + "," +
               fmt_g17(m.at("value").get<double>()) + "," +
               fmt_g17(m.at("stderr").get<double>()) + "," +
               std::to_string(m.at("trials").get<std::int64_t>()) + "," +
               std::to_string(m.at("censored").get<std::int64_t>()) + ",";
        if (!m.at("pass").is_null()) csv += m.at("pass").get<bool>() ? "1" : "0";
        csv += "\n";
    }
    return csv;
}

std::string metrics_csv_to_json(const std::string& csv_text) {
    nlohmann::ordered_json j;
    j["metrics"] = nlohmann::ordered_json::array();
    std::istringstream in(csv_text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        cells.push_back(cur);
        if (cells.size() < 6) throw std::invalid_argument("metrics csv: short row: " + line);
        nlohmann::ordered_json m;
        m["name"] = cells[0];
        m["value"] = std::stod(cells[1]);
        m["stderr"] = std::stod(cells[2]);
        m["trials"] = std::stoll(cells[3]);
        m["censored"] = std::stoll(cells[4]);
        if (cells[5].empty())
            m["pass"] = nullptr;
        else
            m["pass"] = cells[5] == "1";
        j["metrics"].push_back(m);
    }
    return j.dump(2) + "\n";
}

ResultFiles write_results(const std::string& out_root, const std::string& experiment,
                          const std::string& canonical_config,
                          const std::string& metrics_json, const std::string& summary_csv,
                          const std::vector<PlotSeries>& plots, bool force) {
    ResultFiles rf;
    fs::path dir = fs::path(out_root) / experiment / config_hash(canonical_config);
    rf.dir = dir.string();
    if (fs::exists(dir / "metrics.json") && !force) {
        rf.skipped = true;
        return rf;
    }
    fs::create_directories(dir / "plotdata");

    std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::string manifest = "version=" + std::string(kVersion) + "\n" +
                           "timestamp=" + stamp + "\n" + canonical_config;
    write_file((dir / "manifest").string(), manifest);
    write_file((dir / "metrics.json").string(), metrics_json);
    write_file((dir / "summary.csv").string(), summary_csv);
    for (const auto& p : plots) {
        std::string body;
        for (const auto& row : p.rows)
            body += fmt_g17(row[0]) + " " + fmt_g17(row[1]) + " " + fmt_g17(row[2]) + "\n";
        write_file((dir / "plotdata" / (p.name + ".dat")).string(), body);
    }
    return rf;
}

}  // namespace torwalk
