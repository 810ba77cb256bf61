#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace torwalk {

/// Flat key = value text, '#' comments. Lines that do not parse are reported
/// with their line number; key lookups mark keys as consumed so callers can
/// reject unknown ones.
class KeyValueConfig {
  public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_text(const std::string& text,
                                     const std::string& origin = "<config>");

    void set(const std::string& key, const std::string& value);  // override wins
    bool has(const std::string& key) const;

    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key, double def) const;
    std::int64_t get_int(const std::string& key, std::int64_t def) const;
    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> def) const;
    std::vector<std::int64_t> get_int_list(const std::string& key,
                                           std::vector<std::int64_t> def) const;

    /// Keys present but never looked up; non-empty means a typo somewhere.
    std::vector<std::string> unconsumed() const;

    std::vector<std::string> keys() const;

    /// Sorted "key=value" lines; the hash input and the manifest echo.
    std::string canonical_text() const;

  private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> consumed_;
};

std::string fmt_g17(double v);
std::uint64_t fnv1a(const std::string& s);
std::string config_hash(const std::string& canonical_text);

struct PlotSeries {
    std::string name;
    std::vector<std::array<double, 3>> rows;  // x, y, stderr
};

struct ResultFiles {
    std::string dir;          // <out>/<experiment>/<hash>
    bool skipped = false;     // already present and not forced
};

/// Directory layout <out>/<experiment>/<config-hash>/{manifest,metrics.json,
/// summary.csv,plotdata/}. Re-runs with the same config are skipped unless
/// forced. The manifest carries the timestamp; payload files never do.
ResultFiles write_results(const std::string& out_root, const std::string& experiment,
                          const std::string& canonical_config,
                          const std::string& metrics_json, const std::string& summary_csv,
                          const std::vector<PlotSeries>& plots, bool force);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// metrics.json <-> summary.csv conversion; numeric content carries through
/// at 17 significant digits in both directions.
std::string metrics_json_to_csv(const std::string& json_text);
std::string metrics_csv_to_json(const std::string& csv_text);

}  // namespace torwalk
