#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scsnet {

enum class ValueType { integer, real, boolean, text, integer_list, real_list, boolean_list, text_list };

struct KeySpec {
    std::string key;
    ValueType type;
    std::string default_value;  // "@seed" resolves to the top-level seed
};

/// Every key the config file accepts. Anything else is rejected.
const std::vector<KeySpec>& key_specs();

/// Flat key=value run configuration with dotted sections.
///
/// Values are type-checked when set. `snapshot()` lists every key with its
/// resolved value, so feeding it back as --config reproduces the run.
class RunConfig {
  public:
    RunConfig();

    /// `key = value` lines; '#' starts a comment. Duplicate keys are errors.
    void load_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    /// "key=value"
    void apply_override(const std::string& assignment);

    std::uint64_t integer(const std::string& key) const;
    double real(const std::string& key) const;
    bool boolean(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::vector<std::uint64_t> integer_list(const std::string& key) const;
    std::vector<double> real_list(const std::string& key) const;
    std::vector<bool> boolean_list(const std::string& key) const;
    std::vector<std::string> text_list(const std::string& key) const;

    /// Raw value with "@seed" substituted.
    std::string raw(const std::string& key) const;

    std::string snapshot() const;

  private:
    const KeySpec& spec(const std::string& key) const;
    std::map<std::string, std::string> values_;
};

/// Shortest round-trip decimal form.
std::string format_real(double v);

}  // namespace scsnet
