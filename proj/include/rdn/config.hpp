#pragma once

// Flat typed key-value configuration:
//
//   # comment
//   model.blocks = 16
//   train.lr = 0.0001
//
// Every key has a default except the dataset paths. Unknown keys and bad values are
// collected and reported together.

#include <charconv>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rdn/degradation.hpp"
#include "rdn/error.hpp"
#include "rdn/model.hpp"
#include "rdn/train_config.hpp"

namespace rdn {

/// Shortest text that parses back to exactly v.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw std::invalid_argument(key + ": cannot parse '" + text + "' as a number");
    }
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
    if (text == "0" || text == "false" || text == "off" || text == "no") return false;
    throw std::invalid_argument(key + ": expected a boolean, got '" + text + "'");
}

}  // namespace detail

struct PathsConfig {
    std::string train_hr;
    std::string train_lr;
    std::string val_hr;
    std::string val_lr;
    std::string run_dir;
};

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    PathsConfig paths;

    struct Field {
        const char* key;
        std::function<std::string(const RunConfig&)> get;
        std::function<void(RunConfig&, const std::string&)> set;
    };

    static const std::vector<Field>& fields() {
        using detail::parse_bool;
        using detail::parse_number;
        auto int_field = [](const char* key, auto member) {
            return Field{key, [member](const RunConfig& c) { return std::to_string(member(c)); },
                         [key, member](RunConfig& c, const std::string& v) { member(c) = parse_number<int>(key, v); }};
        };
        auto bool_field = [](const char* key, auto member) {
            return Field{key, [member](const RunConfig& c) { return std::string(member(c) ? "true" : "false"); },
                         [key, member](RunConfig& c, const std::string& v) { member(c) = parse_bool(key, v); }};
        };
        auto double_field = [](const char* key, auto member) {
            return Field{key, [member](const RunConfig& c) { return format_double(member(c)); },
                         [key, member](RunConfig& c, const std::string& v) { member(c) = parse_number<double>(key, v); }};
        };
        auto u64_field = [](const char* key, auto member) {
            return Field{key, [member](const RunConfig& c) { return std::to_string(member(c)); },
                         [key, member](RunConfig& c, const std::string& v) {
                             member(c) = parse_number<std::uint64_t>(key, v);
                         }};
        };
        auto string_field = [](const char* key, auto member) {
            return Field{key, [member](const RunConfig& c) { return member(c); },
                         [member](RunConfig& c, const std::string& v) { member(c) = v; }};
        };
        static const std::vector<Field> table = {
            int_field("model.blocks", [](auto& c) -> auto& { return c.model.blocks; }),
            int_field("model.layers", [](auto& c) -> auto& { return c.model.layers; }),
            int_field("model.growth", [](auto& c) -> auto& { return c.model.growth; }),
            int_field("model.base", [](auto& c) -> auto& { return c.model.base; }),
            int_field("model.scale", [](auto& c) -> auto& { return c.model.scale; }),
            bool_field("model.cm", [](auto& c) -> auto& { return c.model.cm; }),
            bool_field("model.lrl", [](auto& c) -> auto& { return c.model.lrl; }),
            bool_field("model.gff", [](auto& c) -> auto& { return c.model.gff; }),
            int_field("model.channels", [](auto& c) -> auto& { return c.model.channels; }),
            int_field("train.batch", [](auto& c) -> auto& { return c.train.batch; }),
            int_field("train.patch", [](auto& c) -> auto& { return c.train.patch; }),
            double_field("train.lr", [](auto& c) -> auto& { return c.train.lr; }),
            int_field("train.halve_every", [](auto& c) -> auto& { return c.train.halve_every; }),
            int_field("train.iters_per_epoch", [](auto& c) -> auto& { return c.train.iters_per_epoch; }),
            int_field("train.epochs", [](auto& c) -> auto& { return c.train.epochs; }),
            u64_field("train.seed", [](auto& c) -> auto& { return c.train.seed; }),
            int_field("train.val_images", [](auto& c) -> auto& { return c.train.val_images; }),
            int_field("train.log_every", [](auto& c) -> auto& { return c.train.log_every; }),
            bool_field("train.augment", [](auto& c) -> auto& { return c.train.augment; }),
            Field{"degrade.kind", [](const RunConfig& c) { return to_string(c.train.degradation.kind); },
                  [](RunConfig& c, const std::string& v) {
                      if (v != "BI" && v != "BD" && v != "DN" && v != "bi" && v != "bd" && v != "dn") {
                          throw std::invalid_argument("degrade.kind: expected BI, BD or DN, got '" + v + "'");
                      }
                      c.train.degradation.kind = parse_degradation_kind(v);
                  }},
            int_field("degrade.scale", [](auto& c) -> auto& { return c.train.degradation.scale; }),
            double_field("degrade.blur_sigma", [](auto& c) -> auto& { return c.train.degradation.blur_sigma; }),
            double_field("degrade.noise_sigma", [](auto& c) -> auto& { return c.train.degradation.noise_sigma; }),
            u64_field("degrade.seed", [](auto& c) -> auto& { return c.train.degradation.seed; }),
            string_field("paths.train_hr", [](auto& c) -> auto& { return c.paths.train_hr; }),
            string_field("paths.train_lr", [](auto& c) -> auto& { return c.paths.train_lr; }),
            string_field("paths.val_hr", [](auto& c) -> auto& { return c.paths.val_hr; }),
            string_field("paths.val_lr", [](auto& c) -> auto& { return c.paths.val_lr; }),
            string_field("paths.run_dir", [](auto& c) -> auto& { return c.paths.run_dir; }),
        };
        return table;
    }

    /// Sets one key. Returns an error message instead of throwing.
    std::string try_set(const std::string& key, const std::string& value) {
        for (const auto& f : fields()) {
            if (key != f.key) continue;
            try {
                f.set(*this, value);
                return {};
            } catch (const std::exception& e) {
                return e.what();
            }
        }
        return "unknown key '" + key + "'";
    }

    /// Applies `key = value` lines; collects line-level problems into errors.
    void apply_text(std::string_view text, std::vector<std::string>& errors) {
        std::size_t lineno = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++lineno;
            auto line = detail::trim(raw);
            if (line.empty() || line.front() == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
                continue;
            }
            const std::string key(detail::trim(line.substr(0, eq)));
            const std::string value(detail::trim(line.substr(eq + 1)));
            if (auto err = try_set(key, value); !err.empty()) errors.push_back("line " + std::to_string(lineno) + ": " + err);
        }
    }

    /// Applies `key=value` overrides, e.g. from the command line.
    void apply_overrides(const std::vector<std::string>& overrides, std::vector<std::string>& errors) {
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) {
                errors.push_back("override '" + o + "': expected key=value");
                continue;
            }
            if (auto err = try_set(std::string(detail::trim(std::string_view(o).substr(0, eq))),
                                   std::string(detail::trim(std::string_view(o).substr(eq + 1))));
                !err.empty()) {
                errors.push_back(err);
            }
        }
    }

    /// Semantic checks across sections.
    std::vector<std::string> problems() const {
        auto out = model.problems();
        for (auto& p : train.problems()) out.push_back(p);
        if (model.scale != train.degradation.scale) {
            out.push_back("model.scale (" + std::to_string(model.scale) + ") must equal degrade.scale (" +
                          std::to_string(train.degradation.scale) + ")");
        }
        return out;
    }

    /// Canonical text: every key in table order.
    std::string to_text() const {
        std::string out;
        for (const auto& f : fields()) {
            out += f.key;
            out += " = ";
            out += f.get(*this);
            out += "\n";
        }
        return out;
    }

    static RunConfig parse(std::string_view text, const std::vector<std::string>& overrides = {}) {
        RunConfig c;
        std::vector<std::string> errors;
        c.apply_text(text, errors);
        c.apply_overrides(overrides, errors);
        if (errors.empty()) errors = c.problems();
        if (!errors.empty()) throw ConfigError(std::move(errors));
        return c;
    }
};

}  // namespace rdn
