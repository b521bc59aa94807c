#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pixswap/errors.hpp"
#include "pixswap/parsing.hpp"
#include "pixswap/trainer.hpp"

namespace pixswap {

// Flat `key = value` run configuration. Unknown keys are usage errors.

namespace config_detail {

inline std::string key_error(std::string_view key, std::string_view value, std::string_view expected) {
  return "invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
         std::string(expected) + ")";
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError(key_error(key, v, "true/false"));
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view v) {
  const auto out = text::parse_int<Int>(v);
  if (!out) throw UsageError(key_error(key, v, "an integer"));
  return *out;
}

inline double parse_real(std::string_view key, std::string_view v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) throw UsageError(key_error(key, v, "a number"));
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view v, Parse parse) {
  std::vector<T> out;
  for (auto part : text::split(v, ',')) out.push_back(parse(text::trim(part)));
  return out;
}

inline std::string fmt_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <typename T, typename Fmt>
std::string fmt_list(const std::vector<T>& xs, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define PIXSWAP_BOOL_KEY(NAME, FIELD)                                                     \
  Key {                                                                                   \
    NAME, [](RunConfig& c, std::string_view v) { c.FIELD = parse_bool(NAME, v); },        \
        [](const RunConfig& c) { return fmt_bool(c.FIELD); }                              \
  }
#define PIXSWAP_INT_KEY(NAME, FIELD, TYPE)                                                 \
  Key {                                                                                   \
    NAME, [](RunConfig& c, std::string_view v) { c.FIELD = parse_integer<TYPE>(NAME, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                        \
  }
#define PIXSWAP_REAL_KEY(NAME, FIELD)                                                     \
  Key {                                                                                   \
    NAME, [](RunConfig& c, std::string_view v) { c.FIELD = parse_real(NAME, v); },        \
        [](const RunConfig& c) { return fmt_real(c.FIELD); }                              \
  }

inline const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      PIXSWAP_INT_KEY("seed", seed, std::uint64_t),
      PIXSWAP_INT_KEY("steps", steps, long),
      PIXSWAP_INT_KEY("eval_every", eval_every, long),
      PIXSWAP_INT_KEY("checkpoint_every", checkpoint_every, long),
      PIXSWAP_BOOL_KEY("ablation.pixel_sampling", ablation.use_pixel_sampling),
      PIXSWAP_BOOL_KEY("ablation.mse", ablation.use_mse),
      PIXSWAP_BOOL_KEY("ablation.random_erasing", ablation.use_random_erasing),
      PIXSWAP_INT_KEY("pk.identities", pk.identities, int),
      PIXSWAP_INT_KEY("pk.instances", pk.instances, int),
      PIXSWAP_INT_KEY("geo.height", geo.target_height, int),
      PIXSWAP_INT_KEY("geo.width", geo.target_width, int),
      PIXSWAP_INT_KEY("geo.padding", geo.padding, int),
      PIXSWAP_REAL_KEY("geo.flip_probability", geo.flip_probability),
      PIXSWAP_REAL_KEY("erasing.probability", erasing.probability),
      PIXSWAP_REAL_KEY("erasing.area_min", erasing.area_min),
      PIXSWAP_REAL_KEY("erasing.area_max", erasing.area_max),
      PIXSWAP_REAL_KEY("erasing.aspect_min", erasing.aspect_min),
      PIXSWAP_REAL_KEY("erasing.aspect_max", erasing.aspect_max),
      Key{"erasing.fill",
          [](RunConfig& c, std::string_view v) {
            if (v == "constant") c.erasing.fill = EraseFill::kConstant;
            else if (v == "random") c.erasing.fill = EraseFill::kRandom;
            else throw UsageError(key_error("erasing.fill", v, "constant|random"));
          },
          [](const RunConfig& c) { return std::string(c.erasing.fill == EraseFill::kConstant ? "constant" : "random"); }},
      Key{"erasing.fill_value",
          [](RunConfig& c, std::string_view v) { c.erasing.fill_value = static_cast<float>(parse_real("erasing.fill_value", v)); },
          [](const RunConfig& c) { return fmt_real(c.erasing.fill_value); }},
      PIXSWAP_BOOL_KEY("sampling.swap_upper", sampling.swap_upper),
      PIXSWAP_BOOL_KEY("sampling.swap_pants", sampling.swap_pants),
      PIXSWAP_BOOL_KEY("sampling.independent_permutations", sampling.independent_permutations),
      Key{"sampling.bank_order",
          [](RunConfig& c, std::string_view v) {
            if (v == "raster") c.sampling.bank_order = BankOrder::kRaster;
            else if (v == "shuffled") c.sampling.bank_order = BankOrder::kShuffled;
            else throw UsageError(key_error("sampling.bank_order", v, "raster|shuffled"));
          },
          [](const RunConfig& c) { return std::string(c.sampling.bank_order == BankOrder::kRaster ? "raster" : "shuffled"); }},
      PIXSWAP_REAL_KEY("loss.margin", loss.margin),
      Key{"loss.mse_mode",
          [](RunConfig& c, std::string_view v) {
            if (v == "l2_norm") c.loss.mse_mode = MseMode::kL2Norm;
            else if (v == "squared_l2") c.loss.mse_mode = MseMode::kSquaredL2;
            else throw UsageError(key_error("loss.mse_mode", v, "l2_norm|squared_l2"));
          },
          [](const RunConfig& c) { return std::string(c.loss.mse_mode == MseMode::kL2Norm ? "l2_norm" : "squared_l2"); }},
      PIXSWAP_INT_KEY("model.embedding_dim", embedding_dim, int),
      PIXSWAP_REAL_KEY("model.embed_init_scale", embed_init_scale),
      PIXSWAP_REAL_KEY("model.classifier_init_scale", classifier_init_scale),
      Key{"model.widths",
          [](RunConfig& c, std::string_view v) {
            c.widths = parse_list<int>(v, [](std::string_view p) { return parse_integer<int>("model.widths", p); });
          },
          [](const RunConfig& c) { return fmt_list(c.widths, [](int w) { return std::to_string(w); }); }},
      PIXSWAP_REAL_KEY("optim.lr", optim.learning_rate),
      PIXSWAP_REAL_KEY("optim.momentum", optim.momentum),
      PIXSWAP_REAL_KEY("optim.weight_decay", optim.weight_decay),
      PIXSWAP_REAL_KEY("optim.gamma", optim.gamma),
      Key{"optim.milestones",
          [](RunConfig& c, std::string_view v) {
            c.optim.milestones =
                v.empty() ? std::vector<double>{}
                          : parse_list<double>(v, [](std::string_view p) { return parse_real("optim.milestones", p); });
          },
          [](const RunConfig& c) { return fmt_list(c.optim.milestones, fmt_real); }},
  };
  return table;
}

#undef PIXSWAP_BOOL_KEY
#undef PIXSWAP_INT_KEY
#undef PIXSWAP_REAL_KEY

}  // namespace config_detail

inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  key = text::trim(key);
  value = text::trim(value);
  for (const auto& k : config_detail::keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + std::string(key) + "'");
}

/// Applies a `key=value` override string.
inline void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw UsageError("override '" + std::string(assignment) + "' is not key=value");
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

inline void apply_config_stream(RunConfig& cfg, std::istream& in, const std::string& origin) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = text::trim(body);
    if (body.empty()) continue;
    try {
      apply_override(cfg, body);
    } catch (const UsageError& e) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  apply_config_stream(cfg, in, path.string());
}

/// Canonical text form: every key, fixed order. Parsing it reproduces `cfg`.
inline std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& k : config_detail::keys()) os << k.name << " = " << k.get(cfg) << '\n';
  return os.str();
}

}  // namespace pixswap
