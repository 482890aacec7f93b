#include "vsal/nn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "vsal/error.hpp"

namespace vsal::nn {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ParseError("invalid value '" + std::string(value) + "' for " + std::string(key));
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

long long to_int(std::string_view key, std::string_view v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* kind_name(InitialKind k) {
  switch (k) {
    case InitialKind::Circular: return "circular";
    case InitialKind::Spiral: return "spiral";
    case InitialKind::Shell: return "shell";
    case InitialKind::Uniform: return "uniform";
  }
  return "circular";
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VSAL_REAL(name, expr)                                                        \
  Field {                                                                            \
    name, [](RunConfig& c, std::string_view v) { c.expr = to_double(name, v); },     \
        [](const RunConfig& c) { return fmt(c.expr); }                               \
  }
#define VSAL_INT(name, expr)                                                                 \
  Field {                                                                                    \
    name, [](RunConfig& c, std::string_view v) { c.expr = static_cast<int>(to_int(name, v)); }, \
        [](const RunConfig& c) { return std::to_string(c.expr); }                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"task", [](RunConfig& c, std::string_view v) {
         try {
           c.task = parse_task(v);
         } catch (const std::invalid_argument&) {
           bad_value("task", v);
         }
       },
       [](const RunConfig& c) { return std::string(task_name(c.task)); }},
      VSAL_REAL("lr_gen", train.lr_gen),
      VSAL_REAL("lr_dis", train.lr_dis),
      VSAL_REAL("lr_cls", train.lr_cls),
      VSAL_REAL("lambda_c", train.lambda_c),
      VSAL_REAL("lambda_gp", train.lambda_gp),
      VSAL_INT("m", train.m),
      VSAL_INT("epochs", train.epochs),
      VSAL_INT("batch_size", train.batch_size),
      VSAL_INT("patience", train.patience),
      VSAL_INT("pretrain_steps", train.pretrain_steps),
      VSAL_INT("dis_steps", train.dis_steps),
      {"seed",
       [](RunConfig& c, std::string_view v) {
         const long long s = to_int("seed", v);
         if (s < 0) bad_value("seed", v);
         c.train.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      VSAL_INT("d_g", gen.d_g),
      VSAL_INT("d_z", gen.d_z),
      VSAL_INT("gen_layers", gen.encoder_layers),
      VSAL_INT("coord_hidden", gen.coord_hidden),
      VSAL_REAL("noise_std", gen.noise_std),
      VSAL_INT("d_s", dis.d_s),
      VSAL_INT("dis_layers", dis.encoder_layers),
      VSAL_INT("resolution", cls.resolution),
      {"channels",
       [](RunConfig& c, std::string_view v) {
         std::array<int, 3> ch{};
         std::size_t at = 0;
         for (int k = 0; k < 3; ++k) {
           const auto comma = v.find(',', at);
           if ((k < 2) != (comma != std::string_view::npos)) bad_value("channels", v);
           ch[k] = static_cast<int>(to_int("channels", trim(v.substr(at, comma - at))));
           at = comma + 1;
         }
         c.cls.channels = ch;
       },
       [](const RunConfig& c) {
         return std::to_string(c.cls.channels[0]) + "," + std::to_string(c.cls.channels[1]) + "," +
                std::to_string(c.cls.channels[2]);
       }},
      VSAL_REAL("r", render.r),
      VSAL_REAL("delta", render.delta),
      VSAL_REAL("beta", render.beta),
      VSAL_INT("edge_samples", render.edge_samples),
      VSAL_INT("kernel_radius", render.kernel_radius),
      VSAL_REAL("smooth_sigma", render.smooth_sigma),
      {"init",
       [](RunConfig& c, std::string_view v) {
         try {
           c.reference.init.kind = parse_initial_kind(v);
         } catch (const std::invalid_argument&) {
           bad_value("init", v);
         }
       },
       [](const RunConfig& c) { return std::string(kind_name(c.reference.init.kind)); }},
      VSAL_INT("spring_iterations", reference.spring.iterations),
      VSAL_INT("kk_iterations", reference.kk.max_iterations),
  };
  return table;
}

#undef VSAL_REAL
#undef VSAL_INT

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      render.h = render.w = cls.resolution;
      return;
    }
  }
  throw ParseError("unknown config key '" + std::string(key) + "'");
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  train.validate();
  RenderParams r = render;
  r.h = r.w = cls.resolution;
  r.validate();
  reference.init.validate();
  reference.spring.validate();
  reference.kk.validate();
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  base.render.h = base.render.w = base.cls.resolution;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected key = value at line " + std::to_string(line_no));
    }
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    try {
      base.set(key, value);
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " at line " + std::to_string(line_no));
    }
  }
  return base;
}

RunConfig read_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace vsal::nn
