#include "tsig_cli/json_writer.hpp"

#include <cmath>
#include <cstdio>

namespace tsig::cli {

namespace {

void write_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no negative zero
  out += buf;
}

void write_string(std::string& out, const std::string& s) { out += nlohmann::json(s).dump(); }

void write(std::string& out, const nlohmann::json& v, int indent, int depth) {
  const bool pretty = indent > 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      // nlohmann's default object is a std::map, so iteration is key-sorted.
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        write_string(out, it.key());
        out += pretty ? ": " : ":";
        write(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        write(out, e, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case nlohmann::json::value_t::number_float: write_number(out, v.get<double>()); return;
    default: out += v.dump(); return;
  }
}

}  // namespace

std::string write_json(const nlohmann::json& value) {
  std::string out;
  write(out, value, 2, 0);
  out += '\n';
  return out;
}

std::string write_json_compact(const nlohmann::json& value) {
  std::string out;
  write(out, value, 0, 0);
  return out;
}

}  // namespace tsig::cli
