#include "hwanno/canonical_json.hpp"

#include <cmath>
#include <cstdio>

#include "hwanno/error.hpp"

namespace hwanno {

namespace {

void write(const nlohmann::json& v, std::string& out) {
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (const auto& [key, item] : v.items()) {  // std::map keeps keys sorted
        if (!first) out.push_back(',');
        first = false;
        out += nlohmann::json(key).dump();
        out.push_back(':');
        write(item, out);
      }
      out.push_back('}');
      break;
    }
    case nlohmann::json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(',');
        write(v[i], out);
      }
      out.push_back(']');
      break;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw Error(ErrorCode::InvalidArgument, "non-finite number in document");
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", d);
      std::string s = buf;
      if (s == "-0.000000") s = "0.000000";
      out += s;
      break;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string canonical_dump(const nlohmann::json& value) {
  std::string out;
  write(value, out);
  return out;
}

}  // namespace hwanno
