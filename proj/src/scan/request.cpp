#include "graybox/scan/request.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace graybox::scan {

namespace {

std::vector<Param> split_params(std::string_view text, char separator) {
  std::vector<Param> out;
  if (text.empty()) return out;
  std::size_t pos = 0;
  for (;;) {
    const auto end = text.find(separator, pos);
    const auto segment = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    Param p;
    const auto eq = segment.find('=');
    p.has_equals = eq != std::string_view::npos;
    p.raw_name = std::string(segment.substr(0, eq));
    if (p.has_equals) p.raw_value = std::string(segment.substr(eq + 1));
    out.push_back(std::move(p));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::string join_params(const std::vector<Param>& params, char separator) {
  std::string out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i > 0) out.push_back(separator);
    out += params[i].raw_name;
    if (params[i].has_equals) out += "=" + params[i].raw_value;
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

Param* find_param(std::vector<Param>& params, const std::string& name) {
  for (auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

}  // namespace

std::string percent_encode(BytesView in) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (const char c : in) {
    const auto u = static_cast<unsigned char>(c);
    if (is_ascii_alnum(u) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(c);
    } else {
      out.push_back('%');
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xF]);
    }
  }
  return out;
}

std::string form_decode(std::string_view in) {
  std::string out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '+') {
      out.push_back(' ');
    } else if (in[i] == '%' && i + 2 < in.size() && is_hex_digit(static_cast<unsigned char>(in[i + 1])) &&
               is_hex_digit(static_cast<unsigned char>(in[i + 2]))) {
      out.push_back(static_cast<char>(hex_value(static_cast<unsigned char>(in[i + 1])) * 16 +
                                      hex_value(static_cast<unsigned char>(in[i + 2]))));
      i += 2;
    } else {
      out.push_back(in[i]);
    }
  }
  return out;
}

std::string RequestTemplate::target() const {
  std::string out = path;
  if (has_query) out += "?" + join_params(query, '&');
  return out;
}

std::optional<std::string> RequestTemplate::cookie_header() const {
  if (!has_cookie_header) return std::nullopt;
  return join_params(cookies, ';');
}

Bytes RequestTemplate::serialized_body() const { return form_body ? join_params(form, '&') : body; }

std::optional<std::string> RequestTemplate::header(std::string_view name) const {
  if (iequals_ascii(name, "cookie")) return cookie_header();
  for (const auto& [k, v] : headers) {
    if (iequals_ascii(k, name)) return v;
  }
  return std::nullopt;
}

RequestTemplate make_template(std::string id, std::string method, std::string_view url,
                              std::vector<std::pair<std::string, std::string>> headers, Bytes body) {
  RequestTemplate t;
  t.id = std::move(id);
  t.method = method.empty() ? "GET" : std::move(method);

  if (const auto frag = url.find('#'); frag != std::string_view::npos) url = url.substr(0, frag);
  if (const auto scheme = url.find("://"); scheme != std::string_view::npos) {
    const auto slash = url.find_first_of("/?", scheme + 3);
    t.origin = std::string(url.substr(0, slash));
    url = slash == std::string_view::npos ? std::string_view("/") : url.substr(slash);
  }
  if (url.empty()) url = "/";
  if (url.front() != '/' && url.front() != '?') throw std::invalid_argument("unsupported URL: " + std::string(url));
  const auto q = url.find('?');
  t.path = std::string(url.substr(0, q));
  if (t.path.empty()) t.path = "/";
  if (q != std::string_view::npos) {
    t.has_query = true;
    t.query = split_params(url.substr(q + 1), '&');
    for (auto& p : t.query) p.name = form_decode(p.raw_name);
  }

  for (auto& [name, value] : headers) {
    if (iequals_ascii(name, "cookie")) {
      t.has_cookie_header = true;
      t.cookies = split_params(value, ';');
      for (auto& p : t.cookies) p.name = trim(p.raw_name);
    } else {
      t.headers.emplace_back(std::move(name), std::move(value));
    }
  }
  const auto content_type = t.header("content-type");
  if (content_type && to_lower_ascii(*content_type).rfind("application/x-www-form-urlencoded", 0) == 0) {
    t.form_body = true;
    t.form = split_params(body, '&');
    for (auto& p : t.form) p.name = form_decode(p.raw_name);
  } else {
    t.body = std::move(body);
  }
  return t;
}

std::string_view to_string(PointKind kind) {
  switch (kind) {
    case PointKind::QueryParam: return "query";
    case PointKind::BodyParam: return "body";
    case PointKind::Cookie: return "cookie";
    case PointKind::Header: return "header";
    case PointKind::DbFetchGroup: return "db";
  }
  return "?";
}

RequestTemplate mutate_http(const RequestTemplate& t, const InjectionPoint& point, const payload::Payload& p) {
  RequestTemplate out = t;
  auto replace = [&](std::vector<Param>& params, std::string value) {
    auto* param = find_param(params, point.locator);
    if (!param) throw LocatorNotFound(std::string(to_string(point.kind)) + " field not found: " + point.locator);
    param->raw_value = std::move(value);
    param->has_equals = true;
  };
  switch (point.kind) {
    case PointKind::QueryParam:
      replace(out.query, percent_encode(p.text));
      break;
    case PointKind::BodyParam:
      replace(out.form, percent_encode(p.text));
      break;
    case PointKind::Cookie:
      replace(out.cookies, p.text);
      break;
    case PointKind::Header: {
      bool found = false;
      for (auto& [k, v] : out.headers) {
        if (iequals_ascii(k, point.locator)) {
          v = p.text;
          found = true;
          break;
        }
      }
      if (!found) throw LocatorNotFound("header not found: " + point.locator);
      break;
    }
    case PointKind::DbFetchGroup:
      throw std::invalid_argument("database fetch groups are not HTTP fields");
  }
  return out;
}

std::vector<InjectionPoint> http_points(const RequestTemplate& t, const std::vector<std::string>& header_names) {
  std::vector<InjectionPoint> out;
  auto add_unique = [&](PointKind kind, const std::string& name) {
    InjectionPoint point{kind, name};
    if (std::find(out.begin(), out.end(), point) == out.end()) out.push_back(std::move(point));
  };
  for (const auto& p : t.query) {
    if (!p.name.empty()) add_unique(PointKind::QueryParam, p.name);
  }
  for (const auto& p : t.form) {
    if (!p.name.empty()) add_unique(PointKind::BodyParam, p.name);
  }
  for (const auto& p : t.cookies) {
    if (!p.name.empty()) add_unique(PointKind::Cookie, p.name);
  }
  for (const auto& [k, v] : t.headers) {
    for (const auto& wanted : header_names) {
      if (iequals_ascii(k, wanted)) add_unique(PointKind::Header, k);
    }
  }
  return out;
}

RequestTemplate template_from_json(const nlohmann::json& record, const std::string& fallback_id) {
  if (!record.is_object() || !record.contains("url")) throw CorpusError("request record needs a \"url\"");
  std::vector<std::pair<std::string, std::string>> headers;
  if (const auto it = record.find("headers"); it != record.end()) {
    if (it->is_array()) {
      for (const auto& h : *it) {
        if (h.is_array() && h.size() == 2) {
          headers.emplace_back(h[0].get<std::string>(), h[1].get<std::string>());
        } else if (h.is_object()) {
          headers.emplace_back(h.at("name").get<std::string>(), h.at("value").get<std::string>());
        } else {
          throw CorpusError("malformed header entry");
        }
      }
    } else if (it->is_object()) {
      for (const auto& [k, v] : it->items()) headers.emplace_back(k, v.get<std::string>());
    }
  }
  Bytes body;
  if (auto b = get_bytes(record, "body")) body = std::move(*b);
  try {
    return make_template(record.value("id", fallback_id), record.value("method", std::string("GET")),
                         record.at("url").get<std::string>(), std::move(headers), std::move(body));
  } catch (const std::invalid_argument& e) {
    throw CorpusError(e.what());
  }
}

std::vector<RequestTemplate> parse_corpus_jsonl(std::string_view text) {
  std::vector<RequestTemplate> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    try {
      out.push_back(template_from_json(nlohmann::json::parse(line), "req-" + std::to_string(out.size() + 1)));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const CorpusError& e) {
      throw CorpusError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RequestTemplate> parse_har(std::string_view text) {
  std::vector<RequestTemplate> out;
  try {
    const auto har = nlohmann::json::parse(text);
    std::size_t index = 0;
    for (const auto& entry : har.at("log").at("entries")) {
      ++index;
      const auto& req = entry.at("request");
      nlohmann::json record;
      record["id"] = "har-" + std::to_string(index);
      record["method"] = req.value("method", "GET");
      record["url"] = req.at("url");
      nlohmann::json headers = nlohmann::json::array();
      for (const auto& h : req.value("headers", nlohmann::json::array())) {
        const auto name = h.at("name").get<std::string>();
        if (name.empty() || name.front() == ':') continue;
        if (iequals_ascii(name, "content-length") || iequals_ascii(name, "host")) continue;
        headers.push_back({name, h.at("value").get<std::string>()});
      }
      if (const auto post = req.find("postData"); post != req.end()) {
        record["body"] = post->value("text", "");
        bool has_content_type = false;
        for (const auto& h : headers) has_content_type |= iequals_ascii(h[0].get<std::string>(), "content-type");
        if (!has_content_type && post->contains("mimeType")) headers.push_back({"Content-Type", post->at("mimeType")});
      }
      record["headers"] = headers;
      out.push_back(template_from_json(record, record["id"]));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(std::string("HAR import: ") + e.what());
  }
  return out;
}

std::vector<RequestTemplate> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read corpus " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto text = ss.str();
  if (path.extension() == ".har") return parse_har(text);
  const auto whole = nlohmann::json::parse(text, nullptr, false);
  if (whole.is_object() && whole.contains("log")) return parse_har(text);
  return parse_corpus_jsonl(text);
}

}  // namespace graybox::scan
