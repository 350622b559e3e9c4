#pragma once

// Request templates: corpus records decomposed into injectable fields that
// re-serialize byte-for-byte when left untouched.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graybox/bytes.hpp"
#include "graybox/payload/payload.hpp"

namespace graybox::scan {

/// One `name=value` item of a query string, form body or Cookie header,
/// kept as its raw text. `name` is decoded for lookup.
struct Param {
  std::string name;
  std::string raw_name;
  std::string raw_value;
  bool has_equals = false;
};

struct RequestTemplate {
  std::string id;
  std::string method = "GET";
  /// scheme://authority of the recorded URL; empty for relative URLs.
  std::string origin;
  std::string path = "/";
  bool has_query = false;
  std::vector<Param> query;
  /// Header order is preserved; the Cookie header is held in `cookies`.
  std::vector<std::pair<std::string, std::string>> headers;
  bool has_cookie_header = false;
  std::vector<Param> cookies;
  bool form_body = false;
  std::vector<Param> form;
  Bytes body;

  /// path[?query]
  std::string target() const;
  std::string url() const { return origin + target(); }
  std::optional<std::string> cookie_header() const;
  Bytes serialized_body() const;
  std::optional<std::string> header(std::string_view name) const;
};

/// Builds a template from a raw request. Throws std::invalid_argument for
/// an unusable URL.
RequestTemplate make_template(std::string id, std::string method, std::string_view url,
                              std::vector<std::pair<std::string, std::string>> headers, Bytes body);

enum class PointKind { QueryParam, BodyParam, Cookie, Header, DbFetchGroup };
std::string_view to_string(PointKind kind);

struct InjectionPoint {
  PointKind kind = PointKind::QueryParam;
  std::string locator;

  bool operator==(const InjectionPoint&) const = default;
};

class LocatorNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replaces the addressed field's value with the payload text. Query and
/// form values are percent-encoded so the application receives the raw
/// payload; cookie and header values are replaced verbatim.
RequestTemplate mutate_http(const RequestTemplate& t, const InjectionPoint& point, const payload::Payload& p);

/// HTTP injection points of a template, in field order. Headers are only
/// considered when named in `header_names` (case-insensitive).
std::vector<InjectionPoint> http_points(const RequestTemplate& t, const std::vector<std::string>& header_names);

/// Percent-encodes everything except unreserved characters.
std::string percent_encode(BytesView in);
/// application/x-www-form-urlencoded decoding ('+' is a space).
std::string form_decode(std::string_view in);

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One JSON object per line:
///   {"id":..,"method":..,"url":..,"headers":[[name,value],..] | {name:value},
///    "body":.. | "body_b64":..}
/// Blank lines and lines starting with '#' are skipped.
std::vector<RequestTemplate> parse_corpus_jsonl(std::string_view text);
RequestTemplate template_from_json(const nlohmann::json& record, const std::string& fallback_id);
/// HTTP archive (HAR 1.2) import: log.entries[].request.
std::vector<RequestTemplate> parse_har(std::string_view text);
/// Chooses the format by extension (.har) or content.
std::vector<RequestTemplate> load_corpus(const std::filesystem::path& path);

}  // namespace graybox::scan
