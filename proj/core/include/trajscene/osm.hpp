#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace trajscene::osm {

using Tags = std::map<std::string, std::string>;

struct Node {
  double lat = 0.0;
  double lon = 0.0;
  Tags tags;
};

struct Way {
  std::vector<std::int64_t> node_ids;
  Tags tags;
};

struct Member {
  std::string type;  // node | way | relation
  std::int64_t ref = 0;
  std::string role;
};

struct Relation {
  std::vector<Member> members;
  Tags tags;
};

/// Immutable after parsing; every way's node references resolve.
struct Extract {
  std::map<std::int64_t, Node> nodes;
  std::map<std::int64_t, Way> ways;
  std::map<std::int64_t, Relation> relations;
};

/// Parses an OSM XML document. Elements other than node, way and relation
/// are ignored. Throws ParseError on malformed XML and IntegrityError when a
/// way references a node missing from the document.
Extract parse_osm_xml(std::string_view xml_bytes);

/// Serializes an extract back to OSM XML (ids in ascending order).
std::string write_osm_xml(const Extract& extract);

}  // namespace trajscene::osm
