#include "trajscene/osm.hpp"

#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "trajscene/error.hpp"

namespace trajscene::osm {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T attr(const pt::ptree& elem, const char* name, const char* element) {
  const auto v = elem.get_optional<T>(pt::ptree::path_type(std::string("<xmlattr>/") + name, '/'));
  if (!v) {
    throw ParseError(fmt::format("<{}> is missing or has an invalid '{}' attribute", element, name), 0);
  }
  return *v;
}

Tags read_tags(const pt::ptree& elem) {
  Tags tags;
  for (const auto& [name, child] : elem) {
    if (name != "tag") continue;
    tags[attr<std::string>(child, "k", "tag")] = attr<std::string>(child, "v", "tag");
  }
  return tags;
}

void write_tags(std::ostringstream& out, const Tags& tags) {
  for (const auto& [k, v] : tags) {
    out << "    <tag k=\"" << pt::xml_parser::encode_char_entities(k) << "\" v=\""
        << pt::xml_parser::encode_char_entities(v) << "\"/>\n";
  }
}

}  // namespace

Extract parse_osm_xml(std::string_view xml_bytes) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_bytes)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed OSM XML: " + e.message(), e.line());
  }
  const auto root = tree.get_child_optional("osm");
  if (!root) throw ParseError("OSM XML has no <osm> root element", 0);

  Extract ex;
  for (const auto& [name, elem] : *root) {
    if (name == "node") {
      Node n;
      n.lat = attr<double>(elem, "lat", "node");
      n.lon = attr<double>(elem, "lon", "node");
      n.tags = read_tags(elem);
      ex.nodes[attr<std::int64_t>(elem, "id", "node")] = std::move(n);
    } else if (name == "way") {
      Way w;
      for (const auto& [child_name, child] : elem) {
        if (child_name == "nd") w.node_ids.push_back(attr<std::int64_t>(child, "ref", "nd"));
      }
      w.tags = read_tags(elem);
      ex.ways[attr<std::int64_t>(elem, "id", "way")] = std::move(w);
    } else if (name == "relation") {
      Relation r;
      for (const auto& [child_name, child] : elem) {
        if (child_name != "member") continue;
        Member m;
        m.type = attr<std::string>(child, "type", "member");
        m.ref = attr<std::int64_t>(child, "ref", "member");
        m.role = child.get<std::string>("<xmlattr>.role", "");
        r.members.push_back(std::move(m));
      }
      r.tags = read_tags(elem);
      ex.relations[attr<std::int64_t>(elem, "id", "relation")] = std::move(r);
    }
  }
  for (const auto& [id, way] : ex.ways) {
    for (auto ref : way.node_ids) {
      if (!ex.nodes.count(ref)) {
        throw IntegrityError(fmt::format("way {} references missing node {}", id, ref));
      }
    }
  }
  return ex;
}

std::string write_osm_xml(const Extract& ex) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"trajscene\">\n";
  for (const auto& [id, n] : ex.nodes) {
    out << fmt::format("  <node id=\"{}\" lat=\"{:.7f}\" lon=\"{:.7f}\"", id, n.lat, n.lon);
    if (n.tags.empty()) {
      out << "/>\n";
    } else {
      out << ">\n";
      write_tags(out, n.tags);
      out << "  </node>\n";
    }
  }
  for (const auto& [id, w] : ex.ways) {
    out << "  <way id=\"" << id << "\">\n";
    for (auto ref : w.node_ids) out << "    <nd ref=\"" << ref << "\"/>\n";
    write_tags(out, w.tags);
    out << "  </way>\n";
  }
  for (const auto& [id, r] : ex.relations) {
    out << "  <relation id=\"" << id << "\">\n";
    for (const auto& m : r.members) {
      out << "    <member type=\"" << m.type << "\" ref=\"" << m.ref << "\" role=\""
          << pt::xml_parser::encode_char_entities(m.role) << "\"/>\n";
    }
    write_tags(out, r.tags);
    out << "  </relation>\n";
  }
  out << "</osm>\n";
  return out.str();
}

}  // namespace trajscene::osm
