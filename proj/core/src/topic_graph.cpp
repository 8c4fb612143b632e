#include "newsflow/topic_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "newsflow/error.hpp"
#include "newsflow/parallel.hpp"
#include "newsflow/tabular.hpp"

namespace newsflow {

namespace pt = boost::property_tree;

namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kCompanySize = 0.5;

// Contribution of one coordinate: 0.5 * (p log2(2p/(p+q)) + q log2(2q/(p+q))).
double jsd_term(double p, double q) {
  const double m = p + q;
  double term = 0.0;
  if (p > 0.0) term += p * std::log2(2.0 * p / m);
  if (q > 0.0) term += q * std::log2(2.0 * q / m);
  return 0.5 * term;
}

void check_distribution(double sum, bool negative, const char* which) {
  if (negative) throw DataError(std::string("jsd: ") + which + " has a negative entry");
  if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
    throw DataError(std::string("jsd: ") + which + " does not sum to 1 (sum " +
                    format_double(sum) + ")");
  }
}

template <typename Span>
void check_dense(Span values, const char* which) {
  double sum = 0.0;
  bool negative = false;
  for (const double v : values) {
    negative = negative || !(v >= 0.0);
    sum += v;
  }
  check_distribution(sum, negative, which);
}

void check_sparse(const SparseDistribution& values, const char* which) {
  double sum = 0.0;
  bool negative = false;
  for (const auto& [token, v] : values) {
    negative = negative || !(v >= 0.0);
    sum += v;
  }
  check_distribution(sum, negative, which);
}

double finish(double value) { return std::clamp(value, 0.0, 1.0); }

std::string stock_topic_id(const std::string& stock, int topic) {
  return "topic:" + stock + ":" + std::to_string(topic);
}

const pt::ptree& child(const pt::ptree& tree, const char* path, const std::filesystem::path& file) {
  const auto found = tree.get_child_optional(path);
  if (!found) throw DataError(file.string() + ": missing element " + path);
  return *found;
}

std::string attr(const pt::ptree& node, const char* name, const std::filesystem::path& file) {
  const auto value = node.get_optional<std::string>(std::string("<xmlattr>.") + name);
  if (!value) throw DataError(file.string() + ": missing attribute " + name);
  return *value;
}

NodeKind parse_kind(const std::string& text, const std::filesystem::path& file) {
  if (text == "topic") return NodeKind::topic;
  if (text == "company") return NodeKind::company;
  throw DataError(file.string() + ": unknown node kind '" + text + "'");
}

pt::ptree read_xml_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return tree;
}

void write_xml_file(const pt::ptree& tree, const std::filesystem::path& path) {
  auto out = open_output(path);
  pt::write_xml(out, tree, pt::xml_writer_make_settings<std::string>(' ', 2));
  if (!out) throw Error("write failed: " + path.string());
}

pt::ptree attribute_decl(const std::string& id, const std::string& title, const std::string& type) {
  pt::ptree a;
  a.put("<xmlattr>.id", id);
  a.put("<xmlattr>.title", title);
  a.put("<xmlattr>.type", type);
  return a;
}

void write_gexf(const TopicGraph& graph, const std::filesystem::path& path) {
  pt::ptree root;
  auto& gexf = root.add_child("gexf", pt::ptree{});
  gexf.put("<xmlattr>.xmlns", "http://www.gexf.net/1.2draft");
  gexf.put("<xmlattr>.xmlns:viz", "http://www.gexf.net/1.2draft/viz");
  gexf.put("<xmlattr>.version", "1.2");
  gexf.put("meta.creator", "newsflow");
  auto& g = gexf.add_child("graph", pt::ptree{});
  g.put("<xmlattr>.mode", "static");
  g.put("<xmlattr>.defaultedgetype", "undirected");
  auto& attributes = g.add_child("attributes", pt::ptree{});
  attributes.put("<xmlattr>.class", "node");
  attributes.add_child("attribute", attribute_decl("size", "size", "float"));
  attributes.add_child("attribute", attribute_decl("kind", "kind", "string"));

  auto& nodes = g.add_child("nodes", pt::ptree{});
  for (const auto& n : graph.nodes) {
    pt::ptree node;
    node.put("<xmlattr>.id", n.id);
    node.put("<xmlattr>.label", n.label);
    auto& values = node.add_child("attvalues", pt::ptree{});
    pt::ptree size;
    size.put("<xmlattr>.for", "size");
    size.put("<xmlattr>.value", format_double(n.size));
    values.add_child("attvalue", size);
    pt::ptree kind;
    kind.put("<xmlattr>.for", "kind");
    kind.put("<xmlattr>.value", std::string(to_string(n.kind)));
    values.add_child("attvalue", kind);
    node.put("viz:size.<xmlattr>.value", format_double(n.size));
    nodes.add_child("node", node);
  }
  auto& edges = g.add_child("edges", pt::ptree{});
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const auto& e = graph.edges[i];
    pt::ptree edge;
    edge.put("<xmlattr>.id", std::to_string(i));
    edge.put("<xmlattr>.source", e.source);
    edge.put("<xmlattr>.target", e.target);
    edge.put("<xmlattr>.weight", format_double(e.weight));
    edges.add_child("edge", edge);
  }
  write_xml_file(root, path);
}

pt::ptree key_decl(const std::string& id, const std::string& owner, const std::string& type) {
  pt::ptree k;
  k.put("<xmlattr>.id", id);
  k.put("<xmlattr>.for", owner);
  k.put(pt::ptree::path_type("<xmlattr>/attr.name", '/'), id);
  k.put(pt::ptree::path_type("<xmlattr>/attr.type", '/'), type);
  return k;
}

pt::ptree data(const std::string& key, const std::string& value) {
  pt::ptree d(value);
  d.put("<xmlattr>.key", key);
  return d;
}

void write_graphml(const TopicGraph& graph, const std::filesystem::path& path) {
  pt::ptree root;
  auto& graphml = root.add_child("graphml", pt::ptree{});
  graphml.put("<xmlattr>.xmlns", "http://graphml.graphdrawing.org/xmlns");
  graphml.add_child("key", key_decl("label", "node", "string"));
  graphml.add_child("key", key_decl("size", "node", "float"));
  graphml.add_child("key", key_decl("kind", "node", "string"));
  graphml.add_child("key", key_decl("weight", "edge", "float"));
  auto& g = graphml.add_child("graph", pt::ptree{});
  g.put("<xmlattr>.id", "G");
  g.put("<xmlattr>.edgedefault", "undirected");
  for (const auto& n : graph.nodes) {
    pt::ptree node;
    node.put("<xmlattr>.id", n.id);
    node.add_child("data", data("label", n.label));
    node.add_child("data", data("size", format_double(n.size)));
    node.add_child("data", data("kind", std::string(to_string(n.kind))));
    g.add_child("node", node);
  }
  for (const auto& e : graph.edges) {
    pt::ptree edge;
    edge.put("<xmlattr>.source", e.source);
    edge.put("<xmlattr>.target", e.target);
    edge.add_child("data", data("weight", format_double(e.weight)));
    g.add_child("edge", edge);
  }
  write_xml_file(root, path);
}

void write_edge_list(const TopicGraph& graph, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& e : graph.edges) {
    out << e.source << '\t' << e.target << '\t' << format_double(e.weight) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DataError("jsd: distributions have lengths " + std::to_string(p.size()) + " and " +
                    std::to_string(q.size()));
  }
  check_dense(p, "p");
  check_dense(q, "q");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += jsd_term(p[i], q[i]);
  return finish(total);
}

double jsd(const SparseDistribution& p, const SparseDistribution& q) {
  check_sparse(p, "p");
  check_sparse(q, "q");
  double total = 0.0;
  auto a = p.begin();
  auto b = q.begin();
  while (a != p.end() || b != q.end()) {
    if (b == q.end() || (a != p.end() && a->first < b->first)) {
      total += jsd_term(a->second, 0.0);
      ++a;
    } else if (a == p.end() || b->first < a->first) {
      total += jsd_term(0.0, b->second);
      ++b;
    } else {
      total += jsd_term(a->second, b->second);
      ++a;
      ++b;
    }
  }
  return finish(total);
}

StockTopics stock_topics(std::string stock, std::string company, const TopicModel& model,
                         const Vocabulary& vocabulary, const TopicSelection& selection) {
  StockTopics out;
  out.stock = std::move(stock);
  out.company = std::move(company);
  for (const int id : selection.selected) {
    const auto it = std::find(selection.topic_ids.begin(), selection.topic_ids.end(), id);
    if (it == selection.topic_ids.end() || id < 0 ||
        static_cast<std::size_t>(id) >= model.num_topics()) {
      throw DataError("selected topic " + std::to_string(id) + " is not in the model");
    }
    const auto k = static_cast<std::size_t>(id);
    out.topic_ids.push_back(id);
    out.fve.push_back(selection.fve[static_cast<std::size_t>(it - selection.topic_ids.begin())]);
    std::vector<std::string> words;
    for (const auto w : model.top_words(k, 3)) words.push_back(vocabulary.token(w));
    out.top_words.push_back(std::move(words));
    SparseDistribution dist;
    const auto row = model.topic_distribution(k);
    for (std::size_t w = 0; w < row.size(); ++w) {
      if (row[w] > 0.0) dist.emplace_back(vocabulary.token(static_cast<std::uint32_t>(w)), row[w]);
    }
    std::sort(dist.begin(), dist.end());
    out.distributions.push_back(std::move(dist));
  }
  return out;
}

std::string_view to_string(NodeKind kind) {
  return kind == NodeKind::topic ? "topic" : "company";
}

TopicGraph build_graph(std::span<const StockTopics> stocks, double threshold, unsigned threads) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("jsd threshold must lie in (0, 1]");
  }
  struct Ref {
    std::string id;
    const SparseDistribution* dist;
  };
  TopicGraph graph;
  std::vector<Ref> topics;
  for (const auto& s : stocks) {
    graph.nodes.push_back({"company:" + s.stock, s.company, kCompanySize, NodeKind::company});
    for (std::size_t i = 0; i < s.topic_ids.size(); ++i) {
      std::string label = s.company + " (";
      for (std::size_t j = 0; j < s.top_words[i].size(); ++j) {
        if (j > 0) label += ',';
        label += s.top_words[i][j];
      }
      label += ')';
      const auto id = stock_topic_id(s.stock, s.topic_ids[i]);
      graph.nodes.push_back({id, std::move(label), s.fve[i], NodeKind::topic});
      topics.push_back({id, &s.distributions[i]});
    }
  }
  for (const auto& s : stocks) {
    for (std::size_t i = 0; i < s.topic_ids.size(); ++i) {
      graph.edges.push_back({"company:" + s.stock, stock_topic_id(s.stock, s.topic_ids[i]), s.fve[i]});
    }
  }
  // Row i of the upper triangle holds JSD(i, j) for j > i.
  const std::size_t n = topics.size();
  std::vector<std::vector<double>> divergence(n);
  parallel_for(n, threads, [&](std::size_t i) {
    divergence[i].resize(n - i - 1);
    for (std::size_t j = i + 1; j < n; ++j) {
      divergence[i][j - i - 1] = jsd(*topics[i].dist, *topics[j].dist);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = divergence[i][j - i - 1];
      if (d < threshold) graph.edges.push_back({topics[i].id, topics[j].id, 1.0 - d});
    }
  }
  return graph;
}

GraphFormat parse_graph_format(std::string_view text) {
  if (text == "gexf") return GraphFormat::gexf;
  if (text == "graphml") return GraphFormat::graphml;
  if (text == "edge-list" || text == "edgelist" || text == "tsv") return GraphFormat::edge_list;
  throw ConfigError("unknown graph format '" + std::string(text) + "'");
}

std::string_view to_string(GraphFormat format) {
  switch (format) {
    case GraphFormat::gexf: return "gexf";
    case GraphFormat::graphml: return "graphml";
    case GraphFormat::edge_list: return "edge-list";
  }
  return "gexf";
}

std::string_view extension(GraphFormat format) {
  switch (format) {
    case GraphFormat::gexf: return "gexf";
    case GraphFormat::graphml: return "graphml";
    case GraphFormat::edge_list: return "tsv";
  }
  return "gexf";
}

void export_graph(const TopicGraph& graph, GraphFormat format, const std::filesystem::path& path) {
  switch (format) {
    case GraphFormat::gexf: write_gexf(graph, path); break;
    case GraphFormat::graphml: write_graphml(graph, path); break;
    case GraphFormat::edge_list: write_edge_list(graph, path); break;
  }
}

TopicGraph read_gexf(const std::filesystem::path& path) {
  const auto tree = read_xml_file(path);
  const auto& g = child(tree, "gexf.graph", path);
  TopicGraph graph;
  if (const auto nodes = g.get_child_optional("nodes")) {
    for (const auto& [name, node] : *nodes) {
      if (name != "node") continue;
      GraphNode n;
      n.id = attr(node, "id", path);
      n.label = node.get<std::string>("<xmlattr>.label", "");
      bool have_size = false, have_kind = false;
      if (const auto values = node.get_child_optional("attvalues")) {
        for (const auto& [vname, v] : *values) {
          if (vname != "attvalue") continue;
          const auto key = attr(v, "for", path);
          const auto value = attr(v, "value", path);
          if (key == "size") {
            n.size = parse_double(value);
            have_size = true;
          } else if (key == "kind") {
            n.kind = parse_kind(value, path);
            have_kind = true;
          }
        }
      }
      if (!have_size || !have_kind) throw DataError(path.string() + ": node " + n.id + " lacks size or kind");
      graph.nodes.push_back(std::move(n));
    }
  }
  if (const auto edges = g.get_child_optional("edges")) {
    for (const auto& [name, edge] : *edges) {
      if (name != "edge") continue;
      graph.edges.push_back({attr(edge, "source", path), attr(edge, "target", path),
                             parse_double(attr(edge, "weight", path))});
    }
  }
  return graph;
}

TopicGraph read_graphml(const std::filesystem::path& path) {
  const auto tree = read_xml_file(path);
  const auto& g = child(tree, "graphml.graph", path);
  TopicGraph graph;
  for (const auto& [name, element] : g) {
    std::map<std::string, std::string> values;
    if (name != "node" && name != "edge") continue;
    for (const auto& [dname, d] : element) {
      if (dname == "data") values[attr(d, "key", path)] = d.data();
    }
    const auto get = [&](const char* key) {
      const auto it = values.find(key);
      if (it == values.end()) throw DataError(path.string() + ": " + name + " lacks " + key);
      return it->second;
    };
    if (name == "node") {
      graph.nodes.push_back({attr(element, "id", path), values.count("label") ? values["label"] : "",
                             parse_double(get("size")), parse_kind(get("kind"), path)});
    } else {
      graph.edges.push_back({attr(element, "source", path), attr(element, "target", path),
                             parse_double(get("weight"))});
    }
  }
  return graph;
}

}  // namespace newsflow
