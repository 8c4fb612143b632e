#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "newsflow/attribution.hpp"
#include "newsflow/corpus.hpp"
#include "newsflow/lda.hpp"

namespace newsflow {

/// Jensen-Shannon divergence with base-2 logarithms, in [0, 1]. Both inputs
/// must have the same length, nonnegative entries and sum to 1 within 1e-9;
/// otherwise DataError.
double jsd(std::span<const double> p, std::span<const double> q);

/// A probability vector stored as (token, probability) pairs sorted by token.
/// Tokens absent from the list have probability 0.
using SparseDistribution = std::vector<std::pair<std::string, double>>;

/// JSD of two sparse distributions over the union of their supports.
double jsd(const SparseDistribution& p, const SparseDistribution& q);

/// The selected topics of one stock, already expressed over words.
struct StockTopics {
  std::string stock;
  std::string company;
  std::vector<int> topic_ids;
  std::vector<double> fve;
  std::vector<std::vector<std::string>> top_words;  // phi-ranked, at most 3
  std::vector<SparseDistribution> distributions;
};

/// Collects the topics of `selection.selected` with their FVE, top-3 words
/// and phi rows mapped onto the vocabulary's tokens.
StockTopics stock_topics(std::string stock, std::string company, const TopicModel& model,
                         const Vocabulary& vocabulary, const TopicSelection& selection);

enum class NodeKind { topic, company };

std::string_view to_string(NodeKind kind);

struct GraphNode {
  std::string id;
  std::string label;
  double size = 0.0;
  NodeKind kind = NodeKind::topic;

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::string source;
  std::string target;
  double weight = 0.0;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Undirected weighted graph; nodes and edges keep insertion order.
struct TopicGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  friend bool operator==(const TopicGraph&, const TopicGraph&) = default;
};

/// Node ids are "company:<stock>" and "topic:<stock>:<topic id>". Topic
/// nodes are labelled "<company> (<w1>,<w2>,<w3>)" and sized by FVE; company
/// nodes have size 0.5. Topic pairs with JSD below `threshold` are joined
/// with weight 1 - JSD; every topic is joined to its company with weight FVE.
/// Throws ConfigError unless threshold lies in (0, 1].
TopicGraph build_graph(std::span<const StockTopics> stocks, double threshold = 0.5,
                       unsigned threads = 1);

enum class GraphFormat { gexf, graphml, edge_list };

GraphFormat parse_graph_format(std::string_view text);
std::string_view to_string(GraphFormat format);
/// File extension for the format, without the dot.
std::string_view extension(GraphFormat format);

/// Throws Error when the destination cannot be written.
void export_graph(const TopicGraph& graph, GraphFormat format, const std::filesystem::path& path);

/// Parse-back of the XML exports. Throws DataError on malformed input.
TopicGraph read_gexf(const std::filesystem::path& path);
TopicGraph read_graphml(const std::filesystem::path& path);

}  // namespace newsflow
