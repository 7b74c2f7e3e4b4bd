#pragma once

// Global concept co-occurrence graph and the random-walk sampler.
//
// Nodes are canonical concept keys (normalize_text of the display
// string); topics and key concepts live in separate node universes.
// Three undirected edge families carry raw co-occurrence counts:
// topic-topic, topic-KC and KC-KC, incremented once per document for
// every unordered pair co-occurring in that document.  Edge weight is
// log(count + epsilon), and walk transitions are softmax over a node's
// incident weights — which makes p(v) exactly (count_v + eps) /
// sum(count + eps), a property the tests exploit as an oracle.
//
// Node arrays are sorted, so the built graph (and its serialization) is
// invariant under permutation of the input concept sets.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "synthweave/concepts.hpp"

namespace synthweave {

enum class SubGraph { topic_topic, topic_kc, kc_kc };
enum class NodeKind { topic, kc };

class NoNeighborsError : public Error {
 public:
  using Error::Error;
};

inline double edge_weight(std::int64_t count, double epsilon) {
  if (count < 1) throw ArgumentError("edge_weight: count must be >= 1");
  if (epsilon <= 0.0) throw ArgumentError("edge_weight: epsilon must be > 0");
  return std::log(static_cast<double>(count) + epsilon);
}

struct ConceptGraph {
  double epsilon = 1e-6;
  std::vector<std::string> topics;  // canonical keys, sorted
  std::vector<std::string> kcs;     // canonical keys, sorted

  // unordered pairs, first < second for tt/kk; (topic, kc) for tk
  std::map<std::pair<int, int>, std::int64_t> tt_edges;
  std::map<std::pair<int, int>, std::int64_t> tk_edges;
  std::map<std::pair<int, int>, std::int64_t> kk_edges;

  // adjacency (neighbor index, count), sorted by neighbor index
  std::vector<std::vector<std::pair<int, std::int64_t>>> tt_adj;
  std::vector<std::vector<std::pair<int, std::int64_t>>> kk_adj;
  std::vector<std::vector<std::pair<int, std::int64_t>>> tk_by_topic;
  std::vector<std::vector<std::pair<int, std::int64_t>>> tk_by_kc;

  int topic_index(const std::string& key) const {
    auto it = std::lower_bound(topics.begin(), topics.end(), key);
    if (it == topics.end() || *it != key) return -1;
    return static_cast<int>(it - topics.begin());
  }

  int kc_index(const std::string& key) const {
    auto it = std::lower_bound(kcs.begin(), kcs.end(), key);
    if (it == kcs.end() || *it != key) return -1;
    return static_cast<int>(it - kcs.begin());
  }

  void rebuild_adjacency() {
    tt_adj.assign(topics.size(), {});
    kk_adj.assign(kcs.size(), {});
    tk_by_topic.assign(topics.size(), {});
    tk_by_kc.assign(kcs.size(), {});
    for (const auto& [pair, c] : tt_edges) {
      tt_adj[static_cast<std::size_t>(pair.first)].emplace_back(pair.second, c);
      tt_adj[static_cast<std::size_t>(pair.second)].emplace_back(pair.first, c);
    }
    for (const auto& [pair, c] : kk_edges) {
      kk_adj[static_cast<std::size_t>(pair.first)].emplace_back(pair.second, c);
      kk_adj[static_cast<std::size_t>(pair.second)].emplace_back(pair.first, c);
    }
    for (const auto& [pair, c] : tk_edges) {
      tk_by_topic[static_cast<std::size_t>(pair.first)].emplace_back(
          pair.second, c);
      tk_by_kc[static_cast<std::size_t>(pair.second)].emplace_back(pair.first,
                                                                   c);
    }
    for (auto& adj : tt_adj) std::sort(adj.begin(), adj.end());
    for (auto& adj : kk_adj) std::sort(adj.begin(), adj.end());
    for (auto& adj : tk_by_topic) std::sort(adj.begin(), adj.end());
    for (auto& adj : tk_by_kc) std::sort(adj.begin(), adj.end());
  }

  bool operator==(const ConceptGraph& o) const {
    return epsilon == o.epsilon && topics == o.topics && kcs == o.kcs &&
           tt_edges == o.tt_edges && tk_edges == o.tk_edges &&
           kk_edges == o.kk_edges;
  }
};

inline ConceptGraph build_graph(const std::vector<ConceptSet>& sets,
                                double epsilon = 1e-6) {
  if (epsilon <= 0.0) throw ArgumentError("build_graph: epsilon must be > 0");
  ConceptGraph g;
  g.epsilon = epsilon;

  std::set<std::string> topic_keys, kc_keys;
  for (const ConceptSet& cs : sets) {
    for (const std::string& t : cs.topics) topic_keys.insert(canonical_key(t));
    for (const std::string& k : cs.all_key_concepts())
      kc_keys.insert(canonical_key(k));
  }
  g.topics.assign(topic_keys.begin(), topic_keys.end());
  g.kcs.assign(kc_keys.begin(), kc_keys.end());

  for (const ConceptSet& cs : sets) {
    // distinct canonical ids for this document
    std::set<int> tset, kset;
    for (const std::string& t : cs.topics)
      tset.insert(g.topic_index(canonical_key(t)));
    for (const std::string& k : cs.all_key_concepts())
      kset.insert(g.kc_index(canonical_key(k)));
    std::vector<int> tids(tset.begin(), tset.end());
    std::vector<int> kids(kset.begin(), kset.end());

    for (std::size_t i = 0; i < tids.size(); ++i)
      for (std::size_t j = i + 1; j < tids.size(); ++j)
        ++g.tt_edges[{tids[i], tids[j]}];
    for (int t : tids)
      for (int k : kids) ++g.tk_edges[{t, k}];
    for (std::size_t i = 0; i < kids.size(); ++i)
      for (std::size_t j = i + 1; j < kids.size(); ++j)
        ++g.kk_edges[{kids[i], kids[j]}];
  }

  g.rebuild_adjacency();
  return g;
}

// Softmax transition distribution from node (kind, idx) along `sg`.
// Returned as (neighbor index, probability) sorted by neighbor index;
// neighbor indices refer to the opposite universe for topic_kc edges.
inline std::vector<std::pair<int, double>> transition_probs(
    const ConceptGraph& g, SubGraph sg, NodeKind kind, int idx) {
  const std::vector<std::pair<int, std::int64_t>>* adj = nullptr;
  switch (sg) {
    case SubGraph::topic_topic:
      if (kind != NodeKind::topic)
        throw ArgumentError("transition_probs: topic-topic needs a topic node");
      adj = &g.tt_adj.at(static_cast<std::size_t>(idx));
      break;
    case SubGraph::kc_kc:
      if (kind != NodeKind::kc)
        throw ArgumentError("transition_probs: kc-kc needs a kc node");
      adj = &g.kk_adj.at(static_cast<std::size_t>(idx));
      break;
    case SubGraph::topic_kc:
      adj = (kind == NodeKind::topic)
                ? &g.tk_by_topic.at(static_cast<std::size_t>(idx))
                : &g.tk_by_kc.at(static_cast<std::size_t>(idx));
      break;
  }
  if (adj->empty())
    throw NoNeighborsError("transition_probs: node has no neighbors in the "
                           "requested sub-graph");

  std::vector<double> w;
  w.reserve(adj->size());
  double wmax = -1e300;
  for (const auto& [nbr, c] : *adj) {
    double wi = edge_weight(c, g.epsilon);
    w.push_back(wi);
    wmax = std::max(wmax, wi);
  }
  double z = 0.0;
  for (double& wi : w) {
    wi = std::exp(wi - wmax);  // max-shift for stability
    z += wi;
  }
  std::vector<std::pair<int, double>> probs;
  probs.reserve(adj->size());
  for (std::size_t i = 0; i < adj->size(); ++i)
    probs.emplace_back((*adj)[i].first, w[i] / z);
  return probs;
}

// Inverse-CDF draw over a transition distribution.
inline int weighted_pick(const std::vector<std::pair<int, double>>& probs,
                         Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [idx, p] : probs) {
    acc += p;
    if (u < acc) return idx;
  }
  return probs.back().first;  // floating-point leftovers
}

// --------------------------------------------------------------- walks

struct WalkConfig {
  std::vector<int> topic_steps = {1, 2};
  std::vector<int> kc_steps = {3, 4};
  int epochs = 5;
  std::uint64_t seed = 0;

  void validate() const {
    auto subset_of = [](const std::vector<int>& v,
                        std::initializer_list<int> allowed) {
      for (int x : v) {
        bool ok = false;
        for (int a : allowed)
          if (x == a) ok = true;
        if (!ok) return false;
      }
      return !v.empty();
    };
    if (!subset_of(topic_steps, {1, 2}))
      throw ArgumentError("walk config: topic_steps must be a non-empty "
                          "subset of {1,2}");
    if (!subset_of(kc_steps, {3, 4}))
      throw ArgumentError("walk config: kc_steps must be a non-empty subset "
                          "of {3,4}");
    if (epochs < 1) throw ArgumentError("walk config: epochs must be >= 1");
  }
};

struct WalkStep {
  std::string subgraph;  // "tt" | "tk" | "kk"
  std::string from;
  std::string to;
};

struct SampledConceptSet {
  std::string walk_id;
  std::string seed_topic;
  std::vector<std::string> topics;        // 1-3 canonical keys, seed first
  std::vector<std::string> key_concepts;  // 1-5 canonical keys
  std::vector<WalkStep> trace;
};

struct SampleRun {
  std::vector<SampledConceptSet> samples;
  std::size_t skipped = 0;  // seeds whose chosen topic had no KC edges
};

// One full sampling run: every epoch visits every topic node exactly once
// (seeded shuffled order) as the walk seed.  Per-sample randomness comes
// from hash(seed, epoch, topic index), so samples are independent of
// iteration order and may be generated in parallel.
inline SampleRun sample_kg(const ConceptGraph& g, const WalkConfig& cfg) {
  cfg.validate();
  if (g.topics.empty())
    throw ArgumentError("sample_kg: topic sub-graph is empty");

  SampleRun run;
  std::size_t n_topics = g.topics.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(n_topics);
    for (std::size_t i = 0; i < n_topics; ++i) order[i] = static_cast<int>(i);
    Rng order_rng(hash_combine(hash64("sample_kg/order"),
                               hash_combine(cfg.seed,
                                            static_cast<std::uint64_t>(epoch))));
    order_rng.shuffle(order);

    for (int t_idx : order) {
      std::uint64_t sample_seed = hash_combine(
          hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)),
          static_cast<std::uint64_t>(t_idx));
      Rng rng(sample_seed);

      SampledConceptSet s;
      s.walk_id = to_hex(sample_seed);
      s.seed_topic = g.topics[static_cast<std::size_t>(t_idx)];
      s.topics.push_back(s.seed_topic);

      // (a) topic walk
      int topic_steps =
          cfg.topic_steps[rng.uniform_int(cfg.topic_steps.size())];
      int cur = t_idx;
      for (int step = 0; step < topic_steps; ++step) {
        const auto& adj = g.tt_adj[static_cast<std::size_t>(cur)];
        if (adj.empty()) break;  // isolated seed: single-topic sample
        auto probs = transition_probs(g, SubGraph::topic_topic,
                                      NodeKind::topic, cur);
        int nxt = weighted_pick(probs, rng);
        s.trace.push_back({"tt", g.topics[static_cast<std::size_t>(cur)],
                           g.topics[static_cast<std::size_t>(nxt)]});
        const std::string& key = g.topics[static_cast<std::size_t>(nxt)];
        if (std::find(s.topics.begin(), s.topics.end(), key) == s.topics.end())
          s.topics.push_back(key);
        cur = nxt;
      }

      // (b) one topic->KC step from a uniformly chosen collected topic
      const std::string& chosen =
          s.topics[rng.uniform_int(s.topics.size())];
      int chosen_idx = g.topic_index(chosen);
      if (g.tk_by_topic[static_cast<std::size_t>(chosen_idx)].empty()) {
        ++run.skipped;
        continue;
      }
      auto tk_probs = transition_probs(g, SubGraph::topic_kc, NodeKind::topic,
                                       chosen_idx);
      int kc_cur = weighted_pick(tk_probs, rng);
      s.trace.push_back({"tk", chosen,
                         g.kcs[static_cast<std::size_t>(kc_cur)]});
      s.key_concepts.push_back(g.kcs[static_cast<std::size_t>(kc_cur)]);

      // (c) KC walk
      int kc_steps = cfg.kc_steps[rng.uniform_int(cfg.kc_steps.size())];
      for (int step = 0; step < kc_steps; ++step) {
        const auto& adj = g.kk_adj[static_cast<std::size_t>(kc_cur)];
        if (adj.empty()) break;
        auto probs =
            transition_probs(g, SubGraph::kc_kc, NodeKind::kc, kc_cur);
        int nxt = weighted_pick(probs, rng);
        s.trace.push_back({"kk", g.kcs[static_cast<std::size_t>(kc_cur)],
                           g.kcs[static_cast<std::size_t>(nxt)]});
        const std::string& key = g.kcs[static_cast<std::size_t>(nxt)];
        if (std::find(s.key_concepts.begin(), s.key_concepts.end(), key) ==
            s.key_concepts.end())
          s.key_concepts.push_back(key);
        kc_cur = nxt;
      }

      run.samples.push_back(std::move(s));
    }
  }
  return run;
}

// ------------------------------------------------------------ grounding

// Canonical topic+KC fingerprint of one document's concept set.
inline std::set<std::string> concept_fingerprint(const ConceptSet& cs) {
  std::set<std::string> out;
  for (const std::string& t : cs.topics) out.insert(canonical_key(t));
  for (const std::string& k : cs.all_key_concepts())
    out.insert(canonical_key(k));
  return out;
}

// Top-k documents by Jaccard similarity between the sampled concepts and
// each document's fingerprint; ties broken by ascending doc_id.
inline std::vector<std::string> ground_documents(
    const SampledConceptSet& kg, const std::vector<ConceptSet>& sets,
    std::size_t k = 2) {
  if (sets.empty())
    throw ArgumentError("ground_documents: empty concept-set list");

  std::set<std::string> target;
  for (const std::string& t : kg.topics) target.insert(canonical_key(t));
  for (const std::string& c : kg.key_concepts)
    target.insert(canonical_key(c));

  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(sets.size());
  for (const ConceptSet& cs : sets)
    scored.emplace_back(jaccard(target, concept_fingerprint(cs)), cs.doc_id);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i)
    out.push_back(scored[i].second);
  return out;
}

// -------------------------------------------------------- serialization

inline json graph_to_json(const ConceptGraph& g) {
  auto edges_json = [](const std::map<std::pair<int, int>, std::int64_t>& m) {
    json arr = json::array();
    for (const auto& [pair, c] : m)
      arr.push_back(json::array({pair.first, pair.second, c}));
    return arr;
  };
  return json{{"epsilon", g.epsilon},
              {"topics", g.topics},
              {"kcs", g.kcs},
              {"tt_edges", edges_json(g.tt_edges)},
              {"tk_edges", edges_json(g.tk_edges)},
              {"kk_edges", edges_json(g.kk_edges)}};
}

inline ConceptGraph graph_from_json(const json& j) {
  ConceptGraph g;
  g.epsilon = j.at("epsilon").get<double>();
  for (const json& t : j.at("topics")) g.topics.push_back(t.get<std::string>());
  for (const json& k : j.at("kcs")) g.kcs.push_back(k.get<std::string>());

  auto read_edges = [&](const char* key, int max_i, int max_j,
                        std::map<std::pair<int, int>, std::int64_t>& out) {
    for (const json& e : j.at(key)) {
      if (!e.is_array() || e.size() != 3)
        throw ParseError(std::string("graph: malformed edge in ") + key);
      int a = e[0].get<int>();
      int b = e[1].get<int>();
      std::int64_t c = e[2].get<std::int64_t>();
      if (a < 0 || a >= max_i || b < 0 || b >= max_j || c < 1)
        throw IntegrityError(std::string("graph: edge out of range in ") + key);
      out[{a, b}] = c;
    }
  };
  int nt = static_cast<int>(g.topics.size());
  int nk = static_cast<int>(g.kcs.size());
  read_edges("tt_edges", nt, nt, g.tt_edges);
  read_edges("tk_edges", nt, nk, g.tk_edges);
  read_edges("kk_edges", nk, nk, g.kk_edges);
  g.rebuild_adjacency();
  return g;
}

inline json sample_to_json(const SampledConceptSet& s) {
  json trace = json::array();
  for (const WalkStep& st : s.trace)
    trace.push_back(json::array({st.subgraph, st.from, st.to}));
  return json{{"walk_id", s.walk_id},
              {"seed_topic", s.seed_topic},
              {"topics", s.topics},
              {"key_concepts", s.key_concepts},
              {"trace", std::move(trace)}};
}

inline SampledConceptSet sample_from_json(const json& j) {
  SampledConceptSet s;
  s.walk_id = j.at("walk_id").get<std::string>();
  s.seed_topic = j.at("seed_topic").get<std::string>();
  for (const json& t : j.at("topics")) s.topics.push_back(t.get<std::string>());
  for (const json& k : j.at("key_concepts"))
    s.key_concepts.push_back(k.get<std::string>());
  for (const json& st : j.at("trace")) {
    if (!st.is_array() || st.size() != 3)
      throw ParseError("sample: malformed trace step");
    s.trace.push_back({st[0].get<std::string>(), st[1].get<std::string>(),
                       st[2].get<std::string>()});
  }
  if (s.topics.empty() || s.topics.front() != s.seed_topic)
    throw IntegrityError("sample: first topic must equal seed_topic");
  return s;
}

}  // namespace synthweave
