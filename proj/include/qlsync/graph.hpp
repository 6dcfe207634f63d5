#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <qlsync/errors.hpp>
#include <qlsync/random.hpp>

namespace qlsync {

using complexd = std::complex<double>;

/// Undirected graph with unit-modulus complex edge biases, stored as a
/// Hermitian adjacency matrix, plus a partition of the vertices into
/// labeled blocks (one block per subgraph).
///
/// Cross edges introduced by disjoint_union_coupled may carry a real
/// weight w != 1; the adjacency entry is then w * bias and the weight is
/// recorded in edge_weights so the per-edge unit-bias invariant remains
/// checkable.
struct BiasedGraph {
  int n = 0;
  Eigen::MatrixXcd adjacency;
  std::vector<std::string> block_of;                  // vertex -> block label
  std::map<std::pair<int, int>, double> edge_weights; // (i<j) -> weight, only if != 1

  double weight(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = edge_weights.find({i, j});
    return it == edge_weights.end() ? 1.0 : it->second;
  }

  /// Block labels in effective-basis order: sorted by reversed string,
  /// so that product labels come out second-factor major, e.g.
  /// (a1b1, a2b1, a1b2, a2b2).
  std::vector<std::string> block_labels() const {
    std::vector<std::string> labels(block_of.begin(), block_of.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
    });
    return labels;
  }

  std::vector<int> block_vertices(const std::string& label) const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
      if (block_of[i] == label) out.push_back(i);
    return out;
  }

  void validate() const {
    if (n <= 0 || adjacency.rows() != n || adjacency.cols() != n)
      throw contract_error("BiasedGraph: adjacency shape does not match n");
    if (static_cast<int>(block_of.size()) != n)
      throw contract_error("BiasedGraph: blocks must label every vertex");
    const double scale = std::max(1.0, adjacency.cwiseAbs().maxCoeff());
    if ((adjacency - adjacency.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw contract_error("BiasedGraph: adjacency is not Hermitian");
    for (int i = 0; i < n; ++i)
      if (std::abs(adjacency(i, i)) > 1e-15)
        throw contract_error("BiasedGraph: diagonal must be zero");
    for (const auto& [edge, w] : edge_weights)
      if (!(w > 0.0)) throw contract_error("BiasedGraph: edge weights must be positive");
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double mod = std::abs(adjacency(i, j));
        if (mod == 0.0) continue;
        if (std::abs(mod - weight(i, j)) > 1e-9)
          throw contract_error("BiasedGraph: nonzero entries must have unit-modulus bias");
      }
  }

  bool operator==(const BiasedGraph& other) const {
    return n == other.n && adjacency == other.adjacency && block_of == other.block_of &&
           edge_weights == other.edge_weights;
  }
};

namespace detail {

inline void check_unit_bias(complexd bias, const char* who) {
  if (std::abs(std::abs(bias) - 1.0) > 1e-12)
    throw parameter_error(std::string(who) + ": bias must have unit modulus");
}

inline void check_disjoint_labels(const BiasedGraph& a, const BiasedGraph& b, const char* who) {
  auto la = a.block_labels();
  auto lb = b.block_labels();
  for (const auto& l : la)
    if (std::find(lb.begin(), lb.end(), l) != lb.end())
      throw parameter_error(std::string(who) + ": block label '" + l +
                            "' appears in both graphs");
}

/// Independently joins each (i in [off1, off1+n1), j in [off2, off2+n2))
/// pair with probability p. Draw order is row-major over (i, j) so that a
/// shared seed reproduces the same cross edge set in every caller.
inline void add_random_cross_edges(Eigen::MatrixXcd& a, int off1, int n1, int off2, int n2,
                                   double p, complexd entry, Rng& rng,
                                   std::vector<std::pair<int, int>>* made = nullptr) {
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      if (rng.uniform() < p) {
        a(off1 + i, off2 + j) = entry;
        a(off2 + j, off1 + i) = std::conj(entry);
        if (made) made->emplace_back(std::min(off1 + i, off2 + j), std::max(off1 + i, off2 + j));
      }
}

} // namespace detail

/// Uniform-ish random d-regular simple graph on n vertices via the
/// configuration (pairing) model: match stubs at random, reject matchings
/// with loops or parallel edges, retry up to a bounded attempt count.
///
/// For d > (n-1)/2 the (n-1-d)-regular complement is generated instead and
/// inverted; complementation is a bijection on regular simple graphs, so
/// uniformity is unaffected and dense targets (e.g. d = 15, n = 20) stay
/// cheap to sample. All edges carry bias +1.
inline BiasedGraph gen_d_regular_random(int n, int d, std::uint64_t seed,
                                        std::string_view label = "a1") {
  if (n <= 0) throw parameter_error("gen_d_regular_random: n must be positive");
  if (d <= 0 || d >= n)
    throw parameter_error("gen_d_regular_random: require 0 < d < n");
  if ((static_cast<long long>(n) * d) % 2 != 0)
    throw parameter_error("gen_d_regular_random: n*d must be even");

  const bool use_complement = d > (n - 1) / 2;
  const int dd = use_complement ? (n - 1 - d) : d;

  Rng rng(seed);
  std::vector<char> adj(static_cast<std::size_t>(n) * n, 0);
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * dd);
  for (int v = 0; v < n; ++v)
    for (int k = 0; k < dd; ++k) stubs.push_back(v);

  constexpr int max_attempts = 100000;
  bool ok = (dd == 0);
  for (int attempt = 0; attempt < max_attempts && !ok; ++attempt) {
    std::fill(adj.begin(), adj.end(), 0);
    rng.shuffle(stubs);
    ok = true;
    for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
      const int a = stubs[k], b = stubs[k + 1];
      if (a == b || adj[static_cast<std::size_t>(a) * n + b]) {
        ok = false;
        break;
      }
      adj[static_cast<std::size_t>(a) * n + b] = 1;
      adj[static_cast<std::size_t>(b) * n + a] = 1;
    }
  }
  if (!ok)
    throw numeric_error("gen_d_regular_random: pairing model failed after bounded attempts");

  BiasedGraph g;
  g.n = n;
  g.adjacency = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool edge = use_complement ? !adj[static_cast<std::size_t>(i) * n + j]
                                       : static_cast<bool>(adj[static_cast<std::size_t>(i) * n + j]);
      if (edge) g.adjacency(i, j) = complexd{1.0, 0.0};
    }
  g.block_of.assign(n, std::string(label));
  return g;
}

/// Hybridizes two graphs into one: disjoint copies (block labels retained)
/// plus independent random cross edges with probability p, each carrying
/// the given unit-modulus bias in the (g1 row, g2 column) triangle.
inline BiasedGraph connect_subgraphs(const BiasedGraph& g1, const BiasedGraph& g2, double p,
                                     complexd bias, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0))
    throw parameter_error("connect_subgraphs: p must lie in [0, 1]");
  detail::check_unit_bias(bias, "connect_subgraphs");
  detail::check_disjoint_labels(g1, g2, "connect_subgraphs");

  BiasedGraph g;
  g.n = g1.n + g2.n;
  g.adjacency = Eigen::MatrixXcd::Zero(g.n, g.n);
  g.adjacency.topLeftCorner(g1.n, g1.n) = g1.adjacency;
  g.adjacency.bottomRightCorner(g2.n, g2.n) = g2.adjacency;
  g.block_of = g1.block_of;
  g.block_of.insert(g.block_of.end(), g2.block_of.begin(), g2.block_of.end());
  for (const auto& [e, w] : g1.edge_weights) g.edge_weights[e] = w;
  for (const auto& [e, w] : g2.edge_weights)
    g.edge_weights[{e.first + g1.n, e.second + g1.n}] = w;

  Rng rng(seed);
  detail::add_random_cross_edges(g.adjacency, 0, g1.n, g1.n, g2.n, p, bias, rng);
  return g;
}

/// Cartesian graph product. Vertex (u, x) maps to index u * h.n + x;
/// (u,x)-(v,y) is an edge iff (u-v in E(G) and x == y) or (x-y in E(H)
/// and u == v), inheriting the bias of the contributing edge. The block
/// label of (u, x) is the concatenation label(u) + label(x).
inline BiasedGraph cartesian_product(const BiasedGraph& g, const BiasedGraph& h) {
  g.validate();
  h.validate();
  BiasedGraph p;
  p.n = g.n * h.n;
  p.adjacency = Eigen::MatrixXcd::Zero(p.n, p.n);
  for (int u = 0; u < g.n; ++u)
    for (int v = 0; v < g.n; ++v) {
      if (g.adjacency(u, v) == complexd{0.0, 0.0}) continue;
      for (int x = 0; x < h.n; ++x)
        p.adjacency(u * h.n + x, v * h.n + x) = g.adjacency(u, v);
    }
  for (int x = 0; x < h.n; ++x)
    for (int y = 0; y < h.n; ++y) {
      if (h.adjacency(x, y) == complexd{0.0, 0.0}) continue;
      for (int u = 0; u < g.n; ++u)
        p.adjacency(u * h.n + x, u * h.n + y) = h.adjacency(x, y);
    }
  p.block_of.resize(p.n);
  for (int u = 0; u < g.n; ++u)
    for (int x = 0; x < h.n; ++x) p.block_of[u * h.n + x] = g.block_of[u] + h.block_of[x];
  for (const auto& [e, w] : g.edge_weights)
    for (int x = 0; x < h.n; ++x)
      p.edge_weights[{e.first * h.n + x, e.second * h.n + x}] = w;
  for (const auto& [e, w] : h.edge_weights)
    for (int u = 0; u < g.n; ++u)
      p.edge_weights[{u * h.n + e.first, u * h.n + e.second}] = w;
  return p;
}

/// Cross-edge recipe for one pair of graphs in disjoint_union_coupled.
struct CrossSpec {
  std::size_t first = 0;
  std::size_t second = 1;
  double p = 0.0;
  complexd bias{1.0, 0.0};
  double weight = 1.0;
};

/// Block-diagonal union of the given graphs plus random weighted cross
/// edges per CrossSpec. Cross entries are weight * bias; weights != 1 are
/// recorded per edge so the unit-modulus bias invariant stays intact.
inline BiasedGraph disjoint_union_coupled(const std::vector<BiasedGraph>& graphs,
                                          const std::vector<CrossSpec>& inter,
                                          std::uint64_t seed) {
  if (graphs.empty())
    throw parameter_error("disjoint_union_coupled: graph list must be non-empty");
  for (std::size_t a = 0; a < graphs.size(); ++a)
    for (std::size_t b = a + 1; b < graphs.size(); ++b)
      detail::check_disjoint_labels(graphs[a], graphs[b], "disjoint_union_coupled");

  std::vector<int> offset(graphs.size() + 1, 0);
  for (std::size_t k = 0; k < graphs.size(); ++k) offset[k + 1] = offset[k] + graphs[k].n;

  BiasedGraph g;
  g.n = offset.back();
  g.adjacency = Eigen::MatrixXcd::Zero(g.n, g.n);
  g.block_of.resize(g.n);
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    g.adjacency.block(offset[k], offset[k], graphs[k].n, graphs[k].n) = graphs[k].adjacency;
    std::copy(graphs[k].block_of.begin(), graphs[k].block_of.end(),
              g.block_of.begin() + offset[k]);
    for (const auto& [e, w] : graphs[k].edge_weights)
      g.edge_weights[{e.first + offset[k], e.second + offset[k]}] = w;
  }

  Rng rng(seed);
  for (const auto& spec : inter) {
    if (spec.first >= graphs.size() || spec.second >= graphs.size() ||
        spec.first == spec.second)
      throw parameter_error("disjoint_union_coupled: invalid pair indices");
    if (!(spec.p >= 0.0 && spec.p <= 1.0))
      throw parameter_error("disjoint_union_coupled: p must lie in [0, 1]");
    if (!(spec.weight > 0.0))
      throw parameter_error("disjoint_union_coupled: weight must be positive");
    detail::check_unit_bias(spec.bias, "disjoint_union_coupled");
    std::vector<std::pair<int, int>> made;
    detail::add_random_cross_edges(g.adjacency, offset[spec.first], graphs[spec.first].n,
                                   offset[spec.second], graphs[spec.second].n, spec.p,
                                   spec.weight * spec.bias, rng, &made);
    if (spec.weight != 1.0)
      for (const auto& e : made) g.edge_weights[e] = spec.weight;
  }
  return g;
}

/// Full eigendecomposition of a Hermitian adjacency matrix.
/// Eigenvalues ascending; eigenvectors orthonormal, each phase-fixed so its
/// largest-modulus coefficient is real positive, near-degenerate groups
/// ordered by the smallest vertex index attaining that maximum.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
};

namespace detail {

inline int dominant_index(const Eigen::VectorXcd& v) {
  double best = -1.0;
  int idx = 0;
  for (int i = 0; i < v.size(); ++i) {
    const double m = std::abs(v(i));
    if (m > best + 1e-12) {
      best = m;
      idx = i;
    }
  }
  return idx;
}

inline void canonicalize(Eigen::VectorXd& vals, Eigen::MatrixXcd& vecs) {
  const int n = static_cast<int>(vals.size());
  const double scale = std::max(1.0, std::max(std::abs(vals(0)), std::abs(vals(n - 1))));
  std::vector<int> group(n, 0);
  for (int k = 1; k < n; ++k)
    group[k] = group[k - 1] + (vals(k) - vals(k - 1) > 1e-9 * scale ? 1 : 0);
  std::vector<int> anchor(n);
  for (int k = 0; k < n; ++k) anchor[k] = dominant_index(vecs.col(k));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (group[a] != group[b]) return group[a] < group[b];
    return anchor[a] < anchor[b];
  });
  Eigen::VectorXd v2(n);
  Eigen::MatrixXcd m2(vecs.rows(), n);
  for (int k = 0; k < n; ++k) {
    v2(k) = vals(order[k]);
    Eigen::VectorXcd col = vecs.col(order[k]);
    const complexd lead = col(anchor[order[k]]);
    const double mod = std::abs(lead);
    if (mod > 0.0) col *= std::conj(lead) / mod;
    m2.col(k) = col;
  }
  vals = v2;
  vecs = m2;
}

inline void check_hermitian(const Eigen::MatrixXcd& a, const char* who) {
  if (a.rows() != a.cols()) throw contract_error(std::string(who) + ": matrix must be square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw contract_error(std::string(who) + ": matrix is not Hermitian");
}

} // namespace detail

inline Spectrum spectrum(const Eigen::MatrixXcd& a) {
  detail::check_hermitian(a, "spectrum");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  if (solver.info() != Eigen::Success)
    throw numeric_error("spectrum: eigendecomposition failed to converge");
  Spectrum s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  detail::canonicalize(s.eigenvalues, s.eigenvectors);
  return s;
}

inline Spectrum spectrum(const BiasedGraph& g) { return spectrum(g.adjacency); }

/// lambda_max - lambda_secondmax of the given spectrum.
inline double spectral_gap(const Spectrum& s) {
  const auto n = s.eigenvalues.size();
  if (n < 2) throw parameter_error("spectral_gap: need at least 2 eigenvalues");
  return s.eigenvalues(n - 1) - s.eigenvalues(n - 2);
}

/// Normalized indicator vector of one block: 1/sqrt(block size) on the
/// block's vertices, 0 elsewhere.
struct BlockIndicator {
  Eigen::VectorXcd vector;
  std::string block;
};

inline BlockIndicator block_indicator(const BiasedGraph& g, const std::string& label) {
  const auto verts = g.block_vertices(label);
  if (verts.empty())
    throw parameter_error("block_indicator: unknown block label '" + label + "'");
  BlockIndicator ind;
  ind.block = label;
  ind.vector = Eigen::VectorXcd::Zero(g.n);
  const double value = 1.0 / std::sqrt(static_cast<double>(verts.size()));
  for (int v : verts) ind.vector(v) = value;
  return ind;
}

/// Cycle graph C_n, all biases +1.
inline BiasedGraph cycle_graph(int n, std::string_view label = "a1") {
  if (n < 3) throw parameter_error("cycle_graph: n must be >= 3");
  BiasedGraph g;
  g.n = n;
  g.adjacency = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    g.adjacency(i, j) = complexd{1.0, 0.0};
    g.adjacency(j, i) = complexd{1.0, 0.0};
  }
  g.block_of.assign(n, std::string(label));
  return g;
}

/// Complete graph K_n (K_1 for n = 1), all biases +1.
inline BiasedGraph complete_graph(int n, std::string_view label = "a1") {
  if (n < 1) throw parameter_error("complete_graph: n must be >= 1");
  BiasedGraph g;
  g.n = n;
  g.adjacency = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) g.adjacency(i, j) = complexd{1.0, 0.0};
  g.block_of.assign(n, std::string(label));
  return g;
}

/// JSON schema: {n, edges: [[i, j, re, im], ...], blocks: {label: [vertices]}}
/// with each edge listed once as i < j. Round-trips exactly.
inline nlohmann::json graph_to_json(const BiasedGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j) {
      const complexd a = g.adjacency(i, j);
      if (a == complexd{0.0, 0.0}) continue;
      edges.push_back({i, j, a.real(), a.imag()});
    }
  nlohmann::json blocks = nlohmann::json::object();
  for (const auto& label : g.block_labels()) blocks[label] = g.block_vertices(label);
  return {{"n", g.n}, {"edges", edges}, {"blocks", blocks}};
}

inline BiasedGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges") || !j.contains("blocks"))
    throw parameter_error("graph_from_json: expected object with n, edges, blocks");
  BiasedGraph g;
  g.n = j.at("n").get<int>();
  if (g.n <= 0) throw parameter_error("graph_from_json: n must be positive");
  g.adjacency = Eigen::MatrixXcd::Zero(g.n, g.n);
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 4)
      throw parameter_error("graph_from_json: edge entries must be [i, j, re, im]");
    const int i = e[0].get<int>(), jj = e[1].get<int>();
    if (i < 0 || jj < 0 || i >= g.n || jj >= g.n || i >= jj)
      throw parameter_error("graph_from_json: edges must satisfy 0 <= i < j < n");
    if (g.adjacency(i, jj) != complexd{0.0, 0.0})
      throw parameter_error("graph_from_json: duplicate edge");
    const complexd a{e[2].get<double>(), e[3].get<double>()};
    g.adjacency(i, jj) = a;
    g.adjacency(jj, i) = std::conj(a);
    const double mod = std::abs(a);
    if (std::abs(mod - 1.0) > 1e-9) g.edge_weights[{i, jj}] = mod;
  }
  g.block_of.assign(g.n, std::string());
  std::vector<char> seen(g.n, 0);
  for (const auto& [label, verts] : j.at("blocks").items())
    for (const auto& v : verts) {
      const int idx = v.get<int>();
      if (idx < 0 || idx >= g.n || seen[idx])
        throw parameter_error("graph_from_json: blocks must partition the vertex set");
      seen[idx] = 1;
      g.block_of[idx] = label;
    }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw parameter_error("graph_from_json: blocks must cover every vertex");
  g.validate();
  return g;
}

} // namespace qlsync
