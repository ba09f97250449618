#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "osgda/matrix.hpp"
#include "osgda/rng.hpp"
#include "osgda/tape.hpp"

namespace osgda {

enum class Activation { Relu, LeakyRelu };

struct GcnLayer {
  DenseMatrix weight;  // d_{l-1} x d_l
  DenseMatrix mask;    // same shape, entries in {0, 1}
};

struct FeatureExtractor {
  std::vector<GcnLayer> layers;
  Activation activation = Activation::Relu;
  double leaky_slope = 0.01;
};

/// Known-class head plus a one-column unknown head; logits are their
/// column concatenation, |C_s| + 1 wide.
struct OpenSetClassifier {
  DenseMatrix known_head;    // d x |C_s|
  DenseMatrix unknown_head;  // d x 1
};

/// Two-layer perceptron with three outputs (source, target-known,
/// target-unknown), fed through a gradient-reversal node.
struct DomainDiscriminator {
  DenseMatrix w1;  // d x h
  DenseMatrix w2;  // h x 3
  double grl_scale = 1.0;
};

struct ModelDims {
  int feature_dim = 0;
  std::vector<int> hidden;  // per-layer output dims; back() is the embedding dim
  int known_count = 0;
  int disc_hidden = 16;

  int embedding_dim() const { return hidden.back(); }
};

struct Model {
  ModelDims dims;
  FeatureExtractor extractor;
  OpenSetClassifier classifier;
  DomainDiscriminator discriminator;
};

/// Glorot-style uniform init, bound sqrt(6 / (fan_in + fan_out)); masks all
/// ones. Deterministic per seed via the "init" stream.
inline Model init_params(const ModelDims& dims, Activation act, double leaky_slope,
                         double grl_scale, std::uint64_t seed) {
  if (dims.feature_dim <= 0 || dims.hidden.empty() || dims.known_count <= 0 ||
      dims.disc_hidden <= 0)
    throw std::invalid_argument("init_params: dims must be positive");
  for (int d : dims.hidden)
    if (d <= 0) throw std::invalid_argument("init_params: zero layer dim");

  RngStream rng(seed, "init");
  auto glorot = [&rng](int fan_in, int fan_out) {
    DenseMatrix m(fan_in, fan_out);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : m.data) v = rng.uniform(-bound, bound);
    return m;
  };

  Model model;
  model.dims = dims;
  model.extractor.activation = act;
  model.extractor.leaky_slope = leaky_slope;
  int prev = dims.feature_dim;
  for (int d : dims.hidden) {
    GcnLayer layer;
    layer.weight = glorot(prev, d);
    layer.mask = DenseMatrix(prev, d, 1.0);
    model.extractor.layers.push_back(std::move(layer));
    prev = d;
  }
  const int d = dims.embedding_dim();
  model.classifier.known_head = glorot(d, dims.known_count);
  model.classifier.unknown_head = glorot(d, 1);
  model.discriminator.w1 = glorot(d, dims.disc_hidden);
  model.discriminator.w2 = glorot(dims.disc_hidden, 3);
  model.discriminator.grl_scale = grl_scale;
  return model;
}

// ---------------------------------------------------------------------------
// Tape builders
// ---------------------------------------------------------------------------

/// Per-layer parameter handles, created once per tape so that gradients
/// from every forward pass sharing them accumulate on the same node.
struct LayerNodes {
  std::vector<NodeRef> weights;
  std::vector<NodeRef> masks;      // empty when built without masks
  std::vector<NodeRef> effective;  // W ⊙ M (or W itself when unmasked)
};

/// With unit_masks=true the mask nodes hold fresh all-ones matrices, the
/// importance-scoring layout; their gradients are then ∂L/∂M^l.
inline LayerNodes make_layer_nodes(Tape& tape, const FeatureExtractor& ex, bool use_masks = true,
                                   bool unit_masks = false) {
  LayerNodes nodes;
  for (const auto& layer : ex.layers) {
    NodeRef w = tape.constant(layer.weight);
    nodes.weights.push_back(w);
    if (use_masks) {
      NodeRef m = tape.constant(unit_masks ? DenseMatrix(layer.mask.rows, layer.mask.cols, 1.0)
                                           : layer.mask);
      nodes.masks.push_back(m);
      nodes.effective.push_back(tape.hadamard(w, m));
    } else {
      nodes.effective.push_back(w);
    }
  }
  return nodes;
}

/// Propagation taps of one forward pass: the spmm output node and its
/// dense input, per layer. Edge scoring reads gradients off these.
struct ExtractorTaps {
  std::vector<NodeRef> prop_out;
  std::vector<NodeRef> prop_in;
};

/// Z^l = act(A_hat * Z^{l-1} * (W^l ⊙ M^l)) for l = 1..L; the final layer
/// is linear.
inline NodeRef forward_extractor_with(Tape& tape, const CsrAdjacency& adj, NodeRef features,
                                      const FeatureExtractor& ex, const LayerNodes& nodes,
                                      ExtractorTaps* taps = nullptr) {
  NodeRef z = features;
  const int depth = static_cast<int>(ex.layers.size());
  for (int l = 0; l < depth; ++l) {
    NodeRef pre = tape.matmul(z, nodes.effective[l]);
    z = tape.spmm(adj, pre);
    if (taps) {
      taps->prop_in.push_back(pre);
      taps->prop_out.push_back(z);
    }
    if (l + 1 < depth)
      z = ex.activation == Activation::Relu ? tape.relu(z) : tape.leaky_relu(z, ex.leaky_slope);
  }
  return z;
}

struct ExtractorNodes {
  NodeRef embeddings;
  std::vector<NodeRef> weights;
  std::vector<NodeRef> masks;
};

/// One-shot convenience wrapper around make_layer_nodes + forward.
inline ExtractorNodes forward_extractor(Tape& tape, const CsrAdjacency& adj, NodeRef features,
                                        const FeatureExtractor& ex, bool use_masks = true,
                                        bool unit_masks = false) {
  LayerNodes nodes = make_layer_nodes(tape, ex, use_masks, unit_masks);
  ExtractorNodes out;
  out.embeddings = forward_extractor_with(tape, adj, features, ex, nodes);
  out.weights = std::move(nodes.weights);
  out.masks = std::move(nodes.masks);
  return out;
}

struct HeadNodes {
  NodeRef known_head;
  NodeRef unknown_head;  // invalid when built without the unknown column
};

inline HeadNodes make_classifier_nodes(Tape& tape, const OpenSetClassifier& cls,
                                       bool with_unknown = true) {
  HeadNodes h;
  h.known_head = tape.constant(cls.known_head);
  if (with_unknown) h.unknown_head = tape.constant(cls.unknown_head);
  return h;
}

/// n x (|C_s|+1) logits, or n x |C_s| when the unknown head is absent; the
/// caller applies log-softmax.
inline NodeRef classify_with(Tape& tape, NodeRef z, const HeadNodes& heads) {
  NodeRef known = tape.matmul(z, heads.known_head);
  if (!heads.unknown_head.valid()) return known;
  return tape.concat_cols(known, tape.matmul(z, heads.unknown_head));
}

struct ClassifierNodes {
  NodeRef logits;
  NodeRef known_head;
  NodeRef unknown_head;
};

inline ClassifierNodes classify(Tape& tape, NodeRef z, const OpenSetClassifier& cls) {
  HeadNodes h = make_classifier_nodes(tape, cls, true);
  return {classify_with(tape, z, h), h.known_head, h.unknown_head};
}

inline ClassifierNodes classify_known(Tape& tape, NodeRef z, const OpenSetClassifier& cls) {
  HeadNodes h = make_classifier_nodes(tape, cls, false);
  return {classify_with(tape, z, h), h.known_head, NodeRef{}};
}

struct DiscNodes {
  NodeRef w1;
  NodeRef w2;
};

inline DiscNodes make_discriminator_nodes(Tape& tape, const DomainDiscriminator& disc) {
  return {tape.constant(disc.w1), tape.constant(disc.w2)};
}

inline NodeRef discriminate_with(Tape& tape, NodeRef z, const DiscNodes& nodes, Activation act,
                                 double leaky_slope, double scale, bool with_grl = true) {
  NodeRef h = with_grl ? tape.grad_reverse(z, scale) : z;
  h = tape.matmul(h, nodes.w1);
  h = act == Activation::Relu ? tape.relu(h) : tape.leaky_relu(h, leaky_slope);
  return tape.matmul(h, nodes.w2);
}

struct DiscriminatorNodes {
  NodeRef logits;
  NodeRef w1;
  NodeRef w2;
};

/// grad_reverse then the 2-layer perceptron; 3 logits per node. scale < 0
/// means "use the discriminator's configured scale".
inline DiscriminatorNodes discriminate(Tape& tape, NodeRef z, const DomainDiscriminator& disc,
                                        Activation act, double leaky_slope, double scale = -1.0,
                                        bool with_grl = true) {
  DiscNodes nodes = make_discriminator_nodes(tape, disc);
  NodeRef logits = discriminate_with(tape, z, nodes, act, leaky_slope,
                                     scale < 0.0 ? disc.grl_scale : scale, with_grl);
  return {logits, nodes.w1, nodes.w2};
}

// ---------------------------------------------------------------------------
// Checkpoint container (binary, versioned; field order in README)
// ---------------------------------------------------------------------------

struct Checkpoint {
  std::uint32_t version = 1;
  std::uint64_t seed = 0;
  std::uint8_t variant = 0;  // trainer's Variant enum value
  double tau = 0.5;
  Model model;
  DenseMatrix feature_delta;                  // n_t x f; empty if unused
  std::vector<std::pair<int, int>> flips;     // committed edge flips, in order
};

namespace detail {

inline void write_u32(std::ofstream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_u64(std::ofstream& o, std::uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }
inline void write_i32(std::ofstream& o, std::int32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_f64(std::ofstream& o, double v) { o.write(reinterpret_cast<const char*>(&v), 8); }
inline void write_u8(std::ofstream& o, std::uint8_t v) { o.write(reinterpret_cast<const char*>(&v), 1); }

inline std::uint32_t read_u32(std::ifstream& i) { std::uint32_t v; i.read(reinterpret_cast<char*>(&v), 4); return v; }
inline std::uint64_t read_u64(std::ifstream& i) { std::uint64_t v; i.read(reinterpret_cast<char*>(&v), 8); return v; }
inline std::int32_t read_i32(std::ifstream& i) { std::int32_t v; i.read(reinterpret_cast<char*>(&v), 4); return v; }
inline double read_f64(std::ifstream& i) { double v; i.read(reinterpret_cast<char*>(&v), 8); return v; }
inline std::uint8_t read_u8(std::ifstream& i) { std::uint8_t v; i.read(reinterpret_cast<char*>(&v), 1); return v; }

inline void write_matrix(std::ofstream& o, const DenseMatrix& m) {
  write_i32(o, m.rows);
  write_i32(o, m.cols);
  o.write(reinterpret_cast<const char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

inline DenseMatrix read_matrix(std::ifstream& i) {
  const int r = read_i32(i);
  const int c = read_i32(i);
  if (r < 0 || c < 0) throw std::runtime_error("checkpoint: negative matrix shape");
  DenseMatrix m(r, c);
  i.read(reinterpret_cast<char*>(m.data.data()),
         static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  return m;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write("OSGD", 4);
  detail::write_u32(out, ckpt.version);
  detail::write_u64(out, ckpt.seed);
  detail::write_u8(out, ckpt.variant);
  detail::write_f64(out, ckpt.tau);
  const Model& m = ckpt.model;
  detail::write_u8(out, m.extractor.activation == Activation::Relu ? 0 : 1);
  detail::write_f64(out, m.extractor.leaky_slope);
  detail::write_f64(out, m.discriminator.grl_scale);
  detail::write_i32(out, m.dims.feature_dim);
  detail::write_i32(out, static_cast<int>(m.dims.hidden.size()));
  for (int d : m.dims.hidden) detail::write_i32(out, d);
  detail::write_i32(out, m.dims.known_count);
  detail::write_i32(out, m.dims.disc_hidden);
  for (const auto& layer : m.extractor.layers) {
    detail::write_matrix(out, layer.weight);
    detail::write_matrix(out, layer.mask);
  }
  detail::write_matrix(out, m.classifier.known_head);
  detail::write_matrix(out, m.classifier.unknown_head);
  detail::write_matrix(out, m.discriminator.w1);
  detail::write_matrix(out, m.discriminator.w2);
  detail::write_u8(out, ckpt.feature_delta.size() > 0 ? 1 : 0);
  if (ckpt.feature_delta.size() > 0) detail::write_matrix(out, ckpt.feature_delta);
  detail::write_i32(out, static_cast<int>(ckpt.flips.size()));
  for (auto [u, v] : ckpt.flips) {
    detail::write_i32(out, u);
    detail::write_i32(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "OSGD") throw std::runtime_error("checkpoint: bad magic");
  Checkpoint ckpt;
  ckpt.version = detail::read_u32(in);
  if (ckpt.version != 1)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(ckpt.version));
  ckpt.seed = detail::read_u64(in);
  ckpt.variant = detail::read_u8(in);
  ckpt.tau = detail::read_f64(in);
  Model& m = ckpt.model;
  m.extractor.activation = detail::read_u8(in) == 0 ? Activation::Relu : Activation::LeakyRelu;
  m.extractor.leaky_slope = detail::read_f64(in);
  m.discriminator.grl_scale = detail::read_f64(in);
  m.dims.feature_dim = detail::read_i32(in);
  const int layer_count = detail::read_i32(in);
  m.dims.hidden.resize(layer_count);
  for (auto& d : m.dims.hidden) d = detail::read_i32(in);
  m.dims.known_count = detail::read_i32(in);
  m.dims.disc_hidden = detail::read_i32(in);
  m.extractor.layers.resize(layer_count);
  for (auto& layer : m.extractor.layers) {
    layer.weight = detail::read_matrix(in);
    layer.mask = detail::read_matrix(in);
  }
  m.classifier.known_head = detail::read_matrix(in);
  m.classifier.unknown_head = detail::read_matrix(in);
  m.discriminator.w1 = detail::read_matrix(in);
  m.discriminator.w2 = detail::read_matrix(in);
  if (detail::read_u8(in)) ckpt.feature_delta = detail::read_matrix(in);
  const int flip_count = detail::read_i32(in);
  ckpt.flips.resize(flip_count);
  for (auto& [u, v] : ckpt.flips) {
    u = detail::read_i32(in);
    v = detail::read_i32(in);
  }
  if (!in) throw std::runtime_error("checkpoint truncated: " + path);
  return ckpt;
}

}  // namespace osgda
