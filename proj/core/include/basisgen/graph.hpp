#pragma once

#include <functional>
#include <string>
#include <vector>

#include "basisgen/tensor.hpp"

namespace basisgen {

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  int id() const { return id_; }
  Graph* graph() const { return graph_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

/// Define-by-run tape. Nodes are appended in evaluation order, so the tape
/// is always topologically sorted and backward() is a single reverse sweep
/// that touches each node exactly once. Graphs are rebuilt per forward pass
/// and confined to one thread.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Insert a constant leaf (no gradient).
  Var leaf(Tensor value);

  /// Insert a trainable leaf. After backward(), the accumulated gradient is
  /// written into `param.grad()`; the tensor must outlive the graph.
  Var param(Tensor& param);

  /// Reverse sweep from a scalar loss. Fan-out accumulates additively.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  const std::vector<double>& grad(Var v) const;
  Tensor grad_tensor(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

  // --- internal structure, used by the op implementations ---
  struct Node {
    std::string op;
    std::vector<int> inputs;
    Tensor value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool grad_seeded = false;
    std::function<void(Graph&, int)> backward;
    Tensor* external = nullptr;  // param write-back target
  };

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  Var emplace(std::string op, std::vector<int> inputs, Tensor value,
              std::function<void(Graph&, int)> backward);

  /// Adds `delta` into node `id`'s gradient buffer (allocating on demand).
  void accumulate(int id, const std::vector<double>& delta);
  void accumulate_at(int id, std::int64_t flat_index, double delta);

 private:
  std::vector<Node> nodes_;
};

// --- differentiable operations -------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var neg(Var a);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double c);
Var add_const(Var a, double c);

/// y = W x for W: [m,n], x: [n].
Var matvec(Var w, Var x);

Var reshape(Var a, Shape shape);

/// Concatenate along the channel axis: [Ca,H,W] + [Cb,H,W] -> [Ca+Cb,H,W].
Var concat_channels(Var a, Var b);

/// x: [C,H,W] plus per-channel bias [C].
Var add_channel_bias(Var x, Var bias);

/// Cross-correlation with stride 1. x: [Cin,H,W] or [N,Cin,H,W],
/// w: [Cout,Cin,L,L], L odd, output H' = H + 2*padding - L + 1.
/// Differentiable in both x and w.
Var conv2d(Var x, Var w, int padding);

/// rect(t) = max(0.2 t, t).
Var leaky_relu(Var a);
Var tanh_op(Var a);
Var sigmoid(Var a);

/// log with the argument floored at `floor`; zero gradient below the floor.
Var log_guarded(Var a, double floor = 1e-12);

Var abs_op(Var a);
Var sum(Var a);           // scalar
Var mean(Var a);          // scalar
Var spatial_mean(Var a);  // [C,H,W] -> [C]

/// Stops gradient: value copies through, graph edge is cut.
Var detach(Var a);

/// w[co,ci,u,v] = sum_k psi[u,v,k] * a[k,ci,co];
/// psi: [L,L,K], a: [K,Cin,Cout] -> w: [Cout,Cin,L,L]. Bilinear.
Var basis_combine(Var psi, Var a);

/// Left-fold mean of scalar nodes (deterministic reduction order).
Var mean_of(const std::vector<Var>& xs);

}  // namespace basisgen
