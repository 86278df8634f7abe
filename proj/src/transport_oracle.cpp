#include "bilayer/transport_oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bilayer/error.hpp"
#include "bilayer/numerics.hpp"

namespace bilayer::transport {

double DiscreteMeasure::total() const { return ordered_sum(weights); }

void DiscreteMeasure::normalize() {
  const double t = total();
  if (!(t > 0.0)) throw Error(ErrorKind::invalid_argument, "cannot normalize a zero measure");
  for (double& w : weights) w /= t;
}

namespace {

void check_masses(double a, double b, double tolerance) {
  if (!(std::abs(a - b) <= tolerance * std::max({a, b, 1e-300}))) {
    throw Error(ErrorKind::mass_mismatch,
                fmt::format("total masses differ: {:.17g} vs {:.17g}", a, b));
  }
}

void check_weights(const DiscreteMeasure& m, const char* name) {
  if (m.points.size() != m.weights.size()) {
    throw Error(ErrorKind::invalid_argument, fmt::format("{}: points and weights differ in size", name));
  }
  for (double w : m.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::invalid_argument, fmt::format("{}: weights must be finite and >= 0", name));
    }
  }
}

// Primal network simplex on sources -> sinks plus an artificial root.
// Tree arrays are indexed by node; each non-root node stores its parent arc
// (pred), the arc direction relative to the parent and the arc's flow.
class NetworkSimplex {
 public:
  NetworkSimplex(const std::vector<Vec3>& xs, const std::vector<double>& a,
                 const std::vector<Vec3>& ys, const std::vector<double>& b)
      : n_(a.size()), m_(b.size()), root_(static_cast<int>(n_ + m_)) {
    px_.resize(n_);
    py_.resize(n_);
    pz_.resize(n_);
    qx_.resize(m_);
    qy_.resize(m_);
    qz_.resize(m_);
    for (std::size_t i = 0; i < n_; ++i) {
      px_[i] = xs[i].x();
      py_[i] = xs[i].y();
      pz_[i] = xs[i].z();
    }
    for (std::size_t j = 0; j < m_; ++j) {
      qx_[j] = ys[j].x();
      qy_[j] = ys[j].y();
      qz_[j] = ys[j].z();
    }
    double cmax = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) cmax = std::max(cmax, real_cost(i, j));
    }
    // Any flow routed through the root costs 2 * artificial_ > cmax, so the
    // optimum never uses artificial arcs.
    artificial_ = cmax + 1.0;
    tolerance_ = 1e-13 * std::max(cmax, 1e-300);
    real_arcs_ = static_cast<std::int64_t>(n_ * m_);
    in_tree_.assign(static_cast<std::size_t>(real_arcs_), 0);

    const std::size_t V = n_ + m_ + 1;
    parent_.assign(V, -1);
    pred_.assign(V, -1);
    up_.assign(V, 0);
    flow_.assign(V, 0.0);
    depth_.assign(V, 0);
    pi_.assign(V, 0.0);
    adj_.assign(V, {});
    for (std::size_t i = 0; i < n_; ++i) {
      const int u = static_cast<int>(i);
      parent_[u] = root_;
      pred_[u] = real_arcs_ + u;
      up_[u] = 1;
      flow_[u] = a[i];
      depth_[u] = 1;
      pi_[u] = -artificial_;
      link(u, root_);
    }
    for (std::size_t j = 0; j < m_; ++j) {
      const int u = static_cast<int>(n_ + j);
      parent_[u] = root_;
      pred_[u] = real_arcs_ + u;
      up_[u] = 0;
      flow_[u] = b[j];
      depth_[u] = 1;
      pi_[u] = artificial_;
      link(u, root_);
    }
    block_ = std::max<std::int64_t>(10, static_cast<std::int64_t>(std::sqrt(double(real_arcs_))));
  }

  void run() {
    const std::int64_t max_pivots = 200 * (real_arcs_ + 1000);
    std::int64_t pivots = 0;
    std::int64_t in_arc = -1;
    while (find_entering(in_arc)) {
      pivot(in_arc);
      if (++pivots > max_pivots) {
        throw Error(ErrorKind::root_solve, "network simplex exceeded its pivot budget");
      }
    }
    pivots_ = pivots;
  }

  TransportPlan plan() const {
    TransportPlan out;
    for (int u = 0; u < root_; ++u) {
      if (pred_[u] < real_arcs_ && flow_[u] > 0.0) {
        const auto i = static_cast<std::size_t>(pred_[u] / static_cast<std::int64_t>(m_));
        const auto j = static_cast<std::size_t>(pred_[u] % static_cast<std::int64_t>(m_));
        out.entries.push_back({i, j, flow_[u]});
      }
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const PlanEntry& x, const PlanEntry& y) {
      return x.source != y.source ? x.source < y.source : x.target < y.target;
    });
    CompensatedSum cost;
    for (const auto& e : out.entries) cost += e.mass * real_cost(e.source, e.target);
    out.cost = cost.value();
    return out;
  }

  double real_cost(std::size_t i, std::size_t j) const {
    const double dx = px_[i] - qx_[j];
    const double dy = py_[i] - qy_[j];
    const double dz = pz_[i] - qz_[j];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

 private:
  int source_of(std::int64_t arc) const {
    if (arc < real_arcs_) return static_cast<int>(arc / static_cast<std::int64_t>(m_));
    const int u = static_cast<int>(arc - real_arcs_);
    return u < static_cast<int>(n_) ? u : root_;
  }
  int target_of(std::int64_t arc) const {
    if (arc < real_arcs_) return static_cast<int>(n_ + arc % static_cast<std::int64_t>(m_));
    const int u = static_cast<int>(arc - real_arcs_);
    return u < static_cast<int>(n_) ? root_ : u;
  }
  double cost_of(std::int64_t arc) const {
    if (arc < real_arcs_) {
      return real_cost(static_cast<std::size_t>(arc / static_cast<std::int64_t>(m_)),
                       static_cast<std::size_t>(arc % static_cast<std::int64_t>(m_)));
    }
    return artificial_;
  }

  void link(int u, int v) {
    adj_[u].push_back(v);
    adj_[v].push_back(u);
  }
  void unlink(int u, int v) {
    auto drop = [](std::vector<int>& list, int x) {
      auto it = std::find(list.begin(), list.end(), x);
      *it = list.back();
      list.pop_back();
    };
    drop(adj_[u], v);
    drop(adj_[v], u);
  }

  // Block search: scan blocks cyclically, take the most negative reduced cost
  // within the first block that has one.
  bool find_entering(std::int64_t& in_arc) {
    double best = -tolerance_;
    std::int64_t chosen = -1;
    std::int64_t count = block_;
    std::int64_t e = next_arc_;
    for (std::int64_t scanned = 0; scanned < real_arcs_; ++scanned) {
      if (!in_tree_[static_cast<std::size_t>(e)]) {
        const std::size_t i = static_cast<std::size_t>(e / static_cast<std::int64_t>(m_));
        const std::size_t j = static_cast<std::size_t>(e % static_cast<std::int64_t>(m_));
        const double rc = real_cost(i, j) + pi_[i] - pi_[n_ + j];
        if (rc < best) {
          best = rc;
          chosen = e;
        }
      }
      if (++e == real_arcs_) e = 0;
      if (--count == 0) {
        if (chosen >= 0) break;
        count = block_;
      }
    }
    if (chosen < 0) return false;
    next_arc_ = e;
    in_arc = chosen;
    return true;
  }

  void pivot(std::int64_t in_arc) {
    const int first = source_of(in_arc);
    const int second = target_of(in_arc);
    int a = first;
    int b = second;
    while (a != b) {
      if (depth_[a] > depth_[b]) {
        a = parent_[a];
      } else if (depth_[b] > depth_[a]) {
        b = parent_[b];
      } else {
        a = parent_[a];
        b = parent_[b];
      }
    }
    const int join = a;

    constexpr double inf = std::numeric_limits<double>::infinity();
    double delta = inf;
    int u_out = -1;
    int side = 0;
    for (int u = first; u != join; u = parent_[u]) {
      const double d = up_[u] ? flow_[u] : inf;
      if (d < delta) {
        delta = d;
        u_out = u;
        side = 1;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = up_[u] ? inf : flow_[u];
      if (d <= delta) {
        delta = d;
        u_out = u;
        side = 2;
      }
    }
    if (u_out < 0) throw Error(ErrorKind::root_solve, "unbounded pivot in network simplex");

    if (delta > 0.0) {
      for (int u = first; u != join; u = parent_[u]) flow_[u] += up_[u] ? -delta : delta;
      for (int u = second; u != join; u = parent_[u]) flow_[u] += up_[u] ? delta : -delta;
    }
    flow_[u_out] = 0.0;

    const int w_in = side == 1 ? first : second;
    const int w_out = side == 1 ? second : first;
    if (pred_[u_out] < real_arcs_) in_tree_[static_cast<std::size_t>(pred_[u_out])] = 0;
    unlink(u_out, parent_[u_out]);

    // Re-hang the cut subtree at w_in by reversing the path w_in -> u_out.
    path_.clear();
    for (int u = w_in; u != u_out; u = parent_[u]) path_.push_back(u);
    path_.push_back(u_out);
    for (std::size_t k = path_.size() - 1; k >= 1; --k) {
      const int v = path_[k];
      const int below = path_[k - 1];
      parent_[v] = below;
      pred_[v] = pred_[below];
      up_[v] = up_[below] ? 0 : 1;
      flow_[v] = flow_[below];
    }
    parent_[w_in] = w_out;
    pred_[w_in] = in_arc;
    up_[w_in] = w_in == first ? 1 : 0;
    flow_[w_in] = delta;
    in_tree_[static_cast<std::size_t>(in_arc)] = 1;
    link(w_in, w_out);

    // Depth and potentials of the re-hung subtree.
    stack_.clear();
    stack_.push_back(w_in);
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      const int p = parent_[u];
      depth_[u] = depth_[p] + 1;
      const double c = cost_of(pred_[u]);
      pi_[u] = up_[u] ? pi_[p] - c : pi_[p] + c;
      for (int v : adj_[u]) {
        if (v != p) stack_.push_back(v);
      }
    }
  }

  std::size_t n_;
  std::size_t m_;
  int root_;
  std::vector<double> px_, py_, pz_, qx_, qy_, qz_;
  double artificial_ = 1.0;
  double tolerance_ = 0.0;
  std::int64_t real_arcs_ = 0;
  std::int64_t block_ = 10;
  std::int64_t next_arc_ = 0;
  std::int64_t pivots_ = 0;
  std::vector<char> in_tree_;
  std::vector<int> parent_;
  std::vector<std::int64_t> pred_;
  std::vector<char> up_;
  std::vector<double> flow_;
  std::vector<int> depth_;
  std::vector<double> pi_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> path_;
  std::vector<int> stack_;
};

}  // namespace

TransportPlan emd(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const EmdOptions& options) {
  check_weights(mu, "mu");
  check_weights(nu, "nu");
  if (mu.size() > options.cap || nu.size() > options.cap) {
    throw Error(ErrorKind::size_cap,
                fmt::format("supports of size {} and {} exceed the cap {}; raise the cap or thin "
                            "the measures",
                            mu.size(), nu.size(), options.cap));
  }
  check_masses(mu.total(), nu.total(), options.mass_tolerance);

  std::vector<std::size_t> src_index;
  std::vector<std::size_t> dst_index;
  std::vector<Vec3> xs;
  std::vector<Vec3> ys;
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weights[i] > 0.0) {
      src_index.push_back(i);
      xs.push_back(mu.points[i]);
      a.push_back(mu.weights[i]);
    }
  }
  for (std::size_t j = 0; j < nu.size(); ++j) {
    if (nu.weights[j] > 0.0) {
      dst_index.push_back(j);
      ys.push_back(nu.points[j]);
      b.push_back(nu.weights[j]);
    }
  }
  if (a.empty() || b.empty()) return {};

  NetworkSimplex solver(xs, a, ys, b);
  solver.run();
  TransportPlan plan = solver.plan();
  for (auto& e : plan.entries) {
    e.source = src_index[e.source];
    e.target = dst_index[e.target];
  }
  return plan;
}

DualCertificate dual_certificate(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                 const Potential& potential) {
  check_weights(mu, "mu");
  check_weights(nu, "nu");
  std::vector<double> fx(mu.size());
  std::vector<double> fy(nu.size());
  CompensatedSum value;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    fx[i] = potential(mu.points[i]);
    value += mu.weights[i] * fx[i];
  }
  for (std::size_t j = 0; j < nu.size(); ++j) {
    fy[j] = potential(nu.points[j]);
    value += -nu.weights[j] * fy[j];
  }
  DualCertificate cert;
  cert.dual_value = value.value();
  double eta = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const double dist = (mu.points[i] - nu.points[j]).norm();
      const double jump = std::abs(fx[i] - fy[j]);
      if (dist > 0.0) {
        eta = std::max(eta, (jump - dist) / dist);
      } else if (jump > 0.0) {
        eta = std::numeric_limits<double>::infinity();
      }
    }
  }
  cert.eta = std::isfinite(eta) || eta > 0.0 ? eta : 0.0;
  if (std::isinf(cert.eta)) {
    cert.bound = 0.0;
  } else {
    cert.bound = cert.dual_value / (1.0 + std::max(cert.eta, 0.0));
  }
  return cert;
}

double monotone_1d(const DiscreteMeasure& f_plus, const DiscreteMeasure& f_minus,
                   double mass_tolerance) {
  check_weights(f_plus, "f_plus");
  check_weights(f_minus, "f_minus");
  check_masses(f_plus.total(), f_minus.total(), mass_tolerance);
  auto order = [](const DiscreteMeasure& m) {
    std::vector<std::size_t> idx(m.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return m.points[a].x() < m.points[b].x();
    });
    return idx;
  };
  const auto p = order(f_plus);
  const auto q = order(f_minus);
  std::size_t i = 0;
  std::size_t j = 0;
  double ra = p.empty() ? 0.0 : f_plus.weights[p[0]];
  double rb = q.empty() ? 0.0 : f_minus.weights[q[0]];
  CompensatedSum cost;
  while (i < p.size() && j < q.size()) {
    const double move = std::min(ra, rb);
    cost += move * std::abs(f_plus.points[p[i]].x() - f_minus.points[q[j]].x());
    ra -= move;
    rb -= move;
    if (ra <= 0.0 && ++i < p.size()) ra = f_plus.weights[p[i]];
    if (rb <= 0.0 && ++j < q.size()) rb = f_minus.weights[q[j]];
  }
  return cost.value();
}

void write_measure_csv(std::ostream& out, const DiscreteMeasure& measure) {
  out << "x,y,z,weight\n";
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const auto& x = measure.points[i];
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", x.x(), x.y(), x.z(),
                       measure.weights[i]);
  }
}

DiscreteMeasure read_measure_csv(std::istream& in) {
  DiscreteMeasure m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("x,", 0) == 0)) continue;
    std::stringstream row(line);
    std::string cell;
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(row, cell, ',')) {
        throw Error(ErrorKind::invalid_argument, fmt::format("measure csv line {}: expected 4 columns", lineno));
      }
      try {
        v[k] = std::stod(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_argument, fmt::format("measure csv line {}: bad number", lineno));
      }
    }
    m.add(Vec3(v[0], v[1], v[2]), v[3]);
  }
  return m;
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << "i,j,mass\n";
  for (const auto& e : plan.entries) out << fmt::format("{},{},{:.17g}\n", e.source, e.target, e.mass);
}

}  // namespace bilayer::transport
