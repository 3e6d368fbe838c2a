#pragma once

#include <cstdint>
#include <vector>

namespace carpetlab::modgraph {

// Dinic max-flow on integer capacities.
class Dinic {
  public:
    explicit Dinic(int n) : g_(n), level_(n), iter_(n) {}

    void add_edge(int u, int v, long long cap);
    long long max_flow(int s, int t);
    // Residual reachability from s after max_flow.
    std::vector<char> reachable(int s) const;
    int phases() const { return phases_; }

  private:
    struct Edge {
        int to;
        int rev;
        long long cap;
    };
    bool bfs(int s, int t);
    long long dfs(int v, int t, long long f);

    std::vector<std::vector<Edge>> g_;
    std::vector<int> level_, iter_;
    int phases_ = 0;
};

}  // namespace carpetlab::modgraph
