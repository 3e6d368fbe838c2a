#include "carpetlab/maxflow.hpp"

#include <algorithm>
#include <queue>

namespace carpetlab::modgraph {

void Dinic::add_edge(int u, int v, long long cap) {
    g_[u].push_back({v, (int)g_[v].size(), cap});
    g_[v].push_back({u, (int)g_[u].size() - 1, 0});
}

bool Dinic::bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (const Edge& e : g_[v]) {
            if (e.cap > 0 && level_[e.to] < 0) {
                level_[e.to] = level_[v] + 1;
                q.push(e.to);
            }
        }
    }
    return level_[t] >= 0;
}

long long Dinic::dfs(int v, int t, long long f) {
    if (v == t) return f;
    for (int& i = iter_[v]; i < (int)g_[v].size(); ++i) {
        Edge& e = g_[v][i];
        if (e.cap > 0 && level_[v] < level_[e.to]) {
            long long d = dfs(e.to, t, std::min(f, e.cap));
            if (d > 0) {
                e.cap -= d;
                g_[e.to][e.rev].cap += d;
                return d;
            }
        }
    }
    return 0;
}

long long Dinic::max_flow(int s, int t) {
    long long flow = 0;
    while (bfs(s, t)) {
        ++phases_;
        std::fill(iter_.begin(), iter_.end(), 0);
        while (long long f = dfs(s, t, (long long)4e18)) flow += f;
    }
    return flow;
}

std::vector<char> Dinic::reachable(int s) const {
    std::vector<char> seen(g_.size(), 0);
    std::queue<int> q;
    seen[s] = 1;
    q.push(s);
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (const Edge& e : g_[v]) {
            if (e.cap > 0 && !seen[e.to]) {
                seen[e.to] = 1;
                q.push(e.to);
            }
        }
    }
    return seen;
}

}  // namespace carpetlab::modgraph
