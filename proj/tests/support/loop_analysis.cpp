#include "support/loop_analysis.hpp"

#include <Eigen/Dense>

#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

namespace hybridspec::testing {

namespace {

struct Branch {
    int a = 0;
    int b = 0;
    std::complex<double> z;
    std::complex<double> emf;  // v_a - v_b = z i + emf
};

}  // namespace

std::complex<double> loop_input_impedance(const CircuitNetwork& net, double omega) {
    const std::complex<double> i{0.0, 1.0};
    std::map<std::string, int> ids;
    auto id = [&](const std::string& name) {
        auto [it, inserted] = ids.emplace(name, static_cast<int>(ids.size()));
        return it->second;
    };
    std::vector<Branch> branches;
    for (const auto& e : net.elements) {
        std::complex<double> z;
        switch (e.kind) {
            case ElementKind::Resistor: z = e.value; break;
            case ElementKind::Inductor: z = i * omega * e.value; break;
            case ElementKind::Capacitor: z = 1.0 / (i * omega * e.value); break;
        }
        branches.push_back({id(e.node_a), id(e.node_b), z, 0.0});
    }
    const int source = static_cast<int>(branches.size());
    branches.push_back({id(net.probe), id(net.ground), 0.0, 1.0});

    const int nodes = static_cast<int>(ids.size());
    std::vector<std::vector<int>> incident(static_cast<std::size_t>(nodes));
    for (int k = 0; k < static_cast<int>(branches.size()); ++k) {
        incident[static_cast<std::size_t>(branches[static_cast<std::size_t>(k)].a)].push_back(k);
        incident[static_cast<std::size_t>(branches[static_cast<std::size_t>(k)].b)].push_back(k);
    }

    // Breadth-first spanning tree rooted at ground.
    std::vector<int> parent_edge(static_cast<std::size_t>(nodes), -1);
    std::vector<int> depth(static_cast<std::size_t>(nodes), -1);
    std::vector<bool> in_tree(branches.size(), false);
    const int root = ids.at(net.ground);
    depth[static_cast<std::size_t>(root)] = 0;
    std::queue<int> queue;
    queue.push(root);
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop();
        for (int k : incident[static_cast<std::size_t>(u)]) {
            const auto& br = branches[static_cast<std::size_t>(k)];
            const int v = br.a == u ? br.b : br.a;
            if (depth[static_cast<std::size_t>(v)] >= 0) continue;
            depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
            parent_edge[static_cast<std::size_t>(v)] = k;
            in_tree[static_cast<std::size_t>(k)] = true;
            queue.push(v);
        }
    }
    for (int d : depth) {
        if (d < 0) throw std::runtime_error("loop analysis: disconnected network");
    }
    auto parent_of = [&](int x) {
        const auto& br = branches[static_cast<std::size_t>(parent_edge[static_cast<std::size_t>(x)])];
        return br.a == x ? br.b : br.a;
    };

    std::vector<std::vector<double>> loops;
    for (int k = 0; k < static_cast<int>(branches.size()); ++k) {
        if (in_tree[static_cast<std::size_t>(k)]) continue;
        std::vector<double> row(branches.size(), 0.0);
        row[static_cast<std::size_t>(k)] = 1.0;
        // Chord runs a -> b; close the loop through the tree from b back to a.
        int x = branches[static_cast<std::size_t>(k)].b;
        int y = branches[static_cast<std::size_t>(k)].a;
        std::vector<std::pair<int, double>> down;
        while (x != y) {
            if (depth[static_cast<std::size_t>(x)] >= depth[static_cast<std::size_t>(y)]) {
                const int e = parent_edge[static_cast<std::size_t>(x)];
                row[static_cast<std::size_t>(e)] += branches[static_cast<std::size_t>(e)].a == x ? 1.0 : -1.0;
                x = parent_of(x);
            } else {
                const int e = parent_edge[static_cast<std::size_t>(y)];
                row[static_cast<std::size_t>(e)] += branches[static_cast<std::size_t>(e)].a == y ? -1.0 : 1.0;
                y = parent_of(y);
            }
        }
        loops.push_back(std::move(row));
    }

    const auto nl = static_cast<Eigen::Index>(loops.size());
    const auto nb = static_cast<Eigen::Index>(branches.size());
    Eigen::MatrixXcd b_mat = Eigen::MatrixXcd::Zero(nl, nb);
    for (Eigen::Index l = 0; l < nl; ++l) {
        for (Eigen::Index e = 0; e < nb; ++e) b_mat(l, e) = loops[static_cast<std::size_t>(l)][static_cast<std::size_t>(e)];
    }
    Eigen::VectorXcd z(nb);
    Eigen::VectorXcd u(nb);
    for (Eigen::Index e = 0; e < nb; ++e) {
        z(e) = branches[static_cast<std::size_t>(e)].z;
        u(e) = branches[static_cast<std::size_t>(e)].emf;
    }
    const Eigen::MatrixXcd lhs = b_mat * z.asDiagonal() * b_mat.transpose();
    const Eigen::VectorXcd rhs = -(b_mat * u);
    const Eigen::VectorXcd loop_currents = lhs.fullPivLu().solve(rhs);
    const Eigen::VectorXcd branch_currents = b_mat.transpose() * loop_currents;
    // Current through the source runs probe -> ground, so the network draws -i_s.
    return 1.0 / (-branch_currents(source));
}

}  // namespace hybridspec::testing
