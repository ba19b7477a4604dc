#pragma once

// Index-range partition tree for the HODLR format: binary splitting at
// ceil(size/2) until blocks are no larger than n_min.

#include <memory>
#include <stdexcept>
#include <vector>

namespace specproj {

struct PartitionTree {
    struct Node {
        int begin = 0;
        int size = 0;
        int left = -1;
        int right = -1;
        bool leaf() const { return left < 0; }
        int mid() const { return begin + (size + 1) / 2; }
    };

    int n = 0;
    int n_min = 0;
    int depth = 0; // number of levels with off-diagonal blocks
    std::vector<Node> nodes;

    PartitionTree(int n_, int n_min_) : n(n_), n_min(n_min_) {
        if (n < 1) throw std::invalid_argument("PartitionTree: n >= 1 required");
        if (n_min < 2) throw std::invalid_argument("PartitionTree: n_min >= 2 required");
        build(0, n, 0);
    }

    bool same_structure(const PartitionTree& other) const {
        if (n != other.n || nodes.size() != other.nodes.size()) return false;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].begin != other.nodes[i].begin || nodes[i].size != other.nodes[i].size ||
                nodes[i].left != other.nodes[i].left || nodes[i].right != other.nodes[i].right)
                return false;
        return true;
    }

private:
    int build(int begin, int size, int level) {
        const int id = static_cast<int>(nodes.size());
        nodes.push_back({begin, size, -1, -1});
        if (size > n_min) {
            depth = std::max(depth, level + 1);
            const int s1 = (size + 1) / 2;
            const int l = build(begin, s1, level + 1);
            const int r = build(begin + s1, size - s1, level + 1);
            nodes[id].left = l;
            nodes[id].right = r;
        }
        return id;
    }
};

inline std::shared_ptr<const PartitionTree> make_tree(int n, int n_min) {
    return std::make_shared<const PartitionTree>(n, n_min);
}

} // namespace specproj
