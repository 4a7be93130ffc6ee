#include "gfcad/cad_types.hpp"

namespace gfcad {

namespace {

bool nodes_equal_rec(const CadTree& a, int ia, const CadTree& b, int ib) {
    const TreeNode& na = a.node(ia);
    const TreeNode& nb = b.node(ib);
    if (na.node_type != nb.node_type) return false;
    if (na.curve != nb.curve) return false;
    if (na.extrusion != nb.extrusion) return false;
    if (na.children.size() != nb.children.size()) return false;
    for (std::size_t i = 0; i < na.children.size(); ++i) {
        if (!nodes_equal_rec(a, na.children[i], b, nb.children[i])) return false;
    }
    return true;
}

void copy_preorder(const CadTree& src, int idx, int parent, CadTree& dst) {
    TreeNode n;
    n.node_type = src.node(idx).node_type;
    n.curve = src.node(idx).curve;
    n.extrusion = src.node(idx).extrusion;
    n.parent = parent;
    int self = dst.add_node(std::move(n));
    if (parent >= 0) dst.node(parent).children.push_back(self);
    for (int c : src.node(idx).children) copy_preorder(src, c, self, dst);
}

}  // namespace

bool trees_equal(const CadTree& a, const CadTree& b) {
    if (a.nodes.empty() || b.nodes.empty()) return a.nodes.empty() == b.nodes.empty();
    return nodes_equal_rec(a, a.root, b, b.root);
}

CadTree canonicalize(const CadTree& tree) {
    CadTree out;
    if (!tree.nodes.empty()) {
        copy_preorder(tree, tree.root, -1, out);
        out.root = 0;
    }
    return out;
}

}  // namespace gfcad
