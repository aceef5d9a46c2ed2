"""
A ranking tree on two features
==============================

TreeRank splits the feature space recursively. At every cell a
cost-sensitive classifier (cost = positive rate of the cell) decides which
part goes left; leaves read from left to right get decreasing scores.
"""
import numpy as np

from ftreerank import empirical_auc, grow_standard, prune, roc_curve

rng = np.random.default_rng(1)
n = 600
X = rng.uniform(-1, 1, size=(n, 2))
# positives are more likely near the corner (1, 1)
p = 1 / (1 + np.exp(-3 * (X[:, 0] + X[:, 1])))
y = np.where(rng.random(n) < p, 1, -1)
Xt = rng.uniform(-1, 1, size=(n, 2))
yt = np.where(rng.random(n) < 1 / (1 + np.exp(-3 * (Xt[:, 0] + Xt[:, 1]))), 1, -1)

for depth in (1, 2, 3, 4):
    tree = grow_standard(X, y, depth)
    test_auc = empirical_auc(tree.score(Xt), yt)
    print(f"depth {depth}: {tree.n_leaves:2d} leaves, train AUC {tree.train_auc:.3f}, test AUC {test_auc:.3f}")

# each leaf: (d, k) address, score, size and positive rate
tree = grow_standard(X, y, 3)
for addr, score in tree.leaf_scores().items():
    node = tree.nodes[addr]
    print(addr, score, node.n, round(node.n_pos / node.n, 2))

# merge sibling leaves when cross-validation says they do not help
pruned = prune(tree, X, y, seed=0)
print("pruned to", pruned.n_leaves, "leaves; cv", pruned.cv_report)
print("test AUC after pruning", empirical_auc(pruned.score(Xt), yt))

roc = roc_curve(pruned.score(Xt), yt)
print("ROC vertices", len(roc.points), "area", roc.area())
