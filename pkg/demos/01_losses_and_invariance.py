"""Tour of the ranking loss family.

Shows loss values and analytic gradients on a tiny list, and why the
pairwise/listwise losses ignore a constant added to every score while the
pointwise ones do not.
"""
import numpy as np

from rankdistill import LossKind, is_translation_invariant, loss_grad, loss_value

y = np.array([2.0, 1.0, 0.0])   # graded relevance
s = np.array([0.4, 1.1, -0.3])  # model scores

print("labels:", y)
print("scores:", s)
print()

for kind in LossKind:
    yy = y / 2.0 if kind is LossKind.POINTWISE_LOGISTIC else y
    value = loss_value(kind, yy, s)
    grad = loss_grad(kind, yy, s)
    print(f"{kind.value:9s} value {value:8.4f}   grad {np.round(grad, 4)}")

print()
print("adding a constant w to every score:")
for w in (5.0, -40.0):
    for kind in LossKind:
        yy = y / 2.0 if kind is LossKind.POINTWISE_LOGISTIC else y
        delta = abs(loss_value(kind, yy, s + w) - loss_value(kind, yy, s))
        flag = "invariant" if is_translation_invariant(kind) else "changes"
        print(f"  w={w:+6.1f} {kind.value:9s} |delta| = {delta:.3e}  ({flag})")

# The invariant losses depend on scores only through pairwise differences,
# which is exactly why raw scores of a trained ranker carry no meaningful
# absolute level -- the motivation for transforming teacher scores before
# distilling from them (see 03_self_distillation.py).
