"""Invariant-subspace algorithms on a three-state example.

A sensor reads x2 and x3; an unknown input drives x1, which it cannot see.
We compute the smallest good conditioned-invariant subspace containing the
input direction, pick an output injection and look at the quotient map.
"""

import numpy as np

from geoduio import geomctl, matlin
from geoduio.geomctl import GoodRegion

A = np.array([[-1.0, 0.0, 0.0],
              [1.0, -2.0, 0.0],
              [0.0, 1.0, 3.0]])
C = np.array([[0.0, 1.0, 0.0],
              [0.0, 0.0, 1.0]])
Bbar = np.array([[1.0], [0.0], [0.0]])

print("rank C Bbar =", matlin.rank(C @ Bbar), " rank Bbar =", matlin.rank(Bbar))

ws = geomctl.wstar_g(A, C, Bbar, GoodRegion(0.5))
print("dim W*_g =", ws.Wg.dim)
print("basis:\n", np.round(ws.Wg.basis, 4))
print("contains Im Bbar:", ws.Wg.contains(matlin.image(Bbar)))
print("(C, A)-invariant:", geomctl.is_conditioned_invariant(A, C, ws.Wg))

L = geomctl.stabilizing_injection(A, C, ws, GoodRegion(0.5))
q = geomctl.decompose(A + L @ C, ws.Wg)
print("restricted spectrum:", np.round(np.linalg.eigvals(q.restricted), 4))
print("quotient spectrum:  ", np.round(np.linalg.eigvals(q.induced), 4))
