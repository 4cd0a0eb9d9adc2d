"""Combinatorial calculus for infinite connected sums of closed prime 3-manifolds."""
