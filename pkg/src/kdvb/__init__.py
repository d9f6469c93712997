"""Numerical study of decay rates for a KdV-Burgers type equation.

The package solves u_t + (b/2 u^2 + c/3 u^3)_x + k u_xxx = u_xx for slowly
decaying initial data, evaluates the closed-form asymptotic profiles the
solution relaxes to, and measures the convergence rates between the two.
"""

__version__ = "0.1.0"
