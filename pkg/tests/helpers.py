"""Shared test fixtures that do not depend on pytest machinery."""

import numpy as np

from varcalc.fields import ScalarField


def random_quadratic(chart, rng, scale=0.5, label="rand"):
    """Random ambient polynomial ``c + b.x + x^T A x`` with exact gradient."""
    n = chart.ambient_dim
    c = scale * rng.standard_normal()
    b = scale * rng.standard_normal(n)
    A = scale * rng.standard_normal((n, n))
    A = 0.5 * (A + A.T)

    def v(x):
        return c + np.einsum("a,a...->...", b, x) + np.einsum("a...,ab,b...->...", x, A, x)

    def grad(x):
        return b.reshape((n,) + (1,) * (x.ndim - 1)) + 2.0 * np.einsum("ab,b...->a...", A, x)

    return ScalarField.from_ambient(chart, v, grad, label=label)


def trig_field(chart, rng, scale=0.4, label="trig"):
    """Random ``a sin(x1 + p) cos(2 x2) + b x3`` style field in ambient coordinates."""
    n = chart.ambient_dim
    a, b, p = scale * rng.standard_normal(3)

    def v(x):
        return a * np.sin(x[0] + p) * np.cos(2 * x[1]) + b * x[n - 1]

    def grad(x):
        g = np.zeros(x.shape)
        g[0] = a * np.cos(x[0] + p) * np.cos(2 * x[1])
        g[1] = -2 * a * np.sin(x[0] + p) * np.sin(2 * x[1])
        g[n - 1] = g[n - 1] + b
        return g

    return ScalarField.from_ambient(chart, v, grad, label=label)
