"""Exhaustion trace functionals on finite truncations.

Values are computed ambient-vs-window: the operator is assembled on a larger
level K_m and the trace is restricted to the cells of K_n, so matrix elements
over the window agree with the infinite complex whenever the propagation ball
stays inside K_m.  Rigorous error bounds follow the Cauchy estimate pattern
c * ||T|| * eps_n * mu^r; curve errors are heuristic level-to-level
differences when a baseline curve is supplied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

# one trace sample


@dataclass
class TraceEstimate:
    value: float
    level: int | None = None
    error_bound: float | None = None
    kind: str = "heuristic"        # rigorous | heuristic
    normalization: str = "state"   # state (Phi_j) | volume (Tr^G_j)


@dataclass
class TraceCurve:
    samples: list           # list of (t, TraceEstimate)
    operator_tag: str = ""
    j: int = 0
    level: int | None = None
    ambient: int | None = None
    normalization: str = "volume"

    @property
    def times(self):
        return np.array([t for t, _ in self.samples])

    @property
    def values(self):
        return np.array([e.value for _, e in self.samples])

    def to_csv(self):
        lines = ["t,value,error_bound,kind"]
        for t, e in self.samples:
            err = "" if e.error_bound is None else f"{e.error_bound:.17g}"
            lines.append(f"{t:.17g},{e.value:.17g},{err},{e.kind}")
        return "\n".join(lines) + "\n"

    def envelope(self):
        return {
            "operator": self.operator_tag,
            "j": self.j,
            "level": self.level,
            "ambient": self.ambient,
            "normalization": self.normalization,
        }

    def to_json(self):
        env = self.envelope()
        env["samples"] = [
            {"t": t, "value": e.value, "error_bound": e.error_bound,
             "kind": e.kind}
            for t, e in self.samples
        ]
        return json.dumps(env, indent=1)


def cauchy_bound(norm, eps, mu, r, c=5.0):
    """The c * ||T|| * eps_n * mu^r error pattern (c = 5 for trace values,
    c = 2 for commutators)."""
    return float(c * norm * eps * mu ** r)


def window_trace(matrix, window):
    """Tr(E(window) T): sum of diagonal entries over the window indices."""
    return float(np.asarray(matrix.diagonal())[window].sum())


def trace_state(matrix, window, level=None, norm=None, eps=None, mu=None,
                r=1, c=5.0):
    """Phi_j truncation: Tr(E_n T)/|window|, with rigorous bound if the
    frontier data (eps, mu) and an operator norm are supplied."""
    value = window_trace(matrix, window) / len(window)
    if eps is not None and mu is not None and norm is not None:
        return TraceEstimate(value, level, cauchy_bound(norm, eps, mu, r, c),
                             "rigorous", "state")
    return TraceEstimate(value, level, None, "heuristic", "state")


def trace_volume(matrix, window, denom, level=None, norm=None, eps=None,
                 mu=None, r=1, c=5.0):
    """Tr^G_j truncation: Tr(E_n T)/|E_p K_n| with denom the top-cell count."""
    value = window_trace(matrix, window) / denom
    if eps is not None and mu is not None and norm is not None:
        return TraceEstimate(value, level, cauchy_bound(norm, eps, mu, r, c),
                             "rigorous", "volume")
    return TraceEstimate(value, level, None, "heuristic", "volume")


class SpectralWindow:
    """Eigendecomposition of a symmetric ambient operator plus the window
    weights w_k = sum_{cells in window} |<cell, psi_k>|^2.

    All curve evaluations reduce to sums over (eigenvalue, weight) pairs;
    dense eigh keeps the result deterministic to well below 1e-8.
    """

    def __init__(self, matrix, window):
        dense = np.asarray(matrix.todense() if hasattr(matrix, "todense")
                           else matrix, dtype=np.float64)
        if not np.allclose(dense, dense.T, atol=1e-12):
            raise ValueError("operator must be symmetric")
        self.eigenvalues, vecs = scipy.linalg.eigh(dense, driver="evd")
        self.weights = (vecs[window, :] ** 2).sum(axis=0)
        self.window_size = len(window)

    def functional_trace(self, f):
        """sum_k w_k f(lambda_k), unnormalized."""
        return float(self.weights @ f(self.eigenvalues))

    def min_positive(self, tol=1e-10):
        pos = self.eigenvalues[self.eigenvalues > tol]
        return float(pos.min()) if len(pos) else None

    def kernel_weight(self, tol=1e-10):
        return float(self.weights[np.abs(self.eigenvalues) <= tol].sum())


def _curve(spec, f, times, denom, tag, j, level, ambient, baseline):
    samples = []
    base = dict(zip(baseline.times, baseline.values)) if baseline else {}
    for t in times:
        v = spec.functional_trace(lambda lam: f(t, lam)) / denom
        err = abs(v - base[t]) if t in base else None
        kind = "heuristic"
        samples.append((float(t), TraceEstimate(v, level, err, kind, "volume")))
    return TraceCurve(samples, tag, j, level, ambient)


def heat_trace(spec: SpectralWindow, times, denom, tag="", j=0, level=None,
               ambient=None, baseline=None):
    """Tr(E_n e^{-t Delta})/denom over the time grid."""
    return _curve(spec, lambda t, lam: np.exp(-t * np.clip(lam, 0, None)),
                  times, denom, tag, j, level, ambient, baseline)


def resolvent_trace(spec: SpectralWindow, times, denom, tag="", j=0,
                    level=None, ambient=None, baseline=None):
    """Tr(E_n (1 + t Delta)^{-1})/denom over the time grid."""
    return _curve(spec, lambda t, lam: 1.0 / (1.0 + t * np.clip(lam, 0, None)),
                  times, denom, tag, j, level, ambient, baseline)


def power_trace(walk, window, k_max, denom=None):
    """tau(P^k) and the paired sums tau(P^k + P^{k+1}), k = 0..k_max.

    P is self-adjoint on l^2(G, c), so the diagonal of P^k matches that of
    the symmetrized S^k and a real eigendecomposition applies.
    """
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    if denom is None:
        denom = len(window)
    spec = SpectralWindow(walk.symmetrized, window)
    ks = np.arange(k_max + 2)
    tau = np.array([
        spec.functional_trace(lambda lam: lam ** k) / denom for k in ks
    ])
    return tau[:k_max + 1], tau[:k_max + 1] + tau[1:k_max + 2]


def spectral_density(spec: SpectralWindow, lambdas, denom, tol=1e-10):
    """Normalized counting function N(lambda) sampled at the given points."""
    lambdas = np.asarray(lambdas, dtype=float)
    if (np.diff(lambdas) < 0).any():
        raise ValueError("lambdas must be ascending")
    return np.array([
        float(spec.weights[spec.eigenvalues <= lam + tol].sum()) / denom
        for lam in lambdas
    ])


def log_times(t_lo, t_hi, count):
    """Ascending log-spaced positive time grid."""
    if t_lo <= 0 or t_hi <= t_lo or count < 2:
        raise ValueError("need 0 < t_lo < t_hi and count >= 2")
    return np.logspace(np.log10(t_lo), np.log10(t_hi), count)
