"""Random graph models with and without core-periphery structure.

Four variants are supported, all scaled by a sparsity factor ``sparsity``:

``er``      P_ij = p
``cpsbm``   P_ij = Omega[z_i, z_j] with a 2x2 block matrix (p11, p12, p22)
``cl``      P_ij = theta_i * theta_j  (Chung-Lu)
``cpdcbm``  P_ij = theta_i * Omega[z_i, z_j] * theta_j

For block models the first ``k`` nodes form the planted core.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .graph import Graph, LabelAssignment, as_labels
from .metric import pairs

VARIANTS = ("er", "cpsbm", "cl", "cpdcbm")
EXHAUSTIVE_MAX_N = 20


class ModelError(ValueError):
    """Invalid model parameters or an unsupported operation for a model."""


class ConditionError(ModelError):
    """A separation condition required by a theoretical constant fails."""


@dataclass(frozen=True, eq=False)
class ModelSpec:
    variant: str
    n: int
    sparsity: float = 1.0
    p: float | None = None
    p11: float | None = None
    p12: float | None = None
    p22: float | None = None
    k: int | None = None
    theta: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ModelError(f"unknown model variant {self.variant!r}")
        if self.n < 1:
            raise ModelError("n must be positive")
        if not self.sparsity > 0:
            raise ModelError("sparsity must be positive")
        if self.theta is not None:
            theta = np.array(self.theta, dtype=np.float64).ravel()
            theta.setflags(write=False)
            object.__setattr__(self, "theta", theta)
        if self.variant == "er":
            if self.p is None or not 0.0 <= self.p:
                raise ModelError("ER needs p >= 0")
        if self.variant in ("cpsbm", "cpdcbm"):
            if None in (self.p11, self.p12, self.p22, self.k):
                raise ModelError(f"{self.variant} needs p11, p12, p22 and k")
            if min(self.p11, self.p12, self.p22) < 0:
                raise ModelError("block probabilities must be non-negative")
        if self.variant in ("cpsbm", "cpdcbm", "cl") and self.k is not None:
            if not 1 <= self.k <= self.n - 1:
                raise ModelError(f"core size k={self.k} must lie in [1, n-1]")
        if self.variant in ("cl", "cpdcbm"):
            if self.theta is None or len(self.theta) != self.n:
                raise ModelError(f"{self.variant} needs a theta vector of length n")
            if not np.all(self.theta > 0):
                raise ModelError("theta entries must be positive")
        if self.max_prob() > 1.0 + 1e-12:
            raise ModelError(f"edge probability {self.max_prob():.4g} exceeds 1")

    # -- constructors -------------------------------------------------------

    @classmethod
    def er(cls, n: int, p: float, sparsity: float = 1.0) -> "ModelSpec":
        return cls("er", n, sparsity, p=p)

    @classmethod
    def cpsbm(cls, n: int, k: int, p11: float, p12: float, p22: float, sparsity: float = 1.0) -> "ModelSpec":
        return cls("cpsbm", n, sparsity, p11=p11, p12=p12, p22=p22, k=k)

    @classmethod
    def cl(cls, theta, k: int | None = None, sparsity: float = 1.0) -> "ModelSpec":
        theta = np.asarray(theta, dtype=np.float64)
        n = len(theta)
        if k is None:
            k = max(1, n // 10)
        return cls("cl", n, sparsity, k=k, theta=theta)

    @classmethod
    def cpdcbm(cls, theta, k: int, p11: float, p12: float, p22: float, sparsity: float = 1.0) -> "ModelSpec":
        theta = np.asarray(theta, dtype=np.float64)
        return cls("cpdcbm", len(theta), sparsity, p11=p11, p12=p12, p22=p22, k=k, theta=theta)

    # -- structure ----------------------------------------------------------

    @property
    def block(self) -> np.ndarray | None:
        if self.variant not in ("cpsbm", "cpdcbm"):
            return None
        return np.array([[self.p22, self.p12], [self.p12, self.p11]])

    def blocks(self) -> np.ndarray:
        """Planted block label z_i (1 = core) for block models."""
        z = np.zeros(self.n, dtype=np.int8)
        if self.variant in ("cpsbm", "cpdcbm"):
            z[: self.k] = 1
        return z

    @property
    def has_truth(self) -> bool:
        return self.variant != "er"

    def is_cp_ordered(self) -> bool:
        """Whether p11 > p12 > p22 (always False for ER/CL)."""
        if self.variant not in ("cpsbm", "cpdcbm"):
            return False
        return self.p11 > self.p12 > self.p22

    def max_prob(self) -> float:
        s = self.sparsity
        if self.variant == "er":
            return s * self.p if self.n > 1 else 0.0
        if self.variant == "cpsbm":
            vals = [self.p12] if self.k and self.n - self.k else []
            if self.k >= 2:
                vals.append(self.p11)
            if self.n - self.k >= 2:
                vals.append(self.p22)
            return s * max(vals, default=0.0)
        th = np.sort(self.theta)[::-1]
        if self.variant == "cl":
            return s * th[0] * th[1] if self.n > 1 else 0.0
        tc = np.sort(self.theta[: self.k])[::-1]
        tp = np.sort(self.theta[self.k:])[::-1]
        vals = [self.p12 * tc[0] * tp[0]]
        if len(tc) >= 2:
            vals.append(self.p11 * tc[0] * tc[1])
        if len(tp) >= 2:
            vals.append(self.p22 * tp[0] * tp[1])
        return s * max(vals)

    def prob_row(self, i: int, cols: np.ndarray | slice = slice(None)) -> np.ndarray:
        """Scaled probabilities P_ij for fixed i (the diagonal entry is not zeroed)."""
        s = self.sparsity
        if self.variant == "er":
            out = np.full(self.n, s * self.p)[cols]
        elif self.variant == "cl":
            out = s * self.theta[i] * self.theta[cols]
        else:
            z = self.blocks()
            out = s * self.block[z[i], z[cols]]
            if self.variant == "cpdcbm":
                out = out * self.theta[i] * self.theta[cols]
        return np.asarray(out, dtype=np.float64)

    def prob_matrix(self) -> np.ndarray:
        """Dense n x n probability matrix with zero diagonal (small n only)."""
        P = np.vstack([self.prob_row(i) for i in range(self.n)])
        np.fill_diagonal(P, 0.0)
        return P

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        params: dict[str, Any] = {}
        if self.variant == "er":
            params["p"] = self.p
        if self.variant in ("cpsbm", "cpdcbm"):
            params.update(p11=self.p11, p12=self.p12, p22=self.p22)
        if self.k is not None:
            params["k"] = self.k
        out: dict[str, Any] = {"variant": self.variant, "n": self.n, "sparsity": self.sparsity, "params": params}
        if self.theta is not None:
            out["theta"] = [float(x) for x in self.theta]
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any], seed=None) -> "ModelSpec":
        """Build a spec from its JSON form.

        ``theta`` may be an explicit list or ``{"core": [a, b], "periphery":
        [a, b]}``, in which case weights are drawn i.i.d. uniform per group
        (core = first k nodes) using ``seed``.
        """
        try:
            variant = obj["variant"]
            n = int(obj["n"])
        except KeyError as exc:
            raise ModelError(f"model JSON is missing {exc.args[0]!r}") from None
        params = dict(obj.get("params", {}))
        k = params.get("k")
        k = int(k) if k is not None else None
        theta = obj.get("theta")
        if isinstance(theta, dict):
            if k is None:
                k = max(1, n // 10)
            theta = uniform_theta(n, k, theta["core"], theta.get("periphery", theta["core"]), seed)
        return cls(
            variant, n, float(obj.get("sparsity", 1.0)),
            p=params.get("p"), p11=params.get("p11"), p12=params.get("p12"), p22=params.get("p22"),
            k=k, theta=theta,
        )

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return self.to_json() == other.to_json()

    def __hash__(self):
        return hash(repr(self.to_json()))


def uniform_theta(n: int, k: int, core: tuple[float, float], periphery: tuple[float, float], seed=None) -> np.ndarray:
    """Draw theta_1..theta_k ~ U(core) and theta_{k+1}..theta_n ~ U(periphery)."""
    rng = np.random.default_rng(seed)
    theta = np.empty(n)
    theta[:k] = rng.uniform(core[0], core[1], size=k)
    theta[k:] = rng.uniform(periphery[0], periphery[1], size=n - k)
    return theta


# ---------------------------------------------------------------------------
# ground truth and sampling


@dataclass(frozen=True)
class GroundTruth:
    """Planted labels; ``labels`` is None for ER, which has no true core."""

    labels: LabelAssignment | None

    @property
    def has_cp(self) -> bool:
        return self.labels is not None


def ground_truth(spec: ModelSpec) -> GroundTruth:
    if spec.variant == "er":
        return GroundTruth(None)
    if spec.variant == "cl":
        # stable sort keeps ties deterministic: lower index wins
        top = np.argsort(-spec.theta, kind="stable")[: spec.k]
        return GroundTruth(LabelAssignment.from_core(spec.n, top))
    return GroundTruth(LabelAssignment(spec.blocks()))


def prob_entry(spec: ModelSpec, i: int, j: int) -> float:
    if i == j:
        raise ModelError("no self-loops: i must differ from j")
    if not (0 <= i < spec.n and 0 <= j < spec.n):
        raise ModelError(f"node index out of range [0, {spec.n})")
    return float(spec.prob_row(i, np.array([j]))[0])


def sample(spec: ModelSpec, seed=None, chunk_rows: int = 256) -> tuple[Graph, GroundTruth]:
    """Draw A_ij ~ Bernoulli(P_ij) independently for i < j.

    Uniforms are drawn for full rows in row-major order, so the output does
    not depend on ``chunk_rows``.
    """
    rng = np.random.default_rng(seed)
    n = spec.n
    src, dst = [], []
    for r0 in range(0, n, chunk_rows):
        r1 = min(n, r0 + chunk_rows)
        u = rng.random((r1 - r0, n))
        P = np.vstack([spec.prob_row(i) for i in range(r0, r1)])
        hit = u < P
        rows, cols = np.nonzero(hit)
        rows += r0
        keep = cols > rows
        src.append(rows[keep])
        dst.append(cols[keep])
    edges = np.column_stack([np.concatenate(src), np.concatenate(dst)]) if src else np.zeros((0, 2), np.int64)
    return Graph.from_edges(n, edges), ground_truth(spec)


def expected_edges(spec: ModelSpec) -> float:
    return _pair_sums(spec, np.zeros(spec.n, dtype=np.int8))[0]


# ---------------------------------------------------------------------------
# population parameter


def rho_from_sums(n: int, k: int, total: float, pp: float) -> float:
    """rho from the total of P over pairs and its periphery-periphery part."""
    big_n = pairs(n)
    n1 = big_n - pairs(n - k)
    p_bar = total / big_n
    d_bar = n1 / big_n
    denom = p_bar * (1.0 - p_bar) * d_bar * (1.0 - d_bar)
    if not denom > 0:
        raise ModelError(f"rho undefined: mean probability {p_bar:.4g}, core-touching fraction {d_bar:.4g}")
    return ((total - pp) - p_bar * n1) / (big_n * math.sqrt(denom))


def _half_pair_sum(s: float, q: float) -> float:
    # sum_{i<j} x_i x_j from the linear and quadratic sums
    return 0.5 * (s * s - q)


def _pair_sums(spec: ModelSpec, c: np.ndarray) -> tuple[float, float]:
    """(sum of P over all pairs, sum over pairs with both ends where c == 0)."""
    n = spec.n
    per = c == 0
    s = spec.sparsity
    if spec.variant == "er":
        return s * spec.p * pairs(n), s * spec.p * pairs(int(per.sum()))
    if spec.variant == "cl":
        th = spec.theta
        tot = _half_pair_sum(th.sum(), (th ** 2).sum())
        tp = th[per]
        return s * tot, s * _half_pair_sum(tp.sum(), (tp ** 2).sum())
    z = spec.blocks().astype(bool)
    w = spec.theta if spec.variant == "cpdcbm" else np.ones(n)

    def block_sums(mask):
        w1, w0 = w[mask & z], w[mask & ~z]
        s1, q1, s0, q0 = w1.sum(), (w1 ** 2).sum(), w0.sum(), (w0 ** 2).sum()
        return (spec.p11 * _half_pair_sum(s1, q1) + spec.p12 * s1 * s0
                + spec.p22 * _half_pair_sum(s0, q0))

    return s * block_sums(np.ones(n, bool)), s * block_sums(per)


def pop_rho(spec: ModelSpec, c) -> float:
    """Population CP parameter rho(P, c) for the scaled model probabilities."""
    c = as_labels(c)
    if len(c) != spec.n:
        raise ModelError(f"labels have length {len(c)}, model has n={spec.n}")
    if spec.variant == "er":
        if not 0 < c.k < spec.n - 1:
            raise ModelError(f"core size k={c.k} is degenerate for n={spec.n}")
        p = spec.sparsity * spec.p
        if not 0 < p < 1:
            raise ModelError(f"rho undefined: mean probability {p:.4g}")
        return 0.0
    total, pp = _pair_sums(spec, c.c)
    return rho_from_sums(spec.n, c.k, total, pp)


def pop_rho_dense(P: np.ndarray, c) -> float:
    """rho(P, c) for an explicit symmetric probability matrix."""
    c = as_labels(c)
    n = P.shape[0]
    iu = np.triu_indices(n, 1)
    per = np.flatnonzero(c.c == 0)
    total = P[iu].sum()
    sub = P[np.ix_(per, per)]
    pp = np.triu(sub, 1).sum()
    return rho_from_sums(n, c.k, total, pp)


class RhoMax(NamedTuple):
    value: float
    labels: LabelAssignment | None
    method: str  # "null-model", "planted", "block-search" or "exhaustive"


def _exhaustive_max(spec: ModelSpec) -> RhoMax:
    n = spec.n
    best, best_c = -math.inf, None
    for bits in itertools.product((0, 1), repeat=n):
        k = sum(bits)
        if not 1 <= k <= n - 2:
            continue
        c = np.array(bits, dtype=np.int8)
        val = rho_from_sums(n, k, *_pair_sums(spec, c))
        if val > best:
            best, best_c = val, c
    return RhoMax(best, LabelAssignment(best_c), "exhaustive")


def _sbm_block_search(spec: ModelSpec) -> RhoMax:
    # rho only depends on how many planted-core (a) and planted-periphery (b)
    # nodes are labelled core
    n, k, s = spec.n, spec.k, spec.sparsity
    a = np.arange(k + 1)[:, None].astype(np.float64)
    b = np.arange(n - k + 1)[None, :].astype(np.float64)
    pa, pb = k - a, (n - k) - b  # periphery counts per planted block
    total = s * (spec.p11 * pairs(k) + spec.p12 * k * (n - k) + spec.p22 * pairs(n - k))
    pp = s * (spec.p11 * pa * (pa - 1) / 2 + spec.p12 * pa * pb + spec.p22 * pb * (pb - 1) / 2)
    kk = a + b
    big_n = pairs(n)
    n1 = big_n - (n - kk) * (n - kk - 1) / 2
    p_bar = total / big_n
    d_bar = n1 / big_n
    ok = (kk >= 1) & (kk <= n - 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = ((total - pp) - p_bar * n1) / (big_n * np.sqrt(p_bar * (1 - p_bar) * d_bar * (1 - d_bar)))
    val = np.where(ok, val, -np.inf)
    ia, ib = np.unravel_index(np.argmax(val), val.shape)
    c = np.zeros(n, dtype=np.int8)
    c[:ia] = 1
    c[k: k + ib] = 1
    return RhoMax(float(val[ia, ib]), LabelAssignment(c), "block-search")


def separation_ok(spec: ModelSpec) -> bool:
    """Whether the planted labels are provably the rho maximiser."""
    if spec.variant == "cpsbm":
        return spec.p11 > spec.p12 > spec.p22
    if spec.variant == "cl":
        try:
            return _cl_gap(spec) > 0
        except ModelError:
            return False
    if spec.variant == "cpdcbm":
        return spec.p11 > spec.p12 and _dcbm_gap(spec) > 0
    return False


def max_pop_rho(spec: ModelSpec) -> RhoMax:
    """rho~(P) = max_c rho(P, c).

    ER returns 0 with method "null-model". Two-block SBMs are solved exactly
    by searching over block counts. CL/CP-DCBM return rho at the planted
    labels when the separation condition holds, fall back to exhaustive
    enumeration for n <= 20, and raise ``ConditionError`` otherwise.
    """
    if spec.variant == "er":
        return RhoMax(0.0, None, "null-model")
    if spec.variant == "cpsbm":
        return _sbm_block_search(spec)
    if separation_ok(spec):
        truth = ground_truth(spec).labels
        return RhoMax(pop_rho(spec, truth), truth, "planted")
    if spec.n <= EXHAUSTIVE_MAX_N:
        return _exhaustive_max(spec)
    raise ConditionError(
        f"{spec.variant}: separation condition fails and n={spec.n} is too large for exhaustive search")


# ---------------------------------------------------------------------------
# recovery constants


def _cl_gap(spec: ModelSpec) -> float:
    k, n = spec.k, spec.n
    if k + 2 > n:
        raise ModelError("CL gap needs k <= n - 2")
    th = np.sort(spec.theta)[::-1]
    return th[k - 1] * th[n - 1] - th[k] * th[k + 1]


def _dcbm_gap(spec: ModelSpec) -> float:
    tc = spec.theta[: spec.k]
    tp = spec.theta[spec.k:]
    return spec.p12 * tc.min() * tp.min() - spec.p22 * tp.max() ** 2


def kappa(spec: ModelSpec) -> float:
    """Inverse signal-to-noise constant of the label-recovery error bound."""
    if spec.variant == "cpsbm":
        denom = spec.p12 - spec.p22
        num = math.sqrt(spec.p22)
    elif spec.variant == "cl":
        denom = _cl_gap(spec)
        num = float(spec.theta.mean())
    elif spec.variant == "cpdcbm":
        denom = _dcbm_gap(spec)
        unscaled = dataclasses.replace(spec, sparsity=1.0)
        num = math.sqrt(expected_edges(unscaled) / pairs(spec.n))
    else:
        raise ModelError("kappa is undefined for the ER model")
    if not denom > 0:
        raise ConditionError(f"{spec.variant}: separation denominator {denom:.4g} is not positive")
    return num / denom


def error_bound(kappa_value: float, n: int, sparsity: float, alpha: float, eta: float = 1.0) -> float:
    """kappa * alpha * sqrt((8 + eta) log(n rho alpha) / (n rho))."""
    x = n * sparsity * alpha
    if not x > 1:
        raise ModelError(f"n * sparsity * alpha = {x:.4g} must exceed 1")
    return kappa_value * alpha * math.sqrt((8.0 + eta) * math.log(x) / (n * sparsity))


def misclassification_bound(spec: ModelSpec, eta: float = 1.0) -> float:
    return error_bound(kappa(spec), spec.n, spec.sparsity, spec.k / spec.n, eta)
