"""Intersection tests for core-periphery structure against ER and Chung-Lu nulls.

Both tests reject only when T1 = T(A, c_hat) > C1 *and* T2 = p11_hat -
p12_hat > C2. The unobservable sparsity is replaced by p_hat = 2m / n^2 and
the core fraction by k_hat / n from the detected labels. Cutoffs need
log(k_hat * p_hat) > 0, so when k_hat * p_hat <= 1 the test is reported as
not applicable.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .detect import DetectConfig, detect
from .graph import Graph, LabelAssignment, as_labels, density
from .metric import check_graph, t_sample
from .models import rho_from_sums

NO_CP = "no-significant-cp"
DEGREE_CP = "cp-explained-by-degree-heterogeneity"
ENDOGENOUS_CP = "endogenous-cp"
ER_ONLY_CP = "significant-cp-vs-er"
NOT_APPLICABLE = "not-applicable"
INTERPRETATIONS = (NO_CP, DEGREE_CP, ENDOGENOUS_CP, ER_ONLY_CP, NOT_APPLICABLE)
NULLS = ("er", "cl", "both")


class GuardError(ValueError):
    """The network is too sparse or the core too small for the test."""


class CoreTooSmallError(GuardError):
    pass


@dataclass(frozen=True)
class TestInputs:
    n: int
    m: int
    p_hat: float
    k_hat: int

    __test__ = False  # not a pytest class

    @classmethod
    def from_graph(cls, g: Graph, c_hat) -> "TestInputs":
        c_hat = as_labels(c_hat)
        if len(c_hat) != g.n:
            raise ValueError(f"labels have length {len(c_hat)}, graph has n={g.n}")
        return cls(g.n, g.m, density(g), c_hat.k)

    @property
    def alpha_hat(self) -> float:
        return self.k_hat / self.n

    @property
    def k_rho_ok(self) -> bool:
        return self.k_hat * self.p_hat > 1.0

    def require_guard(self) -> None:
        if not self.k_rho_ok:
            raise GuardError(
                f"k_hat * p_hat = {self.k_hat * self.p_hat:.4g} <= 1: network too sparse or core too small")


def t1(g: Graph, c_hat) -> float:
    """Maximised CP metric, i.e. T(A, c_hat) for labels from ``detect``."""
    return t_sample(g, c_hat)


def block_edge_counts(g: Graph, c) -> tuple[int, int, int]:
    """Edge counts (core-core, core-periphery, periphery-periphery)."""
    c = as_labels(c).c
    e = g.edges()
    s = c[e[:, 0]].astype(np.int64) + c[e[:, 1]]
    return int(np.count_nonzero(s == 2)), int(np.count_nonzero(s == 1)), int(np.count_nonzero(s == 0))


def t2(g: Graph, c_hat) -> float:
    """Core-core minus core-periphery edge density."""
    c_hat = as_labels(c_hat)
    n, k = g.n, c_hat.k
    if k < 2:
        raise CoreTooSmallError(f"core too small: k_hat={k} leaves the core-core density undefined")
    if k > n - 1:
        raise CoreTooSmallError("periphery is empty: the core-periphery density is undefined")
    e11, e12, _ = block_edge_counts(g, c_hat)
    return e11 / (k * (k - 1) / 2) - e12 / (k * (n - k))


def er_cutoffs(inp: TestInputs) -> tuple[float, float]:
    """(C1, C2) under the Erdos-Renyi null."""
    inp.require_guard()
    c1 = math.sqrt(math.log(inp.k_hat * inp.p_hat) / inp.n)
    c2 = 2.0 * math.sqrt(2.0) * inp.p_hat * math.log(inp.n) / math.sqrt(inp.k_hat)
    return c1, c2


def cl_epsilons(inp: TestInputs) -> tuple[float, float]:
    """(eps_tilde, eps_prime) added to rho(P_hat, c_hat) in the CL cutoff."""
    inp.require_guard()
    if inp.k_hat < 2:
        raise CoreTooSmallError(f"core too small: k_hat={inp.k_hat}")
    n, a, p = inp.n, inp.alpha_hat, inp.p_hat
    eps_tilde = math.sqrt(a) * math.log(n * a) / (n ** 1.5 * math.sqrt(p))
    eps_prime = math.sqrt(math.log(n * a * p)) / n
    return eps_tilde, eps_prime


def _clamped_pair_sum(d: np.ndarray, two_m: float) -> tuple[float, int]:
    """sum_{i<j} min(d_i d_j / 2m, 1) in O(n log n), plus the clamped pair count."""
    n = len(d)
    if n < 2:
        return 0.0, 0
    ds = np.sort(d.astype(np.float64))
    suffix = np.concatenate([np.cumsum(ds[::-1])[::-1], [0.0]])
    # for each i, partners j with d_j >= 2m / d_i saturate at 1
    with np.errstate(divide="ignore"):
        thresh = np.where(ds > 0, two_m / ds, np.inf)
    first_sat = np.searchsorted(ds, thresh, side="left")
    n_sat = n - first_sat
    below = suffix[0] - suffix[first_sat]
    ordered = ds * below / two_m + n_sat
    self_terms = np.minimum(ds * ds / two_m, 1.0)
    total = 0.5 * (ordered.sum() - self_terms.sum())
    self_sat = int(np.count_nonzero(ds * ds >= two_m))
    clamped = (int(n_sat.sum()) - self_sat) // 2
    return float(total), clamped


def cl_null_rho(g: Graph, c_hat) -> tuple[float, int]:
    """rho(P_hat, c_hat) with P_hat_ij = min(d_i d_j / 2m, 1).

    Returns the value and the number of clamped pairs.
    """
    c_hat = as_labels(c_hat)
    if g.m == 0:
        raise GuardError("graph has no edges")
    two_m = 2.0 * g.m
    d = g.degrees
    total, clamped = _clamped_pair_sum(d, two_m)
    pp, _ = _clamped_pair_sum(d[c_hat.c == 0], two_m)
    return rho_from_sums(g.n, c_hat.k, total, pp), clamped


def cl_cutoffs(g: Graph, c_hat, inp: TestInputs | None = None) -> tuple[float, float]:
    """(C1, C2) under the Chung-Lu null; C2 is shared with the ER null."""
    inp = inp or TestInputs.from_graph(g, c_hat)
    eps_tilde, eps_prime = cl_epsilons(inp)
    rho_hat, _ = cl_null_rho(g, c_hat)
    _, c2 = er_cutoffs(inp)
    return rho_hat + eps_tilde + eps_prime, c2


@dataclass
class NullDecision:
    c1: float | None
    c2: float | None
    reject_t1: bool
    reject_t2: bool
    reject: bool

    @classmethod
    def decide(cls, t1_value: float, t2_value: float | None, c1: float, c2: float) -> "NullDecision":
        r1 = t1_value > c1
        r2 = t2_value is not None and t2_value > c2
        return cls(c1, c2, r1, r2, r1 and r2)

    @classmethod
    def inapplicable(cls) -> "NullDecision":
        return cls(None, None, False, False, False)


@dataclass
class TestReport:
    n: int
    m: int
    p_hat: float
    k_hat: int
    alpha_hat: float
    t1: float
    t2: float | None
    er: NullDecision
    cl: NullDecision | None
    k_rho_ok: bool
    interpretation: str
    clamped_pairs: int = 0

    __test__ = False

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "p_hat": self.p_hat,
            "k_hat": self.k_hat,
            "alpha_hat": self.alpha_hat,
            "t1": self.t1,
            "t2": self.t2,
            "er": asdict(self.er),
            "cl": asdict(self.cl) if self.cl is not None else None,
            "guards": {"k_rho_ok": self.k_rho_ok},
            "interpretation": self.interpretation,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "TestReport":
        return cls(
            n=obj["n"], m=obj["m"], p_hat=obj["p_hat"], k_hat=obj["k_hat"], alpha_hat=obj["alpha_hat"],
            t1=obj["t1"], t2=obj["t2"], er=NullDecision(**obj["er"]),
            cl=NullDecision(**obj["cl"]) if obj["cl"] is not None else None,
            k_rho_ok=obj["guards"]["k_rho_ok"], interpretation=obj["interpretation"],
        )

    def __eq__(self, other):
        if not isinstance(other, TestReport):
            return NotImplemented
        return self.to_json() == other.to_json()


def interpret(er: NullDecision, cl: NullDecision | None, guard_ok: bool) -> str:
    """Map rejection decisions to a reading: ER first, then CL."""
    if not guard_ok:
        return NOT_APPLICABLE
    if not er.reject:
        return NO_CP
    if cl is None:
        return ER_ONLY_CP
    return ENDOGENOUS_CP if cl.reject else DEGREE_CP


def test_labels(g: Graph, c_hat, nulls: str = "both") -> TestReport:
    """Run the intersection test(s) for fixed estimated labels."""
    if nulls not in NULLS:
        raise ValueError(f"nulls must be one of {NULLS}, got {nulls!r}")
    c_hat = as_labels(c_hat)
    inp = TestInputs.from_graph(g, c_hat)
    t1_value = t1(g, c_hat)
    t2_value = t2(g, c_hat) if 2 <= c_hat.k <= g.n - 1 else None
    want_cl = nulls in ("cl", "both")
    clamped = 0
    if inp.k_rho_ok and t2_value is not None:
        er = NullDecision.decide(t1_value, t2_value, *er_cutoffs(inp))
        cl = None
        if want_cl:
            eps_tilde, eps_prime = cl_epsilons(inp)
            rho_hat, clamped = cl_null_rho(g, c_hat)
            cl = NullDecision.decide(t1_value, t2_value, rho_hat + eps_tilde + eps_prime, er.c2)
        guard_ok = True
    else:
        er = NullDecision.inapplicable()
        cl = NullDecision.inapplicable() if want_cl else None
        guard_ok = False
    return TestReport(
        n=g.n, m=g.m, p_hat=inp.p_hat, k_hat=inp.k_hat, alpha_hat=inp.alpha_hat,
        t1=t1_value, t2=t2_value, er=er, cl=cl, k_rho_ok=guard_ok,
        interpretation=interpret(er, cl, guard_ok), clamped_pairs=clamped,
    )


test_labels.__test__ = False


def run_test(g: Graph, cfg: DetectConfig | None = None, nulls: str = "both") -> TestReport:
    """Detect CP labels, then test them against the requested null(s).

    The ER arm is always evaluated since the reading of a CL result depends
    on it; ``nulls`` controls whether the CL arm is added.
    """
    check_graph(g)
    result = detect(g, cfg)
    return test_labels(g, result.labels, nulls)


run_test.__test__ = False
