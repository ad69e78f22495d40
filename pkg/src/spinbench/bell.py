"""Two-particle local-hidden-variable laboratory.

Local models factorize the coincidence probabilities over a shared hidden
variable; deterministic strategies are enumerated exhaustively for the CHSH
bound; per-particle products of response functions define hidden (not
observable) joint tables; and a small phase-1 simplex decides whether a
behavior admits a joint distribution over all four local observables (the
Fine equivalence with the 8 CHSH inequalities).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import InternalConsistencyError, InvalidInputError
from .quantum import Direction

# ---------------------------------------------------------------------------
# lambda spaces and local models


@dataclass(frozen=True)
class LambdaSpace:
    """Hidden-variable space: unit sphere, unit interval, or a finite set."""

    kind: str  # "sphere" | "interval" | "finite"
    atoms: tuple | None = None  # (values, weights) for finite spaces

    def __post_init__(self):
        if self.kind not in ("sphere", "interval", "finite"):
            raise InvalidInputError(f"unknown lambda space kind {self.kind!r}")
        if self.kind == "finite" and self.atoms is None:
            raise InvalidInputError("finite lambda space needs atoms")

    def sample(self, n: int, seed: int) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(key=seed))
        if self.kind == "sphere":
            v = rng.normal(size=(n, 3))
            return v / np.linalg.norm(v, axis=1, keepdims=True)
        if self.kind == "interval":
            return rng.random(n)
        values, weights = self.atoms
        idx = rng.choice(len(values), size=n, p=np.asarray(weights, dtype=float))
        return np.asarray(values)[idx]


@dataclass(frozen=True)
class IntegrationSpec:
    """Monte Carlo controls for integrals over the hidden variable."""

    n_samples: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class LocalModel:
    """Local response functions over a hidden-variable density.

    response_1(lams, a) and response_2(lams, b) return (P(+|lam), P(-|lam))
    arrays; each can only see its own setting, so locality holds by the shape
    of the API. P(+) + P(-) <= 1 pointwise; equality means no absorption.
    """

    lambda_space: LambdaSpace
    response_1: Callable[[np.ndarray, Direction], tuple[np.ndarray, np.ndarray]]
    response_2: Callable[[np.ndarray, Direction], tuple[np.ndarray, np.ndarray]]
    no_absorption: bool = True
    name: str = "local-model"


def bell_toy_model() -> LocalModel:
    """Bell's sphere model: A = sign(lam.a), B = -sign(lam.b), lam uniform.

    Gives E(a, b) = -1 + 2*theta_ab/pi: perfect anticorrelation at theta = 0
    and |S| <= 2 everywhere.
    """

    def resp1(lams, d: Direction):
        s = lams @ d.unit_vector()
        plus = (s >= 0).astype(float)
        return plus, 1.0 - plus

    def resp2(lams, d: Direction):
        s = lams @ d.unit_vector()
        plus = (s < 0).astype(float)
        return plus, 1.0 - plus

    return LocalModel(LambdaSpace("sphere"), resp1, resp2, name="bell-toy-sphere")


def constant_model(p: float, q: float) -> LocalModel:
    """Setting- and lambda-independent responses; coincidences factorize."""

    def resp(prob):
        def f(lams, d: Direction):
            n = len(lams)
            return np.full(n, prob), np.full(n, 1.0 - prob)

        return f

    return LocalModel(LambdaSpace("interval"), resp(p), resp(q), name="constant")


# ---------------------------------------------------------------------------
# coincidence tables and correlations


@dataclass
class ProbabilityTable:
    """2x2 outcome table with an integration error estimate per entry."""

    table: np.ndarray  # [i, j], i: alpha in (+1, -1), j: beta in (+1, -1)
    stderr: np.ndarray
    observable: bool = True

    def entry(self, alpha: int, beta: int) -> float:
        return float(self.table[0 if alpha == 1 else 1, 0 if beta == 1 else 1])


def _product_table(model, lams, resp_a, da, resp_b, db) -> ProbabilityTable:
    pa = resp_a(lams, da)
    pb = resp_b(lams, db)
    n = len(lams)
    table = np.zeros((2, 2))
    stderr = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            prod = pa[i] * pb[j]
            table[i, j] = prod.mean()
            stderr[i, j] = prod.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return ProbabilityTable(table, stderr)


def coincidence(
    model: LocalModel,
    a: Direction,
    b: Direction,
    spec: IntegrationSpec = IntegrationSpec(),
) -> ProbabilityTable:
    """P12(alpha, beta) = integral of P1(alpha|a,lam) P2(beta|b,lam) rho(lam)."""
    lams = model.lambda_space.sample(spec.n_samples, spec.seed)
    return _product_table(model, lams, model.response_1, a, model.response_2, b)


def hidden_joint_per_particle(
    model: LocalModel,
    x: Direction,
    x_prime: Direction,
    particle: int,
    spec: IntegrationSpec = IntegrationSpec(),
) -> ProbabilityTable:
    """Product of same-particle responses at two settings: a hidden quantity.

    The output carries observable = False; no experiment measures two
    noncommuting spin components of the same particle at once.
    """
    if particle not in (1, 2):
        raise InvalidInputError("particle must be 1 or 2")
    resp = model.response_1 if particle == 1 else model.response_2
    lams = model.lambda_space.sample(spec.n_samples, spec.seed)
    out = _product_table(model, lams, resp, x, resp, x_prime)
    out.observable = False
    return out


def correlation(table: np.ndarray | ProbabilityTable) -> float:
    """E = sum over outcomes of alpha*beta*P(alpha, beta)."""
    t = table.table if isinstance(table, ProbabilityTable) else np.asarray(table)
    signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return float(np.sum(signs * t))


_CHSH_SIGNS = [
    np.array([[s00, s01], [s10, s11]], dtype=float)
    for s00, s01, s10, s11 in itertools.product((1.0, -1.0), repeat=4)
    if s00 * s01 * s10 * s11 == -1.0
]


def chsh(
    e_ab: float, e_ab_prime: float, e_a_prime_b: float, e_a_prime_b_prime: float,
    minus_on: int = 3,
) -> float:
    """S with the minus sign on the term selected by minus_on (0..3, row-major)."""
    if minus_on not in (0, 1, 2, 3):
        raise InvalidInputError("minus_on must be in 0..3")
    e = [e_ab, e_ab_prime, e_a_prime_b, e_a_prime_b_prime]
    if any(abs(v) > 1.0 + 1e-12 for v in e):
        raise InvalidInputError("correlations must lie in [-1, 1]")
    signs = [1.0] * 4
    signs[minus_on] = -1.0
    return float(sum(s * v for s, v in zip(signs, e)))


def chsh_all(correlations: np.ndarray) -> np.ndarray:
    """All 8 CHSH sign placements evaluated on the 2x2 correlation matrix."""
    c = np.asarray(correlations, dtype=float)
    return np.array([float(np.sum(s * c)) for s in _CHSH_SIGNS])


# ---------------------------------------------------------------------------
# deterministic strategies and the exhaustive bound


@dataclass(frozen=True)
class DeterministicStrategy:
    """Pre-assigned outcomes (A(a), A(a'), B(b), B(b')), each +/-1."""

    a: int
    a_prime: int
    b: int
    b_prime: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.a_prime, self.b, self.b_prime)


ALL_STRATEGIES = tuple(
    DeterministicStrategy(*s) for s in itertools.product((1, -1), repeat=4)
)


def strategy_correlations(strategy: DeterministicStrategy) -> np.ndarray:
    """E(x, y) = A(x) * B(y) as a 2x2 matrix over the setting pairs."""
    va = np.array([strategy.a, strategy.a_prime], dtype=float)
    vb = np.array([strategy.b, strategy.b_prime], dtype=float)
    return np.outer(va, vb)


def deterministic_bound() -> float:
    """Exhaustive maximum of |S| over the 16 strategies and 8 sign placements."""
    best = 0.0
    for strat in ALL_STRATEGIES:
        best = max(best, float(np.abs(chsh_all(strategy_correlations(strat))).max()))
    return best


# ---------------------------------------------------------------------------
# behaviors


@dataclass
class Behavior:
    """Two-party, two-setting, two-outcome probability tables.

    tables[x, y, i, j] = P(alpha_i, beta_j | setting x, setting y) with
    x in (a, a'), y in (b, b') and outcome index 0 -> +1, 1 -> -1.
    """

    tables: np.ndarray  # shape (2, 2, 2, 2)
    settings: tuple[Direction, Direction, Direction, Direction] | None = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.tables = np.asarray(self.tables, dtype=float)
        if self.tables.shape != (2, 2, 2, 2):
            raise InvalidInputError("behavior tables must have shape (2, 2, 2, 2)")

    def validate(self, atol: float = 1e-9) -> None:
        t = self.tables
        if (t < -atol).any():
            raise InvalidInputError("behavior has negative probabilities")
        sums = t.sum(axis=(2, 3))
        if not np.allclose(sums, 1.0, atol=atol):
            raise InvalidInputError("behavior tables do not sum to 1")
        # no-signaling: Alice marginal independent of y, Bob marginal of x
        alice = t.sum(axis=3)
        bob = t.sum(axis=2)
        if not (
            np.allclose(alice[:, 0, :], alice[:, 1, :], atol=atol)
            and np.allclose(bob[0, :, :], bob[1, :, :], atol=atol)
        ):
            raise InvalidInputError("behavior violates no-signaling")

    def correlations(self) -> np.ndarray:
        signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
        return np.einsum("xyij,ij->xy", self.tables, signs)

    def chsh_values(self) -> np.ndarray:
        return chsh_all(self.correlations())


def behavior_from_strategy(strategy: DeterministicStrategy) -> Behavior:
    t = np.zeros((2, 2, 2, 2))
    va = (strategy.a, strategy.a_prime)
    vb = (strategy.b, strategy.b_prime)
    for x in range(2):
        for y in range(2):
            i = 0 if va[x] == 1 else 1
            j = 0 if vb[y] == 1 else 1
            t[x, y, i, j] = 1.0
    return Behavior(t, meta={"model": "deterministic", "strategy": strategy.as_tuple()})


def mixture_behavior(weights: np.ndarray) -> Behavior:
    """Convex combination of the 16 deterministic strategies."""
    w = np.asarray(weights, dtype=float)
    if w.size != 16 or (w < 0).any():
        raise InvalidInputError("need 16 nonnegative weights")
    w = w / w.sum()
    t = sum(wi * behavior_from_strategy(s).tables for wi, s in zip(w, ALL_STRATEGIES))
    return Behavior(t, meta={"model": "strategy-mixture"})


def pr_box_behavior() -> Behavior:
    """Nonlocal extremal box: alpha*beta = +1 except on (a', b'); S = 4."""
    t = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            want = -1 if (x, y) == (1, 1) else 1
            for i, alpha in enumerate((1, -1)):
                for j, beta in enumerate((1, -1)):
                    if alpha * beta == want:
                        t[x, y, i, j] = 0.5
    return Behavior(t, meta={"model": "pr-box"})


def singlet_behavior(
    a: Direction, a_prime: Direction, b: Direction, b_prime: Direction
) -> Behavior:
    """Quantum singlet tables P(alpha, beta) = (1 - alpha*beta*x.y)/4.

    Generated analytically from the -cos(theta) correlation law; the
    workbench has no two-particle pilot-wave simulation.
    """
    t = np.zeros((2, 2, 2, 2))
    xs = (a, a_prime)
    ys = (b, b_prime)
    for x in range(2):
        for y in range(2):
            dot = float(np.dot(xs[x].unit_vector(), ys[y].unit_vector()))
            for i, alpha in enumerate((1, -1)):
                for j, beta in enumerate((1, -1)):
                    t[x, y, i, j] = (1.0 - alpha * beta * dot) / 4.0
    return Behavior(t, settings=(a, a_prime, b, b_prime), meta={"model": "singlet"})


def behavior_from_model(
    model: LocalModel,
    settings: tuple[Direction, Direction, Direction, Direction],
    spec: IntegrationSpec = IntegrationSpec(),
) -> Behavior:
    """Four coincidence tables over one shared lambda sample.

    Sharing the sample makes no-signaling hold exactly (not just within
    integration error) for no-absorption models. Absorption models would
    need a no-detection outcome, which the Behavior format does not carry.
    """
    if not model.no_absorption:
        raise InvalidInputError(
            "absorption models are not supported by behavior_from_model"
        )
    a, a_prime, b, b_prime = settings
    lams = model.lambda_space.sample(spec.n_samples, spec.seed)
    t = np.zeros((2, 2, 2, 2))
    for x, dx in enumerate((a, a_prime)):
        for y, dy in enumerate((b, b_prime)):
            t[x, y] = _product_table(
                model, lams, model.response_1, dx, model.response_2, dy
            ).table
    return Behavior(t, settings=settings, meta={"model": model.name, "n_samples": spec.n_samples})


# ---------------------------------------------------------------------------
# Fine feasibility: joint distribution over the 16 atoms


ATOMS = tuple(itertools.product((1, -1), repeat=4))  # (A_a, A_a', B_b, B_b')


@dataclass
class JointDistribution16:
    """Weights over the 16 atoms (A_a, A_a', B_b, B_b') in {+1, -1}^4."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.size != 16:
            raise InvalidInputError("need 16 weights")

    def marginal_behavior(self) -> Behavior:
        t = np.zeros((2, 2, 2, 2))
        for w, atom in zip(self.weights, ATOMS):
            for x in range(2):
                for y in range(2):
                    i = 0 if atom[x] == 1 else 1
                    j = 0 if atom[2 + y] == 1 else 1
                    t[x, y, i, j] += w
        return Behavior(t, meta={"model": "joint-distribution-marginals"})


def _marginalization_matrix() -> np.ndarray:
    """64x16 matrix mapping atom weights to the stacked behavior entries."""
    rows = []
    for x in range(2):
        for y in range(2):
            for alpha in (1, -1):
                for beta in (1, -1):
                    rows.append(
                        [
                            1.0 if (atom[x] == alpha and atom[2 + y] == beta) else 0.0
                            for atom in ATOMS
                        ]
                    )
    return np.array(rows)


_MARGINALIZE = _marginalization_matrix()


def _phase1_simplex(
    a_mat: np.ndarray, b_vec: np.ndarray, tol: float
) -> tuple[bool, np.ndarray]:
    """Find w >= 0 with A w = b (b >= 0) via a dense phase-1 simplex.

    Bland's rule guarantees termination despite degeneracy; redundant rows
    just leave their artificial variables basic at zero.
    """
    m, n = a_mat.shape
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a_mat
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b_vec
    # cost row for minimizing the artificial sum, expressed in the art basis
    tableau[m, :] = -tableau[:m, :].sum(axis=0)
    tableau[m, n : n + m] = 0.0
    basis = list(range(n, n + m))
    pivot_tol = 1e-11
    while True:
        costs = tableau[m, :n]
        entering = -1
        for j in range(n):  # Bland: first improving column
            if costs[j] < -pivot_tol:
                entering = j
                break
        if entering < 0:
            break
        col = tableau[:m, entering]
        rhs = tableau[:m, -1]
        best_ratio, leaving = None, -1
        for i in range(m):
            if col[i] > pivot_tol:
                ratio = rhs[i] / col[i]
                if (
                    best_ratio is None
                    or ratio < best_ratio - pivot_tol
                    or (abs(ratio - best_ratio) <= pivot_tol and basis[i] < basis[leaving])
                ):
                    best_ratio, leaving = ratio, i
        if leaving < 0:
            raise InternalConsistencyError("unbounded phase-1 problem")
        tableau[leaving, :] /= tableau[leaving, entering]
        for i in range(m + 1):
            if i != leaving and abs(tableau[i, entering]) > 0.0:
                tableau[i, :] -= tableau[i, entering] * tableau[leaving, :]
        basis[leaving] = entering
    objective = -tableau[m, -1]
    w = np.zeros(n)
    for i, var in enumerate(basis):
        if var < n:
            w[var] = tableau[i, -1]
    return objective <= tol, np.clip(w, 0.0, None)


@dataclass
class FeasibilityResult:
    """Witness joint distribution, or the violated CHSH inequality."""

    feasible: bool
    witness: JointDistribution16 | None = None
    certificate: dict | None = None


def fine_feasibility(behavior: Behavior, tol: float = 1e-9) -> FeasibilityResult:
    """Decide whether a joint distribution over the 16 atoms reproduces the behavior.

    Feasible: returns a witness whose marginalizations match within tol.
    Infeasible: returns the most-violated CHSH combination as certificate
    (Fine's theorem guarantees one exists for a valid no-signaling behavior).
    """
    behavior.validate(atol=max(tol, 1e-9))
    b_vec = behavior.tables.reshape(-1)
    feasible, w = _phase1_simplex(_MARGINALIZE, b_vec, tol)
    if feasible:
        witness = JointDistribution16(w)
        residual = np.abs(_MARGINALIZE @ w - b_vec).max()
        if residual > 10.0 * tol:
            raise InternalConsistencyError(f"witness residual {residual:.2e}")
        return FeasibilityResult(True, witness=witness)
    values = behavior.chsh_values()
    k = int(np.argmax(np.abs(values)))
    if abs(values[k]) <= 2.0:
        raise InternalConsistencyError(
            "LP infeasible but all CHSH inequalities hold; numerical failure"
        )
    return FeasibilityResult(
        False,
        certificate={
            "inequality": _CHSH_SIGNS[k].astype(int).tolist(),
            "value": float(values[k]),
            "bound": 2.0,
        },
    )


@dataclass
class EquivalenceScanReport:
    n_checked: int
    n_feasible: int
    n_infeasible: int
    disagreements: list


def fine_equivalence_scan(
    n_random: int, seed: int, tol: float = 1e-9
) -> EquivalenceScanReport:
    """Assert LP feasibility <=> all 8 CHSH values within the bound.

    Generates local mixtures (feasible), points past the CHSH boundary on
    segments toward the PR box (infeasible), and boundary vertices. Scan
    points keep a 1e-6 margin from |S| = 2 so the two checks cannot disagree
    on razor-thin numerics; exact facet points are covered by the
    deterministic vertices themselves.
    """
    if n_random < 1:
        raise InvalidInputError("n_random must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    pr = pr_box_behavior()
    disagreements = []
    n_feasible = n_infeasible = 0
    checked = 0
    margin = 1e-6

    def check(behavior: Behavior) -> None:
        nonlocal n_feasible, n_infeasible, checked
        res = fine_feasibility(behavior, tol)
        chsh_ok = bool((np.abs(behavior.chsh_values()) <= 2.0 + tol).all())
        checked += 1
        if res.feasible != chsh_ok:
            disagreements.append(
                {"tables": behavior.tables.tolist(), "feasible": res.feasible, "chsh_ok": chsh_ok}
            )
        if res.feasible:
            n_feasible += 1
        else:
            n_infeasible += 1

    for strat in ALL_STRATEGIES:  # exact facet points (|S| = 2)
        check(behavior_from_strategy(strat))
    for _ in range(n_random):
        mix = mixture_behavior(rng.dirichlet(np.ones(16)))
        check(mix)
        # walk from the mixture toward the PR box, past the CHSH boundary
        t_seen = rng.random()
        tables = (1.0 - t_seen) * mix.tables + t_seen * pr.tables
        cand = Behavior(tables)
        if abs(np.abs(cand.chsh_values()).max() - 2.0) > margin:
            check(cand)
    return EquivalenceScanReport(
        n_checked=checked,
        n_feasible=n_feasible,
        n_infeasible=n_infeasible,
        disagreements=disagreements,
    )
