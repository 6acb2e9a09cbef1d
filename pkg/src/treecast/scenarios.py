"""Seeded data-generating processes for the Monte Carlo experiments.

Six scenarios cover correlated innovations, noise that cancels under
aggregation, seasonality, differing series lengths, a degenerate tree, and a
511-node hierarchy. Generation is pure given ``(master_seed, rep_index)``:
each replica derives its own RNG stream through a splittable mixing
function, so results never depend on execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .hierarchy import Hierarchy, build_structure_matrix
from .panel import SeriesPanel

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Contemporaneous innovation covariance for the correlated scenario: blocks
# of siblings are strongly correlated, more distant relatives weakly.
CORRELATED_SIGMA = np.array(
    [
        [5, 3, 2, 1, 1, 1, 1, 1],
        [3, 4, 2, 1, 1, 1, 1, 1],
        [2, 2, 5, 3, 2, 1, 1, 1],
        [1, 1, 3, 4, 3, 2, 1, 1],
        [1, 1, 2, 3, 5, 3, 2, 1],
        [1, 1, 1, 2, 3, 4, 2, 1],
        [1, 1, 1, 1, 2, 2, 5, 3],
        [1, 1, 1, 1, 1, 1, 3, 4],
    ],
    dtype=float,
)

# Added-error covariance for the smoothing scenario. Every row sums to zero,
# so the summed error vanishes at the top while lower levels keep variances
# 4 / 7 / 11.75. Realized by three independent sign-alternating components:
# bit 0 flips between adjacent siblings (variance 10, cancels at level 2),
# bit 1 between sibling pairs (1.5, cancels at level 1), bit 2 between the
# two level-1 subtrees (0.25, cancels at the top).
_SMOOTHING_COMPONENT_VARS = (10.0, 1.5, 0.25)


def smoothing_cov() -> np.ndarray:
    """Added-error covariance implied by the sign-alternating components."""
    cov = np.zeros((8, 8))
    for bit, var in enumerate(_SMOOTHING_COMPONENT_VARS):
        signs = np.array([(-1) ** ((i >> bit) & 1) for i in range(8)], dtype=float)
        cov += var * np.outer(signs, signs)
    return cov


class Scenario(Enum):
    CORRELATED = "corr"
    SMOOTHING = "smooth"
    SEASONAL = "seasonal"
    DIFFLEN = "difflen"
    DEGENERATE = "degen"
    LARGE = "large"


# Evaluation pairing: series length -> (holdout, horizon windows).
HOLDOUT_BY_T = {15: 4, 30: 4, 60: 8}
HOLDOUT_BY_T_LARGE = {30: 4, 60: 6, 90: 8}
DEFAULT_REPS = {scenario: 5000 for scenario in Scenario}
DEFAULT_REPS[Scenario.LARGE] = 500

_BURN_IN = 100
_MAX_REDRAWS = 100


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    T: int = 30
    reps: int = 200
    master_seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValidationError("reps must be at least 1")
        table = (
            HOLDOUT_BY_T_LARGE if self.scenario is Scenario.LARGE else HOLDOUT_BY_T
        )
        if self.scenario is not Scenario.DIFFLEN and self.T not in table:
            raise ValidationError(
                f"scenario {self.scenario.value} supports T in "
                f"{sorted(table)}, got {self.T}"
            )

    @property
    def holdout_h(self) -> int:
        if self.scenario is Scenario.DIFFLEN:
            return 4  # shortest history is 15 observations, evaluated like T=15
        table = (
            HOLDOUT_BY_T_LARGE if self.scenario is Scenario.LARGE else HOLDOUT_BY_T
        )
        return table[self.T]


@dataclass(frozen=True)
class ArimaDraw:
    """One set of ARIMA orders and coefficients."""

    p: int
    d: int
    q: int
    phi: tuple[float, ...]
    theta: tuple[float, ...]


def mix64(master_seed: int, rep_index: int) -> int:
    """Splittable 64-bit seed derivation (splitmix64 finalizer)."""
    x = (int(master_seed) ^ ((int(rep_index) + 1) * _GOLDEN)) & _MASK64
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def rep_rng(cfg: ScenarioConfig, rep_index: int) -> np.random.Generator:
    return np.random.default_rng(mix64(cfg.master_seed, rep_index))


def _companion_stable(coefs: np.ndarray) -> bool:
    """Spectral radius of the companion matrix strictly below one."""
    order = len(coefs)
    if order == 0:
        return True
    comp = np.zeros((order, order))
    comp[0] = coefs
    if order > 1:
        comp[1:, :-1] = np.eye(order - 1)
    return np.abs(np.linalg.eigvals(comp)).max() < 1.0


def draw_arima(
    rng: np.random.Generator,
    p_choices=(0, 1, 2),
    d_choices=(0, 1),
    q_choices=(0, 1, 2),
) -> ArimaDraw:
    """Draw orders uniformly and coefficients from their sampling ranges.

    AR(1)/MA(1) coefficients come from [0.5, 0.7]; second-order draws pick
    the lag-2 coefficient from [0.5, 0.7] first and then bound the lag-1
    coefficient so the process stays stationary (AR) or invertible (MA).
    Violations are redrawn, though the ranges make them impossible.
    """
    p = int(rng.choice(p_choices))
    d = int(rng.choice(d_choices))
    q = int(rng.choice(q_choices))
    for _ in range(_MAX_REDRAWS):
        if p == 0:
            phi = ()
        elif p == 1:
            phi = (rng.uniform(0.5, 0.7),)
        else:
            phi2 = rng.uniform(0.5, 0.7)
            phi = (rng.uniform(phi2 - 0.9, 0.9 - phi2), phi2)
        if q == 0:
            theta = ()
        elif q == 1:
            theta = (rng.uniform(0.5, 0.7),)
        else:
            theta2 = rng.uniform(0.5, 0.7)
            bound = (0.9 + theta2) / 3.2
            theta = (rng.uniform(-bound, bound), theta2)
        # Invertibility of the MA polynomial is the stationarity condition
        # applied to -theta.
        if _companion_stable(np.asarray(phi)) and _companion_stable(
            -np.asarray(theta)
        ):
            return ArimaDraw(p, d, q, phi, theta)
    raise RuntimeError("could not draw admissible ARIMA coefficients")


def _simulate_arima_panel(
    draws: list[ArimaDraw], innovations: np.ndarray
) -> np.ndarray:
    """Run per-series ARMA recursions on shared innovation rows, then integrate.

    ``innovations`` has ``burn_in + T`` rows; the first ``_BURN_IN`` rows are
    discarded after the recursion. Series with d=1 are cumulative sums of
    their kept stationary segment, starting at zero.
    """
    n_steps, m = innovations.shape
    phi = np.zeros((2, m))
    theta = np.zeros((2, m))
    for j, draw in enumerate(draws):
        for lag, value in enumerate(draw.phi):
            phi[lag, j] = value
        for lag, value in enumerate(draw.theta):
            theta[lag, j] = value
    x = np.zeros((n_steps, m))
    e = innovations
    for t in range(n_steps):
        acc = e[t].copy()
        if t >= 1:
            acc += phi[0] * x[t - 1] + theta[0] * e[t - 1]
        if t >= 2:
            acc += phi[1] * x[t - 2] + theta[1] * e[t - 2]
        x[t] = acc
    kept = x[_BURN_IN:]
    out = kept.copy()
    integrate = [j for j, draw in enumerate(draws) if draw.d == 1]
    if integrate:
        out[:, integrate] = np.cumsum(kept[:, integrate], axis=0)
    return out


def _aggregate_panel(h: Hierarchy, bottom_values: np.ndarray) -> SeriesPanel:
    smat = build_structure_matrix(h)
    return SeriesPanel((smat.entries @ bottom_values.T).T, h.labels)


def _binary_hierarchy(depth: int) -> Hierarchy:
    """Balanced binary tree labelled T; A,B; AA..; ... down to ``depth``."""
    nodes: list[tuple[str, int | None]] = [("T", None)]
    frontier = [(0, "")]
    for _ in range(depth):
        nxt = []
        for parent_idx, prefix in frontier:
            for letter in "AB":
                label = prefix + letter
                nodes.append((label, parent_idx))
                nxt.append((len(nodes) - 1, label))
        frontier = nxt
    return Hierarchy.from_nodes(nodes)


def fig_tree() -> Hierarchy:
    """15-node, 3-level binary tree used by most scenarios."""
    return _binary_hierarchy(3)


def degenerate_tree() -> Hierarchy:
    """The 15-node tree with leaves BBA and BBB removed (BB becomes a leaf)."""
    full = fig_tree()
    keep = [i for i, lab in enumerate(full.labels) if lab not in ("BBA", "BBB")]
    pos = {old: new for new, old in enumerate(keep)}
    nodes = [
        (full.labels[i], None if full.parents[i] is None else pos[full.parents[i]])
        for i in keep
    ]
    return Hierarchy.from_nodes(nodes)


LARGE_WIDTHS = (6, 4, 4, 4)


def large_tree() -> Hierarchy:
    """Root over levels of width 6, 4, 4, 4 (511 nodes, 384 bottom)."""
    nodes: list[tuple[str, int | None]] = [("T", None)]
    frontier = [(0, "T")]
    for width in LARGE_WIDTHS:
        nxt = []
        for parent_idx, prefix in frontier:
            for j in range(1, width + 1):
                label = f"{prefix}.{j}" if prefix != "T" else str(j)
                nodes.append((label, parent_idx))
                nxt.append((len(nodes) - 1, label))
        frontier = nxt
    return Hierarchy.from_nodes(nodes)


def draw_correlated_innovations(rng: np.random.Generator, n: int) -> np.ndarray:
    """n draws from the zero-mean normal with the correlated-scenario covariance."""
    chol = np.linalg.cholesky(CORRELATED_SIGMA)
    return rng.standard_normal((n, 8)) @ chol.T


def draw_smoothing_errors(rng: np.random.Generator, n: int) -> np.ndarray:
    """Sign-alternating added errors for the smoothing scenario (n-by-8)."""
    out = np.zeros((n, 8))
    for bit, var in enumerate(_SMOOTHING_COMPONENT_VARS):
        signs = np.array([(-1) ** ((i >> bit) & 1) for i in range(8)], dtype=float)
        out += np.sqrt(var) * rng.standard_normal((n, 1)) * signs
    return out


# Large-scenario added errors: one shared noise per group, sign alternating
# across the four subtrees one level below, so each component cancels exactly
# one level higher than the one it is keyed to.
LARGE_COMPONENT_VARS = (0.4, 1.0 / 40.0, 1.0 / 640.0)  # cancel at levels 3, 2, 1


def draw_large_errors(rng: np.random.Generator, n: int) -> np.ndarray:
    """Added bottom-level errors for the large hierarchy (n-by-384)."""
    signs4 = np.array([1.0, -1.0, 1.0, -1.0])
    groups = (96, 24, 6)  # number of independent noises per component
    repeats = (1, 4, 16)  # bottoms sharing one sign within a block
    out = np.zeros((n, 384))
    for var, n_groups, rep in zip(LARGE_COMPONENT_VARS, groups, repeats):
        noise = np.sqrt(var) * rng.standard_normal((n, n_groups))
        pattern = np.kron(signs4, np.ones(rep))
        out += np.kron(noise, np.ones(4 * rep)) * np.tile(
            pattern, 384 // (4 * rep)
        )
    return out


def _gen_arima_bottom(
    rng: np.random.Generator,
    n_series: int,
    total: int,
    innovations: np.ndarray | None = None,
    d_choices=(0, 1),
    pq_choices=(0, 1, 2),
) -> np.ndarray:
    draws = [
        draw_arima(rng, p_choices=pq_choices, d_choices=d_choices, q_choices=pq_choices)
        for _ in range(n_series)
    ]
    if innovations is None:
        innovations = rng.standard_normal((_BURN_IN + total, n_series))
    return _simulate_arima_panel(draws, innovations)


def gen_correlated(cfg: ScenarioConfig, rep_index: int):
    """Eight ARIMA bottoms driven by correlated contemporaneous innovations."""
    rng = rep_rng(cfg, rep_index)
    h = fig_tree()
    innovations = draw_correlated_innovations(rng, _BURN_IN + cfg.T)
    draws = [draw_arima(rng) for _ in range(8)]
    bottom = _simulate_arima_panel(draws, innovations)
    return h, _aggregate_panel(h, bottom)


def gen_smoothing(cfg: ScenarioConfig, rep_index: int):
    """Independent ARIMA bottoms plus added errors that cancel at the top."""
    rng = rep_rng(cfg, rep_index)
    h = fig_tree()
    base = _gen_arima_bottom(rng, 8, cfg.T)
    bottom = base + draw_smoothing_errors(rng, cfg.T)
    return h, _aggregate_panel(h, bottom)


def gen_seasonal(cfg: ScenarioConfig, rep_index: int):
    """Local-linear trend plus quarterly seasonal component plus ARMA noise.

    Trend: mu_t = mu_{t-1} + nu_t + rho_t with slope nu_t a random walk;
    seasonality: gamma_t = -(gamma_{t-1} + gamma_{t-2} + gamma_{t-3}) + omega_t.
    Component noise variances are 2 (level), 0.007 (slope), and 7 (seasonal);
    initial states are standard normal.
    """
    rng = rep_rng(cfg, rep_index)
    h = fig_tree()
    m = 8
    mu = rng.standard_normal(m)
    nu = rng.standard_normal(m)
    gamma_hist = [rng.standard_normal(m) for _ in range(3)]
    eta = _gen_arima_bottom(rng, m, cfg.T, d_choices=(0,), pq_choices=(0, 1))
    bottom = np.empty((cfg.T, m))
    for t in range(cfg.T):
        nu = nu + np.sqrt(0.007) * rng.standard_normal(m)
        mu = mu + nu + np.sqrt(2.0) * rng.standard_normal(m)
        gamma = -(gamma_hist[-1] + gamma_hist[-2] + gamma_hist[-3])
        gamma += np.sqrt(7.0) * rng.standard_normal(m)
        gamma_hist.append(gamma)
        bottom[t] = mu + gamma + eta[t]
    return h, _aggregate_panel(h, bottom)


# Observation counts for the differing-lengths scenario, by label.
DIFFLEN_LENGTHS = {
    "T": 120,
    "A": 120,
    "B": 90,
    "AA": 120,
    "AB": 90,
    "BA": 90,
    "BB": 90,
    "AAA": 60,
    "AAB": 60,
    "ABA": 60,
    "ABB": 60,
    "BAA": 45,
    "BAB": 45,
    "BBA": 15,
    "BBB": 15,
}


def gen_difflen(cfg: ScenarioConfig, rep_index: int):
    """Smoothing-style series cut to per-node history lengths (head removed)."""
    rng = rep_rng(cfg, rep_index)
    h = fig_tree()
    total = max(DIFFLEN_LENGTHS.values())
    base = _gen_arima_bottom(rng, 8, total)
    bottom = base + draw_smoothing_errors(rng, total)
    panel = _aggregate_panel(h, bottom)
    values = panel.values.copy()
    for j, label in enumerate(h.labels):
        values[: total - DIFFLEN_LENGTHS[label], j] = np.nan
    return h, SeriesPanel(values, panel.labels)


def gen_degenerate(cfg: ScenarioConfig, rep_index: int):
    """Correlated-scenario data with leaves BBA/BBB dropped after aggregation."""
    full_h, full_panel = gen_correlated(cfg, rep_index)
    h = degenerate_tree()
    keep = [full_h.index_of(lab) for lab in h.labels]
    return h, SeriesPanel(full_panel.values[:, keep], h.labels)


def gen_large(cfg: ScenarioConfig, rep_index: int):
    """384 ARIMA bottoms plus three-component cancel-out errors, 511 nodes."""
    rng = rep_rng(cfg, rep_index)
    h = large_tree()
    base = _gen_arima_bottom(rng, 384, cfg.T)
    bottom = base + draw_large_errors(rng, cfg.T)
    return h, _aggregate_panel(h, bottom)


_GENERATORS = {
    Scenario.CORRELATED: gen_correlated,
    Scenario.SMOOTHING: gen_smoothing,
    Scenario.SEASONAL: gen_seasonal,
    Scenario.DIFFLEN: gen_difflen,
    Scenario.DEGENERATE: gen_degenerate,
    Scenario.LARGE: gen_large,
}


def scenario_tree(scenario: Scenario) -> Hierarchy:
    """The fixed hierarchy a scenario generates data for."""
    if scenario is Scenario.DEGENERATE:
        return degenerate_tree()
    if scenario is Scenario.LARGE:
        return large_tree()
    return fig_tree()


def generate(cfg: ScenarioConfig, rep_index: int) -> tuple[Hierarchy, SeriesPanel]:
    """Generate one replica of the configured scenario."""
    return _GENERATORS[cfg.scenario](cfg, rep_index)
