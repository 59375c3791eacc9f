"""Synthetic measurement-grid simulator for spatio-temporal voltage streams.

Loads evolve per-node as a base level plus scripted events (steps and
ramps), with stationary mixed noise y * (1 + gamma_mul r1) + gamma_acc r2.
Bus voltages respond through a fixed linear sensitivity matrix, so every
scripted load event propagates to all sensors at once. A voltage-collapse
episode is emulated, not solved: past its onset the affected node's load
gains a divergent quadratic ramp and the noise floor is amplified, which
drives every spectral indicator far from its stationary baseline.

The 118-node presets mirror a standard transmission-grid test case in node
count only; loads, sensitivities, and noise levels are synthetic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Stage",
    "CollapseSpec",
    "EventScript",
    "ResponseModel",
    "noisy_loads",
    "simulate_voltage",
    "random_response_matrix",
    "ieee118_default_script",
    "ieee118_fusion_script",
    "FUSION_ASSESSMENT_SPANS",
]

STAGE_KINDS = ("constant", "step", "ramp")

#: assessment spans (t_start, t_end) paired with the fusion preset's events
FUSION_ASSESSMENT_SPANS = (
    (100, 217), (850, 967), (2200, 2317), (3300, 3417), (3900, 4017),
    (4400, 4517),
)


@dataclass(frozen=True)
class Stage:
    """One scripted load event on a single node.

    The extra load while active is ``level + slope * t`` in the same units
    as the base loads; a step keeps slope zero, a ramp uses it. Times are
    inclusive integer ticks.
    """

    t_start: int
    t_end: int
    node: int
    kind: str
    level: float
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in STAGE_KINDS:
            raise ValueError(f"stage kind must be one of {STAGE_KINDS}")
        if self.t_start < 1 or self.t_end < self.t_start:
            raise ValueError(
                f"bad stage span [{self.t_start}, {self.t_end}]")
        if self.node < 0:
            raise ValueError("node index must be nonnegative")
        if self.kind != "ramp" and self.slope != 0.0:
            raise ValueError(f"a {self.kind} stage cannot carry a slope")

    def value(self, t):
        """Extra load at tick(s) t, zero outside the active span."""
        t = np.asarray(t, dtype=float)
        active = (t >= self.t_start) & (t <= self.t_end)
        return np.where(active, self.level + self.slope * t, 0.0)


@dataclass(frozen=True)
class CollapseSpec:
    """Emulated voltage-collapse episode.

    From ``t_start`` the node's load gains growth * (t - t_start)^2 and
    all noise within the span is amplified by ``noise_boost``; the blow-up
    is a stand-in for solver divergence, not a physical trajectory.
    """

    t_start: int
    t_end: int
    node: int
    growth: float = 0.02
    noise_boost: float = 8.0

    def __post_init__(self):
        if self.t_start < 1 or self.t_end < self.t_start:
            raise ValueError("bad collapse span")
        if self.growth <= 0 or self.noise_boost < 1.0:
            raise ValueError("collapse needs positive growth and boost >= 1")


@dataclass(frozen=True)
class EventScript:
    """Full load scenario: base levels, scripted stages, noise, collapse."""

    n_nodes: int
    t_total: int
    stages: tuple = ()
    base_loads: float | np.ndarray = 1.0
    gamma_acc: float = 0.1
    gamma_mul: float = 0.001
    collapse: CollapseSpec | None = None

    def __post_init__(self):
        if self.n_nodes < 1 or self.t_total < 1:
            raise ValueError("need positive node count and duration")
        if self.gamma_acc < 0 or self.gamma_mul < 0:
            raise ValueError("noise levels must be nonnegative")
        stages = tuple(sorted(self.stages, key=lambda s: (s.node, s.t_start)))
        for s in stages:
            if s.node >= self.n_nodes:
                raise ValueError(f"stage node {s.node} out of range")
            if s.t_end > self.t_total:
                raise ValueError(f"stage runs past t_total={self.t_total}")
        for a, b in zip(stages, stages[1:]):
            if a.node == b.node and b.t_start <= a.t_end:
                raise ValueError(
                    f"stages overlap on node {a.node}: "
                    f"[{a.t_start},{a.t_end}] and [{b.t_start},{b.t_end}]")
        object.__setattr__(self, "stages", stages)
        base = np.asarray(self.base_loads, dtype=float)
        if base.ndim == 0:
            base = np.full(self.n_nodes, float(base))
        if base.shape != (self.n_nodes,) or np.any(base <= 0):
            raise ValueError("base_loads must be positive, one per node")
        base.setflags(write=False)
        object.__setattr__(self, "base_loads", base)
        if self.collapse is not None:
            if self.collapse.node >= self.n_nodes:
                raise ValueError("collapse node out of range")
            if self.collapse.t_end > self.t_total:
                raise ValueError("collapse runs past t_total")

    def clean_loads(self, t_grid=None) -> np.ndarray:
        """Noise-free load matrix (n_nodes x len(t_grid))."""
        t = self._grid(t_grid)
        loads = np.repeat(self.base_loads[:, None], t.size, axis=1)
        for s in self.stages:
            loads[s.node] += s.value(t)
        if self.collapse is not None:
            c = self.collapse
            active = (t >= c.t_start) & (t <= c.t_end)
            loads[c.node] += np.where(
                active, c.growth * (t - c.t_start) ** 2, 0.0)
        return loads

    def _grid(self, t_grid) -> np.ndarray:
        if t_grid is None:
            return np.arange(1, self.t_total + 1, dtype=float)
        t = np.asarray(t_grid, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("t_grid must be a nonempty 1-d array")
        return t


def noisy_loads(script: EventScript, t_grid=None, seed: int = 0) -> np.ndarray:
    """Scripted loads with mixed noise, y (1 + g_mul r1) + g_acc r2.

    Both noise components are amplified inside a collapse span. The draw
    is fully determined by ``seed``.
    """
    t = script._grid(t_grid)
    y = script.clean_loads(t)
    rng = np.random.default_rng(seed)
    r1 = rng.standard_normal(y.shape)
    r2 = rng.standard_normal(y.shape)
    boost = np.ones(t.size)
    if script.collapse is not None:
        c = script.collapse
        boost[(t >= c.t_start) & (t <= c.t_end)] = c.noise_boost
    return y * (1.0 + script.gamma_mul * r1 * boost) \
        + script.gamma_acc * r2 * boost


@dataclass(frozen=True)
class ResponseModel:
    """Linear voltage response to relative load deviations."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.ndim != 2 or xi.shape[0] != xi.shape[1]:
            raise ValueError("sensitivity matrix must be square")
        if not np.all(np.isfinite(xi)):
            raise ValueError("sensitivity matrix must be finite")
        if np.abs(xi - xi.T).max() > 1e-10 * max(1.0, np.abs(xi).max()):
            raise ValueError("sensitivity matrix must be symmetric")
        xi = xi.copy()
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def node_count(self) -> int:
        return self.xi.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvalsh(self.xi)).max())

    @property
    def condition_number(self) -> float:
        eigs = np.abs(np.linalg.eigvalsh(self.xi))
        return float(eigs.max() / eigs.min())


def random_response_matrix(n: int, conditioning: float = 1.5,
                           seed: int = 0) -> ResponseModel:
    """Random symmetric positive-definite sensitivity with bounded conditioning.

    Built as I + rho K with K symmetric and rescaled to unit spectral
    radius, where rho = (conditioning - 1) / (conditioning + 1); the
    eigenvalues then sit inside [1 - rho, 1 + rho], so the condition
    number never exceeds ``conditioning`` (one edge of the rescaled
    spectrum touches the interval boundary, the other usually stops
    short of it).

    The default of 1.5 keeps noise-only streams inside the circular-law
    annulus: stronger coupling correlates sensor rows enough that the
    spectral checks flag clean data (measured false-flag onset near 2.0).
    """
    if n < 1:
        raise ValueError("node count must be positive")
    if conditioning < 1.0:
        raise ValueError("conditioning must be at least 1")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    k = (a + a.T) / 2.0
    radius = float(np.abs(np.linalg.eigvalsh(k)).max())
    if radius > 0:
        k /= radius
    rho = (conditioning - 1.0) / (conditioning + 1.0)
    return ResponseModel(np.eye(n) + rho * k)


def simulate_voltage(model: ResponseModel, loads, base_loads=1.0) -> np.ndarray:
    """Voltage-deviation matrix for a load matrix (nodes x ticks).

    Pure linear response V = Xi (loads - base), columnwise and
    deterministic; an identity sensitivity returns the load deviations
    unchanged.
    """
    loads = np.asarray(loads, dtype=float)
    if loads.ndim != 2 or loads.shape[0] != model.node_count:
        raise ValueError(
            f"loads must be ({model.node_count}, T), got {loads.shape}")
    base = np.asarray(base_loads, dtype=float)
    if base.ndim == 0:
        base = np.full(model.node_count, float(base))
    if base.shape != (model.node_count,):
        raise ValueError("base_loads must be one per node")
    return model.xi @ (loads - base[:, None])


def ieee118_default_script(include_collapse: bool = True) -> EventScript:
    """118-node, 2500-tick scenario: quiet, two steps, then a sustained ramp.

    Node 52 is quiet through tick 500, carries a 30 MW step on
    [501, 900], a 120 MW step on [901, 1300], and from 1301 a ramp
    -205 + 0.25 t that continues the 120 MW level and keeps growing.
    With ``include_collapse`` the quadratic blow-up overlays [2254, 2500],
    by which point the ramp alone exceeds 350 MW.
    """
    stages = (
        Stage(1, 500, 52, "constant", 0.0),
        Stage(501, 900, 52, "step", 30.0),
        Stage(901, 1300, 52, "step", 120.0),
        Stage(1301, 2500, 52, "ramp", -205.0, 0.25),
    )
    collapse = CollapseSpec(2254, 2500, 52) if include_collapse else None
    return EventScript(n_nodes=118, t_total=2500, stages=stages,
                       collapse=collapse)


def ieee118_fusion_script() -> EventScript:
    """118-node, 5500-tick multi-event scenario with six assessment spans.

    Timeline: quiet start; 30 MW step on node 52 from 901; load growth on
    node 22 over [1918, 2600] held afterwards; load growth on node 52 over
    [3118, 3790] held afterwards; emulated collapse on node 52 over
    [3908, 4100]; quiet tail. ``FUSION_ASSESSMENT_SPANS`` lists one
    (t_start, t_end) sampling window per regime, in order: quiet, step
    onset, first growth, second growth, collapse, quiet tail.
    """
    growth = 0.2
    hold_22 = growth * 2600 - growth * 1918
    hold_52 = 30.0 + growth * 3790 - growth * 3118
    stages = (
        Stage(901, 3117, 52, "step", 30.0),
        Stage(3118, 3790, 52, "ramp", 30.0 - growth * 3118, growth),
        Stage(3791, 4100, 52, "step", hold_52),
        Stage(1918, 2600, 22, "ramp", -growth * 1918, growth),
        Stage(2601, 4100, 22, "step", hold_22),
    )
    return EventScript(
        n_nodes=118, t_total=5500, stages=stages,
        collapse=CollapseSpec(3908, 4100, 52))
