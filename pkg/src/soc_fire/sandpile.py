"""Bak-Tang-Wiesenfeld sandpile on a finite lattice with open boundaries.

Grains are dropped one at a time by a deposition policy; any cell holding
``threshold`` or more grains topples, giving one grain to each of its four
von Neumann neighbours (grains pushed past an edge are lost). For thresholds
other than 4 the recorded dissipation is the net number of grains leaving the
lattice per toppling, so grain conservation stays exact. A periodic
"fuel removal" intervention can strip grains from the most loaded cells
without triggering topplings.

Coordinates are ``(row, col)`` and the grain array has shape
``(height, width)``; row-major index is ``row * width + col``.
Random draws use numpy's PCG64 generator seeded from ``LatticeConfig.seed``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numba import njit

from .errors import ConfigError

Site = tuple[int, int]


# -- policies ---------------------------------------------------------------

@dataclass(frozen=True)
class UniformRandom:
    pass


@dataclass(frozen=True)
class MaxIntent:
    pass


@dataclass(frozen=True)
class MinIntent:
    pass


@dataclass(frozen=True)
class FixedSite:
    row: int
    col: int


DepositionPolicy = UniformRandom | MaxIntent | MinIntent | FixedSite


@dataclass(frozen=True)
class NoIntervention:
    pass


@dataclass(frozen=True)
class PeriodicRemoval:
    period: int
    top_fraction: float
    grains_removed_per_cell: int

    def __post_init__(self):
        if self.period < 1:
            raise ConfigError("intervention period must be >= 1")
        if not 0.0 < self.top_fraction <= 1.0:
            raise ConfigError("top_fraction must lie in (0, 1]")
        if self.grains_removed_per_cell < 1:
            raise ConfigError("grains_removed_per_cell must be >= 1")


InterventionPolicy = NoIntervention | PeriodicRemoval


def parse_policy(text: str) -> DepositionPolicy:
    """Parse ``uniform``, ``max``, ``min`` or ``fixed:ROW,COL``."""
    text = text.strip().lower()
    simple = {"uniform": UniformRandom, "random": UniformRandom, "max": MaxIntent, "min": MinIntent}
    if text in simple:
        return simple[text]()
    if text.startswith("fixed:"):
        try:
            r, c = (int(v) for v in text[len("fixed:"):].split(","))
        except ValueError:
            raise ConfigError(f"bad fixed-site policy {text!r}; expected fixed:ROW,COL") from None
        return FixedSite(r, c)
    raise ConfigError(f"unknown deposition policy {text!r}")


def parse_intervention(text: str) -> InterventionPolicy:
    """Parse ``none`` or ``periodic:PERIOD,FRACTION,GRAINS``."""
    text = text.strip().lower()
    if text in ("", "none"):
        return NoIntervention()
    if text.startswith("periodic:"):
        parts = text[len("periodic:"):].split(",")
        try:
            period, frac, grains = int(parts[0]), float(parts[1]), int(parts[2])
        except (ValueError, IndexError):
            raise ConfigError(
                f"bad intervention {text!r}; expected periodic:PERIOD,FRACTION,GRAINS"
            ) from None
        return PeriodicRemoval(period, frac, grains)
    raise ConfigError(f"unknown intervention {text!r}")


def policy_label(policy) -> str:
    if isinstance(policy, FixedSite):
        return f"fixed:{policy.row},{policy.col}"
    if isinstance(policy, PeriodicRemoval):
        return f"periodic:{policy.period},{policy.top_fraction!r},{policy.grains_removed_per_cell}"
    return {UniformRandom: "uniform", MaxIntent: "max", MinIntent: "min", NoIntervention: "none"}[
        type(policy)
    ]


# -- configuration and state -------------------------------------------------

def max_degree(height: int, width: int) -> int:
    """Largest number of on-lattice von Neumann neighbours of any cell."""
    return min(height - 1, 2) + min(width - 1, 2)


@dataclass(frozen=True)
class LatticeConfig:
    width: int
    height: int
    threshold: int = 4
    seed: int = 0
    warmup_deposits: int | None = None  # None -> 10 * width * height
    measured_deposits: int = 1
    deposition_policy: DepositionPolicy = field(default_factory=UniformRandom)
    intervention: InterventionPolicy = field(default_factory=NoIntervention)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("width and height must be >= 1")
        if self.threshold < 1:
            raise ConfigError("threshold must be >= 1")
        if self.threshold < max_degree(self.height, self.width):
            raise ConfigError(
                f"threshold {self.threshold} is below the {max_degree(self.height, self.width)} "
                "on-lattice neighbours of an interior cell; relaxation would not terminate"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.warmup_deposits is not None and self.warmup_deposits < 0:
            raise ConfigError("warmup_deposits must be >= 0")
        if self.measured_deposits < 1:
            raise ConfigError("measured_deposits must be >= 1")
        p = self.deposition_policy
        if isinstance(p, FixedSite) and not (0 <= p.row < self.height and 0 <= p.col < self.width):
            raise ConfigError(f"fixed site ({p.row},{p.col}) outside {self.height}x{self.width} lattice")

    @property
    def warmup(self) -> int:
        if self.warmup_deposits is None:
            return 10 * self.width * self.height
        return self.warmup_deposits

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "threshold": self.threshold,
            "seed": self.seed,
            "warmup_deposits": self.warmup,
            "measured_deposits": self.measured_deposits,
            "deposition_policy": policy_label(self.deposition_policy),
            "intervention": policy_label(self.intervention),
        }


@dataclass
class Lattice:
    grains: np.ndarray
    total_deposited: int = 0
    total_dissipated: int = 0
    total_removed: int = 0
    _work: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def zeros(cls, height: int, width: int) -> "Lattice":
        return cls(np.zeros((height, width), dtype=np.int64))

    @classmethod
    def from_array(cls, grains) -> "Lattice":
        """Wrap an existing configuration; its grains count as already deposited."""
        g = np.array(grains, dtype=np.int64, ndmin=2)
        if (g < 0).any():
            raise ConfigError("grain counts must be non-negative")
        return cls(g, total_deposited=int(g.sum()))

    def work_buffers(self):
        """Scratch stack and visit mask for relaxation, kept per lattice."""
        if self._work is None or self._work[1].shape != self.grains.shape:
            self._work = (np.empty(self.grains.size, dtype=np.int64),
                          np.zeros(self.grains.shape, dtype=np.bool_))
        return self._work

    def deposit(self, site: Site, grains: int = 1) -> None:
        self.grains[site] += grains
        self.total_deposited += grains

    def is_stable(self, threshold: int) -> bool:
        return bool((self.grains < threshold).all())

    def conserved(self) -> bool:
        return self.total_deposited == (
            int(self.grains.sum()) + self.total_dissipated + self.total_removed
        )

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.grains.shape, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.grains, dtype="<i8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class AvalancheEvent:
    topplings: int = 0
    area: int = 0
    dissipated: int = 0


# -- relaxation ---------------------------------------------------------------

@njit(cache=True)
def _relax(g, threshold, stack, n_stack, touched):
    """Topple until stable, starting from the ``n_stack`` cells preloaded on ``stack``.

    Every other cell must already be below threshold. ``stack`` needs room for
    ``g.size`` entries since a cell sits on it at most once at a time.
    ``touched`` must be all False on entry and is cleared again on exit.
    """
    h, w = g.shape
    topplings = 0
    area = 0
    lost = 0
    while n_stack > 0:
        n_stack -= 1
        idx = stack[n_stack]
        r = idx // w
        c = idx - r * w
        # k topplings of the same cell at once; counts are per toppling
        k = g[r, c] // threshold
        if k == 0:
            continue
        g[r, c] -= k * threshold
        topplings += k
        if not touched[r, c]:
            touched[r, c] = True
            area += 1
        # net loss: everything taken from the cell minus what stays on the lattice
        lost += k * threshold
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr = r + dr
            cc = c + dc
            if rr < 0 or rr >= h or cc < 0 or cc >= w:
                continue
            lost -= k
            before = g[rr, cc]
            g[rr, cc] = before + k
            if before < threshold and before + k >= threshold:
                stack[n_stack] = rr * w + cc
                n_stack += 1
    if area > 0:
        touched[:, :] = False
    return topplings, area, lost


@njit(cache=True)
def _push_unstable(g, threshold, stack):
    h, w = g.shape
    n = 0
    for i in range(h):
        for j in range(w):
            if g[i, j] >= threshold:
                stack[n] = i * w + j
                n += 1
    return n


def stabilize(lattice: Lattice, config: LatticeConfig | int, site: Site | None = None) -> AvalancheEvent:
    """Relax the lattice until every cell is below threshold.

    If ``site`` is given only that cell is assumed to be unstable (the usual
    case right after a deposit), which avoids a full-lattice scan.
    ``config`` may be a LatticeConfig or a bare threshold.
    """
    threshold = config if isinstance(config, int) else config.threshold
    g = lattice.grains
    if threshold < max_degree(*g.shape):
        raise ConfigError(f"threshold {threshold} too small for a {g.shape[0]}x{g.shape[1]} lattice")
    stack, touched = lattice.work_buffers()
    if site is None:
        n = _push_unstable(g, threshold, stack)
    elif g[site] >= threshold:
        stack[0] = site[0] * g.shape[1] + site[1]
        n = 1
    else:
        return AvalancheEvent()
    t, a, lost = _relax(g, threshold, stack, n, touched)
    lattice.total_dissipated += lost
    return AvalancheEvent(int(t), int(a), int(lost))


# -- deposition & intervention ------------------------------------------------

def choose_site(lattice: Lattice, policy: DepositionPolicy, rng: np.random.Generator) -> Site:
    g = lattice.grains
    h, w = g.shape
    if isinstance(policy, UniformRandom):
        idx = int(rng.integers(h * w))
    elif isinstance(policy, MaxIntent):
        idx = int(np.argmax(g))  # first occurrence == lowest row-major index
    elif isinstance(policy, MinIntent):
        idx = int(np.argmin(g))
    elif isinstance(policy, FixedSite):
        if not (0 <= policy.row < h and 0 <= policy.col < w):
            raise ConfigError(f"fixed site ({policy.row},{policy.col}) outside lattice")
        return policy.row, policy.col
    else:
        raise ConfigError(f"unknown deposition policy {policy!r}")
    return divmod(idx, w)


def intervention_targets(grains: np.ndarray, top_fraction: float) -> np.ndarray:
    """Row-major indices of the ceil(top_fraction * N) most loaded cells."""
    flat = grains.ravel()
    # guard against 0.3 * 10 == 3.0000000000000004 style round-up
    k = max(1, math.ceil(top_fraction * flat.size - 1e-9))
    order = np.argsort(-flat, kind="stable")
    return order[:k]


def apply_intervention(lattice: Lattice, policy: InterventionPolicy) -> int:
    """Strip grains from the most loaded cells; returns the number removed.

    Callers decide *when* the intervention is due; removal never topples.
    """
    if isinstance(policy, NoIntervention):
        return 0
    flat = lattice.grains.reshape(-1)
    idx = intervention_targets(lattice.grains, policy.top_fraction)
    take = np.minimum(flat[idx], policy.grains_removed_per_cell)
    flat[idx] -= take
    removed = int(take.sum())
    lattice.total_removed += removed
    return removed


# -- full runs -------------------------------------------------------------------

@dataclass
class SimulationRun:
    config: LatticeConfig
    events: list[AvalancheEvent]
    final_checksum: str
    total_deposited: int = 0
    total_dissipated: int = 0
    total_removed: int = 0
    final_grains: int = 0

    def sizes(self, field_name: str = "topplings") -> np.ndarray:
        return np.fromiter((getattr(e, field_name) for e in self.events), dtype=np.int64,
                           count=len(self.events))

    def header(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "checksum": self.final_checksum,
            "totals": {
                "deposited": self.total_deposited,
                "dissipated": self.total_dissipated,
                "removed": self.total_removed,
                "on_lattice": self.final_grains,
                "events": len(self.events),
            },
        }

    def events_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["event_index", "topplings", "area", "dissipated"])
        for i, e in enumerate(self.events):
            writer.writerow([i, e.topplings, e.area, e.dissipated])
        return buf.getvalue()

    def header_json(self) -> str:
        return json.dumps(self.header(), indent=2, sort_keys=True) + "\n"


def step(lattice: Lattice, config: LatticeConfig, rng: np.random.Generator, counter: int) -> AvalancheEvent:
    """One driven update: choose a site, drop a grain, relax, maybe intervene.

    ``counter`` is the 1-based index of this deposit over the whole run.
    """
    site = choose_site(lattice, config.deposition_policy, rng)
    lattice.deposit(site)
    event = stabilize(lattice, config.threshold, site)
    iv = config.intervention
    if isinstance(iv, PeriodicRemoval) and counter % iv.period == 0:
        apply_intervention(lattice, iv)
    return event


def run_simulation(config: LatticeConfig, check_invariants: bool = False) -> SimulationRun:
    """Drive a fresh all-zero lattice; only post-warmup avalanches are recorded."""
    lattice = Lattice.zeros(config.height, config.width)
    rng = np.random.default_rng(config.seed)
    warmup = config.warmup
    for i in range(1, warmup + 1):
        step(lattice, config, rng, i)
        if check_invariants:
            _check(lattice, config)
    events = []
    for i in range(warmup + 1, warmup + config.measured_deposits + 1):
        events.append(step(lattice, config, rng, i))
        if check_invariants:
            _check(lattice, config)
    return SimulationRun(
        config=config,
        events=events,
        final_checksum=lattice.checksum(),
        total_deposited=lattice.total_deposited,
        total_dissipated=lattice.total_dissipated,
        total_removed=lattice.total_removed,
        final_grains=int(lattice.grains.sum()),
    )


def _check(lattice: Lattice, config: LatticeConfig) -> None:
    if not lattice.is_stable(config.threshold):
        raise AssertionError("lattice left unstable after a step")
    if not lattice.conserved():
        raise AssertionError("grain conservation violated")


# -- size statistics -----------------------------------------------------------

@dataclass(frozen=True)
class SizeHistogram:
    lower: np.ndarray  # inclusive bin edges
    upper: np.ndarray  # exclusive bin edges
    representative: np.ndarray  # geometric mean of the edges
    counts: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        """Number of integer sizes falling in each bin."""
        return np.ceil(self.upper) - np.ceil(self.lower)

    @property
    def density(self) -> np.ndarray:
        """Counts per unit size, normalised to sum(count) == 1 over all events."""
        total = self.counts.sum()
        if total == 0:
            return np.zeros_like(self.representative)
        return self.counts / self.widths / total

    def __len__(self) -> int:
        return len(self.counts)


def log_edges(max_size: float, ratio: float) -> np.ndarray:
    if ratio <= 1:
        raise ConfigError("logarithmic bin ratio must be > 1")
    edges = [1.0]
    while edges[-1] <= max_size:
        edges.append(edges[-1] * ratio)
    return np.asarray(edges)


def size_distribution(sizes: Iterable[int] | SimulationRun, ratio: float | None = 2.0,
                      edges: Iterable[float] | None = None) -> SizeHistogram:
    """Histogram of nonzero avalanche sizes.

    Either logarithmic bins ``[1, r), [r, r^2), ...`` reaching past the largest
    size, or caller-supplied explicit ``edges``.
    """
    if isinstance(sizes, SimulationRun):
        sizes = sizes.sizes()
    s = np.asarray(list(sizes) if not isinstance(sizes, np.ndarray) else sizes, dtype=float)
    s = s[s > 0]
    if edges is not None:
        e = np.asarray(list(edges), dtype=float)
        if e.size < 2 or (np.diff(e) <= 0).any():
            raise ConfigError("explicit edges must be strictly increasing with >= 2 entries")
    else:
        if ratio is None or ratio <= 1:
            raise ConfigError("logarithmic bin ratio must be > 1")
        if s.size == 0:
            empty = np.empty(0)
            return SizeHistogram(empty, empty, empty, np.empty(0, dtype=np.int64))
        e = log_edges(s.max(), ratio)
    counts, _ = np.histogram(s, bins=e)
    # np.histogram closes the last bin; keep every bin half-open
    counts[-1] -= int(np.count_nonzero(s == e[-1]))
    lo, hi = e[:-1], e[1:]
    return SizeHistogram(lo, hi, np.sqrt(lo * hi), counts.astype(np.int64))


def read_events_csv(text: str) -> list[AvalancheEvent]:
    """Inverse of ``SimulationRun.events_csv`` (comment lines are skipped)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0] != "event_index,topplings,area,dissipated":
        raise ConfigError("not an avalanche event CSV")
    events = []
    for ln in lines[1:]:
        _, t, a, d = (int(v) for v in ln.split(","))
        events.append(AvalancheEvent(t, a, d))
    return events
