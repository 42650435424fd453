"""
montecarlo_functions module
===================
This module contains the Monte Carlo samplers of the anisotropic model
on periodic boxes (tori) of side L in d + s dimensions.

Two samplers are provided: single-spin Metropolis and Wolff clusters
with bond probability 1 - exp(-2 J_b) on each edge class. Both estimate
the susceptibility proxy ⟨M²⟩ / |Λ|, with M the total magnetization,
from several independent chains whose seeds are spawned from a master
seed. Chains run concurrently in a thread pool; the numba kernels
release the GIL.

The proxy is a torus quantity: it is not the free-boundary, sup-based
susceptibility of the bound and only its behaviour in L is meaningful
for comparisons with the bound curve.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from ising_crossover.expansion.spin_oracle import (
    MAX_SPINS, Couplings, couplings_weights, two_point_matrix_spin
)
from ising_crossover.lattice import PLANAR, VERTICAL, EdgeGraph

jit = numba.njit(nogil=True)


@dataclass(frozen=True)
class McConfig:
    """
    Parameters of a Monte Carlo run.

    Attributes
    ----------
    d, s: int
        Planar and vertical dimensions.
    L: int
        Torus side, at least 2.
    couplings: Couplings
        J_d and J_s.
    sweeps: int
        Sweeps per chain, burn-in included.
    burn_in: int
        Discarded sweeps, 0 ≤ burn_in < sweeps.
    chains: int
        Number of independent chains.
    seed: int
        Master seed.
    """
    d: int
    s: int
    L: int
    couplings: Couplings
    sweeps: int
    burn_in: int
    chains: int
    seed: int

    def __post_init__(self):
        for name in ("d", "s", "L", "sweeps", "burn_in", "chains", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"'{name}' must be an integer, got {value!r}.")
        if self.d < 0 or self.s < 0 or self.d + self.s == 0:
            raise ValueError("Dimensions must satisfy d, s >= 0 and d + s >= 1.")
        if self.L < 2:
            raise ValueError(f"The torus side L must be at least 2, got {self.L}.")
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError(
                f"Need 0 <= burn_in < sweeps, got burn_in = {self.burn_in}, "
                f"sweeps = {self.sweeps}."
            )
        if self.chains < 1:
            raise ValueError(f"At least one chain is needed, got {self.chains}.")
        if self.seed < 0:
            raise ValueError(f"The seed must be non-negative, got {self.seed}.")

    @property
    def n_sites(self) -> int:
        return self.L ** (self.d + self.s)


@dataclass(frozen=True)
class McEstimate:
    """
    Result of a Monte Carlo run.

    Attributes
    ----------
    proxy: float
        Mean over chains of ⟨M²⟩ / |Λ|.
    standard_error: float
        Standard deviation of the chain means over sqrt(chains); NaN for
        a single chain.
    chain_means: tuple of float
        Per-chain estimates, in chain order.
    statistic: float
        Acceptance rate (Metropolis) or mean cluster size (Wolff).
    algorithm: str
        'metropolis' or 'wolff'.
    config: McConfig
        Configuration of the run.
    """
    proxy: float
    standard_error: float
    chain_means: tuple
    statistic: float
    algorithm: str
    config: McConfig

    def agrees_with(self, value: float, n_errors: float = 3.0) -> bool:
        return abs(self.proxy - value) <= n_errors * self.standard_error


def torus_neighbours(d: int, s: int, L: int) -> np.ndarray:
    """
    Neighbour table of the torus (Z / L Z)^(d+s).

    Sites are indexed in C order of their coordinates. Column 2a holds
    the neighbour in direction +a and column 2a + 1 the one in direction
    -a; axes a < d are planar. For L = 2 both columns of an axis point to
    the same site, which counts the pair twice.
    """
    dimension = d + s
    shape = (L,) * dimension
    n = L ** dimension
    coords = np.array(np.unravel_index(np.arange(n), shape)).T
    neighbours = np.empty((n, 2 * dimension), dtype=np.int64)
    for axis in range(dimension):
        for column, shift in ((2 * axis, 1), (2 * axis + 1, -1)):
            moved = coords.copy()
            moved[:, axis] = (moved[:, axis] + shift) % L
            neighbours[:, column] = np.ravel_multi_index(tuple(moved.T), shape)
    return neighbours


def torus_graph(d: int, s: int, L: int) -> EdgeGraph:
    """
    Edge graph of the torus with the same site indices as
    `torus_neighbours`; for L = 2 every edge appears twice.
    """
    neighbours = torus_neighbours(d, s, L)
    edges = []
    classes = []
    for i in range(neighbours.shape[0]):
        for axis in range(d + s):
            edges.append((i, int(neighbours[i, 2 * axis])))
            classes.append(PLANAR if axis < d else VERTICAL)
    return EdgeGraph(neighbours.shape[0], edges, classes)


def _column_couplings(cfg: McConfig) -> np.ndarray:
    return np.array([
        cfg.couplings.J_d if axis < cfg.d else cfg.couplings.J_s
        for axis in range(cfg.d + cfg.s) for _ in range(2)
    ], dtype=np.float64)


@jit
def _random_spins(n):
    spins = np.empty(n, dtype=np.int64)
    for i in range(n):
        spins[i] = 1 if np.random.random() < 0.5 else -1
    return spins


@jit
def _metropolis_chain(neighbours, couplings, sweeps, burn_in, seed):
    np.random.seed(seed)
    n = neighbours.shape[0]
    spins = _random_spins(n)
    accepted = 0
    m2_sum = 0.0
    for sweep in range(sweeps):
        for _ in range(n):
            i = np.random.randint(0, n)
            field = 0.0
            for k in range(neighbours.shape[1]):
                field += couplings[k] * spins[neighbours[i, k]]
            delta = 2.0 * spins[i] * field
            if delta <= 0.0 or np.random.random() < np.exp(-delta):
                spins[i] = -spins[i]
                if sweep >= burn_in:
                    accepted += 1
        if sweep >= burn_in:
            m = float(spins.sum())
            m2_sum += m * m
    measured = sweeps - burn_in
    return m2_sum / measured / n, accepted / (measured * n)


@jit
def _wolff_chain(neighbours, probabilities, sweeps, burn_in, seed):
    np.random.seed(seed)
    n = neighbours.shape[0]
    spins = _random_spins(n)
    stack = np.empty(n, dtype=np.int64)
    cluster_total = 0
    clusters = 0
    m2_sum = 0.0
    for sweep in range(sweeps):
        flipped = 0
        while flipped < n:
            root = np.random.randint(0, n)
            value = spins[root]
            spins[root] = -value
            stack[0] = root
            top = 1
            size = 1
            while top > 0:
                top -= 1
                site = stack[top]
                for k in range(neighbours.shape[1]):
                    j = neighbours[site, k]
                    if spins[j] == value and np.random.random() < probabilities[k]:
                        spins[j] = -value
                        stack[top] = j
                        top += 1
                        size += 1
            flipped += size
            if sweep >= burn_in:
                cluster_total += size
                clusters += 1
        if sweep >= burn_in:
            m = float(spins.sum())
            m2_sum += m * m
    measured = sweeps - burn_in
    return m2_sum / measured / n, cluster_total / max(clusters, 1)


def chain_seeds(seed: int, chains: int) -> list:
    """
    Independent 32-bit seeds for each chain, spawned from `seed`.
    """
    return [
        int(child.generate_state(1)[0])
        for child in np.random.SeedSequence(seed).spawn(chains)
    ]


def _run_chains(cfg: McConfig, kernel, parameters, algorithm, workers):
    neighbours = torus_neighbours(cfg.d, cfg.s, cfg.L)
    seeds = chain_seeds(cfg.seed, cfg.chains)

    def chain(seed):
        return kernel(neighbours, parameters, cfg.sweeps, cfg.burn_in, seed)

    if workers is None:
        workers = cfg.chains
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(chain, seeds))
    else:
        results = [chain(seed) for seed in seeds]
    means = np.array([result[0] for result in results])
    statistic = float(np.mean([result[1] for result in results]))
    if cfg.chains > 1:
        standard_error = float(np.std(means, ddof=1) / math.sqrt(cfg.chains))
    else:
        standard_error = math.nan
    return McEstimate(
        float(means.mean()), standard_error, tuple(float(m) for m in means),
        statistic, algorithm, cfg
    )


def run_metropolis(cfg: McConfig, workers: int = None) -> McEstimate:
    """
    Single-spin Metropolis estimate of ⟨M²⟩ / |Λ|.

    A sweep is |Λ| attempted flips at uniformly drawn sites, accepted with
    probability min(1, exp(-2 σ_i Σ_k J_k σ_(i+k))). Results depend only
    on `cfg`, not on `workers`.

    Parameters
    ----------
    cfg: McConfig
        Run configuration.
    workers: int, optional
        Threads running the chains; one per chain by default.

    Returns
    -------
    McEstimate
        With the mean acceptance rate as statistic.
    """
    return _run_chains(
        cfg, _metropolis_chain, _column_couplings(cfg), "metropolis", workers
    )


def run_wolff(cfg: McConfig, workers: int = None) -> McEstimate:
    """
    Wolff cluster estimate of ⟨M²⟩ / |Λ|.

    Bonds are added with probability 1 - exp(-2 J_b), J_b being the
    coupling of the edge class. A sweep grows clusters until at least
    |Λ| spins have been flipped.

    Parameters
    ----------
    cfg: McConfig
        Run configuration; the couplings are ferromagnetic by
        construction of `Couplings`.
    workers: int, optional
        Threads running the chains; one per chain by default.

    Returns
    -------
    McEstimate
        With the mean cluster size as statistic.
    """
    probabilities = -np.expm1(-2.0 * _column_couplings(cfg))
    return _run_chains(cfg, _wolff_chain, probabilities, "wolff", workers)


def torus_proxy_exact(
    d: int,
    s: int,
    L: int,
    couplings: Couplings,
    max_spins: int = 16
) -> float:
    """
    Exact ⟨M²⟩ / |Λ| = Σ_(x,y) ⟨σ_x σ_y⟩ / |Λ| on a small torus.

    Raises
    ------
    SizeCapError
        If the torus has more than `max_spins` sites.
    """
    graph = torus_graph(d, s, L)
    _, correlations = two_point_matrix_spin(
        graph, graph.full_mask, couplings_weights(graph, couplings),
        max_spins=min(max_spins, MAX_SPINS)
    )
    return float(correlations.sum() / graph.n_vertices)
