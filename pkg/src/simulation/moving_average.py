"""
Discretized Moving-Average Simulation

X(t_k) = sum_j g_{s_j}(t_k) dW_j over the cells of a driver grid
[t_min - L, T] with step delta = Delta / substeps, where s_j is the LEFT end
of cell j and H, sigma are read at s_j (Ito evaluation). The coupled field
simulator uses the same driver but the exponent H at the output time t_k.

The history before t_min - L, back to t_min - M, is covered by far-past
cells whose widths grow geometrically (ratio FAR_RATIO). There the kernel
is smooth in s for every output time, so each far cell contributes its
midpoint weight times an exact Normal(0, width) increment. L is the
largest lag the analysis compares (max_lag) and M the truncation horizon
for that lag.

Driver cell indices are integers: output node k sits at driver node
i_k = n_tail + k * substeps and every lag (i_k - j) * delta is formed from
integers, so lags shared by two processes are bit-identical.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    GridError, NoiseGrid, SampledPath, TruncationError, UniformGrid, make_noise
)
from .hurst import HurstPath, HurstSpec, generate_hurst
from .kernels import (
    MAX_TAIL_HORIZON, ItoMbmKernel, KernelFamily, KernelSpec, create_kernel_spec, truncation_horizon
)
from .parallel import map_paths

logger = logging.getLogger(__name__)

SINGULAR_CELL_MODES = ('left_point', 'variance_matched')
PROCESSES = ('moving_average', 'mbm_field')

# Largest number of weights materialized at once
BLOCK_ELEMENTS = 1 << 21
# Width ratio of consecutive far-past cells
FAR_RATIO = 1.1


@dataclass(frozen=True)
class SimConfig:
    """
    Discretization settings for one simulation.

    Attributes:
        grid: output grid on [0, T]
        substeps: driver cells per output cell
        tol_truncation: truncation tolerance relative to the kernel scale L_bar
        singular_cell: 'variance_matched' or 'left_point'
        seed: master seed
        stream_id: first stream (path) index
        horizon: explicit driver history length M, overriding the tolerance
        max_lag: largest lag between compared times; defaults to the
            largest of T - t_min, |t_min| and |T|
    """
    grid: UniformGrid
    substeps: int = 8
    tol_truncation: float = 1e-3
    singular_cell: str = 'variance_matched'
    seed: int = 0
    stream_id: int = 0
    horizon: Optional[float] = None
    max_lag: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.substeps, bool) or int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError(f"substeps must be a positive integer, got {self.substeps!r}")
        object.__setattr__(self, 'substeps', int(self.substeps))
        if not self.tol_truncation > 0.0:
            raise ValueError(f"tol_truncation must be positive, got {self.tol_truncation}")
        if self.singular_cell not in SINGULAR_CELL_MODES:
            raise ValueError(f"singular_cell must be one of {SINGULAR_CELL_MODES}, got {self.singular_cell!r}")
        if self.horizon is not None and not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.max_lag is not None and not self.max_lag > 0.0:
            raise ValueError(f"max_lag must be positive, got {self.max_lag}")

    @property
    def lag_scale(self) -> float:
        """max_lag, or its default from the output grid."""
        if self.max_lag is not None:
            return float(self.max_lag)
        grid = self.grid
        return max(grid.t_max - grid.t_min, abs(grid.t_min), abs(grid.t_max))

    def with_stream(self, stream_id: int) -> 'SimConfig':
        return SimConfig(self.grid, self.substeps, self.tol_truncation, self.singular_cell,
                         self.seed, stream_id, self.horizon, self.max_lag)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'grid': self.grid.to_dict(),
            'substeps': self.substeps,
            'tol_truncation': self.tol_truncation,
            'singular_cell': self.singular_cell,
            'seed': self.seed,
            'stream_id': self.stream_id,
            'horizon': self.horizon,
            'max_lag': self.max_lag
        }


@dataclass(frozen=True)
class DriverGrid:
    """
    Driver grid plus its alignment with the output grid.

    far_edges are the increasing edges of the far-past cells, ending at
    grid.t_min; empty when the uniform grid covers the whole history.
    """
    grid: UniformGrid
    n_tail: int
    substeps: int
    output: UniformGrid
    far_edges: np.ndarray = field(default_factory=lambda: np.zeros(0), compare=False)

    @property
    def step(self) -> float:
        return self.output.step / self.substeps

    @property
    def n_far(self) -> int:
        return max(0, len(self.far_edges) - 1)

    @property
    def far_left_ends(self) -> np.ndarray:
        return np.asarray(self.far_edges[:-1])

    @property
    def far_widths(self) -> np.ndarray:
        return np.diff(self.far_edges)

    @property
    def far_distances(self) -> np.ndarray:
        """-s at the far cell midpoints."""
        return -0.5 * (np.asarray(self.far_edges[:-1]) + np.asarray(self.far_edges[1:]))

    @property
    def horizon(self) -> float:
        start = self.far_edges[0] if self.n_far else self.grid.t_min
        return self.output.t_min - float(start)

    def output_index(self, k) -> np.ndarray:
        """Driver node index of output node k."""
        return self.n_tail + np.asarray(k, dtype=np.int64) * self.substeps

    def negated_left_ends(self, n: int) -> np.ndarray:
        """-s_j for the first n driver cells."""
        j = np.arange(n, dtype=np.int64)
        return -self.output.t_min - (j - self.n_tail) * self.step

    def noise(self, seed: int, stream_id: int) -> NoiseGrid:
        """Driver increments of one stream, far cells included."""
        return make_noise(seed, stream_id, self.grid, self.far_widths)


def _far_edges(start: float, stop: float) -> np.ndarray:
    """Edges in time of geometric cells covering -s in [start, stop]."""
    if start <= 0.0 or stop <= start * (1.0 + 1e-9):
        return np.zeros(0)
    n = int(math.ceil(math.log(stop / start) / math.log(FAR_RATIO)))
    distances = start * FAR_RATIO ** np.arange(n, dtype=float)
    distances = np.append(distances[distances < stop * (1.0 - 1e-12)], stop)
    edges = -distances[::-1]
    edges[-1] = -start
    return edges


def driver_grid(cfg: SimConfig, kernel: KernelSpec) -> DriverGrid:
    """
    Driver grid aligned with the output nodes of cfg.grid.

    The history is M = truncation_horizon(kernel.bounds, max_lag,
    tol_truncation * L_bar) unless cfg.horizon is set; a horizon shorter
    than that only warns. Its last min(M, max_lag) before t_min are uniform
    driver cells, the rest geometric far cells.

    Raises:
        TruncationError: M above 1e200 with no explicit horizon
    """
    output = cfg.grid
    delta = output.step / cfg.substeps
    tol = cfg.tol_truncation * kernel.bounds.l_bar
    lag = cfg.lag_scale
    if cfg.horizon is None:
        horizon = truncation_horizon(kernel.bounds, lag, tol, cap=MAX_TAIL_HORIZON)
    else:
        horizon = cfg.horizon
        try:
            required = truncation_horizon(kernel.bounds, lag, tol, cap=MAX_TAIL_HORIZON)
        except TruncationError:
            required = math.inf
        if horizon < required:
            logger.warning("horizon %.4g is shorter than the %.4g needed for tolerance %g",
                           horizon, required, cfg.tol_truncation)
    n_tail = int(math.ceil(min(horizon, lag) / delta - 1e-9))
    n_cells = n_tail + output.n_cells * cfg.substeps
    grid = UniformGrid(output.t_min - n_tail * delta, output.t_max, n_cells)
    far_edges = _far_edges(-grid.t_min, horizon - output.t_min)
    logger.debug("driver grid: %d cells of %.3g back to %.4g, %d far cells back to %.4g",
                 n_cells, delta, grid.t_min, max(0, far_edges.size - 1), output.t_min - horizon)
    return DriverGrid(grid=grid, n_tail=n_tail, substeps=cfg.substeps, output=output, far_edges=far_edges)


def _driver_values(path: SampledPath, driver: DriverGrid, n: int, name: str) -> np.ndarray:
    """Values of a path at the left ends of the first n driver cells."""
    if path.grid == driver.grid:
        return path.values[:n]
    if not path.grid.contains(driver.grid) or path.grid.step > driver.step * (1.0 + 1e-9):
        raise GridError(f"{name} grid {path.grid} does not cover the driver grid {driver.grid} finely enough")
    return np.asarray(path.at(driver.grid.t_min + np.arange(n) * driver.step))


def _node_values(path: SampledPath, driver: DriverGrid, nodes: np.ndarray) -> np.ndarray:
    if path.grid == driver.grid:
        return path.values[driver.output_index(nodes)]
    return np.asarray(path.at(driver.output.t_min + nodes * driver.output.step))


def _resolve_nodes(grid: UniformGrid, nodes) -> np.ndarray:
    if nodes is None:
        return np.arange(grid.n_nodes)
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.ndim != 1 or nodes.size == 0 or nodes.min() < 0 or nodes.max() > grid.n_cells:
        raise GridError(f"output node indices must lie in [0, {grid.n_cells}]")
    return nodes


def _accumulate(
    family: KernelFamily,
    driver: DriverGrid,
    noise: NoiseGrid,
    nodes: np.ndarray,
    singular_cell: str,
    exponents: Callable[[np.ndarray, int], np.ndarray],
    sigma: np.ndarray,
    far_exponents: Callable[[np.ndarray], np.ndarray],
    far_sigma: np.ndarray
) -> np.ndarray:
    """
    Sum the kernel weights against the driver increments.

    exponents(rows, n) returns the (len(rows), n) array of a = H - 1/2 used
    by the weights of those output rows on the uniform cells, and
    far_exponents(rows) the same on the far cells. Rows are processed in
    blocks; the sum of each row is one einsum over a contiguous row.
    """
    if noise.far.size != driver.n_far:
        raise GridError(f"noise has {noise.far.size} far-past increments for {driver.n_far} far cells")
    i_out = driver.output_index(nodes)
    n = int(i_out.max())
    result = np.zeros(nodes.size)
    if n > 0:
        increments = noise.increments[:n]
        j = np.arange(n, dtype=np.int64)
        neg_s = driver.negated_left_ends(n)
        sigma = sigma[:n]
        block = max(1, BLOCK_ELEMENTS // n)
        for start in range(0, nodes.size, block):
            rows = np.arange(start, min(start + block, nodes.size))
            i_rows = i_out[rows][:, None]
            a = exponents(rows, n)
            lags = (i_rows - j[None, :]) * driver.step
            neg_s_block = np.ascontiguousarray(np.broadcast_to(neg_s, a.shape))
            weights = sigma[None, :] * (family.profile(lags, a) - family.reference_term(neg_s_block, a))
            weights[j[None, :] >= i_rows] = 0.0
            if singular_cell == 'variance_matched':
                last = i_rows[:, 0] - 1
                has_cell = last >= 0
                r = np.nonzero(has_cell)[0]
                # exact cell variance sigma^2 delta^2H / 2H against the left-point sigma^2 delta^2H
                weights[r, last[r]] /= np.sqrt(2.0 * a[r, last[r]] + 1.0)
            result[rows] = np.einsum('kj,j->k', weights, increments)
    if driver.n_far:
        times = driver.output.t_min + nodes * driver.output.step
        distances = driver.far_distances
        block = max(1, BLOCK_ELEMENTS // driver.n_far)
        for start in range(0, nodes.size, block):
            rows = np.arange(start, min(start + block, nodes.size))
            weights = far_sigma[None, :] * family.remote_weight(
                times[rows][:, None], distances[None, :], far_exponents(rows))
            result[rows] += np.einsum('kj,j->k', weights, noise.far)
    return result


def _sigma_values(kernel: KernelSpec, driver: DriverGrid, n: int) -> np.ndarray:
    if isinstance(kernel.sigma, SampledPath):
        return _driver_values(kernel.sigma, driver, n, 'sigma')
    return np.full(n, kernel.sigma)


def _far_sigma(kernel: KernelSpec, driver: DriverGrid) -> np.ndarray:
    """sigma on the far cells, a sampled sigma held at its earliest value."""
    if isinstance(kernel.sigma, SampledPath):
        return np.full(driver.n_far, kernel.sigma.values[0])
    return np.full(driver.n_far, kernel.sigma)


def _noise_for(cfg: SimConfig, driver: DriverGrid, noise: Optional[NoiseGrid]) -> NoiseGrid:
    return noise if noise is not None else driver.noise(cfg.seed, cfg.stream_id)


def moving_average_values(
    kernel: KernelSpec,
    hurst: HurstPath,
    cfg: SimConfig,
    nodes=None,
    driver: Optional[DriverGrid] = None,
    noise: Optional[NoiseGrid] = None
) -> np.ndarray:
    """
    Values of the moving average at the selected output nodes.

    On the far cells H comes from the tail of the Hurst path (its earliest
    value when it carries none).
    """
    if driver is None:
        driver = driver_grid(cfg, kernel)
    noise = _noise_for(cfg, driver, noise)
    nodes = _resolve_nodes(cfg.grid, nodes)
    n = driver.grid.n_cells
    a_cells = np.ascontiguousarray(_driver_values(hurst.path, driver, n, "Hurst") - 0.5)
    a_far = hurst.tail_at(driver.far_left_ends) - 0.5 if driver.n_far else np.zeros(0)
    sigma = _sigma_values(kernel, driver, n)

    def exponents(rows, width):
        return np.ascontiguousarray(np.broadcast_to(a_cells[:width], (rows.size, width)))

    def far_exponents(rows):
        return np.broadcast_to(a_far, (rows.size, a_far.size))

    return _accumulate(kernel.family, driver, noise, nodes, cfg.singular_cell, exponents, sigma,
                       far_exponents, _far_sigma(kernel, driver))


def mbm_field_values(
    kernel: KernelSpec,
    hurst: HurstPath,
    cfg: SimConfig,
    nodes=None,
    driver: Optional[DriverGrid] = None,
    noise: Optional[NoiseGrid] = None
) -> np.ndarray:
    """
    Values of the field B(t, H_t) at the selected output nodes.

    Always the ito_mbm profile with sigma = 1; kernel only sets the driver grid.
    """
    if driver is None:
        driver = driver_grid(cfg, kernel)
    noise = _noise_for(cfg, driver, noise)
    nodes = _resolve_nodes(cfg.grid, nodes)
    a_nodes = _node_values(hurst.path, driver, nodes) - 0.5
    sigma = np.full(driver.grid.n_cells, 1.0)

    def exponents(rows, width):
        return np.ascontiguousarray(np.broadcast_to(a_nodes[rows][:, None], (rows.size, width)))

    def far_exponents(rows):
        return np.broadcast_to(a_nodes[rows][:, None], (rows.size, driver.n_far))

    return _accumulate(ItoMbmKernel(), driver, noise, nodes, cfg.singular_cell, exponents, sigma,
                       far_exponents, np.full(driver.n_far, 1.0))


def _field_kernel(hurst: HurstPath) -> KernelSpec:
    return create_kernel_spec('ito_mbm', 1.0, hurst.h_lower, hurst.h_upper)


def simulate_moving_average(kernel: KernelSpec, hurst: HurstPath, cfg: SimConfig) -> SampledPath:
    """
    Simulate X_t = int g_s(t) dW_s on the output grid of cfg.

    Args:
        kernel: kernel spec (family, sigma, bounds)
        hurst: Hurst path on the driver grid (or a finer grid covering it)
        cfg: discretization and stream

    Returns:
        SampledPath on cfg.grid, deterministic in (cfg.seed, cfg.stream_id)
    """
    values = moving_average_values(kernel, hurst, cfg)
    label = f"{kernel.name}[seed={cfg.seed},stream={cfg.stream_id}]"
    return SampledPath(cfg.grid, values, label)


def simulate_mbm_field(hurst: HurstPath, cfg: SimConfig, kernel: Optional[KernelSpec] = None) -> SampledPath:
    """
    Simulate B(t_k, H_{t_k}) with the same driver as simulate_moving_average.

    The kernel argument only fixes the driver grid (truncation horizon); it
    defaults to the ito_mbm kernel for the Hurst range of the path, which is
    what a coupled Ito-mBm run with the same cfg uses.
    """
    kernel = kernel or _field_kernel(hurst)
    values = mbm_field_values(kernel, hurst, cfg)
    return SampledPath(cfg.grid, values, f"mbm_field[seed={cfg.seed},stream={cfg.stream_id}]")


@dataclass
class PathSample:
    """
    Monte Carlo batch of paths at selected output nodes.

    values[p, i] is path p at output node nodes[i]; hurst[p, i] the realized
    Hurst value there.
    """
    grid: UniformGrid
    nodes: np.ndarray
    values: np.ndarray
    hurst: np.ndarray
    stream_ids: List[int]
    process: str

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.grid.t_min + self.nodes * self.grid.step

    def column(self, t: float) -> int:
        """Column of the node at time t."""
        k = self.grid.node_index(t)
        hits = np.nonzero(self.nodes == k)[0]
        if hits.size == 0:
            raise GridError(f"time {t} was not simulated")
        return int(hits[0])

    def path(self, p: int) -> SampledPath:
        """Path p as a SampledPath (only when every node was simulated)."""
        if self.nodes.size != self.grid.n_nodes:
            raise GridError("sample holds a subset of the nodes")
        return SampledPath(self.grid, self.values[p], f"{self.process}[stream={self.stream_ids[p]}]")

    def to_rows(self) -> List[List[Any]]:
        rows = []
        times = self.times
        for p, stream_id in enumerate(self.stream_ids):
            for i, t in enumerate(times):
                rows.append([float(t), float(self.values[p, i]), float(self.hurst[p, i]), stream_id])
        return rows


def simulate_paths(
    kernel: KernelSpec,
    hurst_spec: HurstSpec,
    cfg: SimConfig,
    n_paths: int,
    process: str = 'moving_average',
    threads: Optional[int] = None,
    nodes=None
) -> PathSample:
    """
    Simulate n_paths independent paths on streams cfg.stream_id, cfg.stream_id + 1, ...

    Each stream gets its own driver and, for random specs, its own Hurst
    path, sampled on the far cells too. For process='mbm_field' the kernel
    only sets the driver grid.

    Returns:
        PathSample with rows in stream order, independent of threads
    """
    if process not in PROCESSES:
        raise ValueError(f"process must be one of {PROCESSES}, got {process!r}")
    if n_paths < 1:
        raise ValueError(f"n_paths must be positive, got {n_paths}")
    driver = driver_grid(cfg, kernel)
    nodes = _resolve_nodes(cfg.grid, nodes)
    tail = driver.far_left_ends
    shared = generate_hurst(hurst_spec, driver.grid, cfg.seed, 0, tail) if hurst_spec.is_deterministic else None

    def one_path(stream_id: int) -> Tuple[np.ndarray, np.ndarray]:
        hurst = shared if shared is not None else generate_hurst(hurst_spec, driver.grid, cfg.seed, stream_id, tail)
        path_cfg = cfg.with_stream(stream_id)
        noise = driver.noise(cfg.seed, stream_id)
        if process == 'moving_average':
            values = moving_average_values(kernel, hurst, path_cfg, nodes, driver, noise)
        else:
            values = mbm_field_values(kernel, hurst, path_cfg, nodes, driver, noise)
        return values, _node_values(hurst.path, driver, nodes)

    stream_ids = [cfg.stream_id + p for p in range(n_paths)]
    results = map_paths(one_path, stream_ids, threads)
    logger.info("simulated %d %s paths at %d nodes", n_paths, process, nodes.size)
    return PathSample(
        grid=cfg.grid,
        nodes=nodes,
        values=np.array([values for values, _ in results]),
        hurst=np.array([h for _, h in results]),
        stream_ids=stream_ids,
        process=process
    )


def as_r_grid(r_grid: Union[UniformGrid, Sequence[float]]) -> UniformGrid:
    """Uniform grid of rescaled times r from a UniformGrid or equally spaced values."""
    if isinstance(r_grid, UniformGrid):
        return r_grid
    r = np.asarray(sorted(float(x) for x in r_grid))
    if r.size < 2:
        raise GridError("r_grid needs at least two values")
    grid = UniformGrid(float(r[0]), float(r[-1]), r.size - 1)
    if not np.allclose(grid.nodes(), r, rtol=0.0, atol=1e-9 * grid.step):
        raise GridError(f"r_grid values {r.tolist()} are not equally spaced")
    return grid


def rescaled_increment_paths(
    kernel: KernelSpec,
    hurst_spec: HurstSpec,
    cfg: SimConfig,
    t: float,
    h: float,
    r_grid: Union[UniformGrid, Sequence[float]],
    n_paths: int = 1,
    process: str = 'moving_average',
    threads: Optional[int] = None
) -> List[SampledPath]:
    """
    Rescaled increments h^(-H_t) (X_{t+hr} - X_t) for r on r_grid.

    Args:
        kernel, hurst_spec, cfg: as for simulate_paths
        t: base time, an output node
        h: scale
        r_grid: equally spaced r values, containing 0
        n_paths: number of streams

    Returns:
        One SampledPath over r per stream, scaled with that stream's H_t

    Raises:
        GridError: t + h r outside [t_min, T] or not on an output node
    """
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h}")
    r_axis = as_r_grid(r_grid)
    grid = cfg.grid
    times = t + h * r_axis.nodes()
    if times.min() < grid.t_min - 1e-9 * grid.step or times.max() > grid.t_max + 1e-9 * grid.step:
        raise GridError(f"t + h r spans [{times.min()}, {times.max()}], outside [{grid.t_min}, {grid.t_max}]")
    nodes = np.array([grid.node_index(x) for x in times], dtype=np.int64)
    zeros = np.nonzero(np.abs(r_axis.nodes()) < 1e-9 * r_axis.step)[0]
    if zeros.size == 0:
        raise GridError("r_grid must contain r = 0")
    origin = int(zeros[0])
    sample = simulate_paths(kernel, hurst_spec, cfg, n_paths, process, threads, nodes)
    paths = []
    for p in range(sample.n_paths):
        h_t = sample.hurst[p, origin]
        values = (sample.values[p] - sample.values[p, origin]) * h ** (-h_t)
        paths.append(SampledPath(r_axis, values, f"rescaled[t={t},h={h},stream={sample.stream_ids[p]}]"))
    return paths
