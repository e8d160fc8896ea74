"""Radial feeder models and their linearized voltage sensitivities.

A feeder is a tree of ``n`` load buses hanging off slack bus 0. The
linearized power-flow model used throughout is

    x = R @ u_p + X @ u_q + e,

where ``x`` is the vector of per-unit voltage-magnitude deviations from the
slack voltage, ``u_p``/``u_q`` are controllable active/reactive injection
adjustments, ``R``/``X`` are the (scaled) resistance/reactance parts of the
inverse reduced admittance matrix, and ``e`` is the deviation with all
controls at zero: available generation minus consumption, pushed through
the same sensitivities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NonPositiveImpedance, NotATree, ParseError


@dataclass(frozen=True)
class RadialNetwork:
    """A radial feeder. Buses are labeled ``0..n`` with 0 the slack.

    ``lines`` holds ``(from_bus, to_bus, r, x)`` per-unit branch data; the
    arrays index load buses ``1..n`` as positions ``0..n-1``.
    """

    n: int
    lines: tuple[tuple[int, int, float, float], ...]
    p_load: np.ndarray
    q_load: np.ndarray
    p_avail: np.ndarray
    has_inverter: np.ndarray
    v0_mag: float = 1.0

    def __post_init__(self):
        for name in ("p_load", "q_load", "p_avail"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (self.n,):
                raise DimensionMismatch(f"{name} must have shape ({self.n},)")
        mask = np.asarray(self.has_inverter, dtype=bool)
        object.__setattr__(self, "has_inverter", mask)
        if mask.shape != (self.n,):
            raise DimensionMismatch(f"has_inverter must have shape ({self.n},)")
        object.__setattr__(self, "lines", tuple(tuple(ln) for ln in self.lines))
        if self.v0_mag <= 0.0:
            raise ValueError("v0_mag must be positive")
        if np.any(self.p_avail < 0.0):
            raise ValueError("available generation must be nonnegative")
        if np.any((self.p_avail > 0.0) & ~mask):
            raise ValueError("available generation on a bus without an inverter")
        for f, t, r, x in self.lines:
            if r <= 0.0 or x <= 0.0:
                raise NonPositiveImpedance(f"line {f}-{t} has r={r}, x={x}")
        self._parents()  # validates the tree property

    def _parents(self) -> np.ndarray:
        """Parent line index per load bus, from a BFS rooted at the slack."""
        if len(self.lines) != self.n:
            raise NotATree(f"{len(self.lines)} lines for {self.n} load buses")
        adj: dict[int, list[tuple[int, int]]] = {}
        for idx, (f, t, _, _) in enumerate(self.lines):
            if not (0 <= f <= self.n and 0 <= t <= self.n):
                raise NotATree(f"line {f}-{t} references an unknown bus")
            if f == t:
                raise NotATree(f"line {f}-{t} is a self-loop")
            adj.setdefault(f, []).append((t, idx))
            adj.setdefault(t, []).append((f, idx))
        parent_line = np.full(self.n + 1, -1, dtype=int)
        seen = {0}
        frontier = [0]
        while frontier:
            bus = frontier.pop()
            for nxt, idx in adj.get(bus, ()):
                if nxt in seen:
                    continue
                seen.add(nxt)
                parent_line[nxt] = idx
                frontier.append(nxt)
        if len(seen) != self.n + 1:
            missing = sorted(set(range(self.n + 1)) - seen)
            raise NotATree(f"buses {missing} are not connected to the slack")
        return parent_line


@dataclass(frozen=True)
class SensitivityModel:
    """Voltage sensitivities ``B = [R | X]`` and the baseline deviation ``e``."""

    r_matrix: np.ndarray
    x_matrix: np.ndarray
    drop: np.ndarray
    b_matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        r = np.asarray(self.r_matrix, dtype=float)
        x = np.asarray(self.x_matrix, dtype=float)
        e = np.asarray(self.drop, dtype=float)
        n = r.shape[0]
        if r.shape != (n, n) or x.shape != (n, n) or e.shape != (n,):
            raise DimensionMismatch("inconsistent sensitivity shapes")
        object.__setattr__(self, "r_matrix", r)
        object.__setattr__(self, "x_matrix", x)
        object.__setattr__(self, "drop", e)
        object.__setattr__(self, "b_matrix", np.hstack([r, x]))

    @property
    def n(self) -> int:
        return self.r_matrix.shape[0]

    @classmethod
    def from_network(cls, net: RadialNetwork) -> "SensitivityModel":
        r, x = build_impedance_matrices(net)
        return cls(r, x, compute_baseline_drop(r, x, net))


def build_impedance_matrices(net: RadialNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Sensitivities from inverting the reduced complex admittance matrix.

    Assembles the full bus admittance matrix, removes the slack row and
    column, inverts, and splits the result into resistance/reactance parts,
    both scaled by ``1 / v0_mag``.
    """
    m = net.n + 1
    ybus = np.zeros((m, m), dtype=complex)
    for f, t, r, x in net.lines:
        y = 1.0 / complex(r, x)
        ybus[f, f] += y
        ybus[t, t] += y
        ybus[f, t] -= y
        ybus[t, f] -= y
    z = linalg.invert(ybus[1:, 1:])
    return z.real / net.v0_mag, z.imag / net.v0_mag


def path_sum_impedances(net: RadialNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Sensitivities from the tree structure directly.

    Entry ``(j, k)`` is the summed impedance of lines lying on both the
    root-to-``j`` and root-to-``k`` paths; a line is shared exactly when
    both buses sit below it. Equivalent to :func:`build_impedance_matrices`
    for a radial network, computed without any matrix inversion.
    """
    r_mat = np.zeros((net.n, net.n))
    x_mat = np.zeros((net.n, net.n))
    parent_line = net._parents()
    # children[b] -> buses whose parent line ends at b
    children: dict[int, list[int]] = {}
    for bus in range(1, net.n + 1):
        f, t, _, _ = net.lines[parent_line[bus]]
        par = t if f == bus else f
        children.setdefault(par, []).append(bus)
    for idx, (f, t, r, x) in enumerate(net.lines):
        # the line's child endpoint is the bus whose parent line this is
        child = t if parent_line[t] == idx else f
        below = np.zeros(net.n, dtype=bool)
        stack = [child]
        while stack:
            bus = stack.pop()
            below[bus - 1] = True
            stack.extend(children.get(bus, ()))
        sel = np.ix_(below, below)
        r_mat[sel] += r
        x_mat[sel] += x
    return r_mat / net.v0_mag, x_mat / net.v0_mag


def compute_baseline_drop(r_mat: np.ndarray, x_mat: np.ndarray, net: RadialNetwork) -> np.ndarray:
    """Voltage deviation with all controls at zero and generation at maximum."""
    return r_mat @ (net.p_avail - net.p_load) - x_mat @ net.q_load


def generate_synthetic_feeder(
    n: int,
    seed: int,
    overload_factor: float,
    limit: float = 0.05,
    chain_bias: float = 0.72,
    inverter_fraction: float = 0.5,
) -> RadialNetwork:
    """Deterministically sample a chain-biased radial feeder.

    The tree is grown bus by bus; each new bus extends the previous one
    with probability ``chain_bias`` (long feeder-like laterals), otherwise
    it attaches to a uniformly random earlier bus. Generation magnitudes
    are normalized so that at ``overload_factor == 1`` the uncontrolled
    deviation peaks exactly at ``limit``; larger factors overshoot it
    proportionally and ``0`` turns generation off entirely.
    """
    if n < 1:
        raise ValueError("need at least one load bus")
    if overload_factor < 0.0:
        raise ValueError("overload_factor must be nonnegative")
    rng = np.random.default_rng(seed)
    lines = []
    for bus in range(1, n + 1):
        if bus == 1:
            parent = 0
        elif rng.uniform() < chain_bias:
            parent = bus - 1
        else:
            parent = int(rng.integers(0, bus))
        r = float(rng.uniform(0.002, 0.010))
        x = float(rng.uniform(0.002, 0.012))
        lines.append((parent, bus, r, x))
    p_load = rng.uniform(0.002, 0.010, size=n)
    q_load = rng.uniform(0.001, 0.004, size=n)
    count = max(1, int(round(inverter_fraction * n)))
    chosen = rng.choice(n, size=count, replace=False)
    mask = np.zeros(n, dtype=bool)
    mask[chosen] = True
    shape = np.where(mask, rng.uniform(0.5, 1.5, size=n), 0.0)

    net = RadialNetwork(n, tuple(lines), p_load, q_load, np.zeros(n), mask)
    r_mat, x_mat = path_sum_impedances(net)
    rise = r_mat @ shape
    sag = -(r_mat @ p_load + x_mat @ q_load)
    positive = rise > 0.0
    scale = float(np.min((limit - sag[positive]) / rise[positive]))
    p_avail = overload_factor * scale * shape
    return RadialNetwork(n, tuple(lines), p_load, q_load, p_avail, mask)


# ---------------------------------------------------------------------------
# network file format
# ---------------------------------------------------------------------------

LINES_HEADER = "LINES: from,to,r,x"
BUSES_HEADER = "BUSES: id,p_e,q_e,p_av,has_inverter"


def network_csv_text(net: RadialNetwork) -> str:
    """Render a feeder in the two-section network CSV format.

    Floats use shortest round-trip representation, so write/read cycles
    reproduce the network exactly.
    """
    rows = [LINES_HEADER]
    for f, t, r, x in net.lines:
        rows.append(f"{f},{t},{float(r)!r},{float(x)!r}")
    rows.append(BUSES_HEADER)
    for i in range(net.n):
        rows.append(
            f"{i + 1},{float(net.p_load[i])!r},{float(net.q_load[i])!r},"
            f"{float(net.p_avail[i])!r},{int(net.has_inverter[i])}"
        )
    return "\n".join(rows) + "\n"


def write_network_csv(net: RadialNetwork, path: str) -> None:
    """Write a feeder in the two-section network CSV format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(network_csv_text(net))


def parse_network_csv(text: str, source: str = "<network>") -> RadialNetwork:
    """Parse feeder text in the format of :func:`write_network_csv`.

    The slack bus 0 never appears in the BUSES section; every other bus
    must appear exactly once.
    """
    lines: list[tuple[int, int, float, float]] = []
    bus_rows: dict[int, tuple[float, float, float, bool]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        row = raw.strip()
        if not row or row.startswith("#"):
            continue
        if row == LINES_HEADER:
            section = "lines"
            continue
        if row == BUSES_HEADER:
            section = "buses"
            continue
        parts = row.split(",")
        try:
            if section == "lines":
                if len(parts) != 4:
                    raise ValueError("expected 4 fields")
                lines.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
            elif section == "buses":
                if len(parts) != 5:
                    raise ValueError("expected 5 fields")
                bus = int(parts[0])
                if bus in bus_rows:
                    raise ValueError(f"duplicate bus {bus}")
                if bus == 0:
                    raise ValueError("slack bus 0 must not appear in BUSES")
                bus_rows[bus] = (float(parts[1]), float(parts[2]), float(parts[3]), parts[4].strip() == "1")
            else:
                raise ValueError("data before any section header")
        except ValueError as exc:
            raise ParseError(str(exc), path=source, line=lineno) from exc
    n = len(bus_rows)
    if sorted(bus_rows) != list(range(1, n + 1)):
        raise ParseError(f"BUSES must cover ids 1..{n} exactly", path=source)
    p_load = np.array([bus_rows[b][0] for b in range(1, n + 1)])
    q_load = np.array([bus_rows[b][1] for b in range(1, n + 1)])
    p_avail = np.array([bus_rows[b][2] for b in range(1, n + 1)])
    mask = np.array([bus_rows[b][3] for b in range(1, n + 1)], dtype=bool)
    return RadialNetwork(n, tuple(lines), p_load, q_load, p_avail, mask)


def read_network_csv(path: str) -> RadialNetwork:
    """Read a feeder file written by :func:`write_network_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network_csv(fh.read(), source=str(path))
