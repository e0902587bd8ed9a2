"""Loop-interferometer programs and their compilation to time-bin transfer matrices.

The device is a chain of fibre delay loops acting on a train of optical
pulses (time bins).  At every bin each loop applies a tunable phase to the
incoming bin, then couples it on a tunable beamsplitter to the light that
entered the same loop a fixed number of bins earlier; a static phase sits
on the loop arm.  Compiling a program yields one complex matrix mapping
input-bin amplitudes to output-bin amplitudes (rows = output bins, columns
= input bins).  Because a bin can only pick up light that entered earlier,
the matrix is exactly lower triangular.

Delay-line memory is modelled explicitly: a delay-``d`` loop contributes
``d`` ancillary modes initialised to vacuum.  The full (bins + memory)
matrix is unitary; the bin-indexed block returned to callers is in general
sub-unitary because light may remain stored in the loops when the pulse
train ends.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ProgramError

UNITARITY_TOL = 1e-10

# Beamsplitter of transmissivity T on (through-path, loop-path).  Any fixed
# unitary convention only redefines phases, which nothing downstream pins.
def _beamsplitter(transmissivity: float) -> np.ndarray:
    t = math.sqrt(transmissivity)
    r = 1j * math.sqrt(1.0 - transmissivity)
    return np.array([[t, r], [r, t]], dtype=complex)


def wrap_angle(phi: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    out = math.remainder(phi, 2.0 * math.pi)
    if out <= -math.pi:
        out += 2.0 * math.pi
    return out


@dataclass(frozen=True)
class LoopSpec:
    """Geometry of the delay-loop chain.

    Attributes:
        delays: loop delays in units of time bins, strictly increasing.
        bin_separation_ns: physical time per bin (metadata only).
        static_phases: one fixed optical phase per loop, in (-pi, pi].
    """

    delays: tuple[int, ...] = (1, 6, 36)
    bin_separation_ns: float = 167.0
    static_phases: tuple[float, ...] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.delays) == 0:
            raise InputError("LoopSpec needs at least one loop")
        if any(int(d) != d or d < 1 for d in self.delays):
            raise InputError("loop delays must be integers >= 1")
        if any(b >= a for a, b in zip(self.delays[1:], self.delays[:-1])):
            raise InputError("loop delays must be strictly increasing")
        if len(self.static_phases) != len(self.delays):
            raise InputError("need one static phase per loop")
        for phi in self.static_phases:
            if not math.isfinite(phi):
                raise InputError("static phase is not finite")
            if not (-math.pi < phi <= math.pi + 1e-12):
                raise InputError("static phases must lie in (-pi, pi]")

    @property
    def n_loops(self) -> int:
        return len(self.delays)


@dataclass
class CircuitProgram:
    """Per-bin beamsplitter/phase schedules plus the loop geometry.

    ``bs_transmissivity`` and ``phase`` hold one array per loop, each of
    length ``n_physical_modes``.  The first ``fill_modes`` bins prime the
    delay lines; the remaining ``n_logical_modes`` bins are the usable
    outputs.
    """

    loop_spec: LoopSpec
    n_physical_modes: int
    fill_modes: int
    bs_transmissivity: tuple[np.ndarray, ...]
    phase: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.n_physical_modes < 1:
            raise ProgramError("n_physical_modes must be positive")
        if not (0 <= self.fill_modes < self.n_physical_modes):
            raise ProgramError("fill_modes must satisfy 0 <= fill < n_physical_modes")
        self.bs_transmissivity = tuple(
            np.asarray(a, dtype=float) for a in self.bs_transmissivity
        )
        self.phase = tuple(np.asarray(a, dtype=float) for a in self.phase)
        n_loops = self.loop_spec.n_loops
        if len(self.bs_transmissivity) != n_loops or len(self.phase) != n_loops:
            raise ProgramError("need one schedule per loop")
        for name, sched in (("bs_transmissivity", self.bs_transmissivity),
                            ("phase", self.phase)):
            for arr in sched:
                if arr.shape != (self.n_physical_modes,):
                    raise ProgramError(
                        f"{name} schedule length {arr.shape} does not match "
                        f"n_physical_modes={self.n_physical_modes}"
                    )
                if not np.all(np.isfinite(arr)):
                    raise InputError(f"{name} contains non-finite entries")
        for arr in self.bs_transmissivity:
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                raise ProgramError("bs_transmissivity entries must lie in [0, 1]")
        for arr in self.phase:
            if np.any(arr < -math.pi / 2 - 1e-12) or np.any(arr > math.pi / 2 + 1e-12):
                raise ProgramError("tunable phases are limited to [-pi/2, pi/2]")

    @property
    def n_logical_modes(self) -> int:
        return self.n_physical_modes - self.fill_modes

    def to_dict(self) -> dict:
        return {
            "delays": list(self.loop_spec.delays),
            "static_phases": list(self.loop_spec.static_phases),
            "bin_separation_ns": self.loop_spec.bin_separation_ns,
            "bs_transmissivity": [a.tolist() for a in self.bs_transmissivity],
            "phase": [a.tolist() for a in self.phase],
            "n_physical_modes": self.n_physical_modes,
            "fill_modes": self.fill_modes,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CircuitProgram":
        try:
            spec = LoopSpec(
                delays=tuple(int(d) for d in doc["delays"]),
                bin_separation_ns=float(doc.get("bin_separation_ns", 167.0)),
                static_phases=tuple(float(p) for p in doc["static_phases"]),
            )
            return cls(
                loop_spec=spec,
                n_physical_modes=int(doc["n_physical_modes"]),
                fill_modes=int(doc["fill_modes"]),
                bs_transmissivity=tuple(np.asarray(a, float) for a in doc["bs_transmissivity"]),
                phase=tuple(np.asarray(a, float) for a in doc["phase"]),
            )
        except KeyError as exc:
            raise ProgramError(f"program document is missing key {exc.args[0]!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CircuitProgram":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProgramError(f"program document is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


@dataclass
class TransferMatrix:
    """Complex mode transformation; rows are output bins, columns input bins."""

    entries: np.ndarray
    lossless: bool = field(default=False)

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0]

    def max_singular_value(self) -> float:
        return float(np.linalg.svd(self.entries, compute_uv=False)[0])

    def unitarity_defect(self) -> float:
        t = self.entries
        return float(np.abs(t.conj().T @ t - np.eye(t.shape[0])).max())


def _measured_lossless(entries: np.ndarray) -> bool:
    defect = np.abs(entries.conj().T @ entries - np.eye(entries.shape[0])).max()
    return bool(defect <= UNITARITY_TOL)


def compile_unitary(program: CircuitProgram) -> TransferMatrix:
    """Compile a loop program into its transfer matrix over physical time bins.

    The loops are traversed shortest first; within a loop the bins are
    processed in arrival order.  Each step applies the tunable phase to the
    incoming bin, the static loop phase to the amplitude exiting the delay
    line, then the beamsplitter coupling the two.  Memory slots (``d`` per
    delay-``d`` loop) start in vacuum and are dropped from the returned
    matrix after composition.

    Returns a TransferMatrix whose ``lossless`` flag records whether the
    bin-indexed block is unitary; with open loop couplings some light stays
    in the delay lines when the train ends, making the block sub-unitary.
    """
    n = program.n_physical_modes
    delays = program.loop_spec.delays
    total_memory = sum(delays)
    dim = n + total_memory

    m = np.eye(dim, dtype=complex)
    slot_base = n
    for loop, delay in enumerate(delays):
        static = np.exp(1j * program.loop_spec.static_phases[loop])
        trans = program.bs_transmissivity[loop]
        thetas = np.exp(1j * program.phase[loop])
        for t in range(n):
            slot = slot_base + (t % delay)
            m[t, :] *= thetas[t]
            m[slot, :] *= static
            gate = _beamsplitter(trans[t])
            m[[t, slot], :] = gate @ m[[t, slot], :]
        slot_base += delay

    defect = np.abs(m.conj().T @ m - np.eye(dim)).max()
    if defect > UNITARITY_TOL:
        raise ProgramError(f"compiled gate product lost unitarity (defect {defect:.2e})")

    bins = m[:n, :n].copy()
    return TransferMatrix(entries=bins, lossless=_measured_lossless(bins))


def truncate_to_logical(matrix: TransferMatrix, program: CircuitProgram) -> TransferMatrix:
    """Drop the first ``fill_modes`` rows and columns of a physical-mode matrix."""
    fill = program.fill_modes
    n = matrix.entries.shape[0]
    if fill >= n:
        raise InputError("fill_modes must be smaller than the matrix dimension")
    if n != program.n_physical_modes:
        raise InputError("matrix dimension does not match the program")
    if fill == 0:
        return TransferMatrix(entries=matrix.entries.copy(), lossless=matrix.lossless)
    block = matrix.entries[fill:, fill:].copy()
    return TransferMatrix(entries=block, lossless=_measured_lossless(block))


def connectivity_profile(matrix: TransferMatrix) -> np.ndarray:
    """Mean modulus of the matrix entries on each sub-diagonal.

    Entry ``k`` of the result is ``mean_i |T[i, i-k]|``; the profile makes
    the loop-delay band structure visible and feeds tests and reports.
    """
    t = matrix.entries
    n = t.shape[0]
    return np.array([np.abs(np.diagonal(t, -k)).mean() for k in range(n)])


def random_program(
    seed: int,
    loop_spec: LoopSpec | None = None,
    n_physical_modes: int = 259,
    fill_modes: int = 43,
    bs_range: tuple[float, float] = (0.4, 0.6),
) -> CircuitProgram:
    """Draw a random program: transmissivities uniform in ``bs_range``,
    tunable phases uniform over their full [-pi/2, pi/2] range."""
    spec = loop_spec or LoopSpec()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_loops = spec.n_loops
    trans = tuple(rng.uniform(bs_range[0], bs_range[1], n_physical_modes) for _ in range(n_loops))
    phases = tuple(rng.uniform(-math.pi / 2, math.pi / 2, n_physical_modes) for _ in range(n_loops))
    return CircuitProgram(
        loop_spec=spec,
        n_physical_modes=n_physical_modes,
        fill_modes=fill_modes,
        bs_transmissivity=trans,
        phase=phases,
    )


def uniform_program(
    transmissivity: float = 0.5,
    loop_spec: LoopSpec | None = None,
    n_physical_modes: int = 259,
    fill_modes: int = 43,
) -> CircuitProgram:
    """Program with one constant transmissivity and all tunable phases zero."""
    spec = loop_spec or LoopSpec()
    n_loops = spec.n_loops
    return CircuitProgram(
        loop_spec=spec,
        n_physical_modes=n_physical_modes,
        fill_modes=fill_modes,
        bs_transmissivity=tuple(np.full(n_physical_modes, transmissivity) for _ in range(n_loops)),
        phase=tuple(np.zeros(n_physical_modes) for _ in range(n_loops)),
    )


def matrix_to_csv(matrix: TransferMatrix) -> str:
    """Serialize as CSV, row-major, alternating re,im columns."""
    rows = []
    for row in matrix.entries:
        cells = []
        for z in row:
            cells.append(repr(float(z.real)))
            cells.append(repr(float(z.imag)))
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def matrix_from_csv(text: str) -> TransferMatrix:
    rows = []
    for line in text.strip().splitlines():
        vals = [float(x) for x in line.split(",")]
        if len(vals) % 2:
            raise InputError("matrix CSV rows must hold re,im pairs")
        rows.append([complex(vals[2 * i], vals[2 * i + 1]) for i in range(len(vals) // 2)])
    entries = np.array(rows, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise InputError("matrix CSV must be square")
    return TransferMatrix(entries=entries, lossless=_measured_lossless(entries))
