"""Device model glue: lossy transfer matrices and logical output states.

The squeezer pumps every pulse and the device runs its shot windows
back-to-back, so when the logical bins of a window arrive the delay loops
are loaded with light from earlier pulses, not vacuum.  Programs that
declare fill bins are treated as one window of that continuous train: the
model prepends a full warm-up window (the same schedules repeated), injects
input light into every pulse of both windows, and reads out only the
logical bins of the second.  That holds the logical outputs at their
steady-state photon flux; a cold-start window would visibly starve the
early logical bins through the slow turnover of the longest loop.

Programs without fill bins are taken as self-contained toy circuits and
get no warm-up.
"""

from __future__ import annotations

import numpy as np

from .compiler import CircuitProgram, TransferMatrix, compile_unitary
from .gaussian import GaussianState, InputSpec, LossModel, evolve, prepare_input


def _stationary_program(program: CircuitProgram) -> tuple[CircuitProgram, int]:
    """Extend a device program by one warm-up window; returns (program, offset)
    where offset counts the non-logical leading bins."""
    fill = program.fill_modes
    if fill == 0:
        return program, 0
    n = program.n_physical_modes
    extended = CircuitProgram(
        loop_spec=program.loop_spec,
        n_physical_modes=2 * n,
        fill_modes=n + fill,
        bs_transmissivity=tuple(np.tile(a, 2) for a in program.bs_transmissivity),
        phase=tuple(np.tile(a, 2) for a in program.phase),
    )
    return extended, n + fill


def lossy_physical_matrix(program: CircuitProgram, loss: LossModel) -> np.ndarray:
    """Effective amplitude transfer over all modelled pulses, losses folded in.

    Common and loop efficiencies commute with the passive circuit and enter
    as one scalar amplitude factor; the relative detector response weights
    the logical output rows (rows that are discarded later keep weight 1).
    Rows ``offset:`` (see ``logical_lossy_matrix``) are the logical bins.
    """
    extended, offset = _stationary_program(program)
    base = compile_unitary(extended).entries
    weights = np.ones(extended.n_physical_modes)
    weights[offset:] = loss.detector_response(program.n_logical_modes)
    return np.sqrt(loss.input_efficiency) * (np.sqrt(weights)[:, None] * base)


def logical_lossy_matrix(program: CircuitProgram, loss: LossModel) -> np.ndarray:
    """Logical-bin rows of the effective lossy matrix (n_logical x n_pulses)."""
    _, offset = _stationary_program(program)
    matrix = lossy_physical_matrix(program, loss)
    return matrix[offset:, :]


def output_state(
    kind: str,
    squeezing: float,
    program: CircuitProgram,
    loss: LossModel,
    transfer: np.ndarray | None = None,
) -> GaussianState:
    """Gaussian state of the logical output modes for one input hypothesis.

    ``transfer`` may carry a precomputed ``lossy_physical_matrix`` to avoid
    recompiling the program.
    """
    t_lossy = lossy_physical_matrix(program, loss) if transfer is None else transfer
    n_pulses = t_lossy.shape[0]
    spec = InputSpec(kind=kind, squeezing=squeezing, n_modes=n_pulses)
    state = prepare_input(spec)
    evolved = evolve(state, TransferMatrix(entries=t_lossy, lossless=False))
    logical = np.arange(n_pulses - program.n_logical_modes, n_pulses)
    return evolved.restrict(logical)
