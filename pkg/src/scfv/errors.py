"""Exception types used across the solver."""


class ConfigError(Exception):
    """Invalid configuration, CLI usage, or run setup."""


class MeshError(Exception):
    """Degenerate or inconsistent mesh geometry/topology."""


class ReconstructionSetupError(Exception):
    """Rank-deficient or otherwise unusable least-squares stencil."""

    def __init__(self, cell_id, message):
        self.cell_id = cell_id
        super().__init__(f"cell {cell_id}: {message}")


class StateError(Exception):
    """Non-finite or non-physical macroscopic state."""


class MicroStateError(StateError):
    """Non-physical Maxwellian parameters (e.g. lambda <= 0)."""


class SolverAbort(Exception):
    """Run-abort diagnostic carrying full provenance."""

    def __init__(self, message, cell_id=None, stage=None, time=None):
        self.cell_id = cell_id
        self.stage = stage
        self.time = time
        detail = []
        if cell_id is not None:
            detail.append(f"cell={cell_id}")
        if stage is not None:
            detail.append(f"stage={stage}")
        if time is not None:
            detail.append(f"t={time:.6g}")
        suffix = f" ({', '.join(detail)})" if detail else ""
        super().__init__(message + suffix)
