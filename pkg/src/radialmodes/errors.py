"""Exception hierarchy shared by all modules."""


class RadialModesError(Exception):
    """Base class; ``module`` names the subsystem that raised it."""

    module = "radialmodes"


class SolverError(RadialModesError):
    """A root solver failed to converge."""

    module = "chain"

    def __init__(self, message, residual):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


class RadialInstabilityError(RadialModesError):
    """A radial mode has an imaginary effective frequency."""

    module = "chain"

    def __init__(self, ion, radicand):
        super().__init__(
            f"ion {ion} is radially unstable: squared effective frequency {radicand:.6g} <= 0"
        )
        self.ion = ion
        self.radicand = radicand


class StateError(RadialModesError):
    """Invalid covariance matrix, symplectic matrix or noise model."""

    module = "gaussian"


class PartitionError(RadialModesError):
    module = "entanglement"


class SynthesisError(RadialModesError):
    """A primitive cannot be realised within the configured limits."""

    module = "compiler"


class ConfigError(RadialModesError):
    """Malformed or inconsistent scenario/target configuration."""

    module = "cli"
