"""Compilation of symplectic operations into trapping-frequency schedules."""

from .compile import *  # noqa: F401,F403
from .compile import __all__ as _compile_all
from .decompose import *  # noqa: F401,F403
from .decompose import __all__ as _decompose_all
from .schedule import *  # noqa: F401,F403
from .schedule import __all__ as _schedule_all
from .synth import *  # noqa: F401,F403
from .synth import __all__ as _synth_all

__all__ = _compile_all + _decompose_all + _schedule_all + _synth_all
