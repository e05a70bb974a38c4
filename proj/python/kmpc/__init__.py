"""Online Koopman residual learning with MPC on a cart-pole."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
