"""XR traffic trace analysis and predictive slicing toolkit."""

from ._xrtrace import *  # noqa: F401,F403
from ._xrtrace import __doc__  # noqa: F401

__version__ = "1.0.0"
