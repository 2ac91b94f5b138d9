from zplsim._core import *  # noqa: F401,F403
from zplsim._core import __version__  # noqa: F401
