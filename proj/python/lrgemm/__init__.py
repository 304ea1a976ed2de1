"""Low-rank GEMM toolkit: factorized products, FP8 emulation and a roofline model."""

import os
from pathlib import Path

_profiles = Path(__file__).with_name("profiles")
if _profiles.is_dir():
    os.environ.setdefault("LRGEMM_PROFILE_DIR", str(_profiles))

from ._core import *  # noqa: E402,F401,F403
from ._core import Error, InvalidArgument  # noqa: E402,F401
