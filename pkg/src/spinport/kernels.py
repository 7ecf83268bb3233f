"""Backend selection for the Monte Carlo sampling kernels.

The compiled extension is used when available; the pure-Python twin is the
fallback.  Set SPINPORT_KERNEL=python (or =cython) to force a backend.  Both
produce bit-identical output for the same BitGenerator seed, which
``tests/test_kernels.py`` asserts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

_choice = os.environ.get("SPINPORT_KERNEL", "").strip().lower()
if _choice in ("py", "python", "pure"):
    from . import _kernel_py as _impl
elif _choice in ("c", "cy", "cython", "compiled"):
    from . import _kernel as _impl  # type: ignore[no-redef]
elif _choice == "":
    try:
        from . import _kernel as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _kernel_py as _impl
else:
    raise ValueError(f"unrecognized SPINPORT_KERNEL value {_choice!r}")

BACKEND: str = _impl.BACKEND

BOTH_D1 = 0
SPLIT = 1
BOTH_D2 = 2


@dataclass(frozen=True)
class PhotonParams:
    """Flat wavepacket parameters handed to the kernels.

    ``entangled`` marks a photon whose color is entangled with the spin: its
    color amplitudes are ignored (traced to an even mixture) and the
    interference phase is averaged over the two color branches.
    """

    t0: float
    tau: float
    amp_blue: complex = 1.0
    amp_red: complex = 0.0
    entangled: bool = False


def sample_times(
    bit_generator: np.random.BitGenerator, n: int, p: PhotonParams, delta: float
) -> np.ndarray:
    return _impl.sample_times(
        bit_generator,
        int(n),
        float(p.t0),
        float(p.tau),
        float(np.real(p.amp_blue)),
        float(np.imag(p.amp_blue)),
        float(np.real(p.amp_red)),
        float(np.imag(p.amp_red)),
        float(delta),
    )


def sample_pair_clicks(
    bit_generator: np.random.BitGenerator,
    n: int,
    a: PhotonParams,
    b: PhotonParams,
    delta: float,
    overlap: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample per-repetition beam-splitter outcomes for the photon pair (a, b).

    Returns (outcome, t1, t2); outcome 1 is a detector-1/detector-2
    coincidence at (t1, t2), outcomes 0 and 2 put both clicks on one detector.
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    return _impl.sample_pair_clicks(
        bit_generator,
        int(n),
        float(a.t0),
        float(a.tau),
        float(np.real(a.amp_blue)),
        float(np.imag(a.amp_blue)),
        float(np.real(a.amp_red)),
        float(np.imag(a.amp_red)),
        float(b.t0),
        float(b.tau),
        float(np.real(b.amp_blue)),
        float(np.imag(b.amp_blue)),
        float(np.real(b.amp_red)),
        float(np.imag(b.amp_red)),
        bool(b.entangled),
        float(delta),
        float(overlap),
    )
