"""Cross-entropy search of the Riemann zeta critical strip.

Submodules:

* :mod:`ceor.zeta_eval` - zeta, eta, log Gamma and the functional equation
* :mod:`ceor.zero_locator` - Hardy Z, critical-line scans and zero counts
* :mod:`ceor.ce_engine` - generic discrete cross-entropy optimizer
* :mod:`ceor.rh_search` - the strip search built on the CE engine
* :mod:`ceor.strip_sweep` - unit-tile sweeps and their extension
* :mod:`ceor.decoding` - top-p filtering with beam search
* :mod:`ceor.cli` - the ``ceor`` command
"""

__version__ = "0.1.0"

from .ce_engine import NEG_INF, CeParams, CeResult, StopReason, run_ce
from .decoding import DecodeParams, beam_decode, top_p_filter
from .rh_search import StripRegion, Tolerances, run_ceor, score_sample
from .strip_sweep import extend_sweep, sweep_region, tile_strip
from .zero_locator import count_zeros_online, count_zeros_region, hardy_z, refine_zero, riemann_siegel_theta
from .zeta_eval import ZetaEvalConfig, dirichlet_eta, log_gamma, zeta, zeta_functional

__all__ = [
    "NEG_INF",
    "CeParams",
    "CeResult",
    "StopReason",
    "run_ce",
    "DecodeParams",
    "beam_decode",
    "top_p_filter",
    "StripRegion",
    "Tolerances",
    "run_ceor",
    "score_sample",
    "extend_sweep",
    "sweep_region",
    "tile_strip",
    "count_zeros_online",
    "count_zeros_region",
    "hardy_z",
    "refine_zero",
    "riemann_siegel_theta",
    "ZetaEvalConfig",
    "dirichlet_eta",
    "log_gamma",
    "zeta",
    "zeta_functional",
]
