"""Synthesized-isotropic channel parameters from angle-resolved scans.

The package covers the full loop: clustered channel generation, synthesis
of the discretely scanned wideband measurement, beam-accumulation
correction factors, extraction of omni-equivalent power / path loss / PDP
/ delay spread, and a Monte-Carlo harness that validates the correction
end to end.
"""

from .accumulation import (AxisGrid, CorrectionFactors, zeta_2d,
                           zeta_axis_averaged,
                           zeta_axis_averaged_closed_form,
                           zeta_axis_discrete, zeta_axis_series, zeta_total)
from .beams import (Isotropic, TabulatedPattern, VonMisesBeam, evaluate,
                    horn_like_fixture, import_pattern, make_vonmises)
from .channelgen import (Mpc, MultipathRealization, SVParams, generate,
                         randomize_phases)
from .harness import (ExperimentConfig, dump_spectra, run_error_sweep,
                      run_pl_pairing)
from .sounder import (PowerTensor, SounderConfig, load_tensor, save_tensor,
                      synthesize_coherent, synthesize_incoherent)
from .specfun import (BesselEvalPolicy, bessel_i, bessel_i_scaled,
                      dirichlet_autocorr)
from .synthesis import (SynthesisResult, collapse_pdp,
                        estimate_channel_power, path_loss,
                        rms_delay_spread, synthesize_result)

__version__ = "0.1.0"

__all__ = [
    "AxisGrid", "CorrectionFactors", "zeta_2d", "zeta_axis_averaged",
    "zeta_axis_averaged_closed_form", "zeta_axis_discrete",
    "zeta_axis_series", "zeta_total",
    "Isotropic", "TabulatedPattern", "VonMisesBeam", "evaluate",
    "horn_like_fixture", "import_pattern", "make_vonmises",
    "Mpc", "MultipathRealization", "SVParams", "generate",
    "randomize_phases",
    "ExperimentConfig", "dump_spectra", "run_error_sweep", "run_pl_pairing",
    "PowerTensor", "SounderConfig", "load_tensor", "save_tensor",
    "synthesize_coherent", "synthesize_incoherent",
    "BesselEvalPolicy", "bessel_i", "bessel_i_scaled", "dirichlet_autocorr",
    "SynthesisResult", "collapse_pdp", "estimate_channel_power",
    "path_loss", "rms_delay_spread", "synthesize_result",
    "__version__",
]
