"""SDP relaxations for exact cluster recovery in block models.

Library layout:

* ``models``     -- model specs, seeded generation, partition encodings
* ``thresholds`` -- closed-form recovery thresholds and exponents
* ``solver``     -- operator-splitting SDP solver and rounding
* ``certify``    -- dual certificates and their verification
* ``adaptive``   -- data-driven penalty from the degree profile
* ``oracle``     -- brute-force ML and converse diagnostics
* ``harness``    -- Monte Carlo sweeps, spectral-norm and exponent experiments
* ``cli``        -- the ``blocksdp`` command-line front end
"""

from .errors import DomainError, SizeCapError
from .models import (ClusterMatrix, Graph, ModelSpec, Partition, exact_match,
                     generate, partition_to_matrix, planted_partition, z_from_y)
from .thresholds import (ThresholdReport, binary_threshold, censored_threshold,
                         censored_threshold_report, chernoff_exponent_g, eta,
                         general_recovery_check, multi_threshold, psi_explicit,
                         rate_I, solve_psi, tau)
from .solver import (SdpProblem, SolveOptions, SolveResult, build_sdp_binary,
                     build_sdp_censored, build_sdp_general,
                     build_sdp_general_penalized, build_sdp_multi,
                     build_sdp_penalized, round_binary, round_multi, solve)
from .certify import (CertReport, Certificate, binary_certificate,
                      censored_certificate, general_certificate,
                      multi_certificate, verify)
from .adaptive import DegreeProfile, degree_profile, lambda_hat
from .oracle import MlResult, SwapWitnessReport, ml_binary, ml_censored, ml_multi, swap_witness
from .harness import (SweepConfig, SweepPoint, TrialRecord, exponent_experiment,
                      phase_sweep, run_trial, spectral_norm_experiment,
                      wilson_interval)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
