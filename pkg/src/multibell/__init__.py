"""Bell-inequality predictions for multi-photon polarisation-entangled light.

Photon counts behind two double-channel polarisers are turned into binary
outcomes and scored with the strong and weak CHSH ratio inequalities, with
ideal N-pair sources, parametric amplifiers and binomial detector loss.
"""

__version__ = "0.1.0"

from .bell import (
    BellProbabilities,
    BellScore,
    ExactN,
    FractionThreshold,
    PsiOptimum,
    Window,
    angles_from_psi,
    bell_probabilities,
    bell_score,
    bell_scores,
    critical_transmission,
    event_probability,
    optimize_psi,
    strong_S,
    weak_S,
)
from .errors import (
    DegenerateSourceError,
    DomainError,
    MultiBellError,
    NoRootError,
    TruncationError,
    UndefinedScoreError,
)
from .fock import (
    AngleConfig,
    JointPhotonDistribution,
    amplitude_table,
    brute_force_state_oracle,
    joint_amplitude,
    probability_table,
)
from .loss import LOSSLESS, LossChannel, convolve_joint, convolve_marginal, thinning_matrix
from .sources import (
    IdealSpin,
    Qiopa,
    VacuumPDC,
    WeightDistribution,
    mean_flux,
    nearest_flux_integer,
    photon_number_distribution,
    qiopa_weights,
    vacuum_weights,
)
