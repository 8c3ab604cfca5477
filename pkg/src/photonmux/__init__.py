"""photonmux: analytic models and Monte Carlo simulation of an actively
time-multiplexed heralded single-photon source on a photonic chip."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ArrayGeometry,
    Detection,
    DomainError,
    PairDistribution,
    SchemeConfig,
    Selection,
    SourceParams,
    Topology,
    conditional_multiphoton,
    incremental_loss_db,
    lambda_from_interaction,
    pair_count_distribution,
)
from .efficiency import (  # noqa: F401
    EfficiencyBreakdown,
    avg_linear_transmission,
    detection_efficiency,
    generation_rate,
    total_efficiency,
)
from .montecarlo import (  # noqa: F401
    EstimatorResult,
    Outcome,
    TrialRecord,
    estimate_avg_lin,
    estimate_eta,
    run_frame,
)
