"""Scalar-wave simulation of two-photon correlations from entangled photon pairs."""

__version__ = "0.1.0"

from .correlator import (  # noqa: E402
    BiphotonSetup,
    CorrelationMap,
    TwoPhotonWavepacket,
    bucket_rate,
    coincident_g2,
    joint_g2,
    mixed_temporal_g2,
    spatial_wavefunction,
    temporal_g2,
    temporal_wavefunction,
)
from .fresnel import (  # noqa: E402
    Aperture,
    FreeSpace,
    OpticalArm,
    SampledField,
    ThinLens,
    TransverseGrid,
    free_propagate,
    point_source_response,
    propagate_arm,
    somb,
)
from .spdc import (  # noqa: E402
    CrystalParams,
    DeltaCorrelated,
    Flat,
    Gaussian,
    GaussianPump,
    SincTypeI,
    SincTypeII,
    SpdcConfig,
)
