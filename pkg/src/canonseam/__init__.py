"""Forward and inverse numerics for trace-normed 2x2 canonical systems with a free tail."""

from .canonical import (
    BlockHamiltonian,
    GridHamiltonian,
    PoleFlag,
    TransferMatrix,
    append_free_tail_blocks,
    continue_meromorphic,
    schur_v,
    transfer,
    weyl_m,
)
from .errors import (
    CanonSeamError,
    ConstructionError,
    DenominatorCollapse,
    InvalidInput,
    InvalidPerturbation,
    NearPole,
    NoConvergence,
    NumericalError,
    OutOfDomain,
    RankDeficientJacobian,
    SingularMatrix,
)
from .seam import FeatureBasis, JacobianFactors, SeamDesign, jacobian_block_free, seam_map
from .tolerances import TOL

__version__ = "0.1.0"
