"""Classical-shadow learning of quantum measurement classes."""

__version__ = "0.1.0"

from .concepts import (
    ConceptClass,
    ExtremePointSet,
    extreme_points,
    load_class,
    save_class,
    verify_certificates,
    verify_opt_reduction,
)
from .ensembles import (
    CliffordExactEnsemble,
    CustomEnsemble,
    PauliTensorEnsemble,
    SampledCliffordEnsemble,
    gamma_apply,
    gamma_inverse,
    make_ensemble,
)
from .errors import ShadowPacError
from .learners import naive_qerm_learn, pac_evaluate, qsrm_learn, theorem1_sample_size
from .loss import LossFunction, build_loss_observable, expected_loss
from .shadow_norm import class_constant_v, shadow_norm, verify_concentration
from .shadows import generate_shadows, load_dataset, save_dataset, shadow_empirical_loss
from .states import LabeledStateSource, Povm, PureState, draw_samples

__all__ = [
    "CliffordExactEnsemble",
    "ConceptClass",
    "CustomEnsemble",
    "ExtremePointSet",
    "LabeledStateSource",
    "LossFunction",
    "PauliTensorEnsemble",
    "Povm",
    "PureState",
    "SampledCliffordEnsemble",
    "ShadowPacError",
    "build_loss_observable",
    "class_constant_v",
    "draw_samples",
    "expected_loss",
    "extreme_points",
    "gamma_apply",
    "gamma_inverse",
    "generate_shadows",
    "load_class",
    "load_dataset",
    "make_ensemble",
    "naive_qerm_learn",
    "pac_evaluate",
    "qsrm_learn",
    "save_class",
    "save_dataset",
    "shadow_empirical_loss",
    "shadow_norm",
    "theorem1_sample_size",
    "verify_certificates",
    "verify_concentration",
    "verify_opt_reduction",
]
