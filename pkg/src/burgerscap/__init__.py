"""Computer-assisted proofs of global attraction for the forced viscous Burgers equation."""
from ._kernels import BACKEND
from .interval import ComplexInterval, Interval
from .spectral import BurgersParams, ForcingSet
from .pipeline import ProofCertificate, ProofConfig, load_config, parse_config, prove_global

__version__ = "0.1.0"

__all__ = ["BACKEND", "BurgersParams", "ComplexInterval", "ForcingSet", "Interval",
           "ProofCertificate", "ProofConfig", "load_config", "parse_config", "prove_global"]
