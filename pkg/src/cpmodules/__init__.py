"""Completely positive maps on Hilbert modules over finite block algebras."""
from .algebra import AlgebraElement, BlockAlgebra, ElementMatrix, is_positive, positive_decomposition
from .cpmaps import (
    CPMap,
    PhiMap,
    cp_order_leq,
    equivalence_check,
    is_completely_positive,
    module_order_leq,
    phi_map_check,
)
from .dilation import module_stinespring, paschke_gns, stinespring
from .modules import ModuleElement, ModuleOperator, ModuleShape
from .radon_nikodym import (
    CommutantElement,
    equivalent_partial_isometry,
    is_pure,
    module_commutant,
    phi_T,
    phi_TS,
    reduced_stinespring,
    recover_T,
    rn_derivative,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement", "BlockAlgebra", "ElementMatrix", "is_positive", "positive_decomposition",
    "CPMap", "PhiMap", "cp_order_leq", "equivalence_check", "is_completely_positive",
    "module_order_leq", "phi_map_check", "module_stinespring", "paschke_gns", "stinespring",
    "ModuleElement", "ModuleOperator", "ModuleShape", "CommutantElement",
    "equivalent_partial_isometry", "is_pure", "module_commutant", "phi_T", "phi_TS",
    "reduced_stinespring", "recover_T", "rn_derivative",
]
