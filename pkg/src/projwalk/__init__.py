"""Projection systems on free groups, random walks, and Monte Carlo checks of their largest projections."""

from .words import Letter, StepMeasure, Word, inv, mul, reduce, sample_step, word_distance
from .subgroup import SubgroupGraph
from .projection import Coset, ProjectionSystem, canonicalize, gate, proj_distance, translate, transverse

__version__ = "0.1.0"

__all__ = [
    "Coset", "Letter", "ProjectionSystem", "StepMeasure", "SubgroupGraph", "Word",
    "canonicalize", "gate", "inv", "mul", "proj_distance", "reduce", "sample_step",
    "translate", "transverse", "word_distance",
]
