"""
Experiments Module - half-space sweeps and the subcommand pipeline.
"""

from .halfspace import (
    ASYMPTOTIC_FOOTER,
    AsymptoticRow,
    AsymptoticTable,
    ContactType,
    CylinderCheck,
    SweepResult,
    asymptotic_table,
    cylinder_check,
    graph_distances,
    touch_experiment,
    translated_member,
    translation_sweep,
)
from .pipeline import MissingInput, ScherkLab, odd_symmetry_defect

__all__ = [
    'ASYMPTOTIC_FOOTER',
    'AsymptoticRow',
    'AsymptoticTable',
    'ContactType',
    'CylinderCheck',
    'SweepResult',
    'asymptotic_table',
    'cylinder_check',
    'graph_distances',
    'touch_experiment',
    'translated_member',
    'translation_sweep',
    'MissingInput',
    'ScherkLab',
    'odd_symmetry_defect',
]
