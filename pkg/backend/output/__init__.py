"""
Output Module - deterministic result files and PDF run summaries.
"""

from .writer import (
    atomic_write,
    atomic_write_bytes,
    format_admissibility,
    format_field,
    format_flux_report,
    format_mesh,
    write_admissibility,
    write_comparison,
    write_continuation,
    write_convergence,
    write_field,
    write_flux_report,
    write_key_values,
    write_level_table,
    write_mesh,
)
from .pdf_report import RunSummaryWriter

__all__ = [
    'atomic_write',
    'atomic_write_bytes',
    'format_admissibility',
    'format_field',
    'format_flux_report',
    'format_mesh',
    'write_admissibility',
    'write_comparison',
    'write_continuation',
    'write_convergence',
    'write_field',
    'write_flux_report',
    'write_key_values',
    'write_level_table',
    'write_mesh',
    'RunSummaryWriter',
]
