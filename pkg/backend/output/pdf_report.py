"""
PDF Run Summary Module
One-page-per-section PDF summaries of experiment runs, built with reportlab
platypus in invariant mode so identical runs give identical bytes.
"""

import io
import logging
from pathlib import Path
from typing import Sequence

from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from .writer import atomic_write_bytes

logger = logging.getLogger(__name__)

HEADER_COLOR = colors.HexColor('#2c5aa0')


class RunSummaryWriter:
    """Collects titled key/value and tabular sections, then renders them to PDF."""

    def __init__(self, output_path: "str | Path", title: str, page_size=A4):
        self.output_path = Path(output_path)
        self.title = title
        self.page_size = page_size
        self.sections: list[tuple[str, list[list[str]]]] = []
        self.styles = getSampleStyleSheet()
        self.styles.add(ParagraphStyle(
            name='RunTitle',
            parent=self.styles['Heading1'],
            fontSize=20,
            alignment=TA_CENTER,
            spaceAfter=18,
            fontName='Helvetica-Bold',
        ))
        self.styles.add(ParagraphStyle(
            name='SectionHeading',
            parent=self.styles['Heading2'],
            fontSize=13,
            textColor=HEADER_COLOR,
            spaceBefore=14,
            spaceAfter=8,
            fontName='Helvetica-Bold',
        ))

    def add_key_values(self, heading: str, items: Sequence[tuple[str, object]]):
        rows = [["Quantity", "Value"]]
        rows.extend([str(k), _cell(v)] for k, v in items)
        self.sections.append((heading, rows))

    def add_table(self, heading: str, header: Sequence[str], rows: Sequence[Sequence[object]]):
        body = [list(header)]
        body.extend([_cell(v) for v in row] for row in rows)
        self.sections.append((heading, body))

    def _table(self, rows: list[list[str]]) -> Table:
        table = Table(rows, hAlign='LEFT')
        table.setStyle(TableStyle([
            ('BACKGROUND', (0, 0), (-1, 0), HEADER_COLOR),
            ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('FONTNAME', (0, 1), (-1, -1), 'Courier'),
            ('FONTSIZE', (0, 0), (-1, -1), 8),
            ('GRID', (0, 0), (-1, -1), 0.25, colors.grey),
            ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, colors.HexColor('#f2f2f2')]),
        ]))
        return table

    def render(self) -> bytes:
        buffer = io.BytesIO()
        doc = SimpleDocTemplate(
            buffer,
            pagesize=self.page_size,
            title=self.title,
            invariant=1,
            rightMargin=0.75 * inch,
            leftMargin=0.75 * inch,
            topMargin=0.75 * inch,
            bottomMargin=0.75 * inch,
        )
        story = [Paragraph(self.title, self.styles['RunTitle'])]
        for heading, rows in self.sections:
            story.append(Paragraph(heading, self.styles['SectionHeading']))
            story.append(self._table(rows))
            story.append(Spacer(1, 0.15 * inch))
        doc.build(story)
        return buffer.getvalue()

    def write(self) -> Path:
        """
        Render and write the PDF atomically.

        Raises:
            OSError: If the output location is not writable
        """
        logger.info(f"Writing PDF summary: {self.output_path}")
        try:
            return atomic_write_bytes(self.output_path, self.render())
        except OSError as e:
            logger.error(f"Cannot write PDF summary {self.output_path}: {e}", exc_info=True)
            raise


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if value is None:
        return "-"
    return str(value)
