"""
Styled metrics workbook for bench results
"""

import logging
import time
from pathlib import Path

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, NamedStyle, PatternFill, Side
from openpyxl.utils.dataframe import dataframe_to_rows

from config import BENCH_COLUMNS, SUMMARY_COLUMNS, THEMES

FONT_NAME = "Segoe UI"
GRID_SIDE = Side(style='thin', color='E1E5E9')
FAILURE_FONT = Font(name=FONT_NAME, size=10, bold=True, color="C00000")


def _named_styles(key, theme):
    """Header, plain row and shaded row styles for one theme"""
    border = Border(left=GRID_SIDE, right=GRID_SIDE, top=GRID_SIDE, bottom=GRID_SIDE)
    centered = dict(horizontal="center", vertical="center")
    header = NamedStyle(name=f"{key}_header", border=border,
                        font=Font(name=FONT_NAME, size=11, bold=True, color="FFFFFF"),
                        fill=PatternFill(fill_type="solid", start_color=theme['header'], end_color=theme['header']),
                        alignment=Alignment(wrap_text=True, **centered))
    plain = NamedStyle(name=f"{key}_row", border=border, alignment=Alignment(**centered),
                       font=Font(name=FONT_NAME, size=10, color=theme['text_primary']))
    shaded = NamedStyle(name=f"{key}_row_alt", border=border, alignment=Alignment(**centered),
                        font=Font(name=FONT_NAME, size=10, color=theme['text_primary']),
                        fill=PatternFill(fill_type="solid", start_color=theme['alt_row'], end_color=theme['alt_row']))
    return header, plain, shaded


class MetricsWorkbookFormatter:
    """Writes the per-run table and the per-planner summary as themed sheets"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def save_metrics(self, runs, summary, output_file):
        """Save both tables to an .xlsx file; returns the path actually written"""
        try:
            output_file = Path(output_file)
            wb = Workbook()
            sheets = (('Runs', runs, BENCH_COLUMNS, 'results'), ('Summary', summary, SUMMARY_COLUMNS, 'summary'))
            for index, (title, table, columns, theme_key) in enumerate(sheets):
                ws = wb.active if index == 0 else wb.create_sheet()
                ws.title = title
                self._fill_sheet(ws, self._prepare(table, columns))
                self._style_sheet(wb, ws, theme_key)
            self._mark_failures(wb['Runs'], runs)

            saved = self._save_workbook(wb, output_file)
            self.logger.info(f"Metrics workbook saved: {saved} ({len(runs)} runs)")
            return saved
        except Exception as e:
            self.logger.error(f"Failed to write metrics workbook: {e}")
            raise

    def _prepare(self, df, columns):
        """Rename to display headers and turn NaN into empty cells"""
        table = df[[c for c in columns if c in df.columns]].rename(columns=columns)
        return table.astype(object).where(pd.notna(table), None)

    def _fill_sheet(self, ws, df):
        for values in dataframe_to_rows(df, index=False, header=True):
            ws.append(values)

    def _style_sheet(self, wb, ws, theme_key):
        header, plain, shaded = _named_styles(theme_key, THEMES[theme_key])
        for style in (header, plain, shaded):
            if style.name not in wb.named_styles:
                wb.add_named_style(style)

        for row_index, row in enumerate(ws.iter_rows(), start=1):
            style = header.name if row_index == 1 else (shaded.name if row_index % 2 == 0 else plain.name)
            for cell in row:
                cell.style = style
                if row_index > 1 and isinstance(cell.value, float):
                    cell.number_format = '0.0000'

        for column in ws.columns:
            widest = max((len(str(cell.value)) for cell in column if cell.value is not None), default=0)
            ws.column_dimensions[column[0].column_letter].width = min(max(widest + 2, 12), 45)
        ws.freeze_panes = 'A2'

    def _mark_failures(self, ws, runs):
        """Red status text for runs that did not return a valid path"""
        if 'status' not in runs.columns:
            return
        column = list(BENCH_COLUMNS).index('status') + 1
        for offset, (status, valid) in enumerate(zip(runs['status'], runs['valid'])):
            if status != 'ok' or not valid:
                ws.cell(row=offset + 2, column=column).font = FAILURE_FONT

    def _save_workbook(self, wb, output_file):
        try:
            wb.save(output_file)
        except PermissionError:
            # Locked by a spreadsheet application: fall back to a timestamped name
            locked, output_file = output_file, output_file.with_name(f"{output_file.stem}_{int(time.time())}.xlsx")
            wb.save(output_file)
            self.logger.warning(f"{locked} is locked, saved to {output_file}")
        return output_file
