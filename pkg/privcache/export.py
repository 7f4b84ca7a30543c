"""
Service d'export des rapports d'audit et des courbes
"""
import csv
import io
import json
import logging
import os
from fractions import Fraction
from typing import Any, Iterable, List, Sequence, Tuple

logger = logging.getLogger(__name__)

TRADEOFF_HEADERS = ['M_num', 'M_den', 'R_num', 'R_den', 'scheme', 'subpacketization']


def rational_str(value) -> str:
    """Rationnel exact sous la forme 'num/den'"""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def _optional_rational(value) -> List[Any]:
    if value is None:
        return ['', '']
    value = Fraction(value)
    return [value.numerator, value.denominator]


def tradeoff_rows(points, scheme: str = None) -> List[List[Any]]:
    """Lignes CSV d'une liste de TradeoffPoint"""
    rows = []
    for point in points:
        rows.append([
            point.M.numerator, point.M.denominator,
            point.R.numerator, point.R.denominator,
            scheme or point.scheme,
            point.subpacketization,
        ])
    return rows


def curve_rows(rows) -> Tuple[List[str], List[List[Any]]]:
    headers = ['M_num', 'M_den', 'R_vu_num', 'R_vu_den', 'R_cor1_num', 'R_cor1_den']
    body = [
        _optional_rational(row.M) + _optional_rational(row.R_virtual_users) + _optional_rational(row.R_cor1)
        for row in rows
    ]
    return headers, body


def table_rows(table) -> Tuple[List[str], List[List[Any]]]:
    """Colonnes des variables, puis numérateur et dénominateur de la probabilité"""
    headers = list(table.variables) + ['num', 'den']
    body = [list(code) + [p.numerator, p.denominator] for code, p in table.rows()]
    return headers, body


class ExportService:
    """Service centralisé pour l'écriture déterministe des résultats"""

    def _ensure_parent(self, file_path: str):
        """S'assurer que le répertoire cible existe"""
        parent = os.path.dirname(os.path.abspath(file_path))
        if not os.path.exists(parent):
            os.makedirs(parent, exist_ok=True)

    @staticmethod
    def render_csv(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(headers)
        writer.writerows(rows)
        return buffer.getvalue()

    @staticmethod
    def render_json(data: Any) -> str:
        return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + '\n'

    def _write(self, file_path: str, content: str, kind: str) -> Tuple[str, int]:
        self._ensure_parent(file_path)
        try:
            with open(file_path, 'w', encoding='utf-8', newline='') as handle:
                handle.write(content)
        except OSError as e:
            logger.error(f"Erreur export {kind}: {e}")
            raise

        file_size = os.path.getsize(file_path)
        logger.info(f"Export {kind} créé: {file_path} ({file_size} bytes)")
        return file_path, file_size

    def export_to_csv(self, file_path: str, headers: Sequence[str],
                      rows: Iterable[Sequence[Any]]) -> Tuple[str, int]:
        """
        Écrit un fichier CSV

        Returns:
            Tuple (file_path, file_size)
        """
        return self._write(file_path, self.render_csv(headers, rows), 'CSV')

    def export_to_json(self, file_path: str, data: Any) -> Tuple[str, int]:
        """
        Écrit un fichier JSON trié, sans horodatage

        Returns:
            Tuple (file_path, file_size)
        """
        return self._write(file_path, self.render_json(data), 'JSON')

    def export_table(self, file_path: str, table) -> Tuple[str, int]:
        headers, body = table_rows(table)
        return self.export_to_csv(file_path, headers, body)
