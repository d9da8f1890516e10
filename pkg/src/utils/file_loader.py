"""
CSV/JSON ingestion and serialization for splitting series, spectra, sweeps and reports.

All writes go through a temporary file in the destination directory followed by
a rename, so readers never see a partially written file.
"""

import io
import json
import logging
import math
import os
import tempfile
from typing import IO, Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.utils.errors import InputParseError, OutputError
from src.utils.extraction import SplittingKind, SplittingSeries
from src.utils.model_core import Branch, DotParameters, Polarization, SweepRow
from src.utils.spectra import PolarizedSpectrum

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ["b_T", "value_ueV"]
SERIES_SIGMA_COLUMN = "sigma_ueV"
SPECTRUM_COLUMNS = ["energy_ueV", "intensity"]
SWEEP_COLUMNS = [
    "b_x_T",
    "e_Hbright_ueV",
    "e_Vbright_ueV",
    "e_Hdark_ueV",
    "e_Vdark_ueV",
    "frac_Hbright",
    "frac_Vbright",
    "S_ueV",
    "D_H_ueV",
    "D_V_ueV",
]
POPULATION_COLUMNS = ["s0_ueV", "d0_ueV", "g_e", "g_h"]
POPULATION_EC_COLUMN = "e_c_meV"
FLOAT_FORMAT = "%.9g"
SIGNIFICANT_DIGITS = 9

Source = Union[str, IO]


def _round_floats(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_round_floats(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v) for v in value]
    return value


class FileLoader:
    @staticmethod
    def _name(source: Source) -> str:
        return source if isinstance(source, str) else getattr(source, "name", "<upload>")

    @staticmethod
    def _read_table(source: Source, required: List[str], optional: Sequence[str] = ()) -> pd.DataFrame:
        """Read a headed CSV and coerce every cell to float; empty optional cells become NaN."""
        name = FileLoader._name(source)
        try:
            frame = pd.read_csv(source, dtype=str, keep_default_na=False, skip_blank_lines=True, encoding="utf-8")
        except pd.errors.EmptyDataError:
            raise InputParseError(name, "file is empty, a header row is required", line=1)
        except pd.errors.ParserError as e:
            raise InputParseError(name, str(e))
        except (OSError, UnicodeDecodeError) as e:
            raise InputParseError(name, str(e))

        columns = [c.strip() for c in frame.columns]
        frame.columns = columns
        allowed = set(required) | set(optional)
        missing = [c for c in required if c not in columns]
        if missing:
            raise InputParseError(name, f"missing column(s) {missing}; header is {columns}", line=1)
        extra = [c for c in columns if c not in allowed]
        if extra:
            raise InputParseError(name, f"unexpected column(s) {extra}", line=1)
        if frame.empty:
            raise InputParseError(name, "no data rows after the header", line=1)

        numeric = pd.DataFrame(index=frame.index)
        for column in columns:
            raw = frame[column].str.strip()
            values = pd.to_numeric(raw.replace("", np.nan), errors="coerce")
            bad = values.isna() & (raw != "") if column in optional else values.isna()
            bad |= np.isinf(values)
            if bad.any():
                row = int(np.flatnonzero(bad.to_numpy())[0])
                raise InputParseError(
                    name, f"column {column!r}: {raw.iloc[row]!r} is not a finite number", line=row + 2
                )
            numeric[column] = values.astype(float)
        return numeric

    @staticmethod
    def load_series_csv(source: Source, kind: Union[SplittingKind, str]) -> SplittingSeries:
        """Load a splitting series (``b_T,value_ueV[,sigma_ueV]``)."""
        frame = FileLoader._read_table(source, SERIES_COLUMNS, optional=[SERIES_SIGMA_COLUMN])
        sigmas = None
        if SERIES_SIGMA_COLUMN in frame:
            sigmas = [None if math.isnan(s) else s for s in frame[SERIES_SIGMA_COLUMN]]
        try:
            series = SplittingSeries.from_arrays(
                SplittingKind(kind), frame["b_T"].tolist(), frame["value_ueV"].tolist(), sigmas
            )
        except ValueError as e:
            raise InputParseError(FileLoader._name(source), str(e))
        logger.info("Loaded %d %s samples from %s", len(series), series.kind.value, FileLoader._name(source))
        return series

    @staticmethod
    def load_population_csv(source: Source) -> List[DotParameters]:
        """Load a dot population (``s0_ueV,d0_ueV,g_e,g_h[,e_c_meV]``)."""
        name = FileLoader._name(source)
        frame = FileLoader._read_table(source, POPULATION_COLUMNS, optional=[POPULATION_EC_COLUMN])
        dots = []
        for i, row in enumerate(frame.itertuples(index=False)):
            data = row._asdict()
            e_c = data.get(POPULATION_EC_COLUMN)
            try:
                dots.append(
                    DotParameters(
                        s0=data["s0_ueV"],
                        d0=data["d0_ueV"],
                        g_e=data["g_e"],
                        g_h=data["g_h"],
                        e_c=None if e_c is None or math.isnan(e_c) else e_c,
                    )
                )
            except ValueError as e:
                raise InputParseError(name, str(e), line=i + 2)
        return dots

    @staticmethod
    def load_json(source: Source) -> Any:
        name = FileLoader._name(source)
        try:
            if isinstance(source, str):
                with open(source, "r", encoding="utf-8") as f:
                    return json.load(f)
            return json.load(source)
        except json.JSONDecodeError as e:
            raise InputParseError(name, e.msg, line=e.lineno)
        except OSError as e:
            raise InputParseError(name, str(e))

    # -- serialization -----------------------------------------------------

    @staticmethod
    def to_json_string(report: Any) -> str:
        """JSON with every float rounded to 9 significant digits and NaN written as null."""
        return json.dumps(_round_floats(report), indent=2, ensure_ascii=False) + "\n"

    @staticmethod
    def series_csv_string(series: SplittingSeries) -> str:
        data = {"b_T": series.fields, "value_ueV": series.values}
        if any(s.sigma is not None for s in series.samples):
            data[SERIES_SIGMA_COLUMN] = [np.nan if s.sigma is None else s.sigma for s in series.samples]
        return FileLoader._csv_string(pd.DataFrame(data))

    @staticmethod
    def spectrum_csv_string(spectrum: PolarizedSpectrum) -> str:
        return FileLoader._csv_string(
            pd.DataFrame({"energy_ueV": spectrum.grid, "intensity": spectrum.intensity})
        )

    @staticmethod
    def sweep_csv_string(rows: Sequence[SweepRow]) -> str:
        records = []
        for row in rows:
            record: Dict[str, Optional[float]] = {c: np.nan for c in SWEEP_COLUMNS}
            record["b_x_T"] = row.b_x
            fs = row.fine_structure
            if fs is not None:
                h_b = fs.state(Polarization.H, Branch.BRIGHTER)
                v_b = fs.state(Polarization.V, Branch.BRIGHTER)
                record.update(
                    e_Hbright_ueV=h_b.energy,
                    e_Vbright_ueV=v_b.energy,
                    e_Hdark_ueV=fs.state(Polarization.H, Branch.DARKER).energy,
                    e_Vdark_ueV=fs.state(Polarization.V, Branch.DARKER).energy,
                    frac_Hbright=h_b.bright_fraction,
                    frac_Vbright=v_b.bright_fraction,
                    S_ueV=fs.s,
                    D_H_ueV=fs.d_h,
                    D_V_ueV=fs.d_v,
                )
            records.append(record)
        return FileLoader._csv_string(pd.DataFrame(records, columns=SWEEP_COLUMNS))

    @staticmethod
    def _csv_string(frame: pd.DataFrame) -> str:
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()

    @staticmethod
    def atomic_write(path: str, text: str) -> str:
        """Write ``text`` to ``path`` via a temporary sibling file and a rename."""
        directory = os.path.dirname(os.path.abspath(path))
        tmp_path = None
        try:
            os.makedirs(directory, exist_ok=True)
            with tempfile.NamedTemporaryFile(
                "w", encoding="utf-8", newline="", dir=directory, delete=False, suffix=".tmp"
            ) as tmp_file:
                tmp_file.write(text)
                tmp_path = tmp_file.name
            os.replace(tmp_path, path)
        except OSError as e:
            if tmp_path and os.path.exists(tmp_path):
                os.unlink(tmp_path)
            raise OutputError(path, str(e))
        logger.info("Wrote %s", path)
        return path

    @staticmethod
    def save_series_csv(series: SplittingSeries, path: str) -> str:
        return FileLoader.atomic_write(path, FileLoader.series_csv_string(series))

    @staticmethod
    def save_spectrum_csv(spectrum: PolarizedSpectrum, path: str) -> str:
        return FileLoader.atomic_write(path, FileLoader.spectrum_csv_string(spectrum))

    @staticmethod
    def save_spectrum_json(spectrum: PolarizedSpectrum, path: str) -> str:
        return FileLoader.atomic_write(path, FileLoader.to_json_string(spectrum.to_dict()))

    @staticmethod
    def save_sweep_csv(rows: Sequence[SweepRow], path: str) -> str:
        return FileLoader.atomic_write(path, FileLoader.sweep_csv_string(rows))

    @staticmethod
    def save_json(report: Any, path: str) -> str:
        return FileLoader.atomic_write(path, FileLoader.to_json_string(report))
