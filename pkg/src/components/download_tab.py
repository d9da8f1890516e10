import streamlit as st

from src.utils.errors import FineStructureError
from src.utils.extraction import SplittingKind, SplittingSeries
from src.utils.file_loader import FileLoader
from src.utils.model_core import sweep_field


class DownloadTab:
    @staticmethod
    def render(params, b_max, steps):
        """Render the Download tab."""
        st.write("### Download Sweep Data")
        st.write("Sweep table and splitting series in the CSV formats the command line reads.")
        try:
            rows = sweep_field(params, 0.0, b_max, steps)
        except FineStructureError as e:
            st.error(f"Error preparing download: {e}")
            return

        st.download_button(
            label="📥 Sweep table (CSV)",
            data=FileLoader.sweep_csv_string(rows),
            file_name=DownloadTab._generate_download_filename(params, "sweep"),
            mime="text/csv",
        )
        ok = [r for r in rows if r.ok]
        fields = [r.b_x for r in ok]
        for kind, attr in ((SplittingKind.S, "s"), (SplittingKind.D_H, "d_h"), (SplittingKind.D_V, "d_v")):
            series = SplittingSeries.from_arrays(kind, fields, [getattr(r.fine_structure, attr) for r in ok])
            st.download_button(
                label=f"📥 {kind.value} series (CSV)",
                data=FileLoader.series_csv_string(series),
                file_name=DownloadTab._generate_download_filename(params, f"series_{kind.value}"),
                mime="text/csv",
            )
        st.download_button(
            label="📥 Dot parameters (JSON)",
            data=FileLoader.to_json_string(params.to_dict()),
            file_name=DownloadTab._generate_download_filename(params, "dot", ext="json"),
            mime="application/json",
        )

    @staticmethod
    def _generate_download_filename(params, stem, ext="csv"):
        """Generate a download filename from the dot's S0 and D0."""
        return f"{stem}_s0_{params.s0:g}_d0_{params.d0:g}.{ext}"
