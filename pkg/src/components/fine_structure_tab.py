import io

import pandas as pd
import plotly.graph_objects as go
import streamlit as st

from src.utils.file_loader import FileLoader
from src.utils.model_core import Branch, Polarization, sweep_field

COLORS = {Polarization.H: "#1f77b4", Polarization.V: "#d62728"}


class FineStructureTab:
    @staticmethod
    def render(params, b_max, steps):
        """Render the fine-structure sweep tab."""
        st.subheader("Exciton Levels vs In-plane Field")
        rows = sweep_field(params, 0.0, b_max, steps)
        flagged = [r for r in rows if not r.ok]
        if flagged:
            st.warning(f"{len(flagged)} field(s) flagged with degenerate mixing and left out of the plots")
        ok = [r for r in rows if r.ok]
        if not ok:
            st.error("No field point could be solved.")
            return

        FineStructureTab._show_levels(ok)
        FineStructureTab._show_splittings(ok)
        with st.expander("Sweep table"):
            st.dataframe(pd.read_csv(io.StringIO(FileLoader.sweep_csv_string(rows))))

    @staticmethod
    def _show_levels(rows):
        """Energies of the four states; marker size follows the bright fraction."""
        fig = go.Figure()
        fields = [r.b_x for r in rows]
        for pol in (Polarization.H, Polarization.V):
            for label in (Branch.BRIGHTER, Branch.DARKER):
                states = [r.fine_structure.state(pol, label) for r in rows]
                fig.add_trace(
                    go.Scatter(
                        x=fields,
                        y=[s.energy for s in states],
                        mode="lines+markers",
                        name=f"{pol.value} {label.value}",
                        line=dict(color=COLORS[pol], dash="solid" if label == Branch.BRIGHTER else "dot"),
                        marker=dict(size=[2 + 12 * s.bright_fraction for s in states], color=COLORS[pol]),
                    )
                )
        fig.update_layout(xaxis_title="B_x (T)", yaxis_title="Energy relative to E0 (ueV)")
        st.plotly_chart(fig, use_container_width=True)

    @staticmethod
    def _show_splittings(rows):
        """S, D_H and D_V against field."""
        fields = [r.b_x for r in rows]
        col1, col2 = st.columns(2)
        with col1:
            fig = go.Figure(go.Scatter(x=fields, y=[r.fine_structure.s for r in rows], mode="lines", name="S"))
            fig.add_hline(y=0.0, line_dash="dash", line_color="gray")
            fig.update_layout(title="Bright splitting S", xaxis_title="B_x (T)", yaxis_title="S (ueV)")
            st.plotly_chart(fig, use_container_width=True)
        with col2:
            fig = go.Figure()
            fig.add_trace(go.Scatter(x=fields, y=[r.fine_structure.d_h for r in rows], name="D_H",
                                     line=dict(color=COLORS[Polarization.H])))
            fig.add_trace(go.Scatter(x=fields, y=[r.fine_structure.d_v for r in rows], name="D_V",
                                     line=dict(color=COLORS[Polarization.V])))
            fig.update_layout(title="Brighter-darker separations", xaxis_title="B_x (T)", yaxis_title="D (ueV)")
            st.plotly_chart(fig, use_container_width=True)
