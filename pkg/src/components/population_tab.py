import numpy as np
import pandas as pd
import plotly.express as px
import streamlit as st

from src.utils.errors import FineStructureError
from src.utils.extraction import DEFAULT_THRESHOLDS, classify_population, population_trends
from src.utils.file_loader import FileLoader
from src.utils.model_core import k_eq2

SAMPLE_POPULATION = "data/population.csv"


class PopulationTab:
    @staticmethod
    def render():
        """Render the population tab."""
        st.subheader("Dot Population")
        uploaded_file = st.file_uploader("Population CSV (s0_ueV,d0_ueV,g_e,g_h[,e_c_meV])", type=["csv"])
        try:
            dots = FileLoader.load_population_csv(uploaded_file or SAMPLE_POPULATION)
            results = classify_population(dots, DEFAULT_THRESHOLDS)
            trends = population_trends(dots)
        except FineStructureError as e:
            st.error(f"Error loading population: {e}")
            return

        frame = pd.DataFrame(
            {
                "S0 (ueV)": [d.s0 for d in dots],
                "D0 (ueV)": [d.d0 for d in dots],
                "K (ueV/T^2)": [k_eq2(d) for d in dots],
                "crossing (T)": [r.crossing_field for r in results],
                "class": [r.label for r in results],
            }
        )
        PopulationTab._show_map(frame)
        PopulationTab._show_trends(trends)
        with st.expander("Per-dot results"):
            st.dataframe(frame)

    @staticmethod
    def _show_map(frame):
        """K against S0; dashed lines mark S0 + K B^2 = 0 at each threshold field."""
        fig = px.scatter(frame, x="S0 (ueV)", y="K (ueV/T^2)", color="class", hover_data=["D0 (ueV)", "crossing (T)"])
        s0_span = np.linspace(min(frame["S0 (ueV)"].min(), -1.0), max(frame["S0 (ueV)"].max(), 1.0), 100)
        for threshold in DEFAULT_THRESHOLDS:
            fig.add_scatter(x=s0_span, y=-s0_span / threshold ** 2, mode="lines",
                            line=dict(dash="dash", color="gray"), name=f"B* = {threshold:g} T")
        st.plotly_chart(fig, use_container_width=True)

    @staticmethod
    def _show_trends(trends):
        st.write("### Trends")
        for name, trend in trends.items():
            if trend is None:
                st.info(f"{name}: not enough data")
            else:
                st.write(f"**{name}:** slope {trend.slope:.4g}, intercept {trend.intercept:.4g}, r {trend.r_percent:.1f}%")
