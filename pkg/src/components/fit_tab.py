import numpy as np
import plotly.graph_objects as go
import streamlit as st

from src.utils.errors import FineStructureError
from src.utils.extraction import (
    DEFAULT_THRESHOLDS,
    SplittingKind,
    classify_dot,
    crossing_field,
    fit_eq1,
)
from src.utils.file_loader import FileLoader

SAMPLE_SERIES = "data/dot_c_splitting.csv"


class FitTab:
    @staticmethod
    def render():
        """Render the S(B) fit tab."""
        st.subheader("Fit S(B) = S0 + K B^2 + K' B^4")
        source = st.radio("Data", ["Sample (dot C)", "Upload CSV"], horizontal=True)
        uploaded_file = None
        if source == "Upload CSV":
            uploaded_file = st.file_uploader("Splitting series (b_T,value_ueV[,sigma_ueV])", type=["csv"])
            if uploaded_file is None:
                st.info("Upload a CSV to fit.")
                return
        include_quartic = st.checkbox("Include B^4 term", value=True)

        try:
            series = FileLoader.load_series_csv(uploaded_file or SAMPLE_SERIES, SplittingKind.S)
            fit = fit_eq1(series, include_quartic=include_quartic)
            b_star = crossing_field(fit, max(DEFAULT_THRESHOLDS))
            label = classify_dot(fit, DEFAULT_THRESHOLDS)
        except FineStructureError as e:
            st.error(f"Error fitting data: {e}")
            return

        col1, col2, col3, col4 = st.columns(4)
        col1.metric("S0 (ueV)", f"{fit.s0_hat:.3f}")
        col2.metric("K (ueV/T^2)", f"{fit.k_hat:.4f}")
        col3.metric("K' (ueV/T^4)", f"{fit.k_prime_hat:.6f}")
        col4.metric("r", f"{fit.r_percent:.2f}%")
        st.write(f"**Crossing field:** {'none' if b_star is None else f'{b_star:.4f} T'}; **class:** `{label}`")

        b_plot = np.linspace(0.0, max(max(series.fields), b_star or 0.0) * 1.1 or 1.0, 200)
        fig = go.Figure()
        fig.add_trace(go.Scatter(
            x=series.fields, y=series.values, mode="markers", name="data",
            error_y=None if series.sigmas is None else dict(type="data", array=series.sigmas),
        ))
        fig.add_trace(go.Scatter(x=b_plot, y=fit.evaluate(b_plot), mode="lines", name="fit"))
        fig.add_hline(y=0.0, line_dash="dash", line_color="gray")
        fig.update_layout(xaxis_title="B_x (T)", yaxis_title="S (ueV)")
        st.plotly_chart(fig, use_container_width=True)
