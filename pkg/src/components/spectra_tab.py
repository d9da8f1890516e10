import plotly.graph_objects as go
import streamlit as st

from src.utils.errors import FineStructureError
from src.utils.extraction import extract_peaks
from src.utils.model_core import Polarization
from src.utils.spectra import DEFAULT_MARGIN, add_noise, synthesize

COLORS = {Polarization.H: "#1f77b4", Polarization.V: "#d62728"}


class SpectraTab:
    @staticmethod
    def render(params, b_max):
        """Render the polarized spectra tab."""
        st.subheader("Polarized Photoluminescence")
        col1, col2, col3 = st.columns(3)
        with col1:
            b_x = st.slider("B_x (T)", min_value=0.0, max_value=float(b_max), value=min(2.0, float(b_max)), step=0.1)
            power = st.number_input("Excitation power", min_value=0.0, value=1.0, step=0.1)
        with col2:
            sigma_rel = st.number_input("Relative noise", min_value=0.0, max_value=1.0, value=0.0, step=0.01)
            seed = st.number_input("Seed", min_value=0, value=0, step=1)
        with col3:
            include_biexciton = st.checkbox("Biexciton lines", value=True)
            lifetime_broadening = st.checkbox("Lifetime broadening", value=False)

        try:
            spectra = synthesize(
                params, b_x, power,
                include_biexciton=include_biexciton,
                lifetime_broadening=lifetime_broadening,
            )
            if sigma_rel > 0:
                spectra = tuple(add_noise(s, sigma_rel, int(seed) + i) for i, s in enumerate(spectra))
        except FineStructureError as e:
            st.error(f"Error synthesizing spectra: {e}")
            return

        SpectraTab._show_spectra(spectra, params)
        SpectraTab._show_peaks(spectra, params)

    @staticmethod
    def _show_spectra(spectra, params):
        fig = go.Figure()
        for spectrum in spectra:
            fig.add_trace(
                go.Scatter(
                    x=(spectrum.grid - params.e0),
                    y=spectrum.intensity,
                    mode="lines",
                    name=spectrum.polarization.value,
                    line=dict(color=COLORS[spectrum.polarization]),
                )
            )
        fig.update_layout(xaxis_title="E - E0 (ueV)", yaxis_title="Intensity (arb.)")
        st.plotly_chart(fig, use_container_width=True)

    @staticmethod
    def _show_peaks(spectra, params):
        """Peaks found in the exciton window of each channel."""
        st.write("### Extracted exciton peaks")
        window = (params.e0 - DEFAULT_MARGIN, params.e0 + DEFAULT_MARGIN)
        for spectrum in spectra:
            peaks = extract_peaks(spectrum, min_prominence=0.01, window=window)
            st.write(f"**{spectrum.polarization.value}:** " + (
                ", ".join(f"{c - params.e0:+.2f} ueV (height {h:.3g})" for c, h in peaks) or "none"
            ))
        with st.expander("Line list"):
            for spectrum in spectra:
                for line in spectrum.lines:
                    st.write(f"- {line} , FWHM {line.fwhm:.3f} ueV, height {line.height:.3g}")
