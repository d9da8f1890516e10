import streamlit as st

from src.utils.errors import FineStructureError
from src.utils.extraction import DEFAULT_THRESHOLDS, classify_dot, crossing_field
from src.utils.model_core import k_eq2, perturbative_coefficients


class OverviewTab:
    @staticmethod
    def render(params):
        """Render the Overview tab."""
        st.subheader("Dot Summary")
        OverviewTab._render_couplings(params)
        OverviewTab._render_curvature(params)
        OverviewTab._render_crossing(params)

    @staticmethod
    def _render_couplings(params):
        """Derived couplings and zero-field separations."""
        col1, col2 = st.columns(2)
        with col1:
            st.metric("g_H = g_e + g_h", f"{params.g_hh:.3f}")
            st.metric("D_H0 (ueV)", f"{params.delta_h:.2f}")
        with col2:
            st.metric("g_V = g_e - g_h", f"{params.g_vv:.3f}")
            st.metric("D_V0 (ueV)", f"{params.delta_v:.2f}")

    @staticmethod
    def _render_curvature(params):
        """K from the closed form and K, K' from the small-field series."""
        st.subheader("Curvature of S(B)")
        try:
            coefficients = perturbative_coefficients(params)
            st.write(f"**K (closed form):** {k_eq2(params):.4f} ueV/T^2")
            st.write(f"**K (series):** {coefficients.k:.4f} ueV/T^2")
            st.write(f"**K' (series):** {coefficients.k_prime:.6f} ueV/T^4")
        except FineStructureError as e:
            st.warning(f"Curvature unavailable: {e}")

    @staticmethod
    def _render_crossing(params):
        """Crossing field and class."""
        st.subheader("Crossing")
        try:
            b_star = crossing_field(params, max(DEFAULT_THRESHOLDS))
            label = classify_dot(params, DEFAULT_THRESHOLDS)
        except FineStructureError as e:
            st.error(f"Crossing search failed: {e}")
            return
        if b_star is None:
            st.info(f"S does not change sign below {max(DEFAULT_THRESHOLDS):g} T")
        else:
            st.success(f"S crosses zero at {b_star:.4f} T")
        st.write(f"**Class:** `{label}`")
