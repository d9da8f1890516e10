import streamlit as st

from src.utils.errors import ParameterDomainError
from src.utils.model_core import DotParameters

PRESETS = {
    "Dot A (GaAs barrier)": DotParameters(s0=22.0, d0=215.0, g_e=0.395, g_h=0.395),
    "Dot C (crosses near 2.7 T)": DotParameters(s0=-16.0, d0=215.0, g_e=0.4, g_h=0.4),
    "Dot B (AlGaAs barrier)": DotParameters(s0=284.0, d0=473.0, g_e=1.21, g_h=0.13),
}


class ParametersPanel:
    @staticmethod
    def render():
        """Render the dot parameter sidebar and return the validated DotParameters, or None."""
        st.sidebar.header("Dot parameters")
        preset_name = st.sidebar.selectbox("Preset", list(PRESETS))
        preset = PRESETS[preset_name]

        s0 = st.sidebar.number_input("S0 (ueV)", value=preset.s0, step=1.0, key=f"s0_{preset_name}")
        d0 = st.sidebar.number_input("D0 (ueV)", value=preset.d0, step=5.0, key=f"d0_{preset_name}")
        sigma0 = st.sidebar.number_input("sigma0 (ueV)", value=preset.sigma0, step=1.0, key=f"sigma0_{preset_name}")
        g_e = st.sidebar.number_input("g_e", value=preset.g_e, step=0.01, format="%.3f", key=f"ge_{preset_name}")
        g_h = st.sidebar.number_input("g_h", value=preset.g_h, step=0.01, format="%.3f", key=f"gh_{preset_name}")

        with st.sidebar.expander("Emission"):
            e0 = st.number_input("E0 (ueV)", value=preset.e0, step=100.0)
            gamma = st.number_input("Linewidth (ueV)", value=preset.gamma, step=0.1)
            xx_binding = st.number_input("XX binding (ueV)", value=preset.xx_binding, step=100.0)

        try:
            params = DotParameters(
                s0=s0, d0=d0, sigma0=sigma0, g_e=g_e, g_h=g_h, e0=e0, gamma=gamma, xx_binding=xx_binding
            )
        except ParameterDomainError as e:
            st.sidebar.error(f"Invalid parameters: {e}")
            return None
        st.session_state.params = params
        return params

    @staticmethod
    def render_field_range():
        """Field sweep controls; returns (b_max, steps)."""
        st.sidebar.header("Field sweep")
        b_max = st.sidebar.slider("B max (T)", min_value=1.0, max_value=15.0, value=5.0, step=0.5)
        steps = st.sidebar.slider("Fields", min_value=2, max_value=201, value=51)
        return b_max, steps
