import streamlit as st

from src.utils.errors import FineStructureError, InfeasibleError
from src.utils.extraction import (
    GConvention,
    SplittingKind,
    SplittingSeries,
    extrapolate_d0,
    fit_eq1,
    fit_zeeman,
    gfactors_from_zeeman,
    solve_g_eq2,
    solve_g_equal_magnitude,
)
from src.utils.model_core import field_grid, fine_structure


class GFactorTab:
    @staticmethod
    def render(params, b_max):
        """Render the g-factor extraction tab on data generated from the current dot."""
        st.subheader("g-factors from D_H, D_V and S")
        st.write("Splittings are generated from the sidebar dot and run back through the extraction.")
        convention = st.radio("Sign convention", [c.value for c in GConvention], horizontal=True)

        try:
            rows = [fine_structure(params, b) for b in field_grid(0.0, b_max, 11)]
            fields = [fs.b_x for fs in rows]
            d_h = SplittingSeries.from_arrays(SplittingKind.D_H, fields, [fs.d_h for fs in rows])
            d_v = SplittingSeries.from_arrays(SplittingKind.D_V, fields, [fs.d_v for fs in rows])
            s = SplittingSeries.from_arrays(SplittingKind.S, fields, [fs.s for fs in rows])
            fit_h, fit_v = fit_zeeman(d_h), fit_zeeman(d_v)
            eq1 = fit_eq1(s)
        except FineStructureError as e:
            st.error(f"Error extracting g-factors: {e}")
            return

        d0 = extrapolate_d0(fit_h, fit_v)
        s0 = fit_h.d_x0_hat - fit_v.d_x0_hat
        g_e_abs, g_h_abs = gfactors_from_zeeman(fit_h, fit_v)
        col1, col2 = st.columns(2)
        with col1:
            st.metric("D0 (ueV)", f"{d0:.3f}")
            st.metric("|g_H|", f"{fit_h.g_hat:.4f}")
            st.metric("|g_e| (Zeeman)", f"{g_e_abs:.4f}")
        with col2:
            st.metric("S0 (ueV)", f"{s0:.3f}")
            st.metric("|g_V|", f"{fit_v.g_hat:.4f}")
            st.metric("|g_h| (Zeeman)", f"{g_h_abs:.4f}")
        g_eq = solve_g_equal_magnitude(fit_h.g_hat)
        st.write(f"**Equal-magnitude estimate:** g_e = g_h = {g_eq[0]:.4f}")

        g_diff = st.number_input("g_diff for the K solve", value=float(fit_v.g_hat), step=0.01, format="%.4f")
        try:
            solution = solve_g_eq2(eq1.k_hat, s0, d0, g_diff, convention)
        except InfeasibleError as e:
            st.warning(f"No real solution: {e}")
            return
        st.write(f"**K from S(B):** {eq1.k_hat:.4f} ueV/T^2")
        for i, (g_e, g_h) in enumerate(solution.branches):
            marker = " (picked)" if i == solution.heuristic_pick else ""
            st.write(f"- g_e = {g_e:.4f}, g_h = {g_h:.4f}{marker}")
