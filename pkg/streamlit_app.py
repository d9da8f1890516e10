import streamlit as st

from src.components.download_tab import DownloadTab
from src.components.fine_structure_tab import FineStructureTab
from src.components.fit_tab import FitTab
from src.components.g_factor_tab import GFactorTab
from src.components.overview_tab import OverviewTab
from src.components.parameters_panel import ParametersPanel
from src.components.population_tab import PopulationTab
from src.components.spectra_tab import SpectraTab


def main():
    st.title("🔬 Exciton Fine-Structure Explorer")
    st.write(
        "Model a quantum-dot exciton in an in-plane magnetic field, synthesize polarized spectra "
        "and run splitting data back to S0, K, D0 and g-factors."
    )

    params = ParametersPanel.render()
    b_max, steps = ParametersPanel.render_field_range()

    # The fit and population tabs read files and work without a valid dot
    tab_names = ["Overview", "Fine Structure", "Spectra", "Fit S(B)", "g-factors", "Population", "Download"]
    tab_overview, tab_levels, tab_spectra, tab_fit, tab_g, tab_population, tab_download = st.tabs(tab_names)

    with tab_fit:
        FitTab.render()

    with tab_population:
        PopulationTab.render()

    if params is None:
        for tab in (tab_overview, tab_levels, tab_spectra, tab_g, tab_download):
            with tab:
                st.warning("Fix the dot parameters in the sidebar to continue.")
        return

    with tab_overview:
        OverviewTab.render(params)

    with tab_levels:
        FineStructureTab.render(params, b_max, steps)

    with tab_spectra:
        SpectraTab.render(params, b_max)

    with tab_g:
        GFactorTab.render(params, b_max)

    with tab_download:
        DownloadTab.render(params, b_max, steps)


if __name__ == "__main__":
    main()
