"""Linear-optical realisation of the discrimination protocol."""
from .compiler import (
    ComponentCount,
    abstract_measurement_map,
    click_probabilities,
    compile_conditional,
    compile_fourier_inverse,
    compile_from_coefficients,
    compile_full,
    compile_preparation,
    compile_projection,
    count_components,
    fourier_stage_unitary,
    netlist_measurement_map,
)
from .netlist import Element, OpticalNetlist, Stage, from_json, parse_text
from .simulate import fit_gauge, simulate_netlist, verify_equivalence

__all__ = [
    "ComponentCount",
    "Element",
    "OpticalNetlist",
    "Stage",
    "abstract_measurement_map",
    "click_probabilities",
    "compile_conditional",
    "compile_fourier_inverse",
    "compile_from_coefficients",
    "compile_full",
    "compile_preparation",
    "compile_projection",
    "count_components",
    "fit_gauge",
    "fourier_stage_unitary",
    "from_json",
    "netlist_measurement_map",
    "parse_text",
    "simulate_netlist",
    "verify_equivalence",
]
